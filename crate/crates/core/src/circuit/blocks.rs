//! Catalog of the generic layer blocks, expressed as primitive x pattern.

use super::{AnsatzSpec, Circuit, Family, Gate, GateKind, Param, Restriction, VChoice};
use crate::error::{Error, Result};

/// Entangling building block; rotation placement is by role
/// (`ctrl`, `tgt`) so reversed orientations keep the same structure.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Primitive {
    /// Ry, Rx on control; Ry, Rz on target; CNOT.
    Rcn,
    /// Rz, Ry on control; Rx, Ry on target; CNOT.
    RcnR,
    /// Rx, Ry on both; CZ.
    Rcz,
    /// R on control; controlled R.
    Cr,
    /// Rx, Ry on three qubits; CCZ.
    Rccz,
    /// Rx, Ry on all qubits; n-qubit CZ.
    Rncz,
    Cnot,
    Cz,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Pattern {
    /// `(N-2, N-1), ..., (0, 1)`.
    ChainUp,
    /// `(0, 1), ..., (N-2, N-1)`.
    ChainDown,
    /// Even pairs, then odd pairs.
    Brick,
    /// Control `N-1`, target `0`.
    Closing,
    /// `(hub, j)` for every other qubit `j`.
    Star(usize),
    /// `(j, hub)` for every other qubit `j`.
    StarIn(usize),
    /// Control 1, target 0.
    Single10,
    AllPairs,
    /// `(i, i+1, i+2)`.
    Triples,
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Layer {
    None,
    /// General rotation on every qubit.
    R,
    /// Rx then Ry on every qubit.
    Rxy,
}

/// Description of one catalog entry.
#[derive(Clone, Debug)]
pub struct BlockInfo {
    pub id: usize,
    pub connectivity: &'static str,
    /// Entry annotated as reaching the optimal parameter-to-gate ratio.
    pub optimal_a: bool,
    layer: Layer,
    stages: Vec<(Primitive, Pattern)>,
}

pub fn block_catalog(id: usize) -> Result<BlockInfo> {
    use Pattern::*;
    use Primitive::*;
    let (connectivity, optimal_a, layer, stages): (_, _, _, Vec<(Primitive, Pattern)>) = match id {
        0 => ("none", false, Layer::R, vec![]),
        1 => ("linear", false, Layer::R, vec![(Cnot, ChainUp)]),
        2 => ("linear", true, Layer::None, vec![(Rcn, ChainUp)]),
        3 => ("linear", true, Layer::None, vec![(Rcn, Brick)]),
        4 => ("linear", false, Layer::Rxy, vec![(Cz, ChainUp)]),
        5 => ("linear", true, Layer::None, vec![(Rcz, ChainUp)]),
        6 => ("circular", false, Layer::None, vec![(Cr, ChainUp), (Cr, Closing)]),
        7 => ("circular", false, Layer::R, vec![(Cnot, ChainDown), (Cnot, Closing)]),
        8 => ("circular", true, Layer::None, vec![(Rcn, ChainDown), (Rcn, Closing)]),
        9 => ("star", true, Layer::None, vec![(RcnR, Star(0))]),
        10 => ("star", true, Layer::None, vec![(RcnR, StarIn(0))]),
        11 => ("all-to-all", true, Layer::None, vec![(Rcn, AllPairs)]),
        12 => ("linear", true, Layer::None, vec![(Rccz, Triples)]),
        13 => ("full", true, Layer::None, vec![(Rncz, All)]),
        14 => ("star", true, Layer::None, vec![(RcnR, Single10), (RcnR, Star(1))]),
        15 => ("circular", true, Layer::None, vec![(Rcn, Brick), (Rcn, Closing)]),
        _ => return Err(Error::UnknownBlock(id)),
    };
    Ok(BlockInfo {
        id,
        connectivity,
        optimal_a,
        layer,
        stages,
    })
}

impl BlockInfo {
    /// Smallest register the block's patterns are defined on.
    pub fn min_qubits(&self) -> usize {
        let needs = |p: Pattern| if p == Pattern::Triples { 3 } else { 2 };
        self.stages.iter().map(|&(_, p)| needs(p)).max().unwrap_or(2)
    }
}

fn expand(p: Pattern, n: usize) -> Vec<Vec<usize>> {
    match p {
        Pattern::ChainUp => (0..n - 1).rev().map(|i| vec![i, i + 1]).collect(),
        Pattern::ChainDown => (0..n - 1).map(|i| vec![i, i + 1]).collect(),
        Pattern::Brick => (0..n - 1)
            .step_by(2)
            .chain((1..n - 1).step_by(2))
            .map(|i| vec![i, i + 1])
            .collect(),
        // On two qubits the closing bond coincides with the chain bond.
        Pattern::Closing if n > 2 => vec![vec![n - 1, 0]],
        Pattern::Closing => Vec::new(),
        Pattern::Star(h) => (0..n).filter(|&j| j != h).map(|j| vec![h, j]).collect(),
        Pattern::StarIn(h) => (0..n).filter(|&j| j != h).map(|j| vec![j, h]).collect(),
        Pattern::Single10 => vec![vec![1, 0]],
        Pattern::AllPairs => (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| vec![i, j]))
            .collect(),
        Pattern::Triples => (0..n.saturating_sub(2)).map(|i| vec![i, i + 1, i + 2]).collect(),
        Pattern::All => vec![(0..n).collect()],
    }
}

struct Builder {
    c: Circuit,
    real: bool,
}

impl Builder {
    fn rot(&mut self, kind: GateKind, q: usize) -> Result<()> {
        match kind {
            GateKind::Rx | GateKind::Rz if self.real => Ok(()),
            GateKind::GeneralR => self.c.push_rotation(q, self.real),
            GateKind::RyOnly => self.c.push_param(GateKind::RyOnly, q),
            _ => self.c.push_param(kind, q),
        }
    }

    fn primitive(&mut self, p: Primitive, qs: &[usize]) -> Result<()> {
        use GateKind::*;
        match p {
            Primitive::Rcn => {
                self.rot(RyOnly, qs[0])?;
                self.rot(Rx, qs[0])?;
                self.rot(RyOnly, qs[1])?;
                self.rot(Rz, qs[1])?;
                self.c.push_fixed(Cnot, qs.to_vec())
            }
            Primitive::RcnR => {
                self.rot(Rz, qs[0])?;
                self.rot(RyOnly, qs[0])?;
                self.rot(Rx, qs[1])?;
                self.rot(RyOnly, qs[1])?;
                self.c.push_fixed(Cnot, qs.to_vec())
            }
            Primitive::Rcz | Primitive::Rccz | Primitive::Rncz => {
                for &q in qs {
                    self.rot(Rx, q)?;
                    self.rot(RyOnly, q)?;
                }
                let kind = match qs.len() {
                    2 => Cz,
                    3 => Ccz,
                    _ => Ncz,
                };
                self.c.push_fixed(kind, qs.to_vec())
            }
            Primitive::Cr => {
                self.rot(GeneralR, qs[0])?;
                let ps = if self.real {
                    vec![self.c.new_param(), Param::Fixed(0.0), Param::Fixed(0.0)]
                } else {
                    vec![self.c.new_param(), self.c.new_param(), self.c.new_param()]
                };
                self.c.push(Gate::new(ControlledR, qs.to_vec(), ps))
            }
            Primitive::Cnot => self.c.push_fixed(Cnot, qs.to_vec()),
            Primitive::Cz => self.c.push_fixed(Cz, qs.to_vec()),
        }
    }
}

/// `M` copies of the block's layer followed by a rotation on every qubit;
/// hermitian specs are wrapped as `U H^{(x)N} U^dagger`.
pub fn build_generic_ansatz(spec: &AnsatzSpec) -> Result<Circuit> {
    let Family::GenericBlock(id) = spec.family else {
        return Err(Error::InvalidInput("not a generic block family".into()));
    };
    let info = block_catalog(id)?;
    let n = spec.system_qubits + spec.ancillas;
    if n < 2 || n < info.min_qubits() {
        return Err(Error::InvalidInput(format!(
            "block {id} needs at least {} qubits, got {n}",
            info.min_qubits()
        )));
    }
    let mut b = Builder {
        c: Circuit::new(n, spec.ancillas)?,
        real: spec.restriction == Restriction::Real,
    };
    for _ in 0..spec.layers {
        for q in 0..n {
            match info.layer {
                Layer::None => {}
                Layer::R => b.rot(GateKind::GeneralR, q)?,
                Layer::Rxy => {
                    b.rot(GateKind::Rx, q)?;
                    b.rot(GateKind::RyOnly, q)?;
                }
            }
        }
        for &(p, pat) in &info.stages {
            for qs in expand(pat, n) {
                b.primitive(p, &qs)?;
            }
        }
    }
    let before = b.c.num_params();
    for q in 0..n {
        b.rot(GateKind::GeneralR, q)?;
    }
    let mut c = b.c;
    c.set_tail_params(c.num_params() - before);
    c.set_layers(spec.layers);
    Ok(if spec.hermitian {
        super::hermitize(&c, VChoice::AllHadamard)
    } else {
        c
    })
}
