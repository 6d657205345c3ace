//! Parameterized circuits over `N = m + n` qubits (ancillas first) and their
//! dense evaluation.

mod blocks;
mod cost;
pub(crate) mod sim;
mod text;

use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{self, ComplexMatrix, I, ONE, ZERO};
use crate::pauli::{PauliString, PauliSum};

pub use blocks::{block_catalog, build_generic_ansatz, BlockInfo, Primitive};
pub use cost::{count_multiqubit_gates, count_nonlocal_gates, GateCostModel};
pub use text::dump_circuit;

/// Largest register size the dense simulator accepts.
pub const MAX_CIRCUIT_QUBITS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    GeneralR,
    RyOnly,
    Rx,
    Rz,
    Hadamard,
    Cnot,
    Cz,
    Ccz,
    Ncz,
    ControlledR,
    PauliGadget,
    ControlledPauliGadget,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::GeneralR => "R",
            GateKind::RyOnly => "RY",
            GateKind::Rx => "RX",
            GateKind::Rz => "RZ",
            GateKind::Hadamard => "H",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Ccz => "CCZ",
            GateKind::Ncz => "NCZ",
            GateKind::ControlledR => "CR",
            GateKind::PauliGadget => "GADGET",
            GateKind::ControlledPauliGadget => "CGADGET",
        }
    }

    /// Number of angle entries the gate carries (slots or fixed values).
    fn angle_count(self) -> usize {
        match self {
            GateKind::GeneralR | GateKind::ControlledR => 3,
            GateKind::RyOnly
            | GateKind::Rx
            | GateKind::Rz
            | GateKind::PauliGadget
            | GateKind::ControlledPauliGadget => 1,
            _ => 0,
        }
    }
}

/// A gate angle: a slot of the circuit parameter vector or a constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Param {
    Slot(usize),
    Fixed(f64),
}

impl Param {
    pub fn value(self, theta: &[f64]) -> f64 {
        match self {
            Param::Slot(k) => theta[k],
            Param::Fixed(v) => v,
        }
    }

    pub fn slot(self) -> Option<usize> {
        match self {
            Param::Slot(k) => Some(k),
            Param::Fixed(_) => None,
        }
    }
}

/// Anti-hermitian gadget generator `g = i * sum_k c_k P_k` with real `c_k`.
#[derive(Clone, Debug)]
pub struct Generator {
    sum: PauliSum,
    strings: Vec<(PauliString, f64)>,
    commuting: bool,
    /// Eigen-decomposition of `sum_k c_k P_k` when the strings do not commute.
    eigen: Option<(Vec<f64>, ComplexMatrix)>,
}

impl Generator {
    pub fn new(sum: PauliSum) -> Result<Self> {
        if !sum.is_anti_hermitian(1e-12) {
            return Err(Error::NotAntiHermitian);
        }
        let strings: Vec<_> = sum.terms().iter().map(|&(p, c)| (p, c.im)).collect();
        let commuting = sum.pairwise_commuting();
        let eigen = if commuting {
            None
        } else {
            let h = sum.scale(-I).to_dense()?;
            Some(numkit::hermitian_eigen(&h)?)
        };
        Ok(Self {
            sum,
            strings,
            commuting,
            eigen,
        })
    }

    pub fn sum(&self) -> &PauliSum {
        &self.sum
    }

    pub fn num_qubits(&self) -> usize {
        self.sum.num_qubits()
    }

    pub fn strings(&self) -> &[(PauliString, f64)] {
        &self.strings
    }

    pub fn is_commuting(&self) -> bool {
        self.commuting
    }

    /// `exp(theta * g)` on the generator's own qubits.
    pub fn unitary(&self, theta: f64) -> ComplexMatrix {
        let dim = 1usize << self.num_qubits();
        match &self.eigen {
            None => {
                let mut u = ComplexMatrix::identity(dim);
                for &(p, c) in &self.strings {
                    let pd = p.to_dense().expect("generator fits dense range");
                    let (s, co) = (c * theta).sin_cos();
                    let rot = &ComplexMatrix::identity(dim).scale_real(co) + &pd.scale(I * s);
                    u = &rot * &u;
                }
                u
            }
            Some((mu, v)) => {
                let mut scaled = v.clone();
                for c in 0..dim {
                    let ph = Complex64::from_polar(1.0, theta * mu[c]);
                    for r in 0..dim {
                        scaled[(r, c)] *= ph;
                    }
                }
                &scaled * &v.adjoint()
            }
        }
    }
}

/// `exp(theta * g)` for an anti-hermitian Pauli sum `g`.
pub fn pauli_gadget_unitary(g: &PauliSum, theta: f64) -> Result<ComplexMatrix> {
    Ok(Generator::new(g.clone())?.unitary(theta))
}

#[derive(Clone, Debug)]
pub struct Gate {
    pub kind: GateKind,
    /// Controls first, then targets; gadgets list the qubits their letters act on.
    pub qubits: Vec<usize>,
    pub params: Vec<Param>,
    pub generator: Option<Arc<Generator>>,
    /// Controls added by [`controlled`].
    pub extra_controls: Vec<usize>,
    pub dagger: bool,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, params: Vec<Param>) -> Self {
        Self {
            kind,
            qubits,
            params,
            generator: None,
            extra_controls: Vec::new(),
            dagger: false,
        }
    }

    pub fn gadget(control: Option<usize>, targets: Vec<usize>, g: Arc<Generator>, p: Param) -> Self {
        let (kind, qubits) = match control {
            Some(c) => (
                GateKind::ControlledPauliGadget,
                std::iter::once(c).chain(targets).collect(),
            ),
            None => (GateKind::PauliGadget, targets),
        };
        Self {
            kind,
            qubits,
            params: vec![p],
            generator: Some(g),
            extra_controls: Vec::new(),
            dagger: false,
        }
    }

    pub fn slots(&self) -> impl Iterator<Item = usize> + '_ {
        self.params.iter().filter_map(|p| p.slot())
    }

    pub fn is_parameterized(&self) -> bool {
        self.slots().next().is_some()
    }

    /// Qubits the gate is conditioned on (kind-intrinsic plus added ones).
    pub fn control_qubits(&self) -> Vec<usize> {
        let mut c: Vec<usize> = match self.kind {
            GateKind::Cnot | GateKind::ControlledR | GateKind::ControlledPauliGadget => {
                vec![self.qubits[0]]
            }
            GateKind::Cz | GateKind::Ccz | GateKind::Ncz => {
                self.qubits[..self.qubits.len() - 1].to_vec()
            }
            _ => Vec::new(),
        };
        c.extend(&self.extra_controls);
        c
    }

    fn all_qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.qubits.iter().chain(&self.extra_controls).copied()
    }

    pub fn adjoint(&self) -> Self {
        let mut g = self.clone();
        g.dagger = !g.dagger;
        g
    }
}

/// Ordered gate list with a flat parameter vector.
#[derive(Clone, Debug)]
pub struct Circuit {
    num_qubits: usize,
    ancillas: usize,
    num_params: usize,
    gates: Vec<Gate>,
    /// Gate range of `V` in a `U V U^dagger` circuit.
    mirror: Option<Range<usize>>,
    /// Parameters outside the repeating layers (the appended rotation layer
    /// of generic ansatze, the initial ancilla rotation of GQSP ansatze).
    tail_params: usize,
    layers: usize,
}

impl Circuit {
    pub fn new(num_qubits: usize, ancillas: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_CIRCUIT_QUBITS {
            return Err(Error::TooManyQubits(num_qubits, MAX_CIRCUIT_QUBITS));
        }
        if ancillas > num_qubits {
            return Err(Error::InvalidInput(format!(
                "{ancillas} ancillas in a {num_qubits}-qubit circuit"
            )));
        }
        Ok(Self {
            num_qubits,
            ancillas,
            num_params: 0,
            gates: Vec::new(),
            mirror: None,
            tail_params: 0,
            layers: 0,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn ancillas(&self) -> usize {
        self.ancillas
    }

    pub fn system_qubits(&self) -> usize {
        self.num_qubits - self.ancillas
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn mirror(&self) -> Option<Range<usize>> {
        self.mirror.clone()
    }

    pub fn is_hermitized(&self) -> bool {
        self.mirror.is_some()
    }

    pub fn tail_params(&self) -> usize {
        self.tail_params
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn set_layers(&mut self, layers: usize) {
        self.layers = layers;
    }

    pub fn set_tail_params(&mut self, k: usize) {
        self.tail_params = k;
    }

    /// Reserves a new parameter slot.
    pub fn new_param(&mut self) -> Param {
        self.num_params += 1;
        Param::Slot(self.num_params - 1)
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        let expected = gate.kind.angle_count();
        if gate.params.len() != expected {
            return Err(Error::InvalidInput(format!(
                "{} takes {expected} angles, got {}",
                gate.kind.name(),
                gate.params.len()
            )));
        }
        let arity_ok = match gate.kind {
            GateKind::GeneralR
            | GateKind::RyOnly
            | GateKind::Rx
            | GateKind::Rz
            | GateKind::Hadamard => gate.qubits.len() == 1,
            GateKind::Cnot | GateKind::Cz | GateKind::ControlledR => gate.qubits.len() == 2,
            GateKind::Ccz => gate.qubits.len() == 3,
            GateKind::Ncz => gate.qubits.len() >= 2,
            GateKind::PauliGadget | GateKind::ControlledPauliGadget => {
                let off = usize::from(gate.kind == GateKind::ControlledPauliGadget);
                match &gate.generator {
                    Some(g) => gate.qubits.len() == g.num_qubits() + off,
                    None => false,
                }
            }
        };
        if !arity_ok {
            return Err(Error::InvalidInput(format!(
                "{} on qubits {:?} has the wrong arity or generator",
                gate.kind.name(),
                gate.qubits
            )));
        }
        let mut seen = 0u64;
        for q in gate.all_qubits() {
            if q >= self.num_qubits || seen & (1 << q) != 0 {
                return Err(Error::InvalidInput(format!(
                    "{} has invalid or repeated qubit {q}",
                    gate.kind.name()
                )));
            }
            seen |= 1 << q;
        }
        for s in gate.slots() {
            if s >= self.num_params {
                self.num_params = s + 1;
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    /// Adds a general rotation (or `R_y` when `real`) with fresh slots.
    pub fn push_rotation(&mut self, q: usize, real: bool) -> Result<()> {
        if real {
            let p = self.new_param();
            self.push(Gate::new(GateKind::RyOnly, vec![q], vec![p]))
        } else {
            let ps = vec![self.new_param(), self.new_param(), self.new_param()];
            self.push(Gate::new(GateKind::GeneralR, vec![q], ps))
        }
    }

    pub fn push_fixed(&mut self, kind: GateKind, qubits: Vec<usize>) -> Result<()> {
        self.push(Gate::new(kind, qubits, Vec::new()))
    }

    pub fn push_param(&mut self, kind: GateKind, q: usize) -> Result<()> {
        let p = self.new_param();
        self.push(Gate::new(kind, vec![q], vec![p]))
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params {
            return Err(Error::LengthMismatch {
                expected: self.num_params,
                got: theta.len(),
            });
        }
        Ok(())
    }
}

/// Restriction on the rotation gates of an ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Restriction {
    Complex,
    Real,
}

/// Hermitian operator placed between `U` and `U^dagger`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum VChoice {
    /// Hadamard on every qubit.
    AllHadamard,
    /// Hadamard on the ancilla register only.
    AncillaHadamard,
}

/// How GQSP generator sequences are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequencePolicy {
    /// Cycle through the generator list.
    RoundRobin,
    /// Uniform random choice per layer, redrawn per restart.
    Random,
    /// Fixed generator indices, one per layer.
    Explicit(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    GenericBlock(usize),
    Gqsp {
        #[serde(with = "pauli_list_serde")]
        generators: Vec<PauliSum>,
        sequence: SequencePolicy,
    },
}

/// Declarative ansatz description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnsatzSpec {
    pub family: Family,
    pub layers: usize,
    pub restriction: Restriction,
    pub hermitian: bool,
    pub ancillas: usize,
    pub system_qubits: usize,
}

impl AnsatzSpec {
    pub fn generic(block: usize, system_qubits: usize, layers: usize) -> Self {
        Self {
            family: Family::GenericBlock(block),
            layers,
            restriction: Restriction::Complex,
            hermitian: false,
            ancillas: 1,
            system_qubits,
        }
    }

    pub fn gqsp(generators: Vec<PauliSum>, sequence: SequencePolicy, layers: usize) -> Self {
        let n = generators.first().map_or(0, |g| g.num_qubits());
        Self {
            family: Family::Gqsp {
                generators,
                sequence,
            },
            layers,
            restriction: Restriction::Complex,
            hermitian: true,
            ancillas: 1,
            system_qubits: n,
        }
    }

    pub fn with_layers(&self, layers: usize) -> Self {
        Self {
            layers,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.system_qubits == 0 || self.ancillas == 0 {
            return Err(Error::InvalidInput(
                "ansatz needs at least one system and one ancilla qubit".into(),
            ));
        }
        match &self.family {
            Family::GenericBlock(id) if *id > 15 => Err(Error::UnknownBlock(*id)),
            Family::Gqsp { generators, sequence } => {
                if self.ancillas != 1 {
                    return Err(Error::InvalidInput("GQSP ansatze use one ancilla".into()));
                }
                if generators.is_empty() {
                    return Err(Error::InvalidInput("empty generator set".into()));
                }
                if let SequencePolicy::Explicit(seq) = sequence {
                    if seq.len() != self.layers || seq.iter().any(|&i| i >= generators.len()) {
                        return Err(Error::InvalidInput(
                            "explicit sequence must name one valid generator per layer".into(),
                        ));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Generator indices for a GQSP ansatz. `draw` supplies a uniform index
    /// below its argument for the random policy.
    pub fn sequence(&self, draw: &mut dyn FnMut(usize) -> usize) -> Vec<usize> {
        match &self.family {
            Family::GenericBlock(_) => Vec::new(),
            Family::Gqsp {
                generators,
                sequence,
            } => match sequence {
                SequencePolicy::RoundRobin => (0..self.layers).map(|i| i % generators.len()).collect(),
                SequencePolicy::Random => (0..self.layers).map(|_| draw(generators.len())).collect(),
                SequencePolicy::Explicit(s) => s.clone(),
            },
        }
    }

    /// Builds the circuit; `sequence` is only read for GQSP families.
    pub fn build(&self, sequence: &[usize]) -> Result<Circuit> {
        self.validate()?;
        match &self.family {
            Family::GenericBlock(_) => build_generic_ansatz(self),
            Family::Gqsp { generators, .. } => {
                if sequence.len() != self.layers {
                    return Err(Error::InvalidInput(format!(
                        "sequence has {} entries for {} layers",
                        sequence.len(),
                        self.layers
                    )));
                }
                let gens = sequence
                    .iter()
                    .map(|&i| {
                        generators.get(i).cloned().ok_or_else(|| {
                            Error::InvalidInput(format!("generator index {i} out of range"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let c = build_gqsp_ansatz_with(&gens, self.system_qubits, generators)?;
                Ok(if self.hermitian {
                    hermitize(&c, VChoice::AncillaHadamard)
                } else {
                    c
                })
            }
        }
    }
}

mod pauli_list_serde {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[PauliSum], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&crate::pauli::format_generator_list(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<PauliSum>, D::Error> {
        let text = String::deserialize(d)?;
        crate::pauli::parse_generator_list(&text).map_err(serde::de::Error::custom)
    }
}

/// `R(t, p, l) = [[cos(t/2), -e^{il} sin(t/2)], [e^{ip} sin(t/2), e^{i(p+l)} cos(t/2)]]`.
pub fn single_qubit_r(theta: f64, phi: f64, lambda: f64) -> ComplexMatrix {
    let m = r_entries(theta, phi, lambda);
    ComplexMatrix::from_rows(&[&[m[0], m[1]], &[m[2], m[3]]])
}

pub(crate) fn r_entries(t: f64, p: f64, l: f64) -> [Complex64; 4] {
    let (s, c) = (t / 2.0).sin_cos();
    let el = Complex64::from_polar(1.0, l);
    let ep = Complex64::from_polar(1.0, p);
    [ONE * c, -el * s, ep * s, ep * el * c]
}

/// Derivatives of [`r_entries`] with respect to each of the three angles.
pub(crate) fn r_derivatives(t: f64, p: f64, l: f64) -> [[Complex64; 4]; 3] {
    let (s, c) = (t / 2.0).sin_cos();
    let el = Complex64::from_polar(1.0, l);
    let ep = Complex64::from_polar(1.0, p);
    [
        [ONE * (-s / 2.0), -el * (c / 2.0), ep * (c / 2.0), -ep * el * (s / 2.0)],
        [ZERO, ZERO, I * ep * s, I * ep * el * c],
        [ZERO, -I * el * s, ZERO, I * ep * el * c],
    ]
}

pub(crate) fn rx_entries(t: f64) -> [Complex64; 4] {
    let (s, c) = (t / 2.0).sin_cos();
    [ONE * c, -I * s, -I * s, ONE * c]
}

pub(crate) fn rx_derivative(t: f64) -> [Complex64; 4] {
    let (s, c) = (t / 2.0).sin_cos();
    [ONE * (-s / 2.0), -I * (c / 2.0), -I * (c / 2.0), ONE * (-s / 2.0)]
}

pub(crate) fn rz_entries(t: f64) -> [Complex64; 4] {
    [
        Complex64::from_polar(1.0, -t / 2.0),
        ZERO,
        ZERO,
        Complex64::from_polar(1.0, t / 2.0),
    ]
}

pub(crate) fn rz_derivative(t: f64) -> [Complex64; 4] {
    [
        -I * 0.5 * Complex64::from_polar(1.0, -t / 2.0),
        ZERO,
        ZERO,
        I * 0.5 * Complex64::from_polar(1.0, t / 2.0),
    ]
}

/// GQSP-type ansatz: `R(t0, p0, l0)` on the ancilla, then per generator a
/// controlled gadget followed by `R(t_i, p_i, 0)`.
pub fn build_gqsp_ansatz(generators: &[PauliSum], n: usize) -> Result<Circuit> {
    build_gqsp_ansatz_with(generators, n, generators)
}

fn build_gqsp_ansatz_with(layers: &[PauliSum], n: usize, distinct: &[PauliSum]) -> Result<Circuit> {
    // Decompose each distinct generator once.
    let mut cache: Vec<(PauliSum, Arc<Generator>)> = Vec::new();
    let mut lookup = |g: &PauliSum| -> Result<Arc<Generator>> {
        if let Some((_, a)) = cache.iter().find(|(s, _)| s == g) {
            return Ok(a.clone());
        }
        let a = Arc::new(Generator::new(g.clone())?);
        cache.push((g.clone(), a.clone()));
        Ok(a)
    };
    for g in distinct {
        if g.num_qubits() != n {
            return Err(Error::QubitCountMismatch {
                expected: n,
                got: g.num_qubits(),
            });
        }
    }
    let mut c = Circuit::new(n + 1, 1)?;
    c.push_rotation(0, false)?;
    let targets: Vec<usize> = (1..=n).collect();
    for g in layers {
        if g.num_qubits() != n {
            return Err(Error::QubitCountMismatch {
                expected: n,
                got: g.num_qubits(),
            });
        }
        let gen = lookup(g)?;
        let p = c.new_param();
        c.push(Gate::gadget(Some(0), targets.clone(), gen, p))?;
        let ps = vec![c.new_param(), c.new_param(), Param::Fixed(0.0)];
        c.push(Gate::new(GateKind::GeneralR, vec![0], ps))?;
    }
    c.tail_params = 3;
    c.layers = layers.len();
    Ok(c)
}

/// `U V U^dagger` with the parameter slots shared between both halves.
pub fn hermitize(c: &Circuit, v: VChoice) -> Circuit {
    let mut out = c.clone();
    out.gates = c.gates.iter().rev().map(Gate::adjoint).collect();
    let start = out.gates.len();
    let v_qubits = match v {
        VChoice::AllHadamard => 0..c.num_qubits,
        VChoice::AncillaHadamard => 0..c.ancillas.max(1),
    };
    for q in v_qubits {
        out.gates.push(Gate::new(GateKind::Hadamard, vec![q], Vec::new()));
    }
    let end = out.gates.len();
    out.gates.extend(c.gates.iter().cloned());
    out.mirror = Some(start..end);
    out
}

/// Adds a control qubit at index 0. Hermitized circuits only control `V`.
pub fn controlled(c: &Circuit) -> Circuit {
    let shift = |g: &Gate| {
        let mut g = g.clone();
        for q in g.qubits.iter_mut().chain(g.extra_controls.iter_mut()) {
            *q += 1;
        }
        g
    };
    let mut out = c.clone();
    out.num_qubits += 1;
    out.ancillas += 1;
    out.gates = c
        .gates
        .iter()
        .enumerate()
        .map(|(i, g)| {
            let mut g = shift(g);
            let in_v = c.mirror.as_ref().is_none_or(|r| r.contains(&i));
            if in_v {
                g.extra_controls.push(0);
            }
            g
        })
        .collect();
    out
}

/// Dense unitary of the circuit.
pub fn evaluate(c: &Circuit, theta: &[f64]) -> Result<ComplexMatrix> {
    c.check_theta(theta)?;
    let dim = 1usize << c.num_qubits;
    let mut u = ComplexMatrix::identity(dim);
    for g in &c.gates {
        sim::GateOps::compile(g, c.num_qubits, theta).apply(&mut u);
    }
    Ok(u)
}

/// Unitary plus `dU/dtheta_k` for every slot, by the product rule over
/// gate occurrences.
pub fn evaluate_with_gradients(
    c: &Circuit,
    theta: &[f64],
) -> Result<(ComplexMatrix, Vec<ComplexMatrix>)> {
    c.check_theta(theta)?;
    let dim = 1usize << c.num_qubits;
    let compiled: Vec<_> = c
        .gates
        .iter()
        .map(|g| sim::GateOps::compile(g, c.num_qubits, theta))
        .collect();
    let mut grads = vec![ComplexMatrix::zeros(dim, dim); c.num_params];
    let mut prefix = ComplexMatrix::identity(dim);
    for (k, g) in c.gates.iter().enumerate() {
        for (pi, p) in g.params.iter().enumerate() {
            let Param::Slot(slot) = *p else { continue };
            let mut d = prefix.clone();
            compiled[k].apply_derivative(pi, &mut d);
            for later in &compiled[k + 1..] {
                later.apply(&mut d);
            }
            grads[slot] = &grads[slot] + &d;
        }
        compiled[k].apply(&mut prefix);
    }
    Ok((prefix, grads))
}
