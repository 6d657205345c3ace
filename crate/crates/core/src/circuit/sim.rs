//! Gate kernels acting on the rows of dense `D x k` matrices, and the
//! adjoint sweep for block-encoding cost gradients.

use num_complex::Complex64;

use super::{
    r_derivatives, r_entries, rx_derivative, rx_entries, rz_derivative, rz_entries, Circuit, Gate,
    GateKind, Param,
};
use crate::error::Result;
use crate::numkit::{ComplexMatrix, I, ONE, ZERO};
use crate::pauli::i_pow;

const X_ENTRIES: [Complex64; 4] = [ZERO, ONE, ONE, ZERO];
const Z_ENTRIES: [Complex64; 4] = [ONE, ZERO, ZERO, Complex64 { re: -1.0, im: 0.0 }];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Variant {
    Normal,
    Adjoint,
    Transpose,
}

#[derive(Clone, Debug)]
pub(crate) enum Op {
    /// 2x2 matrix on one index bit, acting where all `ctrl` bits are set.
    One {
        bit: usize,
        ctrl: usize,
        m: [Complex64; 4],
    },
    /// `cos + i sin P` with `P |b> = phase (-1)^{|b & z|} |b ^ x>`.
    Rot {
        x: usize,
        z: usize,
        phase: Complex64,
        ctrl: usize,
        cos: f64,
        sin: f64,
    },
    /// Dense matrix on the index bits `bits` (local bit `l` is `bits[l]`).
    Dense {
        bits: Vec<usize>,
        ctrl: usize,
        m: ComplexMatrix,
    },
}

fn adjoint2(m: &[Complex64; 4]) -> [Complex64; 4] {
    [m[0].conj(), m[2].conj(), m[1].conj(), m[3].conj()]
}

fn transpose2(m: &[Complex64; 4]) -> [Complex64; 4] {
    [m[0], m[2], m[1], m[3]]
}

impl Op {
    fn adjoint(&self) -> Op {
        match self {
            Op::One { bit, ctrl, m } => Op::One {
                bit: *bit,
                ctrl: *ctrl,
                m: adjoint2(m),
            },
            Op::Rot {
                x,
                z,
                phase,
                ctrl,
                cos,
                sin,
            } => Op::Rot {
                x: *x,
                z: *z,
                phase: *phase,
                ctrl: *ctrl,
                cos: *cos,
                sin: -sin,
            },
            Op::Dense { bits, ctrl, m } => Op::Dense {
                bits: bits.clone(),
                ctrl: *ctrl,
                m: m.adjoint(),
            },
        }
    }

    fn apply(&self, data: &mut [Complex64], cols: usize, v: Variant) {
        let rows = data.len() / cols;
        match self {
            Op::One { bit, ctrl, m } => {
                let m = match v {
                    Variant::Normal => *m,
                    Variant::Adjoint => adjoint2(m),
                    Variant::Transpose => transpose2(m),
                };
                apply_one(data, rows, cols, *bit, *ctrl, &m);
            }
            Op::Rot {
                x,
                z,
                phase,
                ctrl,
                cos,
                sin,
            } => {
                let sin = match v {
                    Variant::Normal => *sin,
                    Variant::Adjoint => -sin,
                    Variant::Transpose if (x & z).count_ones() % 2 == 1 => -sin,
                    Variant::Transpose => *sin,
                };
                apply_rot(data, rows, cols, *x, *z, *phase, *ctrl, *cos, sin);
            }
            Op::Dense { bits, ctrl, m } => {
                let owned;
                let m = match v {
                    Variant::Normal => m,
                    Variant::Adjoint => {
                        owned = m.adjoint();
                        &owned
                    }
                    Variant::Transpose => {
                        owned = m.transpose();
                        &owned
                    }
                };
                apply_dense(data, rows, cols, bits, *ctrl, m);
            }
        }
    }
}

fn pair_rows(data: &mut [Complex64], cols: usize, r0: usize, r1: usize) -> (&mut [Complex64], &mut [Complex64]) {
    debug_assert!(r0 < r1);
    let (lo, hi) = data.split_at_mut(r1 * cols);
    (&mut lo[r0 * cols..(r0 + 1) * cols], &mut hi[..cols])
}

fn apply_one(data: &mut [Complex64], rows: usize, cols: usize, bit: usize, ctrl: usize, m: &[Complex64; 4]) {
    let step = 1usize << bit;
    let diagonal = m[1] == ZERO && m[2] == ZERO;
    let swap = m == &X_ENTRIES;
    for r0 in 0..rows {
        if r0 & step != 0 || r0 & ctrl != ctrl {
            continue;
        }
        let r1 = r0 | step;
        let (a, b) = pair_rows(data, cols, r0, r1);
        if swap {
            a.swap_with_slice(b);
        } else if diagonal {
            if m[0] != ONE {
                a.iter_mut().for_each(|v| *v *= m[0]);
            }
            if m[3] != ONE {
                b.iter_mut().for_each(|v| *v *= m[3]);
            }
        } else {
            for (u, w) in a.iter_mut().zip(b.iter_mut()) {
                let (p, q) = (*u, *w);
                *u = m[0] * p + m[1] * q;
                *w = m[2] * p + m[3] * q;
            }
        }
    }
}

#[inline]
fn string_phase(phase: Complex64, z: usize, b: usize) -> Complex64 {
    if (b & z).count_ones() % 2 == 1 {
        -phase
    } else {
        phase
    }
}

#[allow(clippy::too_many_arguments)]
fn apply_rot(
    data: &mut [Complex64],
    rows: usize,
    cols: usize,
    x: usize,
    z: usize,
    phase: Complex64,
    ctrl: usize,
    cos: f64,
    sin: f64,
) {
    let isin = I * sin;
    if x == 0 {
        for b in 0..rows {
            if b & ctrl != ctrl {
                continue;
            }
            let f = cos + isin * string_phase(phase, z, b);
            data[b * cols..(b + 1) * cols].iter_mut().for_each(|v| *v *= f);
        }
        return;
    }
    for b in 0..rows {
        let c = b ^ x;
        if c < b || b & ctrl != ctrl {
            continue;
        }
        // new[c] = cos a[c] + i sin ph(b) a[b], new[b] = cos a[b] + i sin ph(c) a[c]
        let fb = isin * string_phase(phase, z, b);
        let fc = isin * string_phase(phase, z, c);
        let (rb, rc) = pair_rows(data, cols, b, c);
        for (u, w) in rb.iter_mut().zip(rc.iter_mut()) {
            let (p, q) = (*u, *w);
            *u = p * cos + fc * q;
            *w = q * cos + fb * p;
        }
    }
}

fn apply_dense(data: &mut [Complex64], rows: usize, cols: usize, bits: &[usize], ctrl: usize, m: &ComplexMatrix) {
    let k = 1usize << bits.len();
    let tmask: usize = bits.iter().map(|&b| 1usize << b).sum();
    let offsets: Vec<usize> = (0..k)
        .map(|l| {
            bits.iter()
                .enumerate()
                .filter(|(j, _)| l >> j & 1 == 1)
                .map(|(_, &b)| 1usize << b)
                .sum()
        })
        .collect();
    let mut tmp = vec![ZERO; k * cols];
    for base in 0..rows {
        if base & tmask != 0 || base & ctrl != ctrl {
            continue;
        }
        for (l, &o) in offsets.iter().enumerate() {
            let r = base | o;
            tmp[l * cols..(l + 1) * cols].copy_from_slice(&data[r * cols..(r + 1) * cols]);
        }
        for (l, &o) in offsets.iter().enumerate() {
            let r = base | o;
            let out = &mut data[r * cols..(r + 1) * cols];
            out.iter_mut().for_each(|v| *v = ZERO);
            for lp in 0..k {
                let f = m[(l, lp)];
                if f == ZERO {
                    continue;
                }
                for (v, t) in out.iter_mut().zip(&tmp[lp * cols..(lp + 1) * cols]) {
                    *v += f * t;
                }
            }
        }
    }
}

#[inline]
fn rowdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// Derivative data of one gate occurrence.
#[derive(Clone, Debug)]
enum Deriv {
    None,
    /// `dG = Pi_ctrl (x) dm` for each parameter entry `(param index, dm)`.
    Local {
        bit: usize,
        ctrl: usize,
        dms: Vec<(usize, [Complex64; 4])>,
    },
    /// `dG = sign * g' G`, `g' = Pi_ctrl (x) i sum_s c_s P_s`.
    Gadget {
        strings: Vec<(usize, usize, Complex64, f64)>,
        ctrl: usize,
        sign: f64,
    },
}

/// A compiled gate: `G = ops[last] ... ops[0]`.
#[derive(Clone, Debug)]
pub(crate) struct GateOps {
    ops: Vec<Op>,
    deriv: Deriv,
}

fn bit_of(nq: usize, q: usize) -> usize {
    nq - 1 - q
}

fn mask_of(nq: usize, qs: &[usize]) -> usize {
    qs.iter().map(|&q| 1usize << bit_of(nq, q)).sum()
}

impl GateOps {
    pub(crate) fn compile(g: &Gate, nq: usize, theta: &[f64]) -> Self {
        let ang: Vec<f64> = g.params.iter().map(|p| p.value(theta)).collect();
        let ctrl = mask_of(nq, &g.control_qubits());
        let target = *g.qubits.last().expect("gate has qubits");
        let bit = bit_of(nq, target);
        let one = |m: [Complex64; 4]| Op::One { bit, ctrl, m };
        let local = |dms: Vec<[Complex64; 4]>| Deriv::Local {
            bit,
            ctrl,
            dms: dms.into_iter().enumerate().collect(),
        };
        let (ops, deriv) = match g.kind {
            GateKind::GeneralR | GateKind::ControlledR => (
                vec![one(r_entries(ang[0], ang[1], ang[2]))],
                local(r_derivatives(ang[0], ang[1], ang[2]).to_vec()),
            ),
            GateKind::RyOnly => (
                vec![one(r_entries(ang[0], 0.0, 0.0))],
                local(vec![r_derivatives(ang[0], 0.0, 0.0)[0]]),
            ),
            GateKind::Rx => (vec![one(rx_entries(ang[0]))], local(vec![rx_derivative(ang[0])])),
            GateKind::Rz => (vec![one(rz_entries(ang[0]))], local(vec![rz_derivative(ang[0])])),
            GateKind::Hadamard => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                (vec![one([ONE * h, ONE * h, ONE * h, -ONE * h])], Deriv::None)
            }
            GateKind::Cnot => (vec![one(X_ENTRIES)], Deriv::None),
            GateKind::Cz | GateKind::Ccz | GateKind::Ncz => (vec![one(Z_ENTRIES)], Deriv::None),
            GateKind::PauliGadget | GateKind::ControlledPauliGadget => {
                let gen = g.generator.as_ref().expect("gadget has a generator");
                let off = usize::from(g.kind == GateKind::ControlledPauliGadget);
                let targets = &g.qubits[off..];
                let strings: Vec<_> = gen
                    .strings()
                    .iter()
                    .map(|&(p, c)| {
                        let (mut x, mut z) = (0usize, 0usize);
                        for (j, &q) in targets.iter().enumerate() {
                            let lb = 1u64 << (targets.len() - 1 - j);
                            let gb = 1usize << bit_of(nq, q);
                            if p.x_mask() & lb != 0 {
                                x |= gb;
                            }
                            if p.z_mask() & lb != 0 {
                                z |= gb;
                            }
                        }
                        (x, z, i_pow((x & z).count_ones()), c)
                    })
                    .collect();
                let t = ang[0];
                let ops = if gen.is_commuting() {
                    strings
                        .iter()
                        .map(|&(x, z, phase, c)| {
                            let (sin, cos) = (c * t).sin_cos();
                            Op::Rot {
                                x,
                                z,
                                phase,
                                ctrl,
                                cos,
                                sin,
                            }
                        })
                        .collect()
                } else {
                    let bits = (0..targets.len())
                        .map(|l| bit_of(nq, targets[targets.len() - 1 - l]))
                        .collect();
                    vec![Op::Dense {
                        bits,
                        ctrl,
                        m: gen.unitary(t),
                    }]
                };
                (
                    ops,
                    Deriv::Gadget {
                        strings,
                        ctrl,
                        sign: 1.0,
                    },
                )
            }
        };
        let mut out = Self { ops, deriv };
        if g.dagger {
            out.ops = out.ops.iter().rev().map(Op::adjoint).collect();
            match &mut out.deriv {
                Deriv::None => {}
                Deriv::Local { dms, .. } => dms.iter_mut().for_each(|(_, m)| *m = adjoint2(m)),
                Deriv::Gadget { sign, .. } => *sign = -*sign,
            }
        }
        out
    }

    /// `M <- G M`, `G^dagger M` or `G^T M`.
    pub(crate) fn apply_variant(&self, m: &mut ComplexMatrix, v: Variant) {
        let cols = m.cols();
        let data = m.as_mut_slice();
        match v {
            Variant::Normal => self.ops.iter().for_each(|o| o.apply(data, cols, v)),
            _ => self.ops.iter().rev().for_each(|o| o.apply(data, cols, v)),
        }
    }

    pub(crate) fn apply(&self, m: &mut ComplexMatrix) {
        self.apply_variant(m, Variant::Normal);
    }

    /// `M <- (dG / d angle_k) M`.
    pub(crate) fn apply_derivative(&self, k: usize, m: &mut ComplexMatrix) {
        let cols = m.cols();
        let rows = m.rows();
        match &self.deriv {
            Deriv::None => m.as_mut_slice().iter_mut().for_each(|v| *v = ZERO),
            Deriv::Local { bit, ctrl, dms } => {
                let dm = dms.iter().find(|(i, _)| *i == k).map(|(_, d)| *d).unwrap_or([ZERO; 4]);
                let data = m.as_mut_slice();
                for r in 0..rows {
                    if r & ctrl != *ctrl {
                        data[r * cols..(r + 1) * cols].iter_mut().for_each(|v| *v = ZERO);
                    }
                }
                apply_one(data, rows, cols, *bit, *ctrl, &dm);
            }
            Deriv::Gadget { strings, ctrl, sign } => {
                self.apply(m);
                let src = m.clone();
                let data = m.as_mut_slice();
                data.iter_mut().for_each(|v| *v = ZERO);
                for &(x, z, phase, c) in strings {
                    let f = I * (sign * c);
                    for b in 0..rows {
                        if b & ctrl != *ctrl {
                            continue;
                        }
                        let ph = f * string_phase(phase, z, b);
                        let dst = b ^ x;
                        for (v, s) in data[dst * cols..(dst + 1) * cols].iter_mut().zip(src.row(b)) {
                            *v += ph * s;
                        }
                    }
                }
            }
        }
    }
}

/// `Pi`: the first `d` columns of the `D x D` identity.
fn column_block(dim: usize, d: usize) -> ComplexMatrix {
    let mut a = ComplexMatrix::zeros(dim, d);
    for i in 0..d {
        a[(i, i)] = ONE;
    }
    a
}

fn compile_all(c: &Circuit, theta: &[f64]) -> Vec<GateOps> {
    c.gates()
        .iter()
        .map(|g| GateOps::compile(g, c.num_qubits(), theta))
        .collect()
}

/// Top-left `d x d` block of the circuit unitary, `d = 2^(N - m)`.
pub(crate) fn forward_block(c: &Circuit, theta: &[f64]) -> Result<ComplexMatrix> {
    c.check_theta(theta)?;
    let dim = 1usize << c.num_qubits();
    let d = 1usize << c.system_qubits();
    let mut a = column_block(dim, d);
    for op in compile_all(c, theta) {
        op.apply(&mut a);
    }
    Ok(a.top_left(d, d))
}

/// `C^2 = ||target - block||_F^2` and its gradient. Walks the gate list
/// backwards, carrying the column state `A` and the transposed row state
/// `B^T` so every derivative is a row-pair contraction.
pub(crate) fn cost_and_gradient(c: &Circuit, theta: &[f64], target: &ComplexMatrix) -> Result<(f64, Vec<f64>)> {
    c.check_theta(theta)?;
    let dim = 1usize << c.num_qubits();
    let d = 1usize << c.system_qubits();
    let ops = compile_all(c, theta);
    let mut a = column_block(dim, d);
    for op in &ops {
        op.apply(&mut a);
    }
    let mut bt = ComplexMatrix::zeros(dim, d);
    let mut f = 0.0;
    for i in 0..d {
        for r in 0..d {
            let delta = target[(i, r)] - a[(i, r)];
            f += delta.norm_sqr();
            bt[(i, r)] = delta.conj();
        }
    }
    let mut grad = vec![0.0; c.num_params()];
    for (gate, op) in c.gates().iter().zip(&ops).rev() {
        if let Deriv::Gadget { strings, ctrl, sign } = &op.deriv {
            if let Some(Param::Slot(slot)) = gate.params.first().copied() {
                let mut acc = ZERO;
                for &(x, z, phase, coef) in strings {
                    let mut s = ZERO;
                    for j in 0..dim {
                        if j & ctrl != *ctrl {
                            continue;
                        }
                        s += string_phase(phase, z, j) * rowdot(bt.row(j ^ x), a.row(j));
                    }
                    acc += s * (sign * coef);
                }
                grad[slot] += -2.0 * (I * acc).re;
            }
        }
        op.apply_variant(&mut a, Variant::Adjoint);
        if let Deriv::Local { bit, ctrl, dms } = &op.deriv {
            let step = 1usize << bit;
            for &(k, dm) in dms {
                let Some(Param::Slot(slot)) = gate.params.get(k).copied() else {
                    continue;
                };
                let mut acc = ZERO;
                for p in 0..dim {
                    if p & step != 0 || p & ctrl != *ctrl {
                        continue;
                    }
                    let q = p | step;
                    acc += dm[0] * rowdot(bt.row(p), a.row(p))
                        + dm[1] * rowdot(bt.row(p), a.row(q))
                        + dm[2] * rowdot(bt.row(q), a.row(p))
                        + dm[3] * rowdot(bt.row(q), a.row(q));
                }
                grad[slot] += -2.0 * acc.re;
            }
        }
        op.apply_variant(&mut bt, Variant::Transpose);
    }
    Ok((f, grad))
}
