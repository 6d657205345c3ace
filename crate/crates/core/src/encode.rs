//! Sub-normalization, block extraction and the block-encoding cost.

use crate::circuit::{sim, Circuit};
use crate::error::{Error, Result};
use crate::numkit::{frobenius_norm, spectral_norm, ComplexMatrix};

pub const DEFAULT_DELTA: f64 = 1e-2;

/// Target matrix with its sub-normalization `alpha`.
#[derive(Clone, Debug)]
pub struct TargetSpec {
    pub matrix: ComplexMatrix,
    pub alpha: f64,
    pub delta: f64,
}

impl TargetSpec {
    /// Target with an explicit `alpha`; must satisfy `||A||_2 / alpha <= 1`.
    pub fn with_alpha(matrix: ComplexMatrix, alpha: f64) -> Result<Self> {
        check_power_of_two(&matrix)?;
        if !(alpha > 0.0) {
            return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
        }
        let norm = spectral_norm(&matrix)?;
        if norm > alpha * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "spectral norm {norm} exceeds alpha {alpha}"
            )));
        }
        Ok(Self {
            matrix,
            alpha,
            delta: alpha - norm,
        })
    }

    pub fn system_qubits(&self) -> usize {
        self.matrix.rows().trailing_zeros() as usize
    }

    /// `A / alpha`.
    pub fn scaled(&self) -> ComplexMatrix {
        self.matrix.scale_real(1.0 / self.alpha)
    }
}

fn check_power_of_two(a: &ComplexMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare(a.rows(), a.cols()));
    }
    if !a.rows().is_power_of_two() {
        return Err(Error::DimensionMismatch(format!(
            "dimension {} is not a power of two; zero-pad first",
            a.rows()
        )));
    }
    Ok(())
}

/// `alpha = ||A||_2 + delta`.
pub fn subnormalize(a: ComplexMatrix, delta: f64) -> Result<TargetSpec> {
    check_power_of_two(&a)?;
    if !(delta >= 0.0) {
        return Err(Error::InvalidInput(format!("delta must be non-negative, got {delta}")));
    }
    let alpha = spectral_norm(&a)? + delta;
    if alpha <= 0.0 {
        return Err(Error::InvalidInput("zero matrix needs a positive delta".into()));
    }
    Ok(TargetSpec {
        matrix: a,
        alpha,
        delta,
    })
}

/// `(<0^m| (x) 1) U (|0^m> (x) 1)`: the top-left block under ancilla-first order.
pub fn extract_block(u: &ComplexMatrix, m: usize) -> Result<ComplexMatrix> {
    if !u.is_square() {
        return Err(Error::NotSquare(u.rows(), u.cols()));
    }
    if !u.rows().is_power_of_two() {
        return Err(Error::DimensionMismatch(format!("dimension {} is not a power of two", u.rows())));
    }
    let total = u.rows().trailing_zeros() as usize;
    if m >= total {
        return Err(Error::InvalidInput(format!(
            "{m} ancillas leave no system qubits in a {total}-qubit unitary"
        )));
    }
    let d = 1usize << (total - m);
    Ok(u.top_left(d, d))
}

fn check_dims(t: &TargetSpec, c: &Circuit) -> Result<()> {
    if t.system_qubits() != c.system_qubits() {
        return Err(Error::QubitCountMismatch {
            expected: c.system_qubits(),
            got: t.system_qubits(),
        });
    }
    Ok(())
}

/// `epsilon = ||A / alpha - A_var(theta)||_F`.
pub fn cost(t: &TargetSpec, c: &Circuit, theta: &[f64]) -> Result<f64> {
    check_dims(t, c)?;
    let block = sim::forward_block(c, theta)?;
    Ok(frobenius_norm(&(&t.scaled() - &block)))
}

/// Gradient of `C^2 = ||Delta||_F^2`: `-2 Re <Delta, d A_var>`.
pub fn cost_gradient(t: &TargetSpec, c: &Circuit, theta: &[f64]) -> Result<Vec<f64>> {
    Ok(Objective::new(t, c)?.value_and_gradient(theta)?.1)
}

/// `C^2` and its gradient for a fixed target and circuit.
pub struct Objective<'a> {
    circuit: &'a Circuit,
    scaled: ComplexMatrix,
}

impl<'a> Objective<'a> {
    pub fn new(t: &TargetSpec, circuit: &'a Circuit) -> Result<Self> {
        check_dims(t, circuit)?;
        Ok(Self {
            circuit,
            scaled: t.scaled(),
        })
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    pub fn value_and_gradient(&self, theta: &[f64]) -> Result<(f64, Vec<f64>)> {
        sim::cost_and_gradient(self.circuit, theta, &self.scaled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_gqsp_ansatz, evaluate, AnsatzSpec, GateKind};
    use crate::numkit::{hadamard, is_hermitian, kron, pauli_x, pauli_y, pauli_z, I};
    use crate::pauli::PauliSum;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn heis2() -> ComplexMatrix {
        let xx = kron(&pauli_x(), &pauli_x());
        let yy = kron(&pauli_y(), &pauli_y());
        let zz = kron(&pauli_z(), &pauli_z());
        &(&xx + &yy) + &zz
    }

    fn angles(n: usize, seed: u64) -> Vec<f64> {
        (0..n).map(|k| ((k as f64 + 0.5) * 2.399 * (seed as f64 + 1.3)).sin() * 3.0).collect()
    }

    #[test]
    fn subnormalize_examples() {
        assert!((subnormalize(ComplexMatrix::zeros(2, 2), 1e-2).unwrap().alpha - 0.01).abs() < 1e-15);
        assert!((subnormalize(pauli_x(), 1e-2).unwrap().alpha - 1.01).abs() < 1e-12);
        assert!((subnormalize(heis2(), 1e-2).unwrap().alpha - 3.01).abs() < 1e-12);
        assert!(subnormalize(ComplexMatrix::identity(3), 1e-2).is_err());
        assert!(TargetSpec::with_alpha(heis2(), 2.0).is_err());
    }

    #[test]
    fn extract_block_examples() {
        let u = ComplexMatrix::identity(8);
        assert!(extract_block(&u, 1).unwrap().max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
        let x = kron(&kron(&pauli_x(), &ComplexMatrix::identity(2)), &ComplexMatrix::identity(2));
        assert!(extract_block(&x, 1).unwrap().max_abs_diff(&ComplexMatrix::zeros(4, 4)) < 1e-15);
        let h = kron(&hadamard(), &ComplexMatrix::identity(2));
        let want = ComplexMatrix::identity(2).scale_real(std::f64::consts::FRAC_1_SQRT_2);
        assert!(extract_block(&h, 1).unwrap().max_abs_diff(&want) < 1e-15);
        assert!(extract_block(&u, 3).is_err());
    }

    #[test]
    fn cost_examples() {
        let c = AnsatzSpec::generic(2, 1, 1).build(&[]).unwrap();
        let th = angles(c.num_params(), 1);
        let block = extract_block(&evaluate(&c, &th).unwrap(), 1).unwrap();
        let t = TargetSpec::with_alpha(block, 1.0).unwrap();
        assert!(cost(&t, &c, &th).unwrap() < 1e-12);
        let g = cost_gradient(&t, &c, &th).unwrap();
        assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() < 1e-10);

        let mut id = crate::circuit::Circuit::new(2, 1).unwrap();
        id.push_fixed(GateKind::Cz, vec![0, 1]).unwrap();
        let zero = TargetSpec {
            matrix: ComplexMatrix::zeros(2, 2),
            alpha: 1.0,
            delta: 1.0,
        };
        assert!((cost(&zero, &id, &[]).unwrap() - 2f64.sqrt()).abs() < 1e-14);
        assert!(cost_gradient(&zero, &id, &[]).unwrap().is_empty());

        let wrong = subnormalize(heis2(), 1e-2).unwrap();
        assert!(matches!(cost(&wrong, &c, &th), Err(Error::QubitCountMismatch { .. })));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut s = AnsatzSpec::generic(5, 2, 2);
        s.hermitian = true;
        let c = s.build(&[]).unwrap();
        let t = subnormalize(heis2(), 1e-2).unwrap();
        let th = angles(c.num_params(), 2);
        let g = cost_gradient(&t, &c, &th).unwrap();
        let c2 = |v: &[f64]| cost(&t, &c, v).unwrap().powi(2);
        let h = 1e-5;
        for k in 0..th.len() {
            let mut p = th.clone();
            let mut m = th.clone();
            p[k] += h;
            m[k] -= h;
            let fd = (c2(&p) - c2(&m)) / (2.0 * h);
            assert!((g[k] - fd).abs() <= 1e-6 * fd.abs().max(1.0), "slot {k}");
        }
    }

    #[test]
    fn gqsp_product_form_single_layer() {
        // One layer: F = r00 r00' 1 + r01' r10 P.
        let g = PauliSum::from_letters(&[(Complex64::new(0.0, 1.0), "XX"), (Complex64::new(0.0, 1.0), "ZZ")]).unwrap();
        let c = build_gqsp_ansatz(std::slice::from_ref(&g), 2).unwrap();
        let th = angles(6, 4);
        let r0 = crate::circuit::single_qubit_r(th[0], th[1], th[2]);
        let r1 = crate::circuit::single_qubit_r(th[4], th[5], 0.0);
        let p = crate::circuit::pauli_gadget_unitary(&g, th[3]).unwrap();
        let a = r1[(0, 0)] * r0[(0, 0)];
        let b = r1[(0, 1)] * r0[(1, 0)];
        let f = &ComplexMatrix::identity(4).scale(a) + &p.scale(b);
        let block = extract_block(&evaluate(&c, &th).unwrap(), 1).unwrap();
        assert!(block.max_abs_diff(&f) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn hermitian_ansatz_blocks_are_hermitian(block in 0usize..16, seed in 0u64..500) {
            let mut s = AnsatzSpec::generic(block, 2, 1);
            s.hermitian = true;
            let c = s.build(&[]).unwrap();
            let b = extract_block(&evaluate(&c, &angles(c.num_params(), seed)).unwrap(), 1).unwrap();
            prop_assert!(is_hermitian(&b, 1e-12));
        }

        #[test]
        fn real_ansatz_blocks_are_real(block in 0usize..16, seed in 0u64..500) {
            let mut s = AnsatzSpec::generic(block, 2, 2);
            s.restriction = crate::circuit::Restriction::Real;
            let c = s.build(&[]).unwrap();
            let b = extract_block(&evaluate(&c, &angles(c.num_params(), seed)).unwrap(), 1).unwrap();
            prop_assert!(b.max_imag() <= 1e-12);
        }

        #[test]
        fn blocks_have_norm_at_most_one(block in 0usize..16, seed in 0u64..500) {
            let c = AnsatzSpec::generic(block, 2, 2).build(&[]).unwrap();
            let b = extract_block(&evaluate(&c, &angles(c.num_params(), seed)).unwrap(), 1).unwrap();
            prop_assert!(spectral_norm(&b).unwrap() <= 1.0 + 1e-10);
        }

        #[test]
        fn symmetric_gqsp_blocks_commute_with_symmetry(seed in 0u64..500) {
            // Generators built from X-flip invariant strings commute with X^(x)n.
            let gens = vec![
                PauliSum::from_letters(&[(I, "ZZI"), (I, "IZZ")]).unwrap(),
                PauliSum::from_letters(&[(I, "XII"), (I, "IXI"), (I, "IIX")]).unwrap(),
                PauliSum::from_letters(&[(I, "YYI")]).unwrap(),
            ];
            let c = build_gqsp_ansatz(&gens, 3).unwrap();
            let b = extract_block(&evaluate(&c, &angles(c.num_params(), seed)).unwrap(), 1).unwrap();
            let s = kron(&kron(&pauli_x(), &pauli_x()), &pauli_x());
            let comm = b.commutator(&s).unwrap();
            prop_assert!(frobenius_norm(&comm) <= 1e-10);
        }
    }
}
