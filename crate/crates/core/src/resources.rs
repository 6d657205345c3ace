//! Closed-form resource bounds, parameter-to-gate ratios, threshold-layer
//! estimates and the LCU gate-count model.

use nalgebra::DMatrix;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    block_catalog, count_multiqubit_gates, evaluate_with_gradients, AnsatzSpec, Circuit, GateCostModel,
};
use crate::error::{Error, Result};
use crate::pauli::PauliSum;
use crate::symmetry::SymmetryKind;
use crate::targets::{Field, Structure};

/// Real degrees of freedom of a `2^n x 2^n` matrix of the given class.
pub fn free_parameter_bound(n: usize, field: Field, structure: Structure) -> u64 {
    let d = 1u64 << n;
    match (field, structure) {
        (Field::Complex, Structure::Arbitrary) => 2 * d * d,
        (Field::Real, Structure::Arbitrary) => d * d,
        (Field::Complex, Structure::Hermitian) => d * d,
        (Field::Real, Structure::Hermitian) => d * (d + 1) / 2,
        (Field::Complex, Structure::Unitary) => d * d - 1,
        (Field::Real, Structure::Unitary) => (d * (d - 1) / 2).saturating_sub(1),
    }
}

/// Lower bound on CNOTs for one ancilla and a complex arbitrary target.
pub fn tlb_cnot(n: usize) -> u64 {
    let d = 1u64 << n;
    (2 * d * d).saturating_sub(3 * (n as u64 + 1)).div_ceil(4)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    pub n: usize,
    pub total_qubits: usize,
    pub field: Field,
    pub structure: Structure,
    pub a: Ratio<u64>,
}

/// `ceil(value / a)`, zero for non-positive `value`.
fn ceil_div_ratio(value: i64, a: Ratio<u64>) -> u64 {
    if value <= 0 {
        return 0;
    }
    (value as u64 * a.denom()).div_ceil(*a.numer())
}

/// Lower bound on multi-qubit gates of a circuit with parameter ratio `a`.
pub fn nonlocal_gate_bound(q: &BoundQuery) -> Result<u64> {
    if *q.a.numer() == 0 {
        return Err(Error::InvalidInput("a-ratio must be positive".into()));
    }
    Ok(ceil_div_ratio(bound_free_count(q)?, q.a))
}

/// Target parameters left after the single-qubit tail: `N_p - 3N` for
/// complex classes, `N_p - N` for real ones.
fn bound_free_count(q: &BoundQuery) -> Result<i64> {
    let np = free_parameter_bound(q.n, q.field, q.structure) as i64;
    let nq = q.total_qubits as i64;
    match (q.field, q.structure) {
        (_, Structure::Unitary) => Err(Error::InvalidInput("no gate bound for unitary targets".into())),
        (Field::Complex, _) => Ok(np - 3 * nq),
        (Field::Real, _) => Ok(np - nq),
    }
}

/// Threshold layers for a target class: the gate bound spread over
/// `nlg_per_layer` multi-qubit gates per layer.
pub fn threshold_layers_for(q: &BoundQuery, nlg_per_layer: u64) -> Result<u64> {
    if *q.a.numer() == 0 || nlg_per_layer == 0 {
        return Err(Error::InvalidInput("a and gates per layer must be positive".into()));
    }
    Ok(ceil_div_ratio(bound_free_count(q)?, q.a * Ratio::from_integer(nlg_per_layer)))
}

/// Parameters of the repeating layers per multi-qubit gate.
pub fn a_ratio(c: &Circuit) -> Result<Ratio<u64>> {
    let gates = count_multiqubit_gates(c);
    if gates == 0 {
        return Err(Error::InvalidInput("circuit has no multi-qubit gates".into()));
    }
    let params = c.num_params().saturating_sub(c.tail_params()) as u64;
    Ok(Ratio::new(params, gates))
}

/// `1 / (6 b)` with `b` the number of bonds one Pauli type spans: each
/// bond term of the ancilla-controlled gadget costs two gadgets of weight 2
/// and 3 (6 CNOTs) per angle.
pub fn symmetric_a_ratio(kind: SymmetryKind, n: usize) -> Result<Ratio<u64>> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("symmetric ratio needs n >= 2, got {n}")));
    }
    let n = n as u64;
    let bonds = match kind {
        SymmetryKind::Z2xz => n - 1,
        SymmetryKind::Cn => n,
        SymmetryKind::Sn => n * (n - 1) / 2,
        SymmetryKind::Z2 => {
            return Err(Error::InvalidInput("no symmetric ansatz for the global flip alone".into()));
        }
    };
    Ok(Ratio::new(1, 6 * bonds))
}

/// Nominal and rank-based parameter counts of one generic block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockRatio {
    pub block: usize,
    pub total_qubits: usize,
    pub nominal: Ratio<u64>,
    pub multiqubit_per_layer: u64,
    /// Independent directions one extra layer adds to the circuit's image.
    pub effective_per_layer: usize,
    /// `2 k` summed over the `k`-qubit entanglers of a layer.
    pub optimal_per_layer: u64,
}

impl BlockRatio {
    pub fn is_optimal(&self) -> bool {
        self.effective_per_layer as u64 == self.optimal_per_layer
    }
}

/// Rank of the real Jacobian of the full unitary at a fixed generic point.
fn jacobian_rank(c: &Circuit) -> Result<usize> {
    let theta: Vec<f64> = (0..c.num_params())
        .map(|k| 0.3 + (k as f64 * 2.399_963).sin() * 1.7)
        .collect();
    let (_, grads) = evaluate_with_gradients(c, &theta)?;
    let p = grads.len();
    let mut gram = DMatrix::<f64>::zeros(p, p);
    for i in 0..p {
        for j in i..p {
            let v = grads[i].inner(&grads[j]).re;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let eig = gram.symmetric_eigen().eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(eig.iter().filter(|v| **v > 1e-8 * max).count())
}

/// Measures the parameter efficiency of a catalog block on `n` system
/// qubits plus one ancilla.
pub fn block_a_ratio(block: usize, n: usize) -> Result<BlockRatio> {
    block_catalog(block)?;
    let build = |m: usize| AnsatzSpec::generic(block, n, m).build(&[]);
    let (c2, c3) = (build(2)?, build(3)?);
    let per_layer_gates = count_multiqubit_gates(&c3) - count_multiqubit_gates(&c2);
    let per_layer_params = (c3.num_params() - c2.num_params()) as u64;
    if per_layer_gates == 0 {
        return Err(Error::InvalidInput(format!("block {block} has no entangling gates")));
    }
    let optimal: u64 = c3.gates()[..]
        .iter()
        .filter(|g| g.qubits.len() + g.extra_controls.len() > 1)
        .map(|g| 2 * (g.qubits.len() + g.extra_controls.len()) as u64)
        .sum::<u64>()
        - c2
            .gates()
            .iter()
            .filter(|g| g.qubits.len() + g.extra_controls.len() > 1)
            .map(|g| 2 * (g.qubits.len() + g.extra_controls.len()) as u64)
            .sum::<u64>();
    let effective = jacobian_rank(&c3)? - jacobian_rank(&c2)?;
    Ok(BlockRatio {
        block,
        total_qubits: c3.num_qubits(),
        nominal: Ratio::new(per_layer_params, per_layer_gates),
        multiqubit_per_layer: per_layer_gates,
        effective_per_layer: effective,
        optimal_per_layer: optimal,
    })
}

/// `ceil((N_p - 3N) / (a * nlg_per_layer))`, zero when the tail layer alone
/// covers the parameter count.
pub fn threshold_layers_generic(np: u64, total_qubits: usize, a: Ratio<u64>, nlg_per_layer: u64) -> Result<u64> {
    if *a.numer() == 0 || nlg_per_layer == 0 {
        return Err(Error::InvalidInput("a and gates per layer must be positive".into()));
    }
    let free = np as i64 - 3 * total_qubits as i64;
    Ok(ceil_div_ratio(free, a * Ratio::from_integer(nlg_per_layer)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdMode {
    /// `ceil(q dimB / 3 - 3)`.
    LiteralFormula,
    /// Smallest `M` with `3M + 3 >= q dimB`.
    ParamInversion,
}

/// Layer estimate for a GQSP ansatz whose generators close to `dim_b`;
/// `q = 1` for hermitian targets and `2` otherwise.
pub fn threshold_layers_symmetric(dim_b: usize, q: usize, mode: ThresholdMode) -> Result<u64> {
    if dim_b == 0 || !(1..=2).contains(&q) {
        return Err(Error::InvalidInput(format!("need dimB >= 1 and q in {{1, 2}}, got {dim_b}, {q}")));
    }
    let need = (q * dim_b) as u64;
    Ok(match mode {
        // ceil(need / 3 - 3) = ceil(need / 3) - 3
        ThresholdMode::LiteralFormula => need.div_ceil(3).saturating_sub(3),
        ThresholdMode::ParamInversion => need.saturating_sub(3).div_ceil(3),
    })
}

/// Two-qubit gate estimate of an LCU block-encoding.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LcuEstimate {
    pub term_count: usize,
    pub ancillas: usize,
    /// Prepare and unprepare together.
    pub prepare_cnots: u64,
    pub select_cnots: u64,
    pub cnot_count: u64,
    /// Number of state-preparation circuits charged (prepare + unprepare).
    pub prepare_applications: u64,
    pub model: GateCostModel,
}

/// Counts CNOTs for `PREP^dagger SELECT PREP` over the Pauli terms of `h`.
///
/// Preparing an `m`-qubit real state costs `2^m - 2` CNOTs and is charged
/// twice. Each select term is an `m`-controlled Pauli string: a parity
/// ladder of `2(w - 1)` CNOTs around one `m`-controlled single-qubit Pauli.
pub fn lcu_estimate(h: &PauliSum, model: &GateCostModel) -> Result<LcuEstimate> {
    if !h.is_hermitian(1e-12) {
        return Err(Error::InvalidInput("LCU model needs real coefficients".into()));
    }
    let terms = h.terms();
    if terms.is_empty() {
        return Err(Error::InvalidInput("empty Hamiltonian".into()));
    }
    let count = terms.len();
    let m = count.next_power_of_two().trailing_zeros() as usize;
    let prepare_applications = 2;
    let prepare_cnots = if m == 0 { 0 } else { prepare_applications * ((1u64 << m) - 2) };
    let select_cnots = terms
        .iter()
        .map(|(p, _)| {
            let w = p.weight();
            match (w, m) {
                (_, 0) => 0,
                (0, _) => model.multi_controlled(m - 1),
                _ => 2 * (w as u64 - 1) * model.two_qubit + model.multi_controlled(m),
            }
        })
        .sum();
    Ok(LcuEstimate {
        term_count: count,
        ancillas: m,
        prepare_cnots,
        select_cnots,
        cnot_count: prepare_cnots + select_cnots,
        prepare_applications,
        model: *model,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{count_nonlocal_gates, SequencePolicy};
    use crate::symmetry::heisenberg_generator_set;
    use crate::targets::{heisenberg_sum, HeisenbergParams};
    use proptest::prelude::*;

    fn r(a: u64, b: u64) -> Ratio<u64> {
        Ratio::new(a, b)
    }

    #[test]
    fn free_parameter_table() {
        assert_eq!(free_parameter_bound(4, Field::Complex, Structure::Arbitrary), 512);
        assert_eq!(free_parameter_bound(4, Field::Real, Structure::Hermitian), 136);
        assert_eq!(free_parameter_bound(1, Field::Complex, Structure::Unitary), 3);
        assert_eq!(free_parameter_bound(4, Field::Complex, Structure::Hermitian), 256);
        assert_eq!(free_parameter_bound(2, Field::Real, Structure::Arbitrary), 16);
        assert_eq!(free_parameter_bound(2, Field::Real, Structure::Unitary), 5);
    }

    #[test]
    fn tlb_values() {
        assert_eq!(tlb_cnot(4), 125);
        assert_eq!(tlb_cnot(2), 6);
        assert_eq!(tlb_cnot(1), 1);
    }

    fn q(n: usize, field: Field, structure: Structure, a: u64) -> BoundQuery {
        BoundQuery { n, total_qubits: n + 1, field, structure, a: r(a, 1) }
    }

    #[test]
    fn gate_bound_table() {
        assert_eq!(nonlocal_gate_bound(&q(4, Field::Real, Structure::Hermitian, 2)).unwrap(), 66);
        assert_eq!(nonlocal_gate_bound(&q(4, Field::Complex, Structure::Hermitian, 4)).unwrap(), 61);
        assert_eq!(nonlocal_gate_bound(&q(4, Field::Complex, Structure::Arbitrary, 4)).unwrap(), 125);
        assert!(nonlocal_gate_bound(&q(4, Field::Complex, Structure::Unitary, 4)).is_err());
        assert!(nonlocal_gate_bound(&q(4, Field::Complex, Structure::Arbitrary, 0)).is_err());
        let frac = BoundQuery { a: r(1, 36), ..q(4, Field::Real, Structure::Hermitian, 1) };
        assert_eq!(nonlocal_gate_bound(&frac).unwrap(), 131 * 36);
    }

    #[test]
    fn tlb_agrees_with_gate_bound() {
        for n in 1..=6 {
            let b = nonlocal_gate_bound(&q(n, Field::Complex, Structure::Arbitrary, 4)).unwrap();
            assert_eq!(tlb_cnot(n), b, "n={n}");
        }
    }

    #[test]
    fn generic_thresholds() {
        assert_eq!(threshold_layers_generic(512, 5, r(4, 1), 4).unwrap(), 32);
        assert_eq!(threshold_layers_generic(256, 5, r(4, 1), 4).unwrap(), 16);
        assert_eq!(threshold_layers_generic(15, 5, r(4, 1), 4).unwrap(), 0);
        assert_eq!(threshold_layers_generic(32, 3, r(4, 1), 2).unwrap(), 3);
        assert_eq!(threshold_layers_generic(128, 4, r(4, 1), 3).unwrap(), 10);
        assert!(threshold_layers_generic(32, 3, r(4, 1), 0).is_err());
    }

    #[test]
    fn hermitian_threshold_matches_block2_count() {
        let m = threshold_layers_generic(256, 5, r(4, 1), 4).unwrap() as usize;
        let mut spec = AnsatzSpec::generic(2, 4, m);
        spec.hermitian = true;
        assert_eq!(spec.build(&[]).unwrap().num_params(), 271);
    }

    #[test]
    fn class_thresholds_reproduce_block2_table() {
        use crate::circuit::Restriction;
        let rows = [
            (Field::Complex, Structure::Arbitrary, 32, 527, 128),
            (Field::Real, Structure::Arbitrary, 32, 261, 128),
            (Field::Complex, Structure::Hermitian, 16, 271, 128),
            (Field::Real, Structure::Hermitian, 17, 141, 136),
        ];
        for (field, structure, layers, params, gates) in rows {
            let a = if field == Field::Real { r(2, 1) } else { r(4, 1) };
            let m = threshold_layers_for(&q(4, field, structure, *a.numer()), 4).unwrap();
            assert_eq!(m, layers, "{field:?} {structure:?}");
            let mut spec = AnsatzSpec::generic(2, 4, m as usize);
            spec.hermitian = structure == Structure::Hermitian;
            if field == Field::Real {
                spec.restriction = Restriction::Real;
            }
            let c = spec.build(&[]).unwrap();
            assert_eq!(c.num_params(), params);
            assert_eq!(count_nonlocal_gates(&c, &GateCostModel::default()), gates);
        }
        let unitary = q(4, Field::Complex, Structure::Unitary, 4);
        assert!(threshold_layers_for(&unitary, 4).is_err());
    }

    #[test]
    fn symmetric_thresholds() {
        use ThresholdMode::*;
        assert_eq!(threshold_layers_symmetric(19, 1, ParamInversion).unwrap(), 6);
        assert_eq!(threshold_layers_symmetric(19, 1, LiteralFormula).unwrap(), 4);
        assert_eq!(threshold_layers_symmetric(6, 1, ParamInversion).unwrap(), 1);
        assert_eq!(threshold_layers_symmetric(2, 1, ParamInversion).unwrap(), 0);
        assert_eq!(threshold_layers_symmetric(3, 1, LiteralFormula).unwrap(), 0);
        assert!(threshold_layers_symmetric(0, 1, ParamInversion).is_err());
        assert!(threshold_layers_symmetric(4, 3, ParamInversion).is_err());
    }

    #[test]
    fn generic_a_ratios() {
        let rcn = AnsatzSpec::generic(2, 3, 3).build(&[]).unwrap();
        assert_eq!(a_ratio(&rcn).unwrap(), r(4, 1));
        let rccz = AnsatzSpec::generic(12, 3, 2).build(&[]).unwrap();
        assert_eq!(a_ratio(&rccz).unwrap(), r(6, 1));
        let none = AnsatzSpec::generic(0, 2, 3).build(&[]).unwrap();
        assert!(a_ratio(&none).is_err());
    }

    #[test]
    fn symmetric_a_ratios() {
        assert_eq!(symmetric_a_ratio(SymmetryKind::Z2xz, 4).unwrap(), r(1, 18));
        assert_eq!(symmetric_a_ratio(SymmetryKind::Cn, 4).unwrap(), r(1, 24));
        assert_eq!(symmetric_a_ratio(SymmetryKind::Sn, 4).unwrap(), r(1, 36));
        assert!(symmetric_a_ratio(SymmetryKind::Z2, 4).is_err());
    }

    #[test]
    fn rank_check_reproduces_catalog_annotations() {
        for block in 1..16 {
            let info = block_catalog(block).unwrap();
            let n = info.min_qubits().max(3);
            let br = block_a_ratio(block, n).unwrap();
            assert_eq!(br.is_optimal(), info.optimal_a, "block {block}: {br:?}");
        }
        let rcn = block_a_ratio(2, 3).unwrap();
        assert_eq!(rcn.nominal, r(4, 1));
        assert_eq!(rcn.effective_per_layer, 12);
        assert!(block_a_ratio(0, 3).is_err());
    }

    #[test]
    fn lcu_examples() {
        let single = PauliSum::from_letters(&[(num_complex::Complex64::new(0.5, 0.0), "XZY")]).unwrap();
        let e = lcu_estimate(&single, &GateCostModel::default()).unwrap();
        assert_eq!((e.ancillas, e.cnot_count), (0, 0));

        let h = heisenberg_sum(&HeisenbergParams::uniform(4, 1.0, 0.7)).unwrap();
        let e = lcu_estimate(&h, &GateCostModel::default()).unwrap();
        assert_eq!(e.term_count, 13);
        assert_eq!(e.ancillas, 4);
        assert_eq!(e.prepare_cnots, 28);
        assert_eq!(e.select_cnots, 9 * (2 + 48) + 4 * 48);
        assert_eq!(e.cnot_count, e.prepare_cnots + e.select_cnots);

        let complex = PauliSum::from_letters(&[(num_complex::Complex64::new(0.0, 1.0), "XX")]).unwrap();
        assert!(lcu_estimate(&complex, &GateCostModel::default()).is_err());
    }

    #[test]
    fn symmetric_circuit_costs_scale_with_bonds() {
        let g = heisenberg_generator_set(SymmetryKind::Sn, 4).unwrap();
        let spec = AnsatzSpec::gqsp(g.generators.clone(), SequencePolicy::Explicit(vec![0]), 1);
        let c = spec.build(&[0]).unwrap();
        // Six weight-2 strings, each a CNOT pair around a controlled rotation,
        // on both sides of the mirror.
        assert_eq!(count_nonlocal_gates(&c, &GateCostModel::default()), 2 * 6 * 4);
    }

    proptest! {
        #[test]
        fn bound_monotone_in_a(n in 1usize..6, a in 1u64..8) {
            let lo = nonlocal_gate_bound(&q(n, Field::Complex, Structure::Arbitrary, a + 1)).unwrap();
            let hi = nonlocal_gate_bound(&q(n, Field::Complex, Structure::Arbitrary, a)).unwrap();
            prop_assert!(lo <= hi);
        }

        #[test]
        fn param_inversion_is_minimal(dim_b in 1usize..500, q in 1usize..3) {
            let m = threshold_layers_symmetric(dim_b, q, ThresholdMode::ParamInversion).unwrap();
            prop_assert!(3 * m + 3 >= (q * dim_b) as u64);
            prop_assert!(m == 0 || 3 * (m - 1) + 3 < (q * dim_b) as u64);
        }

        #[test]
        fn generic_threshold_covers_parameters(np in 16u64..2000, nq in 2usize..6, nlg in 1u64..6) {
            let m = threshold_layers_generic(np, nq, r(4, 1), nlg).unwrap();
            prop_assert!(m * 4 * nlg + 3 * nq as u64 >= np);
        }
    }
}
