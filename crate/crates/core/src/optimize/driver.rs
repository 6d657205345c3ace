//! Multistart optimization, threshold-layer search and greedy sequence search.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bfgs::{bfgs_minimize, BfgsOptions, StopReason, TracePoint};
use crate::circuit::{count_nonlocal_gates, AnsatzSpec, Circuit, Family, GateCostModel, SequencePolicy};
use crate::encode::{Objective, TargetSpec};
use crate::error::{Error, Result};
use crate::pauli::PauliSum;

/// Half-width of the random offset given to a stalled warm-started layer.
const WARM_NUDGE: f64 = 1e-2;

/// Independent RNG streams derived from one user seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Initial parameters of restart `i`.
    Init = 1,
    /// Random generator sequence of restart `i`.
    Sequence = 2,
    /// Seeds of nested searches.
    Subseed = 3,
}

/// ChaCha8 seeded with `seed`, on stream `(purpose << 48) | index`.
pub fn derived_rng(seed: u64, purpose: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 48) | (index & ((1 << 48) - 1)));
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizeOptions {
    /// Bound on `||grad C||`, tested as `||grad C^2|| <= 2 C tol`.
    pub grad_norm_tol: f64,
    pub max_iterations: usize,
    pub epsilon_exact: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Restarts run concurrently before the early-exit check.
    pub batch: usize,
    /// Skip remaining restarts once one reaches `epsilon_exact`.
    pub stop_on_exact: bool,
    pub record_trace: bool,
    pub cost_model: GateCostModel,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            grad_norm_tol: 1e-5,
            max_iterations: 3000,
            epsilon_exact: 1e-10,
            restarts: 10,
            seed: 0,
            batch: 4,
            stop_on_exact: true,
            record_trace: false,
            cost_model: GateCostModel::default(),
        }
    }
}

impl OptimizeOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.grad_norm_tol, self.epsilon_exact];
        if positive.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.restarts == 0 || self.batch == 0 {
            return Err(Error::InvalidInput("restarts and batch must be at least 1".into()));
        }
        Ok(())
    }

    fn bfgs(&self) -> BfgsOptions {
        BfgsOptions {
            grad_tol: self.grad_norm_tol,
            grad_relative_to_sqrt_f: true,
            f_exact: self.epsilon_exact * self.epsilon_exact,
            max_iterations: self.max_iterations,
            record_trace: self.record_trace,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EncodeReport {
    pub epsilon: f64,
    pub theta: Vec<f64>,
    pub iterations: usize,
    /// `epsilon <= epsilon_exact`.
    pub converged: bool,
    pub stop_reason: StopReason,
    pub param_count: usize,
    pub nonlocal_gates: u64,
    pub layers: usize,
    /// Generator indices of GQSP ansatze.
    pub sequence: Vec<usize>,
    /// Index of the restart that produced this report.
    pub restart: usize,
    pub restarts_run: usize,
    pub wall_time: f64,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub trace: Vec<TracePoint>,
}

/// Runs BFGS on `C^2` from `theta0`.
pub fn optimize_circuit(
    t: &TargetSpec,
    c: &Circuit,
    theta0: &[f64],
    opts: &OptimizeOptions,
) -> Result<EncodeReport> {
    let start = Instant::now();
    let obj = Objective::new(t, c)?;
    obj.value_and_gradient(theta0)?;
    let res = bfgs_minimize(
        |th| obj.value_and_gradient(th).expect("dimensions validated"),
        theta0,
        &opts.bfgs(),
    );
    let epsilon = res.f.max(0.0).sqrt();
    let trace = res
        .trace
        .into_iter()
        .map(|p| TracePoint {
            value: p.value.max(0.0).sqrt(),
            ..p
        })
        .collect();
    Ok(EncodeReport {
        epsilon,
        theta: res.x,
        iterations: res.iterations,
        converged: epsilon <= opts.epsilon_exact,
        stop_reason: res.stop,
        param_count: c.num_params(),
        nonlocal_gates: count_nonlocal_gates(c, &opts.cost_model),
        layers: c.layers(),
        sequence: Vec::new(),
        restart: 0,
        restarts_run: 1,
        wall_time: start.elapsed().as_secs_f64(),
        trace,
    })
}

fn random_theta(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-PI..PI)).collect()
}

fn better(a: &EncodeReport, b: &EncodeReport) -> bool {
    (a.epsilon, a.restart) < (b.epsilon, b.restart)
}

/// Best of `opts.restarts` optimizations from uniform random parameters.
pub fn multistart_encode(t: &TargetSpec, spec: &AnsatzSpec, opts: &OptimizeOptions) -> Result<EncodeReport> {
    opts.validate()?;
    spec.validate()?;
    let per_restart_sequence = matches!(
        &spec.family,
        Family::Gqsp {
            sequence: SequencePolicy::Random,
            ..
        }
    );
    let shared = if per_restart_sequence {
        None
    } else {
        let seq = spec.sequence(&mut |_| 0);
        Some((spec.build(&seq)?, seq))
    };
    let single = |r: usize| -> Result<EncodeReport> {
        let (circuit, seq) = match &shared {
            Some((c, s)) => (std::borrow::Cow::Borrowed(c), s.clone()),
            None => {
                let mut srng = derived_rng(opts.seed, Stream::Sequence, r as u64);
                let seq = spec.sequence(&mut |k| srng.random_range(0..k));
                (std::borrow::Cow::Owned(spec.build(&seq)?), seq)
            }
        };
        let mut rng = derived_rng(opts.seed, Stream::Init, r as u64);
        let theta0 = random_theta(&mut rng, circuit.num_params());
        let mut rep = optimize_circuit(t, &circuit, &theta0, opts)?;
        rep.sequence = seq;
        rep.restart = r;
        Ok(rep)
    };
    let mut best: Option<EncodeReport> = None;
    let mut done = 0;
    while done < opts.restarts {
        let end = (done + opts.batch).min(opts.restarts);
        let results: Vec<Result<EncodeReport>> = (done..end).into_par_iter().map(single).collect();
        for rep in results {
            let rep = rep?;
            if best.as_ref().is_none_or(|b| better(&rep, b)) {
                best = Some(rep);
            }
        }
        done = end;
        if opts.stop_on_exact && best.as_ref().is_some_and(|b| b.converged) {
            break;
        }
    }
    let mut best = best.expect("at least one restart");
    best.restarts_run = done;
    Ok(best)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ThresholdOptions {
    /// Layer estimate from the resource formulas.
    pub estimate: f64,
    /// Search starts at `ceil(start_factor * estimate)`.
    pub start_factor: f64,
    pub min_layers: usize,
    /// Largest depth tried; the report is partial if no depth succeeds.
    pub max_layers: usize,
    /// Random generator sequences per depth (GQSP families).
    pub sequences: usize,
    /// Initializations per sequence (GQSP families).
    pub inits_per_sequence: usize,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            estimate: 1.0,
            start_factor: 1.05,
            min_layers: 0,
            max_layers: 64,
            sequences: 10,
            inits_per_sequence: 5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LayerTrial {
    pub layers: usize,
    pub success: bool,
    pub best: EncodeReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThresholdReport {
    /// Smallest depth with an exact encoding, if one was found.
    pub threshold: Option<usize>,
    pub start: usize,
    pub trials: Vec<LayerTrial>,
}

impl ThresholdReport {
    pub fn trial(&self, layers: usize) -> Option<&LayerTrial> {
        self.trials.iter().find(|t| t.layers == layers)
    }
}

fn subseed(seed: u64, layers: usize, s: usize) -> u64 {
    derived_rng(seed, Stream::Subseed, ((layers as u64) << 20) | s as u64).next_u64()
}

fn layer_trial(t: &TargetSpec, template: &AnsatzSpec, layers: usize, search: &ThresholdOptions, opts: &OptimizeOptions) -> Result<LayerTrial> {
    let spec = template.with_layers(layers);
    let best = match &spec.family {
        Family::GenericBlock(_) => multistart_encode(t, &spec, opts)?,
        Family::Gqsp { generators, .. } => {
            let k = generators.len();
            let mut best: Option<EncodeReport> = None;
            for s in 0..search.sequences.max(1) {
                let mut srng = derived_rng(opts.seed, Stream::Sequence, ((layers as u64) << 20) | s as u64);
                let seq: Vec<usize> = (0..layers).map(|_| srng.random_range(0..k)).collect();
                let mut sp = spec.clone();
                if let Family::Gqsp { sequence, .. } = &mut sp.family {
                    *sequence = SequencePolicy::Explicit(seq);
                }
                let o = OptimizeOptions {
                    restarts: search.inits_per_sequence.max(1),
                    seed: subseed(opts.seed, layers, s),
                    ..opts.clone()
                };
                let rep = multistart_encode(t, &sp, &o)?;
                let hit = rep.converged;
                if best.as_ref().is_none_or(|b| rep.epsilon < b.epsilon) {
                    best = Some(rep);
                }
                if hit {
                    break;
                }
            }
            best.expect("at least one sequence")
        }
    };
    Ok(LayerTrial {
        layers,
        success: best.converged,
        best,
    })
}

/// Starts at `ceil(start_factor * estimate)`; walks down while encodings
/// stay exact, or up until the first exact one.
pub fn layer_threshold_search(
    t: &TargetSpec,
    template: &AnsatzSpec,
    search: &ThresholdOptions,
    opts: &OptimizeOptions,
) -> Result<ThresholdReport> {
    opts.validate()?;
    template.validate()?;
    let start = ((search.start_factor * search.estimate).ceil().max(0.0) as usize)
        .clamp(search.min_layers, search.max_layers.max(search.min_layers));
    let mut trials = Vec::new();
    let first = layer_trial(t, template, start, search, opts)?;
    let ok = first.success;
    trials.push(first);
    let mut threshold = None;
    if ok {
        threshold = Some(start);
        let mut m = start;
        while m > search.min_layers {
            m -= 1;
            let tr = layer_trial(t, template, m, search, opts)?;
            let ok = tr.success;
            trials.push(tr);
            if !ok {
                break;
            }
            threshold = Some(m);
        }
    } else {
        for m in start + 1..=search.max_layers {
            let tr = layer_trial(t, template, m, search, opts)?;
            let ok = tr.success;
            trials.push(tr);
            if ok {
                threshold = Some(m);
                break;
            }
        }
    }
    trials.sort_by_key(|tr| tr.layers);
    Ok(ThresholdReport {
        threshold,
        start,
        trials,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreedyReport {
    pub sequence: Vec<usize>,
    pub report: EncodeReport,
    /// Best `epsilon` after each depth, starting at depth 0.
    pub epsilon_by_depth: Vec<f64>,
}

/// Beam-width-one tree search: each depth appends the generator whose
/// warm-started optimization gives the lowest `epsilon`.
pub fn greedy_generator_search(
    t: &TargetSpec,
    generators: &[PauliSum],
    hermitian: bool,
    depth_cap: usize,
    opts: &OptimizeOptions,
) -> Result<GreedyReport> {
    opts.validate()?;
    if generators.is_empty() {
        return Err(Error::InvalidInput("empty generator set".into()));
    }
    let spec_for = |seq: Vec<usize>| {
        let mut s = AnsatzSpec::gqsp(generators.to_vec(), SequencePolicy::Explicit(seq.clone()), seq.len());
        s.hermitian = hermitian;
        s.system_qubits = t.system_qubits();
        s
    };
    let root = spec_for(Vec::new()).build(&[])?;
    let mut rng = derived_rng(opts.seed, Stream::Init, 0);
    let theta0 = random_theta(&mut rng, root.num_params());
    let mut best = optimize_circuit(t, &root, &theta0, opts)?;
    let mut seq = Vec::new();
    let mut history = vec![best.epsilon];
    while !best.converged && seq.len() < depth_cap {
        let children: Vec<Result<EncodeReport>> = (0..generators.len())
            .into_par_iter()
            .map(|gi| {
                let mut s = seq.clone();
                s.push(gi);
                let c = spec_for(s.clone()).build(&s)?;
                let mut th = best.theta.clone();
                let fresh = th.len();
                th.resize(c.num_params(), 0.0);
                let mut rep = optimize_circuit(t, &c, &th, opts)?;
                if rep.iterations == 0 && !rep.converged {
                    // The identity layer sits on a stationary point; nudge it.
                    let mut rng = derived_rng(opts.seed, Stream::Init, (s.len() << 16 | gi) as u64);
                    th[fresh..].iter_mut().for_each(|v| *v = rng.random_range(-WARM_NUDGE..WARM_NUDGE));
                    rep = optimize_circuit(t, &c, &th, opts)?;
                }
                rep.sequence = s;
                rep.restart = gi;
                Ok(rep)
            })
            .collect();
        let mut pick: Option<EncodeReport> = None;
        for ch in children {
            let ch = ch?;
            if pick.as_ref().is_none_or(|p| better(&ch, p)) {
                pick = Some(ch);
            }
        }
        best = pick.expect("non-empty generator set");
        seq = best.sequence.clone();
        history.push(best.epsilon);
    }
    best.sequence = seq.clone();
    Ok(GreedyReport {
        sequence: seq,
        report: best,
        epsilon_by_depth: history,
    })
}
