use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};
use vbe_core::circuit::{Family, GateCostModel};
use vbe_core::encode::{subnormalize, DEFAULT_DELTA};
use vbe_core::optimize::{multistart_encode, EncodeReport};
use vbe_core::pauli::format_generator_list;
use vbe_core::resources::tlb_cnot;
use vbe_core::symmetry::{
    closure_dims_with_cap, closure_with_cap, expressible, heisenberg_generator_set, GeneratorSet, SymmetryKind,
};
use vbe_core::targets::{Field, Structure};

use crate::bench::{self, Table};
use crate::config::{BenchArgs, ClosureArgs, EncodeArgs, ResolvedRun, ResourcesArgs, SweepArgs};
use crate::error::{CliError, CliResult};
use crate::spec::{read_generators, AnsatzSource, LoadedTarget, TargetSource};
use crate::Outcome;

fn emit(path: Option<&Path>, text: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", p.display())))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json(path: Option<&Path>, v: &Value) -> CliResult<()> {
    emit(path, &(serde_json::to_string_pretty(v)? + "\n"))
}

/// CSV outputs carry their resolved configuration on stderr.
fn note_config(v: &Value) -> CliResult<()> {
    eprintln!("resolved_config: {}", serde_json::to_string(v)?);
    Ok(())
}

fn required<'a, T>(v: &'a Option<T>, what: &str) -> CliResult<&'a T> {
    v.as_ref().ok_or_else(|| CliError::Usage(format!("missing {what}")))
}

fn parse_kind(s: &str) -> CliResult<SymmetryKind> {
    s.parse().map_err(|e: vbe_core::Error| CliError::Usage(e.to_string()))
}

struct Problem {
    target: LoadedTarget,
    ansatz: AnsatzSource,
}

fn load_problem(run: &ResolvedRun, target: &str, ansatz: &str) -> CliResult<Problem> {
    let ansatz = AnsatzSource::parse(ansatz)?;
    let target = TargetSource::parse(target)?.load(target, ansatz.symmetry(), run.seed)?;
    run.require_heavy(ansatz.is_generic() && target.info.n >= 4, "a generic ansatz on n >= 4 qubits")?;
    Ok(Problem { target, ansatz })
}

pub fn encode(run: &ResolvedRun, a: &EncodeArgs) -> CliResult<Outcome> {
    let mut a = a.clone();
    a.delta.get_or_insert(DEFAULT_DELTA);
    let p = load_problem(run, required(&a.target, "--target")?, required(&a.ansatz, "--ansatz")?)?;
    let layers = *required(&a.layers, "--layers")?;
    let spec = p.ansatz.build(p.target.info.n, layers)?;
    let target = subnormalize(p.target.matrix.clone(), a.delta.unwrap_or(DEFAULT_DELTA))?;
    let mut opts = run.optimize_options();
    opts.record_trace = a.trace.is_some();
    let report = multistart_encode(&target, &spec, &opts)?;
    if let Some(path) = &a.trace {
        let mut csv = String::from("iteration,epsilon,grad_norm\n");
        for t in &report.trace {
            writeln!(csv, "{},{:e},{:e}", t.iteration, t.value, t.grad_norm).expect("string write");
        }
        emit(Some(path), &csv)?;
    }
    let family = match &spec.family {
        Family::GenericBlock(id) => json!({ "generic_block": id }),
        Family::Gqsp { generators, sequence } => json!({ "gqsp": { "generators": generators.len(), "sequence": sequence } }),
    };
    let mut shown = report.clone();
    shown.trace.clear();
    let out = json!({
        "command": "encode",
        "target": {
            "info": p.target.info,
            "alpha": target.alpha,
            "delta": target.delta,
        },
        "ansatz": {
            "family": family,
            "layers": spec.layers,
            "restriction": spec.restriction,
            "hermitian": spec.hermitian,
            "ancillas": spec.ancillas,
            "system_qubits": spec.system_qubits,
        },
        "report": shown,
        "resolved_config": { "run": run, "encode": a },
    });
    emit_json(a.output.as_deref(), &out)?;
    Ok(if report.converged { Outcome::Success } else { Outcome::Failure })
}

pub const SWEEP_HEADER: &str = "layers,epsilon,iterations,params,nonlocal_gates,converged";

fn sweep_line(r: &EncodeReport) -> String {
    format!(
        "{},{:e},{},{},{},{}",
        r.layers, r.epsilon, r.iterations, r.param_count, r.nonlocal_gates, r.converged
    )
}

pub fn sweep(run: &ResolvedRun, a: &SweepArgs) -> CliResult<Outcome> {
    let mut a = a.clone();
    let from = *a.from.get_or_insert(1);
    let to = *a.to.get_or_insert(10);
    let delta = *a.delta.get_or_insert(DEFAULT_DELTA);
    note_config(&json!({ "run": run, "sweep": a }))?;
    let mut csv = String::from(SWEEP_HEADER) + "\n";
    if from <= to {
        let p = load_problem(run, required(&a.target, "--target")?, required(&a.ansatz, "--ansatz")?)?;
        let target = subnormalize(p.target.matrix, delta)?;
        let opts = run.optimize_options();
        for m in from..=to {
            let spec = p.ansatz.build(p.target.info.n, m)?;
            csv += &sweep_line(&multistart_encode(&target, &spec, &opts)?);
            csv.push('\n');
        }
    }
    emit(a.output.as_deref(), &csv)?;
    Ok(Outcome::Success)
}

pub fn closure(run: &ResolvedRun, a: &ClosureArgs) -> CliResult<Outcome> {
    let set = match (&a.sym, &a.gens) {
        (Some(k), None) => {
            let kind = parse_kind(k)?;
            let n = *required(&a.n, "--n")?;
            heisenberg_generator_set(kind, n)?
        }
        (None, Some(path)) => {
            let gens = read_generators(path)?;
            let n = gens.first().map(|g| g.num_qubits()).unwrap_or(0);
            if a.n.is_some_and(|m| m != n) {
                return Err(CliError::Usage(format!("--n does not match the {n}-qubit generators")));
            }
            GeneratorSet::new(n, None, gens)?
        }
        _ => return Err(CliError::Usage("closure needs exactly one of --sym or --gens".into())),
    };
    let resolved = json!({ "run": run, "closure": a });
    let start = Instant::now();
    let need_basis = a.target.is_some() || a.dump.is_some();
    let dims = if need_basis {
        closure_with_cap(&set, a.lie_cap, a.assoc_cap).map(|b| (b.dim_l(), b.dim_b(), b.first_pass_dim, Some(b)))
    } else {
        closure_dims_with_cap(&set, a.lie_cap, a.assoc_cap).map(|d| (d.dim_l, d.dim_b, d.first_pass_dim, None))
    };
    let kind = set.kind.map(|k| k.to_string());
    let (dim_l, dim_b, first_pass_dim, basis) = match dims {
        Ok(d) => d,
        Err(vbe_core::Error::CapExceeded { cap, reached }) => {
            let out = json!({
                "command": "closure",
                "kind": kind,
                "n": set.n,
                "dimL": null,
                "dimB": null,
                "cap_exceeded": { "cap": cap, "reached": reached },
                "elapsed": start.elapsed().as_secs_f64(),
                "resolved_config": resolved,
            });
            emit_json(a.output.as_deref(), &out)?;
            return Ok(Outcome::Failure);
        }
        Err(e) => return Err(e.into()),
    };
    let assoc = basis.map(|b| b.assoc).unwrap_or_default();
    if let Some(path) = &a.dump {
        emit(Some(path), &format_generator_list(&assoc))?;
    }
    let (verdict, residual) = match &a.target {
        Some(text) => {
            let t = TargetSource::parse(text)?.load(text, set.kind, run.seed)?;
            if t.info.n != set.n {
                return Err(CliError::Usage(format!("target has {} qubits, generators {}", t.info.n, set.n)));
            }
            let (ok, res) = expressible(&t.matrix, &assoc)?;
            (Some(ok), Some(res))
        }
        None => (None, None),
    };
    let out = json!({
        "command": "closure",
        "kind": kind,
        "n": set.n,
        "dimL": dim_l,
        "dimB": dim_b,
        "first_pass_dim": first_pass_dim,
        "expressible": verdict,
        "residual": residual,
        "elapsed": start.elapsed().as_secs_f64(),
        "resolved_config": resolved,
    });
    emit_json(a.output.as_deref(), &out)?;
    Ok(Outcome::Success)
}

pub fn resources(run: &ResolvedRun, a: &ResourcesArgs) -> CliResult<Outcome> {
    let mut a = a.clone();
    let n = *required(&a.n, "--n")?;
    let ancillas = *a.ancillas.get_or_insert(1);
    let block = *a.block.get_or_insert(2);
    let format = a.format.get_or_insert_with(|| "text".into()).clone();
    let mut t = Table::new(&[
        "field",
        "structure",
        "free_params",
        "a",
        "gate_bound",
        "layers",
        "circuit_params",
        "circuit_gates",
    ]);
    let dash = |v: Option<String>| v.unwrap_or_else(|| "-".into());
    for field in [Field::Complex, Field::Real] {
        for structure in [Structure::Arbitrary, Structure::Hermitian, Structure::Unitary] {
            let r = bench::resource_row(n, ancillas, block, field, structure)?;
            t.push(vec![
                format!("{field:?}").to_lowercase(),
                format!("{structure:?}").to_lowercase(),
                r.free_params.to_string(),
                dash(r.a),
                dash(r.gate_bound.map(|v| v.to_string())),
                dash(r.layers.map(|v| v.to_string())),
                dash(r.circuit_params.map(|v| v.to_string())),
                dash(r.circuit_gates.map(|v| v.to_string())),
            ]);
        }
    }
    let text = match format.as_str() {
        "csv" => {
            note_config(&json!({ "run": run, "resources": a }))?;
            t.csv()
        }
        "text" => format!(
            "n = {n}, ancillas = {ancillas}, block {block}, CNOT lower bound (complex, one ancilla) {}\n{}",
            tlb_cnot(n),
            t.aligned()
        ),
        other => return Err(CliError::Usage(format!("unknown format {other:?}; expected text or csv"))),
    };
    emit(a.output.as_deref(), &text)?;
    Ok(Outcome::Success)
}

pub fn bench(run: &ResolvedRun, a: &BenchArgs) -> CliResult<Outcome> {
    let mut a = a.clone();
    let table = required(&a.table, "table name")?.clone();
    let t = match table.as_str() {
        "free-params" => bench::free_params_table(*a.n.get_or_insert(4))?,
        "bdim-table" => bench::bdim_table(*a.max_n.get_or_insert(8))?,
        "gqsp-table" => {
            let max_n = *a.max_n.get_or_insert(3);
            let k = *a.targets.get_or_insert(5) as u64;
            let seeds: Vec<u64> = (1..=k).collect();
            bench::gqsp_table(max_n, &seeds, run.heavy, &run.optimize_options())?
        }
        "lcu-compare" => bench::lcu_table(*a.n.get_or_insert(4), &GateCostModel::default())?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown table {other:?}; expected free-params, gqsp-table, bdim-table or lcu-compare"
            )))
        }
    };
    note_config(&json!({ "run": run, "bench": a }))?;
    emit(a.output.as_deref(), &t.csv())?;
    Ok(Outcome::Success)
}
