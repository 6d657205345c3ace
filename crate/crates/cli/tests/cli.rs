use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use vbe_core::pauli::format_generator_list;
use vbe_core::resources::threshold_layers_generic;
use vbe_core::symmetry::{heisenberg_generator_set, SymmetryKind};

fn vbe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vbe")).args(args).output().expect("run vbe")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("bad JSON ({e}): {}\n{}", String::from_utf8_lossy(&o.stdout), String::from_utf8_lossy(&o.stderr))
    })
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

#[test]
fn encode_symmetric_heisenberg_converges() {
    let o = vbe(&["encode", "--target", "heisenberg:n=3", "--ansatz", "gqsp:sym=Sn", "--layers", "4", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert!(v["report"]["epsilon"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["report"]["param_count"], 15);
    assert_eq!(v["resolved_config"]["run"]["seed"], 7);
    assert_eq!(v["resolved_config"]["encode"]["delta"], 0.01);
}

#[test]
fn encode_without_layers_budget_fails_with_report() {
    let o = vbe(&["encode", "--target", "random:n=2,complex,arbitrary", "--ansatz", "block:2", "--layers", "0"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["report"]["converged"], false);
    assert!(v["report"]["epsilon"].as_f64().unwrap() > 1e-3);
}

#[test]
fn encode_is_deterministic() {
    let args = ["encode", "--target", "random:n=2", "--ansatz", "block:2", "--layers", "1", "--seed", "3", "--restarts", "2"];
    let (a, b) = (json(&vbe(&args)), json(&vbe(&args)));
    for key in ["epsilon", "theta", "iterations", "restart"] {
        assert_eq!(a["report"][key], b["report"][key], "{key}");
    }
}

#[test]
fn file_target_is_zero_padded() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    std::fs::write(&csv, "1,0,0.5,0,0,0\n0.5,0,1,0,0,0\n0,0,0,0,2,0\n").unwrap();
    let trace = dir.path().join("trace.csv");
    let target = format!("file:{}", path_str(&csv));
    let o = vbe(&[
        "encode", "--target", &target, "--ansatz", "block:2", "--layers", "3", "--restarts", "2", "--trace",
        path_str(&trace),
    ]);
    assert!(code(&o) <= 1);
    let v = json(&o);
    assert_eq!(v["target"]["info"]["padded_from"], serde_json::json!([3, 3]));
    assert_eq!(v["target"]["info"]["n"], 2);
    let t = std::fs::read_to_string(&trace).unwrap();
    assert!(t.starts_with("iteration,epsilon,grad_norm\n") && t.lines().count() > 2);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&vbe(&["encode", "--target", "magic:n=2", "--ansatz", "block:2", "--layers", "1"])), 2);
    assert_eq!(code(&vbe(&["encode", "--target", "random:n=2", "--ansatz", "block:99", "--layers", "1"])), 2);
    assert_eq!(code(&vbe(&["encode", "--ansatz", "block:2", "--layers", "1"])), 2);
    assert_eq!(code(&vbe(&["encode", "--bogus"])), 2);
    assert_eq!(code(&vbe(&["bench", "nothing"])), 2);
    assert_eq!(code(&vbe(&["closure", "--sym", "sn"])), 2);
    assert_eq!(code(&vbe(&["encode", "--jobs", "0", "--target", "random:n=2", "--ansatz", "block:2", "--layers", "1"])), 2);
}

#[test]
fn generic_n4_needs_heavy() {
    let o = vbe(&["encode", "--target", "random:n=4", "--ansatz", "block:2", "--layers", "1"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--heavy"));
}

#[test]
fn config_file_is_strict_and_overridable() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("run.toml");
    std::fs::write(
        &good,
        "[run]\nseed = 11\nrestarts = 2\n[closure]\nsym = \"cn\"\nn = 3\n",
    )
    .unwrap();
    let v = json(&vbe(&["closure", "--config", path_str(&good)]));
    assert_eq!(v["dimB"], 10);
    assert_eq!(v["resolved_config"]["run"]["seed"], 11);
    let v = json(&vbe(&["closure", "--config", path_str(&good), "--n", "4", "--seed", "5"]));
    assert_eq!(v["dimB"], 28);
    assert_eq!(v["resolved_config"]["run"]["seed"], 5);
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[closure]\nsymmetry = \"cn\"\n").unwrap();
    assert_eq!(code(&vbe(&["closure", "--config", path_str(&bad)])), 2);
}

#[test]
fn sweep_empty_range_prints_header_only() {
    let o = vbe(&["sweep", "--target", "random:n=2", "--ansatz", "block:2", "--from", "3", "--to", "2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "layers,epsilon,iterations,params,nonlocal_gates,converged\n");
}

#[test]
fn sweep_drops_at_generic_threshold() {
    // Block 2 on 2 + 1 qubits: 4 parameters per CNOT, 2 CNOTs per layer.
    let m = threshold_layers_generic(32, 3, 4u64.into(), 2).unwrap() as usize;
    assert_eq!(m, 3);
    let o = vbe(&["sweep", "--target", "random:n=2,seed=2", "--ansatz", "block:2", "--from", "1", "--to", "4", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let layers: usize = r[0].parse().unwrap();
        let eps: f64 = r[1].parse().unwrap();
        if layers < m {
            assert!(eps > 1e-3, "{r:?}");
        } else {
            assert!(eps <= 1e-10, "{r:?}");
        }
    }
}

#[test]
fn closure_reports_dimensions() {
    let v = json(&vbe(&["closure", "--sym", "Sn", "--n", "8"]));
    assert_eq!(v["dimB"], 85);
    let v = json(&vbe(&["closure", "--sym", "Cn", "--n", "3"]));
    assert_eq!((v["dimB"].as_u64(), v["dimL"].as_u64()), (Some(10), Some(8)));
    assert!(v["expressible"].is_null());
}

#[test]
fn closure_with_custom_generators_and_targets() {
    let dir = tempfile::tempdir().unwrap();
    let gens = dir.path().join("gens.txt");
    let set = heisenberg_generator_set(SymmetryKind::Sn, 3).unwrap();
    std::fs::write(&gens, format_generator_list(&set.generators)).unwrap();
    let dump = dir.path().join("basis.txt");
    let g = path_str(&gens);
    let complete = vbe(&["closure", "--gens", g, "--target", "heisenberg:n=3,geometry=complete,jz=0.3", "--dump", path_str(&dump)]);
    assert_eq!(code(&complete), 0);
    let v = json(&complete);
    assert_eq!(v["dimB"], 10);
    assert_eq!(v["expressible"], true);
    assert!(v["residual"].as_f64().unwrap() < 1e-9);
    let basis = vbe_core::pauli::parse_generator_list(&std::fs::read_to_string(&dump).unwrap()).unwrap();
    assert_eq!(basis.len(), 10);
    // An open chain breaks the permutation symmetry.
    let v = json(&vbe(&["closure", "--gens", g, "--target", "heisenberg:n=3"]));
    assert_eq!(v["expressible"], false);
    assert!(v["residual"].as_f64().unwrap() > 1e-3);
}

#[test]
fn closure_cap_exceeded_exits_1() {
    let o = vbe(&["closure", "--sym", "z2xz", "--n", "3", "--assoc-cap", "5"]);
    assert_eq!(code(&o), 1);
    let v = json(&o);
    assert_eq!(v["cap_exceeded"]["cap"], 5);
    assert!(v["dimB"].is_null());
}

#[test]
fn bench_tables() {
    let b = stdout(&vbe(&["bench", "bdim-table", "--max-n", "4"]));
    assert_eq!(b.lines().count(), 1 + 9);
    assert!(b.lines().skip(1).all(|l| l.ends_with(",pass")), "{b}");
    let f = stdout(&vbe(&["bench", "free-params"]));
    assert!(f.lines().skip(1).all(|l| l.ends_with(",pass")), "{f}");
    let l = stdout(&vbe(&["bench", "lcu-compare", "--n", "4"]));
    let sn = l.lines().find(|r| r.starts_with("sn,")).unwrap();
    assert!(sn.contains("mc_per_control=16"));
    let g = vbe(&["bench", "gqsp-table", "--max-n", "2", "--targets", "1"]);
    assert_eq!(code(&g), 0);
    assert!(stdout(&g).lines().skip(1).all(|l| l.ends_with(",pass")));
}

#[test]
fn resources_formats() {
    let csv = stdout(&vbe(&["resources", "--n", "4", "--format", "csv"]));
    assert!(csv.contains("complex,arbitrary,512,4,125,32,527,128"), "{csv}");
    assert!(csv.contains("real,hermitian,136,2,66,17,141,136"));
    let text = stdout(&vbe(&["resources", "--n", "2"]));
    assert!(text.starts_with("n = 2"));
    assert_eq!(code(&vbe(&["resources", "--n", "2", "--format", "xml"])), 2);
}

#[test]
fn jobs_flag_runs_in_a_pool() {
    let o = vbe(&["encode", "--jobs", "1", "--target", "random:n=2", "--ansatz", "block:2", "--layers", "5", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["resolved_config"]["run"]["jobs"], 1);
}
