//! Line-oriented circuit dump for golden files.

use std::fmt::Write;

use super::{Circuit, Param};

fn join<T: ToString>(xs: impl Iterator<Item = T>) -> String {
    xs.map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

/// Header line `circuit N=.. m=.. params=..`, then one line per gate:
/// kind, qubits, angle slots (`sK` or a fixed value), optional `dag`,
/// added controls and the gadget generator as `re:im:LETTERS` terms.
pub fn dump_circuit(c: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "circuit N={} m={} params={}",
        c.num_qubits(),
        c.ancillas(),
        c.num_params()
    );
    for g in c.gates() {
        let _ = write!(out, "{} q={}", g.kind.name(), join(g.qubits.iter()));
        if !g.params.is_empty() {
            let ps = g.params.iter().map(|p| match p {
                Param::Slot(k) => format!("s{k}"),
                Param::Fixed(v) => format!("{v}"),
            });
            let _ = write!(out, " p={}", join(ps));
        }
        if g.dagger {
            out.push_str(" dag");
        }
        if !g.extra_controls.is_empty() {
            let _ = write!(out, " c={}", join(g.extra_controls.iter()));
        }
        if let Some(gen) = &g.generator {
            let terms = gen
                .sum()
                .terms()
                .iter()
                .map(|(p, z)| format!("{}:{}:{}", z.re, z.im, p.letters()));
            let _ = write!(out, " g={}", terms.collect::<Vec<_>>().join(";"));
        }
        out.push('\n');
    }
    out
}
