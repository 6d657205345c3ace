//! Command-line arguments and the TOML run configuration. Every field is
//! optional in both; flags override file values, then defaults apply.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use vbe_core::optimize::OptimizeOptions;

use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "vbe", version, about = "Variational block-encoding toolkit")]
pub struct Cli {
    /// TOML run configuration; command-line flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub run: RunArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize one ansatz against one target.
    Encode(EncodeArgs),
    /// Best encoding error over a range of layer counts, as CSV.
    Sweep(SweepArgs),
    /// Lie and associative closure dimensions of a generator set.
    Closure(ClosureArgs),
    /// Parameter and gate bounds of the generic ansatz per target class.
    Resources(ResourcesArgs),
    /// Reference tables: free-params, gqsp-table, bdim-table, lcu-compare.
    Bench(BenchArgs),
}

/// Fills `None` fields of `self` from `base`.
macro_rules! overlay {
    ($t:ty { $($f:ident),* } $(flags { $($b:ident),* })?) => {
        impl $t {
            pub fn overlay(self, base: Self) -> Self {
                Self {
                    $($f: self.$f.or(base.$f),)*
                    $($($b: self.$b || base.$b,)*)?
                }
            }
        }
    };
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunArgs {
    /// Master seed for targets, initial parameters and sequences.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for concurrent restarts.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Allow long-running cells (generic n >= 4, large symmetric searches).
    #[arg(long, global = true)]
    pub heavy: bool,
    /// Gradient-norm stopping tolerance.
    #[arg(long, global = true)]
    pub tol_grad: Option<f64>,
    /// Encoding error counted as exact.
    #[arg(long, global = true)]
    pub tol_exact: Option<f64>,
    /// Random restarts per encoding.
    #[arg(long, global = true)]
    pub restarts: Option<usize>,
    /// BFGS iteration limit per restart.
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
}

overlay!(RunArgs { seed, jobs, tol_grad, tol_exact, restarts, max_iter } flags { heavy });

/// Run settings after defaults.
#[derive(Clone, Debug, Serialize)]
pub struct ResolvedRun {
    pub seed: u64,
    pub jobs: Option<usize>,
    pub heavy: bool,
    pub tol_grad: f64,
    pub tol_exact: f64,
    pub restarts: usize,
    pub max_iter: usize,
}

impl RunArgs {
    pub fn resolve(&self) -> ResolvedRun {
        let d = OptimizeOptions::default();
        ResolvedRun {
            seed: self.seed.unwrap_or(d.seed),
            jobs: self.jobs,
            heavy: self.heavy,
            tol_grad: self.tol_grad.unwrap_or(d.grad_norm_tol),
            tol_exact: self.tol_exact.unwrap_or(d.epsilon_exact),
            restarts: self.restarts.unwrap_or(d.restarts),
            max_iter: self.max_iter.unwrap_or(d.max_iterations),
        }
    }
}

impl ResolvedRun {
    pub fn optimize_options(&self) -> OptimizeOptions {
        OptimizeOptions {
            grad_norm_tol: self.tol_grad,
            max_iterations: self.max_iter,
            epsilon_exact: self.tol_exact,
            restarts: self.restarts,
            seed: self.seed,
            ..OptimizeOptions::default()
        }
    }

    pub fn require_heavy(&self, needed: bool, what: &str) -> CliResult<()> {
        if needed && !self.heavy {
            return Err(CliError::Usage(format!("{what} is long-running; pass --heavy to run it")));
        }
        Ok(())
    }
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EncodeArgs {
    /// heisenberg:n=N[,jx=,jy=,jz=,j=,h=,geometry=open|ring|complete,periodic,seed=],
    /// random:n=N[,real][,hermitian][,seed=], file:PATH (.csv or .bin) or
    /// span:sym=K,n=N[,hermitian][,seed=]
    #[arg(long)]
    pub target: Option<String>,
    /// block:ID[,hermitian][,real][,ancillas=M] or
    /// gqsp:sym=K|gens=PATH[,seq=random|roundrobin|I.J.K][,nonhermitian]
    #[arg(long)]
    pub ansatz: Option<String>,
    /// Number of repeating layers.
    #[arg(long)]
    pub layers: Option<usize>,
    /// Sub-normalization margin added to the spectral norm.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Write the per-iteration cost of the best restart as CSV.
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

overlay!(EncodeArgs { target, ansatz, layers, delta, output, trace });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepArgs {
    /// Target spec, as for encode.
    #[arg(long)]
    pub target: Option<String>,
    /// Ansatz spec, as for encode.
    #[arg(long)]
    pub ansatz: Option<String>,
    /// First layer count.
    #[arg(long)]
    pub from: Option<usize>,
    /// Last layer count, inclusive.
    #[arg(long)]
    pub to: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

overlay!(SweepArgs { target, ansatz, from, to, delta, output });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClosureArgs {
    /// Symmetry of the Heisenberg generator set: z2xz, cn or sn.
    #[arg(long)]
    pub sym: Option<String>,
    /// System qubits.
    #[arg(long)]
    pub n: Option<usize>,
    /// Generator file of anti-hermitian sums, `re im LETTERS` per line.
    #[arg(long)]
    pub gens: Option<PathBuf>,
    /// Target spec to test for expressibility.
    #[arg(long)]
    pub target: Option<String>,
    /// Write the associative basis here, in generator-file format.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Largest Lie basis before giving up.
    #[arg(long)]
    pub lie_cap: Option<usize>,
    /// Largest associative basis before giving up.
    #[arg(long)]
    pub assoc_cap: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

overlay!(ClosureArgs { sym, n, gens, target, dump, lie_cap, assoc_cap, output });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ResourcesArgs {
    /// System qubits.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub ancillas: Option<usize>,
    /// Generic block id.
    #[arg(long)]
    pub block: Option<usize>,
    /// text or csv.
    #[arg(long)]
    pub format: Option<String>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

overlay!(ResourcesArgs { n, ancillas, block, format, output });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchArgs {
    /// free-params, gqsp-table, bdim-table or lcu-compare.
    pub table: Option<String>,
    /// Largest system size in the table.
    #[arg(long)]
    pub max_n: Option<usize>,
    /// System size for single-size tables.
    #[arg(long)]
    pub n: Option<usize>,
    /// Target draws per gqsp-table cell; the cell reports the median.
    #[arg(long)]
    pub targets: Option<usize>,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

overlay!(BenchArgs { table, max_n, n, targets, output });

/// Layout of a `--config` file: a `[run]` table plus one table per command.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub run: RunArgs,
    pub encode: EncodeArgs,
    pub sweep: SweepArgs,
    pub closure: ClosureArgs,
    pub resources: ResourcesArgs,
    pub bench: BenchArgs,
}

impl RunConfig {
    pub fn parse(text: &str) -> CliResult<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::parse("[run]\nseed = 3\n[encode]\nlayers = 2\n").is_ok());
        assert!(RunConfig::parse("[run]\nsed = 3\n").is_err());
        assert!(RunConfig::parse("[encode]\nlayer = 2\n").is_err());
        assert!(RunConfig::parse("[plot]\n").is_err());
        assert!(RunConfig::parse("seed = 3\n").is_err());
    }

    #[test]
    fn flags_override_file() {
        let file = RunConfig::parse("[run]\nseed = 3\nrestarts = 2\nheavy = true\n").unwrap();
        let cli = RunArgs {
            seed: Some(9),
            ..RunArgs::default()
        };
        let r = cli.overlay(file.run).resolve();
        assert_eq!((r.seed, r.restarts, r.heavy), (9, 2, true));
        assert_eq!(r.max_iter, OptimizeOptions::default().max_iterations);
    }
}
