//! Parsing of `--target` and `--ansatz` spec strings such as
//! `heisenberg:n=3,jz=0.5` or `gqsp:sym=sn,seq=random`.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;
use vbe_core::circuit::{AnsatzSpec, Restriction, SequencePolicy};
use vbe_core::pauli::{parse_generator_list, PauliSum};
use vbe_core::symmetry::{closure, heisenberg_generator_set, SymmetryKind};
use vbe_core::targets::{
    heisenberg_on_bonds, random_matrix, random_span_sample, read_binary, read_csv, symmetric_heisenberg, zero_pad,
    Field, Geometry, Structure,
};
use vbe_core::ComplexMatrix;

use crate::error::{CliError, CliResult};

/// `kind:key=value,flag,...` split into its parts.
struct Items<'a> {
    kind: &'a str,
    items: Vec<(&'a str, Option<&'a str>)>,
}

impl<'a> Items<'a> {
    fn parse(text: &'a str) -> Self {
        let (kind, rest) = text.split_once(':').unwrap_or((text, ""));
        let items = rest
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| match s.split_once('=') {
                Some((k, v)) => (k.trim(), Some(v.trim())),
                None => (s, None),
            })
            .collect();
        Self {
            kind: kind.trim(),
            items,
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> CliResult<()> {
        for (k, _) in &self.items {
            if !allowed.contains(k) {
                return Err(CliError::Usage(format!("unknown key {k:?} in {} spec", self.kind)));
            }
        }
        Ok(())
    }

    fn flag(&self, key: &str) -> bool {
        self.items.iter().any(|(k, v)| *k == key && v.is_none())
    }

    fn value(&self, key: &str) -> Option<&'a str> {
        self.items.iter().find(|(k, _)| *k == key).and_then(|(_, v)| *v)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        self.value(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Usage(format!("bad value {v:?} for {key} in {} spec", self.kind)))
            })
            .transpose()
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> CliResult<T> {
        self.parsed(key)?
            .ok_or_else(|| CliError::Usage(format!("{} spec needs {key}=...", self.kind)))
    }
}

fn parse_kind(s: &str) -> CliResult<SymmetryKind> {
    s.parse().map_err(|e: vbe_core::Error| CliError::Usage(e.to_string()))
}

#[derive(Clone, Debug, PartialEq)]
pub enum TargetSource {
    /// Heisenberg model; with no couplings given the symmetric model of the
    /// ansatz is used, otherwise uniform `J = 1`, `h = 1` defaults fill in.
    Heisenberg {
        n: usize,
        j: [Option<f64>; 3],
        h: Option<f64>,
        geometry: Option<Geometry>,
        seed: Option<u64>,
    },
    Random {
        n: usize,
        field: Field,
        structure: Structure,
        seed: Option<u64>,
    },
    File(PathBuf),
    /// Random element of the associative closure of a symmetric set.
    Span {
        kind: SymmetryKind,
        n: usize,
        hermitian: bool,
        seed: Option<u64>,
    },
}

/// Target matrix with a note on how it was produced.
#[derive(Clone, Debug)]
pub struct LoadedTarget {
    pub matrix: ComplexMatrix,
    pub info: TargetInfo,
}

#[derive(Clone, Debug, Serialize)]
pub struct TargetInfo {
    pub source: String,
    pub description: String,
    pub n: usize,
    /// Original shape when the matrix was zero-padded.
    pub padded_from: Option<(usize, usize)>,
}

impl TargetSource {
    pub fn parse(text: &str) -> CliResult<Self> {
        let it = Items::parse(text);
        match it.kind {
            "heisenberg" => {
                it.check_keys(&["n", "jx", "jy", "jz", "j", "h", "geometry", "periodic", "seed"])?;
                let j_all = it.parsed::<f64>("j")?;
                let pick = |k: &str| -> CliResult<Option<f64>> { Ok(it.parsed(k)?.or(j_all)) };
                let mut geometry = it
                    .value("geometry")
                    .map(|g| match g {
                        "open" => Ok(Geometry::Open),
                        "ring" => Ok(Geometry::Ring),
                        "complete" => Ok(Geometry::Complete),
                        _ => Err(CliError::Usage(format!("unknown geometry {g:?}"))),
                    })
                    .transpose()?;
                if it.flag("periodic") {
                    geometry = Some(Geometry::Ring);
                }
                Ok(Self::Heisenberg {
                    n: it.required("n")?,
                    j: [pick("jx")?, pick("jy")?, pick("jz")?],
                    h: it.parsed("h")?,
                    geometry,
                    seed: it.parsed("seed")?,
                })
            }
            "random" => {
                it.check_keys(&["n", "complex", "real", "arbitrary", "hermitian", "seed"])?;
                let field = if it.flag("real") { Field::Real } else { Field::Complex };
                let structure = if it.flag("hermitian") {
                    Structure::Hermitian
                } else {
                    Structure::Arbitrary
                };
                Ok(Self::Random {
                    n: it.required("n")?,
                    field,
                    structure,
                    seed: it.parsed("seed")?,
                })
            }
            "file" => {
                let path = text.split_once(':').map(|(_, p)| p.trim()).unwrap_or("");
                if path.is_empty() {
                    return Err(CliError::Usage("file target needs a path".into()));
                }
                Ok(Self::File(PathBuf::from(path)))
            }
            "span" => {
                it.check_keys(&["sym", "n", "hermitian", "seed"])?;
                Ok(Self::Span {
                    kind: parse_kind(it.value("sym").unwrap_or(""))?,
                    n: it.required("n")?,
                    hermitian: it.flag("hermitian"),
                    seed: it.parsed("seed")?,
                })
            }
            other => Err(CliError::Usage(format!(
                "unknown target kind {other:?}; expected heisenberg, random, file or span"
            ))),
        }
    }

    /// Builds the matrix. `sym` is the symmetry of the ansatz, if any;
    /// `seed` is used when the spec names none.
    pub fn load(&self, text: &str, sym: Option<SymmetryKind>, seed: u64) -> CliResult<LoadedTarget> {
        let (matrix, description, padded_from) = match self {
            Self::Heisenberg {
                n,
                j,
                h,
                geometry,
                seed: s,
            } => {
                let explicit = j.iter().any(Option::is_some) || h.is_some() || geometry.is_some();
                match sym.filter(|k| *k != SymmetryKind::Z2) {
                    Some(kind) if !explicit => {
                        let s = s.unwrap_or(seed);
                        let m = symmetric_heisenberg(kind, *n, s)?;
                        (m, format!("{kind}-symmetric Heisenberg, random couplings (seed {s})"), None)
                    }
                    _ => {
                        let g = geometry.unwrap_or_else(|| sym.map_or(Geometry::Open, Geometry::for_symmetry));
                        let jj = j.map(|v| v.unwrap_or(1.0));
                        let hh = h.unwrap_or(1.0);
                        let m = heisenberg_on_bonds(*n, &g.bonds(*n), jj, hh)?.to_dense()?;
                        let d = format!("Heisenberg {g:?}, J = {jj:?}, h = {hh}").to_lowercase();
                        (m, d, None)
                    }
                }
            }
            Self::Random {
                n,
                field,
                structure,
                seed: s,
            } => {
                let s = s.unwrap_or(seed);
                let m = random_matrix(*n, *field, *structure, s)?;
                (m, format!("random {field:?} {structure:?} (seed {s})").to_lowercase(), None)
            }
            Self::File(path) => {
                let m = read_matrix(path)?;
                let shape = (m.rows(), m.cols());
                let padded = zero_pad(&m);
                let note = (padded.rows() != shape.0 || padded.cols() != shape.1).then_some(shape);
                let d = match note {
                    Some((r, c)) => format!("{} ({r}x{c}, zero-padded to {d}x{d})", path.display(), d = padded.rows()),
                    None => path.display().to_string(),
                };
                (padded, d, note)
            }
            Self::Span {
                kind,
                n,
                hermitian,
                seed: s,
            } => {
                let s = s.unwrap_or(seed);
                let basis = closure(&heisenberg_generator_set(*kind, *n)?)?.assoc;
                let m = random_span_sample(&basis, *hermitian, s)?;
                (m, format!("{kind} closure span sample (seed {s})"), None)
            }
        };
        let n = matrix.rows().trailing_zeros() as usize;
        Ok(LoadedTarget {
            matrix,
            info: TargetInfo {
                source: text.to_string(),
                description,
                n,
                padded_from,
            },
        })
    }
}

pub fn read_matrix(path: &Path) -> CliResult<ComplexMatrix> {
    let file = File::open(path).map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))?;
    let r = BufReader::new(file);
    let binary = path.extension().is_some_and(|e| e == "bin");
    Ok(if binary { read_binary(r)? } else { read_csv(r)? })
}

pub fn read_generators(path: &Path) -> CliResult<Vec<PauliSum>> {
    let text =
        std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    Ok(parse_generator_list(&text)?)
}

#[derive(Clone, Debug, PartialEq)]
pub enum GqspSource {
    Symmetric(SymmetryKind),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnsatzSource {
    Block {
        id: usize,
        hermitian: bool,
        real: bool,
        ancillas: usize,
    },
    Gqsp {
        source: GqspSource,
        sequence: SequencePolicy,
        hermitian: bool,
    },
}

impl AnsatzSource {
    pub fn parse(text: &str) -> CliResult<Self> {
        let it = Items::parse(text);
        match it.kind {
            "block" => {
                let (_, rest) = text.split_once(':').unwrap_or((text, ""));
                let id_text = rest.split(',').next().unwrap_or("").trim();
                let id = id_text
                    .parse()
                    .map_err(|_| CliError::Usage(format!("block spec needs an id, got {id_text:?}")))?;
                let mut opts = Items::parse(text);
                opts.items.retain(|(k, v)| !(v.is_none() && *k == id_text));
                opts.check_keys(&["hermitian", "real", "ancillas"])?;
                Ok(Self::Block {
                    id,
                    hermitian: opts.flag("hermitian"),
                    real: opts.flag("real"),
                    ancillas: opts.parsed("ancillas")?.unwrap_or(1),
                })
            }
            "gqsp" => {
                it.check_keys(&["sym", "gens", "seq", "nonhermitian"])?;
                let source = match (it.value("sym"), it.value("gens")) {
                    (Some(k), None) => GqspSource::Symmetric(parse_kind(k)?),
                    (None, Some(p)) => GqspSource::File(PathBuf::from(p)),
                    _ => return Err(CliError::Usage("gqsp spec needs exactly one of sym= or gens=".into())),
                };
                let sequence = match it.value("seq").unwrap_or("random") {
                    "random" => SequencePolicy::Random,
                    "roundrobin" => SequencePolicy::RoundRobin,
                    list => SequencePolicy::Explicit(
                        list.split('.')
                            .map(|i| i.parse().map_err(|_| CliError::Usage(format!("bad sequence {list:?}"))))
                            .collect::<CliResult<_>>()?,
                    ),
                };
                Ok(Self::Gqsp {
                    source,
                    sequence,
                    hermitian: !it.flag("nonhermitian"),
                })
            }
            other => Err(CliError::Usage(format!("unknown ansatz kind {other:?}; expected block or gqsp"))),
        }
    }

    pub fn symmetry(&self) -> Option<SymmetryKind> {
        match self {
            Self::Gqsp {
                source: GqspSource::Symmetric(k),
                ..
            } => Some(*k),
            _ => None,
        }
    }

    pub fn is_generic(&self) -> bool {
        matches!(self, Self::Block { .. })
    }

    pub fn build(&self, n: usize, layers: usize) -> CliResult<AnsatzSpec> {
        let spec = match self {
            Self::Block {
                id,
                hermitian,
                real,
                ancillas,
            } => {
                let mut s = AnsatzSpec::generic(*id, n, layers);
                s.hermitian = *hermitian;
                s.ancillas = *ancillas;
                if *real {
                    s.restriction = Restriction::Real;
                }
                s
            }
            Self::Gqsp {
                source,
                sequence,
                hermitian,
            } => {
                let gens = match source {
                    GqspSource::Symmetric(k) => heisenberg_generator_set(*k, n)?.generators,
                    GqspSource::File(p) => read_generators(p)?,
                };
                if gens.iter().any(|g| g.num_qubits() != n) {
                    return Err(CliError::Usage(format!("generators do not act on {n} qubits")));
                }
                let mut s = AnsatzSpec::gqsp(gens, sequence.clone(), layers);
                s.hermitian = *hermitian;
                s
            }
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_specs() {
        let t = TargetSource::parse("heisenberg:n=3,jz=0.5,periodic").unwrap();
        assert_eq!(
            t,
            TargetSource::Heisenberg {
                n: 3,
                j: [None, None, Some(0.5)],
                h: None,
                geometry: Some(Geometry::Ring),
                seed: None
            }
        );
        let r = TargetSource::parse("random:n=2,real,hermitian,seed=4").unwrap();
        assert_eq!(
            r,
            TargetSource::Random {
                n: 2,
                field: Field::Real,
                structure: Structure::Hermitian,
                seed: Some(4)
            }
        );
        assert!(TargetSource::parse("random:n=2,bogus").is_err());
        assert!(TargetSource::parse("heisenberg:jz=1").is_err());
        assert!(TargetSource::parse("magic:n=2").is_err());
        assert_eq!(TargetSource::parse("file:a.csv").unwrap(), TargetSource::File("a.csv".into()));
    }

    #[test]
    fn heisenberg_target_follows_ansatz_symmetry() {
        let t = TargetSource::parse("heisenberg:n=3").unwrap();
        let sym = t.load("", Some(SymmetryKind::Sn), 7).unwrap();
        assert_eq!(sym.matrix, symmetric_heisenberg(SymmetryKind::Sn, 3, 7).unwrap());
        let plain = t.load("", None, 7).unwrap();
        let open = heisenberg_on_bonds(3, &Geometry::Open.bonds(3), [1.0; 3], 1.0).unwrap();
        assert_eq!(plain.matrix, open.to_dense().unwrap());
        let ring = TargetSource::parse("heisenberg:n=3,j=1").unwrap().load("", Some(SymmetryKind::Cn), 0).unwrap();
        let expect = heisenberg_on_bonds(3, &Geometry::Ring.bonds(3), [1.0; 3], 1.0).unwrap();
        assert_eq!(ring.matrix, expect.to_dense().unwrap());
    }

    #[test]
    fn ansatz_specs() {
        assert_eq!(
            AnsatzSource::parse("block:2,hermitian,ancillas=2").unwrap(),
            AnsatzSource::Block {
                id: 2,
                hermitian: true,
                real: false,
                ancillas: 2
            }
        );
        let g = AnsatzSource::parse("gqsp:sym=Sn,seq=0.1.0").unwrap();
        assert_eq!(g.symmetry(), Some(SymmetryKind::Sn));
        let spec = g.build(3, 3).unwrap();
        assert!(spec.hermitian);
        assert!(g.build(3, 2).is_err());
        assert!(AnsatzSource::parse("block:x").is_err());
        assert!(AnsatzSource::parse("block:2,fast").is_err());
        assert!(AnsatzSource::parse("gqsp:seq=random").is_err());
        assert!(AnsatzSource::parse("block:16").unwrap().build(2, 1).is_err());
    }
}
