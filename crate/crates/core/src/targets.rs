//! Target matrices: Heisenberg chains, random dense matrices, samples from
//! the span of an operator basis, zero padding and matrix file formats.

use std::io::{BufRead, Read, Write};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{ComplexMatrix, I, ZERO};
use crate::pauli::{Pauli, PauliString, PauliSum, MAX_DENSE_QUBITS};
use crate::symmetry::{heisenberg_generator_set, SymmetryKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Complex,
    Real,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Structure {
    Arbitrary,
    Hermitian,
    Unitary,
}

/// Transverse-field Heisenberg chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeisenbergParams {
    pub n: usize,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub h: f64,
    #[serde(default)]
    pub periodic: bool,
}

impl HeisenbergParams {
    pub fn uniform(n: usize, j: f64, h: f64) -> Self {
        Self {
            n,
            jx: j,
            jy: j,
            jz: j,
            h,
            periodic: false,
        }
    }

    /// Bonds `(i, i + 1)`, plus `(n - 1, 0)` when periodic and `n > 2`.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut b: Vec<_> = (0..self.n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        if self.periodic && self.n > 2 {
            b.push((self.n - 1, 0));
        }
        b
    }
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_DENSE_QUBITS));
    }
    Ok(())
}

/// `sum_bonds (Jx XX + Jy YY + Jz ZZ) + h sum_i X_i` as a Pauli sum.
pub fn heisenberg_sum(p: &HeisenbergParams) -> Result<PauliSum> {
    heisenberg_on_bonds(p.n, &p.bonds(), [p.jx, p.jy, p.jz], p.h)
}

/// Heisenberg couplings `j = [Jx, Jy, Jz]` on arbitrary bonds.
pub fn heisenberg_on_bonds(n: usize, bonds: &[(usize, usize)], j: [f64; 3], h: f64) -> Result<PauliSum> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("Heisenberg chain needs n >= 2, got {n}")));
    }
    let mut terms = Vec::new();
    for &(a, b) in bonds {
        if a == b || a >= n || b >= n {
            return Err(Error::InvalidInput(format!("bad bond ({a}, {b}) on {n} sites")));
        }
        for (letter, c) in [Pauli::X, Pauli::Y, Pauli::Z].into_iter().zip(j) {
            let mut s = PauliString::identity(n);
            s.set(a, letter);
            s.set(b, letter);
            terms.push((s, Complex64::new(c, 0.0)));
        }
    }
    for i in 0..n {
        terms.push((PauliString::single(n, i, Pauli::X), Complex64::new(h, 0.0)));
    }
    PauliSum::from_terms(n, terms)
}

/// Bond sets matching the symmetric generator families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Open,
    Ring,
    Complete,
}

impl Geometry {
    pub fn bonds(self, n: usize) -> Vec<(usize, usize)> {
        match self {
            Self::Open => (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
            Self::Ring => {
                let mut b = Self::Open.bonds(n);
                if n > 2 {
                    b.push((n - 1, 0));
                }
                b
            }
            Self::Complete => (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect(),
        }
    }

    /// Geometry whose uniform Heisenberg model has the given symmetry.
    pub fn for_symmetry(kind: SymmetryKind) -> Self {
        match kind {
            SymmetryKind::Z2 | SymmetryKind::Z2xz => Self::Open,
            SymmetryKind::Cn => Self::Ring,
            SymmetryKind::Sn => Self::Complete,
        }
    }
}

pub fn heisenberg(p: &HeisenbergParams) -> Result<ComplexMatrix> {
    check_n(p.n)?;
    heisenberg_sum(p)?.to_dense()
}

/// Hamiltonian `sum_k c_k (-i G_k)` over the symmetric generator set, with
/// one uniform coefficient in `[-1, 1]` per generator.
pub fn symmetric_heisenberg(kind: SymmetryKind, n: usize, seed: u64) -> Result<ComplexMatrix> {
    check_n(n)?;
    let set = heisenberg_generator_set(kind, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut h = PauliSum::zero(n);
    for g in &set.generators {
        let c: f64 = rng.random_range(-1.0..=1.0);
        h = h.add(&g.scale(Complex64::new(0.0, -c)))?;
    }
    h.to_dense()
}

/// Entries uniform on `[-1, 1]`, plus an independent imaginary part for
/// complex fields; hermitian structure takes `(M + M^dagger) / 2`.
pub fn random_matrix(n: usize, field: Field, structure: Structure, seed: u64) -> Result<ComplexMatrix> {
    check_n(n)?;
    if structure == Structure::Unitary {
        return Err(Error::InvalidInput("random unitary targets are not supported".into()));
    }
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..dim * dim)
        .map(|_| {
            let re = rng.random_range(-1.0..=1.0);
            let im = match field {
                Field::Complex => rng.random_range(-1.0..=1.0),
                Field::Real => 0.0,
            };
            Complex64::new(re, im)
        })
        .collect();
    let m = ComplexMatrix::from_vec(dim, dim, data)?;
    Ok(match structure {
        Structure::Hermitian => hermitian_part(&m),
        _ => m,
    })
}

fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + &m.adjoint()).scale_real(0.5)
}

/// `sum_k c_k B_k` with complex coefficients uniform on the unit square.
pub fn random_span_sample(b: &[PauliSum], hermitian: bool, seed: u64) -> Result<ComplexMatrix> {
    let Some(first) = b.first() else {
        return Err(Error::InvalidInput("empty operator basis".into()));
    };
    let n = first.num_qubits();
    check_n(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = PauliSum::zero(n);
    for e in b {
        let c = Complex64::new(rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        acc = acc.add(&e.scale(c))?;
    }
    let m = acc.to_dense()?;
    Ok(if hermitian { hermitian_part(&m) } else { m })
}

/// Embeds `a` in the top-left corner of the smallest `2^n` square.
pub fn zero_pad(a: &ComplexMatrix) -> ComplexMatrix {
    let dim = a.rows().max(a.cols()).max(1).next_power_of_two();
    if a.rows() == dim && a.cols() == dim {
        return a.clone();
    }
    let mut out = ComplexMatrix::zeros(dim, dim);
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            out[(r, c)] = a[(r, c)];
        }
    }
    out
}

/// One line per row, each entry written as `re,im`.
pub fn write_csv<W: Write>(m: &ComplexMatrix, mut w: W) -> Result<()> {
    for r in 0..m.rows() {
        let line = m
            .row(r)
            .iter()
            .map(|c| format!("{:e},{:e}", c.re, c.im))
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}")?;
    }
    Ok(())
}

pub fn read_csv<R: BufRead>(r: R) -> Result<ComplexMatrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        let body = line.trim();
        if body.is_empty() || body.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse { line: k + 1, msg };
        let vals = body
            .split(',')
            .map(|f| f.trim().parse::<f64>().map_err(|_| err(format!("bad number {f:?}"))))
            .collect::<Result<Vec<_>>>()?;
        if vals.len() % 2 != 0 {
            return Err(err("odd number of fields".into()));
        }
        let width = vals.len() / 2;
        if *cols.get_or_insert(width) != width {
            return Err(err("rows have different lengths".into()));
        }
        data.extend(vals.chunks(2).map(|p| Complex64::new(p[0], p[1])));
        rows += 1;
    }
    ComplexMatrix::from_vec(rows, cols.unwrap_or(0), data)
}

/// Little-endian `u64` dimension followed by `re, im` doubles, row-major.
pub fn write_binary<W: Write>(m: &ComplexMatrix, mut w: W) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    for c in m.as_slice() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(mut r: R) -> Result<ComplexMatrix> {
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let dim = usize::try_from(u64::from_le_bytes(word))
        .ok()
        .filter(|&d| d <= 1 << MAX_DENSE_QUBITS)
        .ok_or_else(|| Error::InvalidInput("binary matrix dimension too large".into()))?;
    let mut data = vec![ZERO; dim * dim];
    for c in data.iter_mut() {
        r.read_exact(&mut word)?;
        let re = f64::from_le_bytes(word);
        r.read_exact(&mut word)?;
        *c = Complex64::new(re, f64::from_le_bytes(word));
    }
    ComplexMatrix::from_vec(dim, dim, data)
}

/// `-i G`, the hermitian operator behind an anti-hermitian generator.
pub fn hermitian_of(g: &PauliSum) -> PauliSum {
    g.scale(-I)
}
