//! Pauli strings in symplectic (x, z) form and complex-weighted Pauli sums.
//!
//! Letter `j` of an `n`-qubit string acts on qubit `j`, which is bit `n - 1 - j`
//! of a computational basis index (qubit 0 is the most significant bit).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::numkit::{ComplexMatrix, I, ONE, ZERO};

/// Largest string length representable in the two 64-bit masks and the sort key.
pub const MAX_QUBITS: usize = 32;
/// Largest qubit count accepted by dense conversion.
pub const MAX_DENSE_QUBITS: usize = 9;
/// Coefficients below this magnitude are dropped after every operation.
pub const PRUNE_TOL: f64 = 1e-13;
/// Relative residual below which a candidate counts as linearly dependent.
pub const SPAN_TOL: f64 = 1e-9;

/// `i^k`.
pub fn i_pow(k: u32) -> Complex64 {
    match k % 4 {
        0 => ONE,
        1 => I,
        2 => -ONE,
        _ => -I,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' | 'i' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// Tensor product of single-qubit Paulis, `P(x, z) = i^{|x & z|} X^x Z^z`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: u32,
    x: u64,
    z: u64,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        Self { n: n as u32, x: 0, z: 0 }
    }

    /// Builds a string from raw masks; bits at or above `n` are discarded.
    pub fn from_masks(n: usize, x: u64, z: u64) -> Self {
        assert!(n <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        let m = Self::full_mask(n);
        Self { n: n as u32, x: x & m, z: z & m }
    }

    /// One non-identity letter on `qubit`.
    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut s = Self::identity(n);
        s.set(qubit, p);
        s
    }

    pub fn from_letters(letters: &[Pauli]) -> Self {
        let mut s = Self::identity(letters.len());
        for (j, &p) in letters.iter().enumerate() {
            s.set(j, p);
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if text.is_empty() || text.chars().count() > MAX_QUBITS {
            return Err(Error::InvalidInput(format!("bad Pauli string {text:?}")));
        }
        let letters = text
            .chars()
            .map(|c| {
                Pauli::from_char(c)
                    .ok_or_else(|| Error::InvalidInput(format!("bad Pauli letter {c:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_letters(&letters))
    }

    fn full_mask(n: usize) -> u64 {
        if n == 64 {
            u64::MAX
        } else {
            (1u64 << n) - 1
        }
    }

    fn bit(&self, j: usize) -> u64 {
        1u64 << (self.n as usize - 1 - j)
    }

    pub fn set(&mut self, j: usize, p: Pauli) {
        assert!(j < self.n as usize);
        let b = self.bit(j);
        let (x, z) = p.bits();
        self.x = if x { self.x | b } else { self.x & !b };
        self.z = if z { self.z | b } else { self.z & !b };
    }

    pub fn num_qubits(&self) -> usize {
        self.n as usize
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn get(&self, j: usize) -> Pauli {
        let b = self.bit(j);
        match (self.x & b != 0, self.z & b != 0) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn letters(&self) -> String {
        (0..self.n as usize).map(|j| self.get(j).to_char()).collect()
    }

    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    /// Number of X, Y and Z letters.
    pub fn letter_counts(&self) -> (u32, u32, u32) {
        let y = (self.x & self.z).count_ones();
        ((self.x & !self.z).count_ones(), y, (self.z & !self.x).count_ones())
    }

    /// `self * other = phase * r`; lengths must agree.
    pub fn mul(&self, other: &Self) -> (Complex64, Self) {
        debug_assert_eq!(self.n, other.n);
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = (self.x & self.z).count_ones()
            + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones()
            + 4 * 64
            - (x & z).count_ones();
        (i_pow(k), Self { n: self.n, x, z })
    }

    pub fn commutes_with(&self, other: &Self) -> bool {
        ((self.x & other.z) ^ (self.z & other.x)).count_ones() % 2 == 0
    }

    /// Lexicographic key over letters with `I < X < Y < Z`: two bits per
    /// letter, `2 z + (x ^ z)`, interleaved so qubit 0 is most significant.
    pub fn sort_key(&self) -> u64 {
        (spread_bits(self.z) << 1) | spread_bits(self.x ^ self.z)
    }

    /// `P |b> = phase |b'>`.
    pub fn apply_to_basis(&self, b: usize) -> (Complex64, usize) {
        let b = b as u64;
        let k = (self.x & self.z).count_ones() + 2 * (b & self.z).count_ones();
        (i_pow(k), (b ^ self.x) as usize)
    }

    /// Moves the letter on qubit `j` to qubit `perm[j]`.
    pub fn permute(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n as usize);
        let mut out = Self::identity(self.n as usize);
        for (j, &t) in perm.iter().enumerate() {
            out.set(t, self.get(j));
        }
        out
    }

    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        let n = self.n as usize;
        if n > MAX_DENSE_QUBITS {
            return Err(Error::TooManyQubits(n, MAX_DENSE_QUBITS));
        }
        let dim = 1usize << n;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for b in 0..dim {
            let (ph, r) = self.apply_to_basis(b);
            m[(r, b)] = ph;
        }
        Ok(m)
    }
}

impl Ord for PauliString {
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| self.sort_key().cmp(&other.sort_key()))
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letters())
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letters())
    }
}

/// Moves bit `b` of a 32-bit value to bit `2 b`.
fn spread_bits(v: u64) -> u64 {
    let mut v = v & 0xffff_ffff;
    v = (v | (v << 16)) & 0x0000_ffff_0000_ffff;
    v = (v | (v << 8)) & 0x00ff_00ff_00ff_00ff;
    v = (v | (v << 4)) & 0x0f0f_0f0f_0f0f_0f0f;
    v = (v | (v << 2)) & 0x3333_3333_3333_3333;
    (v | (v << 1)) & 0x5555_5555_5555_5555
}

/// Product of two strings with a length check.
pub fn mul_strings(p: &PauliString, q: &PauliString) -> Result<(Complex64, PauliString)> {
    if p.n != q.n {
        return Err(Error::QubitCountMismatch {
            expected: p.num_qubits(),
            got: q.num_qubits(),
        });
    }
    Ok(p.mul(q))
}

/// Linear combination of Pauli strings, kept sorted and pruned.
#[derive(Clone, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: Vec<(PauliString, Complex64)>,
}

impl PauliSum {
    pub fn zero(n: usize) -> Self {
        Self { n, terms: Vec::new() }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_string(PauliString::identity(n), ONE)
    }

    pub fn from_string(p: PauliString, c: Complex64) -> Self {
        let mut s = Self::zero(p.num_qubits());
        if c.norm() >= PRUNE_TOL {
            s.terms.push((p, c));
        }
        s
    }

    /// Sums the given terms, merging repeated strings.
    pub fn from_terms<T>(n: usize, terms: T) -> Result<Self>
    where
        T: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut acc: HashMap<PauliString, Complex64> = HashMap::new();
        for (p, c) in terms {
            if p.num_qubits() != n {
                return Err(Error::QubitCountMismatch {
                    expected: n,
                    got: p.num_qubits(),
                });
            }
            *acc.entry(p).or_insert(ZERO) += c;
        }
        Ok(Self::from_map(n, acc))
    }

    /// Convenience constructor from `(coefficient, letters)` pairs.
    pub fn from_letters(terms: &[(Complex64, &str)]) -> Result<Self> {
        let parsed = terms
            .iter()
            .map(|(c, l)| Ok((PauliString::parse(l)?, *c)))
            .collect::<Result<Vec<_>>>()?;
        let n = parsed
            .first()
            .map(|(p, _)| p.num_qubits())
            .ok_or_else(|| Error::InvalidInput("empty term list".into()))?;
        Self::from_terms(n, parsed)
    }

    fn from_map(n: usize, acc: HashMap<PauliString, Complex64>) -> Self {
        let mut terms: Vec<_> = acc.into_iter().filter(|(_, c)| c.norm() >= PRUNE_TOL).collect();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        Self { n, terms }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(PauliString, Complex64)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, p: &PauliString) -> Complex64 {
        self.terms
            .binary_search_by(|(q, _)| q.cmp(p))
            .map(|i| self.terms[i].1)
            .unwrap_or(ZERO)
    }

    fn check_n(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::QubitCountMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        Self::from_terms(self.n, self.terms.iter().chain(&other.terms).copied())
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        Self::from_terms(
            self.n,
            self.terms
                .iter()
                .copied()
                .chain(other.terms.iter().map(|&(p, c)| (p, -c))),
        )
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|&(p, c)| (p, c * s))
                .filter(|(_, c)| c.norm() >= PRUNE_TOL)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        let mut acc: HashMap<PauliString, Complex64> = HashMap::new();
        for &(p, a) in &self.terms {
            for &(q, b) in &other.terms {
                let (ph, r) = p.mul(&q);
                *acc.entry(r).or_insert(ZERO) += ph * a * b;
            }
        }
        Ok(Self::from_map(self.n, acc))
    }

    /// `[self, other] = self * other - other * self`. Commuting string pairs
    /// cancel and anticommuting pairs double.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_n(other)?;
        let mut acc: HashMap<PauliString, Complex64> = HashMap::new();
        for &(p, a) in &self.terms {
            for &(q, b) in &other.terms {
                if p.commutes_with(&q) {
                    continue;
                }
                let (ph, r) = p.mul(&q);
                *acc.entry(r).or_insert(ZERO) += ph * a * b * 2.0;
            }
        }
        Ok(Self::from_map(self.n, acc))
    }

    /// Coefficient-vector 2-norm, equal to `||to_dense(s)||_F / sqrt(2^n)`.
    pub fn norm(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|&(p, c)| (p, c.conj())).collect(),
        }
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(_, c)| c.re.abs() <= tol)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.terms.iter().all(|(_, c)| c.im.abs() <= tol)
    }

    pub fn pairwise_commuting(&self) -> bool {
        pairwise_commuting(self)
    }

    pub fn permute_qubits(&self, perm: &[usize]) -> Self {
        Self::from_terms(self.n, self.terms.iter().map(|&(p, c)| (p.permute(perm), c)))
            .expect("permutation keeps the qubit count")
    }

    pub fn to_dense(&self) -> Result<ComplexMatrix> {
        if self.n > MAX_DENSE_QUBITS {
            return Err(Error::TooManyQubits(self.n, MAX_DENSE_QUBITS));
        }
        let dim = 1usize << self.n;
        let mut m = ComplexMatrix::zeros(dim, dim);
        for &(p, c) in &self.terms {
            for b in 0..dim {
                let (ph, r) = p.apply_to_basis(b);
                m[(r, b)] += c * ph;
            }
        }
        Ok(m)
    }

    /// Sparse coefficient vector keyed by packed masks, for span tracking.
    pub fn coefficient_vector(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.terms
            .iter()
            .map(|&(p, c)| ((p.x_mask() << 32) | p.z_mask(), c))
    }
}

impl fmt::Debug for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (p, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({:.4}{:+.4}i){}", c.re, c.im, p)?;
        }
        Ok(())
    }
}

/// Text form: one `re im LETTERS` line per term.
impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (p, c) in &self.terms {
            writeln!(f, "{} {} {}", c.re, c.im, p)?;
        }
        Ok(())
    }
}

pub fn commutator(a: &PauliSum, b: &PauliSum) -> Result<PauliSum> {
    a.commutator(b)
}

pub fn pairwise_commuting(s: &PauliSum) -> bool {
    let t = s.terms();
    t.iter()
        .enumerate()
        .all(|(i, (p, _))| t[i + 1..].iter().all(|(q, _)| p.commutes_with(q)))
}

/// True iff `candidate` lies outside the complex span of `basis`.
pub fn rank_extend(basis: &[PauliSum], candidate: &PauliSum) -> bool {
    let mut span = SpanTracker::new();
    for b in basis {
        span.try_insert(b.coefficient_vector());
    }
    !span.contains(candidate.coefficient_vector())
}

/// Incremental orthonormal basis over sparse coefficient vectors.
///
/// Keys are mapped to dense positions on first sight; every stored vector is
/// implicitly zero on positions added after it. Projection uses modified
/// Gram-Schmidt applied twice.
#[derive(Clone, Debug)]
pub struct SpanTracker<K> {
    index: HashMap<K, usize>,
    basis: Vec<Vec<Complex64>>,
    rel_tol: f64,
}

impl<K: Hash + Eq + Copy> Default for SpanTracker<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Hash + Eq + Copy> SpanTracker<K> {
    pub fn new() -> Self {
        Self::with_tolerance(SPAN_TOL)
    }

    pub fn with_tolerance(rel_tol: f64) -> Self {
        Self {
            index: HashMap::new(),
            basis: Vec::new(),
            rel_tol,
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// Returns the residual on known keys, the part on unseen keys, and the
    /// input norm.
    fn project<T>(&self, entries: T) -> (Vec<Complex64>, Vec<(K, Complex64)>, f64)
    where
        T: IntoIterator<Item = (K, Complex64)>,
    {
        let mut r = vec![ZERO; self.index.len()];
        let mut fresh: Vec<(K, Complex64)> = Vec::new();
        let mut norm2 = 0.0;
        for (k, c) in entries {
            norm2 += c.norm_sqr();
            match self.index.get(&k) {
                Some(&i) => r[i] += c,
                None => match fresh.iter_mut().find(|(q, _)| *q == k) {
                    Some(slot) => slot.1 += c,
                    None => fresh.push((k, c)),
                },
            }
        }
        for _ in 0..2 {
            for q in &self.basis {
                let dot: Complex64 = q.iter().zip(&r).map(|(a, b)| a.conj() * b).sum();
                if dot == ZERO {
                    continue;
                }
                for (ri, qi) in r.iter_mut().zip(q) {
                    *ri -= dot * qi;
                }
            }
        }
        (r, fresh, norm2.sqrt())
    }

    fn independent(&self, r: &[Complex64], fresh: &[(K, Complex64)], norm: f64) -> Option<f64> {
        if norm == 0.0 {
            return None;
        }
        let res2: f64 = r.iter().map(|c| c.norm_sqr()).sum::<f64>()
            + fresh.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>();
        let res = res2.sqrt();
        (res > self.rel_tol * norm).then_some(res)
    }

    pub fn contains<T>(&self, entries: T) -> bool
    where
        T: IntoIterator<Item = (K, Complex64)>,
    {
        let (r, fresh, norm) = self.project(entries);
        self.independent(&r, &fresh, norm).is_none()
    }

    /// Relative distance of the vector from the current span.
    pub fn relative_residual<T>(&self, entries: T) -> f64
    where
        T: IntoIterator<Item = (K, Complex64)>,
    {
        let (r, fresh, norm) = self.project(entries);
        if norm == 0.0 {
            return 0.0;
        }
        let res2: f64 = r.iter().map(|c| c.norm_sqr()).sum::<f64>()
            + fresh.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>();
        res2.sqrt() / norm
    }

    /// Adds the vector if it extends the span; returns whether it did.
    pub fn try_insert<T>(&mut self, entries: T) -> bool
    where
        T: IntoIterator<Item = (K, Complex64)>,
    {
        let (mut r, fresh, norm) = self.project(entries);
        let Some(res) = self.independent(&r, &fresh, norm) else {
            return false;
        };
        for (k, c) in fresh {
            self.index.insert(k, r.len());
            r.push(c);
        }
        for c in r.iter_mut() {
            *c /= res;
        }
        self.basis.push(r);
        true
    }
}

/// Parses one sum from `re im LETTERS` lines. Blank lines and `#` comments
/// are ignored.
pub fn parse_pauli_sum(text: &str) -> Result<PauliSum> {
    let mut sums = parse_generator_list(text)?;
    match sums.len() {
        1 => Ok(sums.remove(0)),
        0 => Err(Error::Parse {
            line: 0,
            msg: "no terms".into(),
        }),
        k => Err(Error::Parse {
            line: 0,
            msg: format!("expected one sum, found {k}"),
        }),
    }
}

/// Parses a list of sums separated by blank lines or `---` lines.
pub fn parse_generator_list(text: &str) -> Result<Vec<PauliSum>> {
    let mut out = Vec::new();
    let mut current: Vec<(PauliString, Complex64)> = Vec::new();
    let mut n: Option<usize> = None;
    let flush = |current: &mut Vec<(PauliString, Complex64)>, out: &mut Vec<PauliSum>, line| {
        if current.is_empty() {
            return Ok(());
        }
        let nq = current[0].0.num_qubits();
        let s = PauliSum::from_terms(nq, current.drain(..)).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        out.push(s);
        Ok::<(), Error>(())
    };
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() || body == "---" {
            flush(&mut current, &mut out, line)?;
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line,
                msg: format!("expected `re im LETTERS`, got {body:?}"),
            });
        }
        let num = |s: &str| {
            s.parse::<f64>().map_err(|_| Error::Parse {
                line,
                msg: format!("bad number {s:?}"),
            })
        };
        let c = Complex64::new(num(fields[0])?, num(fields[1])?);
        let p = PauliString::parse(fields[2]).map_err(|e| Error::Parse {
            line,
            msg: e.to_string(),
        })?;
        if *n.get_or_insert(p.num_qubits()) != p.num_qubits() {
            return Err(Error::Parse {
                line,
                msg: "all strings must have the same length".into(),
            });
        }
        current.push((p, c));
    }
    flush(&mut current, &mut out, text.lines().count())?;
    Ok(out)
}

/// Inverse of [`parse_generator_list`].
pub fn format_generator_list(sums: &[PauliSum]) -> String {
    sums.iter()
        .map(|s| s.to_string())
        .collect::<Vec<_>>()
        .join("---\n")
}

/// Pauli coefficients `Tr(P m) / 2^n` of a square `2^n` matrix.
pub fn pauli_decompose(m: &ComplexMatrix) -> Result<PauliSum> {
    if !m.is_square() {
        return Err(Error::NotSquare(m.rows(), m.cols()));
    }
    let dim = m.rows();
    if !dim.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!("dimension {dim} is not a power of two")));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_DENSE_QUBITS));
    }
    let scale = 1.0 / dim as f64;
    let mut terms = Vec::new();
    for x in 0..dim as u64 {
        for z in 0..dim as u64 {
            let p = PauliString::from_masks(n, x, z);
            // Tr(P m) = sum_k <k|P|k^x> m[k^x, k]
            let mut acc = ZERO;
            for k in 0..dim {
                let (ph, r) = p.apply_to_basis(k);
                acc += ph * m[(k, r)];
            }
            if acc.norm() * scale >= PRUNE_TOL {
                terms.push((p, acc * scale));
            }
        }
    }
    PauliSum::from_terms(n, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{frobenius_norm, kron, pauli_x, pauli_y, pauli_z};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ps(s: &str) -> PauliString {
        PauliString::parse(s).unwrap()
    }

    fn dense_letter(p: Pauli) -> ComplexMatrix {
        match p {
            Pauli::I => ComplexMatrix::identity(2),
            Pauli::X => pauli_x(),
            Pauli::Y => pauli_y(),
            Pauli::Z => pauli_z(),
        }
    }

    /// Kronecker-product oracle, independent of the mask arithmetic.
    fn dense_oracle(p: &PauliString) -> ComplexMatrix {
        let mut m = ComplexMatrix::identity(1);
        for j in 0..p.num_qubits() {
            m = kron(&m, &dense_letter(p.get(j)));
        }
        m
    }

    fn dense_sum_oracle(s: &PauliSum) -> ComplexMatrix {
        let dim = 1 << s.num_qubits();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for (p, k) in s.terms() {
            m = &m + &dense_oracle(p).scale(*k);
        }
        m
    }

    #[test]
    fn single_qubit_products() {
        assert_eq!(mul_strings(&ps("X"), &ps("Y")).unwrap(), (I, ps("Z")));
        assert_eq!(mul_strings(&ps("Z"), &ps("Z")).unwrap(), (ONE, ps("I")));
        assert_eq!(ps("Y").mul(&ps("X")), (-I, ps("Z")));
        assert!(mul_strings(&ps("X"), &ps("XX")).is_err());
    }

    #[test]
    fn two_qubit_product_matches_dense() {
        let (ph, r) = ps("XZ").mul(&ps("ZX"));
        assert_eq!((ph, r), (ONE, ps("YY")));
        let lhs = &dense_oracle(&ps("XZ")) * &dense_oracle(&ps("ZX"));
        assert!(lhs.max_abs_diff(&dense_oracle(&r).scale(ph)) < 1e-15);
    }

    #[test]
    fn to_dense_matches_kron_oracle_for_all_two_qubit_strings() {
        for x in 0..4u64 {
            for z in 0..4u64 {
                let p = PauliString::from_masks(2, x, z);
                assert!(p.to_dense().unwrap().max_abs_diff(&dense_oracle(&p)) < 1e-15);
            }
        }
    }

    #[test]
    fn commutator_examples() {
        let iz = PauliSum::from_letters(&[(I, "Z")]).unwrap();
        let ix = PauliSum::from_letters(&[(I, "X")]).unwrap();
        let got = commutator(&iz, &ix).unwrap();
        assert_eq!(got, PauliSum::from_letters(&[(c(0.0, -2.0), "Y")]).unwrap());
        let dense = &(&iz.to_dense().unwrap() * &ix.to_dense().unwrap())
            - &(&ix.to_dense().unwrap() * &iz.to_dense().unwrap());
        assert!(got.to_dense().unwrap().max_abs_diff(&dense) < 1e-15);

        let zz = PauliSum::from_letters(&[(ONE, "ZZ")]).unwrap();
        assert!(commutator(&zz, &PauliSum::identity(2)).unwrap().is_empty());
        let g = PauliSum::from_letters(&[(I, "ZZI"), (I, "ZIZ"), (I, "IZZ")]).unwrap();
        assert!(commutator(&g, &g).unwrap().is_empty());
        assert!(commutator(&g, &zz).is_err());
    }

    #[test]
    fn to_dense_examples() {
        assert_eq!(
            PauliSum::identity(1).to_dense().unwrap(),
            ComplexMatrix::identity(2)
        );
        let z2 = PauliSum::from_letters(&[(c(2.0, 0.0), "Z")]).unwrap();
        assert_eq!(
            z2.to_dense().unwrap(),
            ComplexMatrix::from_diag(&[c(2.0, 0.0), c(-2.0, 0.0)])
        );
        assert!(matches!(
            PauliSum::identity(10).to_dense(),
            Err(Error::TooManyQubits(10, _))
        ));
    }

    #[test]
    fn rank_extend_examples() {
        let z = PauliSum::from_letters(&[(ONE, "Z")]).unwrap();
        let z3i = PauliSum::from_letters(&[(c(0.0, 3.0), "Z")]).unwrap();
        let x = PauliSum::from_letters(&[(ONE, "X")]).unwrap();
        assert!(!rank_extend(&[z.clone()], &z3i));
        assert!(rank_extend(&[z], &x));
        let a = PauliSum::from_letters(&[(ONE, "ZZ"), (ONE, "XX")]).unwrap();
        let b = PauliSum::from_letters(&[(ONE, "ZZ"), (-ONE, "XX")]).unwrap();
        assert!(rank_extend(&[a.clone()], &b));
        // 2x2 determinant oracle over the (ZZ, XX) coefficients: 1*(-1) - 1*1 != 0
        assert!((1.0f64 * -1.0 - 1.0 * 1.0).abs() > 0.0);
        assert!(!rank_extend(&[a.clone(), b.clone()], &a.add(&b).unwrap()));
        assert!(!rank_extend(&[], &PauliSum::zero(2)));
    }

    #[test]
    fn pairwise_commuting_examples() {
        let g1 = PauliSum::from_letters(&[(I, "ZZI"), (I, "ZIZ"), (I, "IZZ")]).unwrap();
        let g2 = PauliSum::from_letters(&[
            (I, "ZYI"),
            (I, "YZI"),
            (I, "ZIY"),
            (I, "YIZ"),
            (I, "IZY"),
            (I, "IYZ"),
        ])
        .unwrap();
        assert!(pairwise_commuting(&g1));
        assert!(!pairwise_commuting(&g2));
        assert!(pairwise_commuting(&PauliSum::from_letters(&[(ONE, "XYZ")]).unwrap()));
    }

    #[test]
    fn ordering_is_lexicographic_i_x_y_z() {
        let mut v = vec![ps("ZI"), ps("IY"), ps("XX"), ps("II"), ps("YZ")];
        v.sort();
        let names: Vec<_> = v.iter().map(|p| p.letters()).collect();
        assert_eq!(names, ["II", "IY", "XX", "YZ", "ZI"]);
    }

    #[test]
    fn text_round_trip() {
        let text = "# two generators\n0 1 ZZI\n0 1 IZZ\n---\n0 -0.5 XII\n\n1.5 0 YYY\n";
        let gens = parse_generator_list(text).unwrap();
        assert_eq!(gens.len(), 3);
        assert_eq!(gens[0].len(), 2);
        let back = parse_generator_list(&format_generator_list(&gens)).unwrap();
        assert_eq!(back, gens);
        assert!(parse_generator_list("0 1 ZZ\n0 1 Z\n").is_err());
        assert!(parse_generator_list("0 1 ZQ\n").is_err());
        assert!(parse_pauli_sum("0 1\n").is_err());
    }

    #[test]
    fn permute_moves_letters() {
        assert_eq!(ps("XYZ").permute(&[2, 0, 1]), ps("YZX"));
    }

    fn arb_string(n: usize) -> impl Strategy<Value = PauliString> {
        (0..(1u64 << n), 0..(1u64 << n)).prop_map(move |(x, z)| PauliString::from_masks(n, x, z))
    }

    fn arb_sum(n: usize) -> impl Strategy<Value = PauliSum> {
        prop::collection::vec((arb_string(n), -1.0f64..1.0, -1.0f64..1.0), 0..6).prop_map(
            move |terms| {
                PauliSum::from_terms(n, terms.into_iter().map(|(p, a, b)| (p, c(a, b)))).unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn commutator_matches_dense(
            (a, b) in (1usize..=4).prop_flat_map(|n| (arb_sum(n), arb_sum(n)))
        ) {
            let da = dense_sum_oracle(&a);
            let db = dense_sum_oracle(&b);
            let want = &(&da * &db) - &(&db * &da);
            let got = commutator(&a, &b).unwrap().to_dense().unwrap();
            prop_assert!(got.max_abs_diff(&want) <= 1e-12);
            let prod = a.mul(&b).unwrap().to_dense().unwrap();
            prop_assert!(prod.max_abs_diff(&(&da * &db)) <= 1e-12);
        }

        #[test]
        fn mul_strings_associative_against_dense(
            (p, q, r) in (1usize..=4).prop_flat_map(|n| (arb_string(n), arb_string(n), arb_string(n)))
        ) {
            let (a1, pq) = p.mul(&q);
            let (a2, left) = pq.mul(&r);
            let (b1, qr) = q.mul(&r);
            let (b2, right) = p.mul(&qr);
            prop_assert_eq!(left, right);
            prop_assert!((a1 * a2 - b1 * b2).norm() < 1e-15);
            let dense = &(&dense_oracle(&p) * &dense_oracle(&q)) * &dense_oracle(&r);
            prop_assert!(dense.max_abs_diff(&dense_oracle(&left).scale(a1 * a2)) <= 1e-12);
        }

        #[test]
        fn distinct_strings_are_trace_orthogonal(
            (p, q) in (1usize..=4).prop_flat_map(|n| (arb_string(n), arb_string(n)))
        ) {
            let t = p.to_dense().unwrap().inner(&q.to_dense().unwrap());
            if p == q {
                prop_assert!((t.re - (1 << p.num_qubits()) as f64).abs() < 1e-12);
            } else {
                prop_assert!(t.norm() < 1e-12);
            }
        }

        #[test]
        fn commutation_flag_matches_dense(
            (p, q) in (1usize..=4).prop_flat_map(|n| (arb_string(n), arb_string(n)))
        ) {
            let dp = p.to_dense().unwrap();
            let dq = q.to_dense().unwrap();
            let comm = frobenius_norm(&dp.commutator(&dq).unwrap());
            prop_assert_eq!(p.commutes_with(&q), comm < 1e-12);
        }

        #[test]
        fn rank_extend_agrees_with_dense_rank(
            (basis, cand) in (1usize..=3).prop_flat_map(|n| {
                (prop::collection::vec(arb_sum(n), 0..8), arb_sum(n))
            })
        ) {
            // Dense oracle: rank of the stacked vectorised matrices via Gram eigenvalues.
            let rank = |mats: &[ComplexMatrix]| -> usize {
                let k = mats.len();
                if k == 0 { return 0; }
                let mut gram = ComplexMatrix::zeros(k, k);
                for i in 0..k {
                    for j in 0..k {
                        gram[(i, j)] = mats[i].inner(&mats[j]);
                    }
                }
                let (vals, _) = crate::numkit::hermitian_eigen(&gram).unwrap();
                let top = vals.iter().cloned().fold(0.0f64, f64::max);
                vals.iter().filter(|&&v| v > 1e-14 * top.max(1.0) && v > 1e-20).count()
            };
            let mut mats: Vec<_> = basis.iter().map(dense_sum_oracle).collect();
            let r0 = rank(&mats);
            mats.push(dense_sum_oracle(&cand));
            let r1 = rank(&mats);
            prop_assert_eq!(rank_extend(&basis, &cand), r1 > r0);
        }
    }
}
