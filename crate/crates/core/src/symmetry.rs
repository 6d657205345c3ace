//! Symmetry operators, symmetric generator sets and the expressibility
//! engine: Lie closure, associative closure and span membership.
//!
//! Closures over sets invariant under a qubit permutation group run in
//! orbit coordinates: an invariant operator is a combination of orbit sums
//! `O_a = sum of the strings in orbit a`, and `O_a O_b` expands over orbit
//! sums with structure constants computed from one representative per
//! target orbit.

use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{frobenius_norm, ComplexMatrix, I, ONE, ZERO};
use crate::pauli::{pauli_decompose, Pauli, PauliString, PauliSum, SpanTracker, MAX_DENSE_QUBITS};

/// Relative residual below which a matrix counts as expressible.
pub const EXPRESSIBLE_TOL: f64 = 1e-9;
/// Hard cap on the power basis of one generator.
pub const DEFAULT_POWER_CAP: usize = 8;
/// Default cap on the number of products formed by
/// [`expressibility_by_sequence`].
pub const DEFAULT_PRODUCT_CAP: usize = 1 << 20;
/// Closure results with a coefficient norm below this are treated as zero.
const ZERO_NORM: f64 = 1e-10;
/// Largest qubit count for which orbit tables are built.
const MAX_ORBIT_QUBITS: usize = 10;
/// Largest `4^n * orbits` work estimate for which orbit tables are built.
const MAX_ORBIT_WORK: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryKind {
    /// Global flip `X^n`.
    Z2,
    /// Chain reflection `j -> n - 1 - j`.
    Z2xz,
    /// Cyclic shift `j -> j + 1 mod n`.
    Cn,
    /// Full permutation group.
    Sn,
}

impl SymmetryKind {
    pub const ALL: [SymmetryKind; 4] = [Self::Z2, Self::Z2xz, Self::Cn, Self::Sn];

    pub fn name(self) -> &'static str {
        match self {
            Self::Z2 => "z2",
            Self::Z2xz => "z2xz",
            Self::Cn => "cn",
            Self::Sn => "sn",
        }
    }

    fn is_permutation(self) -> bool {
        self != Self::Z2
    }

    /// Qubit permutations generating the group, as `perm[j]` = image of `j`.
    fn permutations(self, n: usize) -> Vec<Vec<usize>> {
        match self {
            Self::Z2 => Vec::new(),
            Self::Z2xz => vec![(0..n).rev().collect()],
            Self::Cn => vec![(0..n).map(|j| (j + 1) % n).collect()],
            Self::Sn => (0..n.saturating_sub(1))
                .map(|j| {
                    let mut p: Vec<usize> = (0..n).collect();
                    p.swap(j, j + 1);
                    p
                })
                .collect(),
        }
    }
}

impl fmt::Display for SymmetryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SymmetryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown symmetry kind {s:?}")))
    }
}

fn check_chain(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("symmetry needs n >= 2, got {n}")));
    }
    if n > MAX_DENSE_QUBITS {
        return Err(Error::TooManyQubits(n, MAX_DENSE_QUBITS));
    }
    Ok(())
}

/// Matrix moving the state of qubit `j` to qubit `perm[j]`.
pub fn permutation_matrix(perm: &[usize]) -> ComplexMatrix {
    let n = perm.len();
    let dim = 1usize << n;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for b in 0..dim {
        let mut out = 0;
        for (j, &t) in perm.iter().enumerate() {
            if b >> (n - 1 - j) & 1 == 1 {
                out |= 1 << (n - 1 - t);
            }
        }
        m[(out, b)] = ONE;
    }
    m
}

/// Generators of the symmetry group acting on `n` qubits.
pub fn symmetry_matrix(kind: SymmetryKind, n: usize) -> Result<Vec<ComplexMatrix>> {
    check_chain(n)?;
    Ok(match kind {
        SymmetryKind::Z2 => {
            let all_x = PauliString::from_letters(&vec![Pauli::X; n]);
            vec![all_x.to_dense()?]
        }
        _ => kind.permutations(n).iter().map(|p| permutation_matrix(p)).collect(),
    })
}

/// `||H S - S H||_F`.
pub fn check_invariance(h: &ComplexMatrix, s: &ComplexMatrix) -> Result<f64> {
    Ok(frobenius_norm(&h.commutator(s)?))
}

/// Anti-hermitian generators of a symmetric GQSP ansatz.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSet {
    pub n: usize,
    /// Declared symmetry, used to pick the orbit-coordinate engine.
    pub kind: Option<SymmetryKind>,
    pub generators: Vec<PauliSum>,
}

impl GeneratorSet {
    pub fn new(n: usize, kind: Option<SymmetryKind>, generators: Vec<PauliSum>) -> Result<Self> {
        for g in &generators {
            if g.num_qubits() != n {
                return Err(Error::QubitCountMismatch {
                    expected: n,
                    got: g.num_qubits(),
                });
            }
            if !g.is_anti_hermitian(1e-12) {
                return Err(Error::NotAntiHermitian);
            }
        }
        Ok(Self { n, kind, generators })
    }

    /// Largest coefficient-norm change of a generator under the declared
    /// symmetry generators; zero when no symmetry is declared.
    pub fn invariance_residual(&self) -> f64 {
        let Some(kind) = self.kind else {
            return 0.0;
        };
        let mut worst: f64 = 0.0;
        for g in &self.generators {
            let images: Vec<PauliSum> = match kind {
                SymmetryKind::Z2 => {
                    let flipped = PauliSum::from_terms(
                        self.n,
                        g.terms().iter().map(|&(p, c)| {
                            let odd = p.z_mask().count_ones() % 2 == 1;
                            (p, if odd { -c } else { c })
                        }),
                    )
                    .expect("same qubit count");
                    vec![flipped]
                }
                _ => kind
                    .permutations(self.n)
                    .iter()
                    .map(|p| g.permute_qubits(p))
                    .collect(),
            };
            for im in images {
                worst = worst.max(im.sub(g).expect("same qubit count").norm());
            }
        }
        worst
    }
}

fn sum_of(n: usize, strings: impl IntoIterator<Item = PauliString>) -> PauliSum {
    PauliSum::from_terms(n, strings.into_iter().map(|p| (p, I))).expect("strings share n")
}

fn bond(n: usize, a: Pauli, i: usize, j: usize) -> PauliString {
    let mut p = PauliString::identity(n);
    p.set(i, a);
    p.set(j, a);
    p
}

/// Heisenberg-term generators respecting `kind`, each multiplied by `i`.
pub fn heisenberg_generator_set(kind: SymmetryKind, n: usize) -> Result<GeneratorSet> {
    if n < 2 {
        return Err(Error::InvalidInput(format!("generator set needs n >= 2, got {n}")));
    }
    let letters = [Pauli::X, Pauli::Y, Pauli::Z];
    let field = |qs: &[usize]| sum_of(n, qs.iter().map(|&q| PauliString::single(n, q, Pauli::X)));
    let mut gens = Vec::new();
    match kind {
        SymmetryKind::Z2 => {
            return Err(Error::InvalidInput(
                "no Heisenberg generator set for the global flip alone".into(),
            ))
        }
        SymmetryKind::Z2xz => {
            for a in letters {
                for i in 0..n - 1 {
                    let mirror = n - 2 - i;
                    if i > mirror {
                        break;
                    }
                    let mut bonds = vec![bond(n, a, i, i + 1)];
                    if mirror != i {
                        bonds.push(bond(n, a, mirror, mirror + 1));
                    }
                    gens.push(sum_of(n, bonds));
                }
            }
            for i in 0..n {
                let mirror = n - 1 - i;
                if i > mirror {
                    break;
                }
                if i == mirror {
                    gens.push(field(&[i]));
                } else {
                    gens.push(field(&[i, mirror]));
                }
            }
        }
        SymmetryKind::Cn => {
            for a in letters {
                // For n = 2 the wraparound bond coincides with (0, 1).
                let count = if n == 2 { 1 } else { n };
                gens.push(sum_of(n, (0..count).map(|i| bond(n, a, i, (i + 1) % n))));
            }
            gens.push(field(&(0..n).collect::<Vec<_>>()));
        }
        SymmetryKind::Sn => {
            for a in letters {
                let pairs = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
                gens.push(sum_of(n, pairs.map(|(i, j)| bond(n, a, i, j))));
            }
            gens.push(field(&(0..n).collect::<Vec<_>>()));
        }
    }
    GeneratorSet::new(n, Some(kind), gens)
}

/// Vector space with a product, used by the closure loops.
trait Algebra {
    type V: Clone;
    fn identity(&self) -> Self::V;
    fn product(&self, a: &Self::V, b: &Self::V) -> Self::V;
    fn commutator(&self, a: &Self::V, b: &Self::V) -> Self::V;
    /// Coordinates in an orthonormal basis.
    fn coords(&self, v: &Self::V) -> Vec<(u64, Complex64)>;
    fn scale(&self, v: &Self::V, s: f64) -> Self::V;
}

struct Strings {
    n: usize,
}

impl Algebra for Strings {
    type V = PauliSum;

    fn identity(&self) -> PauliSum {
        PauliSum::identity(self.n)
    }

    fn product(&self, a: &PauliSum, b: &PauliSum) -> PauliSum {
        a.mul(b).expect("closure elements share n")
    }

    fn commutator(&self, a: &PauliSum, b: &PauliSum) -> PauliSum {
        a.commutator(b).expect("closure elements share n")
    }

    fn coords(&self, v: &PauliSum) -> Vec<(u64, Complex64)> {
        v.coefficient_vector().collect()
    }

    fn scale(&self, v: &PauliSum, s: f64) -> PauliSum {
        v.scale(Complex64::new(s, 0.0))
    }
}

type OrbitRow = Rc<Vec<Vec<(u32, Complex64)>>>;

/// Strings grouped into orbits of a qubit permutation group.
struct Orbits {
    n: usize,
    /// Orbit id of the string with masks `(x, z)`, at `(x << n) | z`.
    orbit_of: Vec<u32>,
    members: Vec<Vec<PauliString>>,
    /// `sqrt(|orbit|)`: coefficient norm of an orbit sum.
    weight: Vec<f64>,
    /// `rows[a][b]` lists `(c, t)` with `O_a O_b = sum_c t O_c`.
    rows: RefCell<Vec<Option<OrbitRow>>>,
}

impl Orbits {
    fn new(kind: SymmetryKind, n: usize) -> Self {
        let perms: Vec<Vec<usize>> = match kind {
            SymmetryKind::Cn => (0..n).map(|s| (0..n).map(|j| (j + s) % n).collect()).collect(),
            SymmetryKind::Z2xz => vec![(0..n).collect(), (0..n).rev().collect()],
            _ => Vec::new(),
        };
        let dim = 1u64 << n;
        let canon = |p: PauliString| -> u64 {
            if kind == SymmetryKind::Sn {
                let (x, y, z) = p.letter_counts();
                ((x as u64) << 16) | ((y as u64) << 8) | z as u64
            } else {
                perms.iter().map(|pm| p.permute(pm).sort_key()).min().unwrap_or(0)
            }
        };
        let mut keys = Vec::with_capacity((dim * dim) as usize);
        for x in 0..dim {
            for z in 0..dim {
                keys.push(canon(PauliString::from_masks(n, x, z)));
            }
        }
        let mut distinct = keys.clone();
        distinct.sort_unstable();
        distinct.dedup();
        let id: HashMap<u64, u32> = distinct.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
        let orbit_of: Vec<u32> = keys.iter().map(|k| id[k]).collect();
        let mut members = vec![Vec::new(); distinct.len()];
        for (idx, &o) in orbit_of.iter().enumerate() {
            let (x, z) = (idx as u64 >> n, idx as u64 & (dim - 1));
            members[o as usize].push(PauliString::from_masks(n, x, z));
        }
        let weight = members.iter().map(|m| (m.len() as f64).sqrt()).collect();
        let rows = RefCell::new(vec![None; distinct.len()]);
        Self {
            n,
            orbit_of,
            members,
            weight,
            rows,
        }
    }

    fn count(&self) -> usize {
        self.members.len()
    }

    fn id(&self, p: &PauliString) -> usize {
        self.orbit_of[((p.x_mask() << self.n) | p.z_mask()) as usize] as usize
    }

    fn row(&self, a: usize) -> OrbitRow {
        if let Some(r) = &self.rows.borrow()[a] {
            return r.clone();
        }
        let k = self.count();
        // Coefficient of rep(c) in O_a O_b: sum over P in a with P rep(c) in b.
        let mut acc: HashMap<(u32, u32), Complex64> = HashMap::new();
        for p in &self.members[a] {
            for c in 0..k {
                let (ph, q) = p.mul(&self.members[c][0]);
                let b = self.id(&q) as u32;
                *acc.entry((b, c as u32)).or_insert(ZERO) += ph.conj();
            }
        }
        let mut row = vec![Vec::new(); k];
        let mut entries: Vec<_> = acc.into_iter().filter(|(_, t)| t.norm() > 0.5).collect();
        entries.sort_unstable_by_key(|(bc, _)| *bc);
        for ((b, c), t) in entries {
            row[b as usize].push((c, t));
        }
        let row = Rc::new(row);
        self.rows.borrow_mut()[a] = Some(row.clone());
        row
    }

    /// Orbit coordinates of an invariant sum, or `None` if `s` is not
    /// constant on orbits.
    fn project(&self, s: &PauliSum) -> Option<Vec<Complex64>> {
        let mut v = vec![ZERO; self.count()];
        let mut seen = vec![0usize; self.count()];
        for &(p, c) in s.terms() {
            let o = self.id(&p);
            if seen[o] == 0 {
                v[o] = c;
            } else if (v[o] - c).norm() > 1e-12 * c.norm().max(1.0) {
                return None;
            }
            seen[o] += 1;
        }
        seen.iter()
            .zip(&self.members)
            .all(|(&k, m)| k == 0 || k == m.len())
            .then_some(v)
    }

    fn expand(&self, v: &[Complex64]) -> PauliSum {
        let terms = v
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .flat_map(|(o, &c)| self.members[o].iter().map(move |&p| (p, c)));
        PauliSum::from_terms(self.n, terms).expect("orbit strings share n")
    }
}

impl Algebra for Orbits {
    type V = Vec<Complex64>;

    fn identity(&self) -> Vec<Complex64> {
        let mut v = vec![ZERO; self.count()];
        v[self.id(&PauliString::identity(self.n))] = ONE;
        v
    }

    fn product(&self, x: &Vec<Complex64>, y: &Vec<Complex64>) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.count()];
        let ys: Vec<(usize, Complex64)> = y.iter().copied().enumerate().filter(|(_, c)| *c != ZERO).collect();
        for (a, &xa) in x.iter().enumerate() {
            if xa == ZERO {
                continue;
            }
            let row = self.row(a);
            for &(b, yb) in &ys {
                let f = xa * yb;
                for &(c, t) in &row[b] {
                    out[c as usize] += f * t;
                }
            }
        }
        out
    }

    fn commutator(&self, x: &Vec<Complex64>, y: &Vec<Complex64>) -> Vec<Complex64> {
        let xy = self.product(x, y);
        let yx = self.product(y, x);
        xy.iter().zip(&yx).map(|(a, b)| a - b).collect()
    }

    fn coords(&self, v: &Vec<Complex64>) -> Vec<(u64, Complex64)> {
        v.iter()
            .enumerate()
            .filter(|(_, c)| c.norm() >= 1e-13)
            .map(|(o, &c)| (o as u64, c * self.weight[o]))
            .collect()
    }

    fn scale(&self, v: &Vec<Complex64>, s: f64) -> Vec<Complex64> {
        v.iter().map(|c| c * s).collect()
    }
}

/// Linearly independent, unit-norm elements and their span.
struct Basis<V> {
    span: SpanTracker<u64>,
    elems: Vec<V>,
    cap: usize,
}

impl<V: Clone> Basis<V> {
    fn new(cap: usize) -> Self {
        Self {
            span: SpanTracker::new(),
            elems: Vec::new(),
            cap,
        }
    }

    fn offer<A: Algebra<V = V>>(&mut self, alg: &A, v: V) -> Result<bool> {
        let coords = alg.coords(&v);
        let norm = coords.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
        if norm <= ZERO_NORM {
            return Ok(false);
        }
        if self.span.contains(coords.iter().copied()) {
            return Ok(false);
        }
        if self.elems.len() >= self.cap {
            return Err(Error::CapExceeded {
                cap: self.cap,
                reached: self.elems.len() + 1,
            });
        }
        self.span.try_insert(coords);
        self.elems.push(alg.scale(&v, 1.0 / norm));
        Ok(true)
    }
}

fn lie_in<A: Algebra>(alg: &A, gens: Vec<A::V>, cap: usize) -> Result<Vec<A::V>> {
    let mut basis = Basis::new(cap);
    for g in gens {
        basis.offer(alg, g)?;
    }
    let mut k = 0;
    while k < basis.elems.len() {
        for j in 0..k {
            let c = alg.commutator(&basis.elems[j], &basis.elems[k]);
            basis.offer(alg, c)?;
        }
        k += 1;
    }
    Ok(basis.elems)
}

/// Returns the basis and the dimension reached after the single-product pass.
fn assoc_in<A: Algebra>(alg: &A, lie: &[A::V], cap: usize) -> Result<(Vec<A::V>, usize)> {
    let mut basis = Basis::new(cap);
    basis.offer(alg, alg.identity())?;
    for l in lie {
        basis.offer(alg, l.clone())?;
    }
    for i in 0..lie.len() {
        for j in i..lie.len() {
            basis.offer(alg, alg.product(&lie[i], &lie[j]))?;
        }
    }
    let first = basis.elems.len();
    let mut k = 0;
    while k < basis.elems.len() {
        for j in 0..=k {
            let kj = alg.product(&basis.elems[k], &basis.elems[j]);
            basis.offer(alg, kj)?;
            if j != k {
                let jk = alg.product(&basis.elems[j], &basis.elems[k]);
                basis.offer(alg, jk)?;
            }
        }
        k += 1;
    }
    Ok((basis.elems, first))
}

fn default_lie_cap(n: usize) -> usize {
    (1usize << (2 * n)) - 1
}

fn default_assoc_cap(n: usize) -> usize {
    1usize << (2 * n)
}

fn check_sums(n: usize, sums: &[PauliSum]) -> Result<()> {
    for s in sums {
        if s.num_qubits() != n {
            return Err(Error::QubitCountMismatch {
                expected: n,
                got: s.num_qubits(),
            });
        }
    }
    Ok(())
}

/// Basis of the dynamical Lie algebra of `g`.
pub fn lie_closure(g: &GeneratorSet) -> Result<Vec<PauliSum>> {
    lie_closure_with_cap(g, default_lie_cap(g.n))
}

pub fn lie_closure_with_cap(g: &GeneratorSet, cap: usize) -> Result<Vec<PauliSum>> {
    Ok(closure_with_cap(g, Some(cap), None)?.lie)
}

/// Basis of the associative algebra generated by `l` together with the identity.
pub fn associative_closure(l: &[PauliSum]) -> Result<Vec<PauliSum>> {
    let n = l.first().map_or(0, |s| s.num_qubits());
    associative_closure_with_cap(l, default_assoc_cap(n))
}

pub fn associative_closure_with_cap(l: &[PauliSum], cap: usize) -> Result<Vec<PauliSum>> {
    let Some(first) = l.first() else {
        return Err(Error::InvalidInput("empty Lie basis".into()));
    };
    let n = first.num_qubits();
    check_sums(n, l)?;
    let alg = Strings { n };
    Ok(assoc_in(&alg, l, cap)?.0)
}

/// Lie and associative closure bases of a generator set.
#[derive(Clone, Debug)]
pub struct ClosureBasis {
    pub lie: Vec<PauliSum>,
    pub assoc: Vec<PauliSum>,
    /// Associative dimension after the single-product pass.
    pub first_pass_dim: usize,
}

impl ClosureBasis {
    pub fn dim_l(&self) -> usize {
        self.lie.len()
    }

    pub fn dim_b(&self) -> usize {
        self.assoc.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosureDims {
    pub dim_l: usize,
    pub dim_b: usize,
    pub first_pass_dim: usize,
}

fn orbit_engine(g: &GeneratorSet) -> Option<(Orbits, Vec<Vec<Complex64>>)> {
    let kind = g.kind.filter(|k| k.is_permutation())?;
    if g.n < 2 || g.n > MAX_ORBIT_QUBITS {
        return None;
    }
    let strings = 1usize << (2 * g.n);
    let orbits_estimate = match kind {
        SymmetryKind::Sn => (g.n + 1) * (g.n + 2) * (g.n + 3) / 6,
        SymmetryKind::Cn => strings / g.n,
        _ => strings / 2,
    };
    if strings.saturating_mul(orbits_estimate) > MAX_ORBIT_WORK {
        return None;
    }
    let orbits = Orbits::new(kind, g.n);
    let gens = g
        .generators
        .iter()
        .map(|s| orbits.project(s))
        .collect::<Option<Vec<_>>>()?;
    Some((orbits, gens))
}

enum Closed {
    Orbit(Orbits, Vec<Vec<Complex64>>, Vec<Vec<Complex64>>, usize),
    Strings(Vec<PauliSum>, Vec<PauliSum>, usize),
}

fn run_closure(g: &GeneratorSet, lie_cap: Option<usize>, assoc_cap: Option<usize>) -> Result<Closed> {
    check_sums(g.n, &g.generators)?;
    let lie_cap = lie_cap.unwrap_or_else(|| default_lie_cap(g.n));
    let assoc_cap = assoc_cap.unwrap_or_else(|| default_assoc_cap(g.n));
    if let Some((orbits, gens)) = orbit_engine(g) {
        let lie = lie_in(&orbits, gens, lie_cap)?;
        let (assoc, first) = assoc_in(&orbits, &lie, assoc_cap)?;
        return Ok(Closed::Orbit(orbits, lie, assoc, first));
    }
    let alg = Strings { n: g.n };
    let lie = lie_in(&alg, g.generators.clone(), lie_cap)?;
    let (assoc, first) = assoc_in(&alg, &lie, assoc_cap)?;
    Ok(Closed::Strings(lie, assoc, first))
}

/// Both closures, with optional caps on the Lie and associative bases.
pub fn closure_with_cap(
    g: &GeneratorSet,
    lie_cap: Option<usize>,
    assoc_cap: Option<usize>,
) -> Result<ClosureBasis> {
    Ok(match run_closure(g, lie_cap, assoc_cap)? {
        Closed::Orbit(orbits, lie, assoc, first) => ClosureBasis {
            lie: lie.iter().map(|v| orbits.expand(v)).collect(),
            assoc: assoc.iter().map(|v| orbits.expand(v)).collect(),
            first_pass_dim: first,
        },
        Closed::Strings(lie, assoc, first) => ClosureBasis {
            lie,
            assoc,
            first_pass_dim: first,
        },
    })
}

pub fn closure(g: &GeneratorSet) -> Result<ClosureBasis> {
    closure_with_cap(g, None, None)
}

/// Closure dimensions without expanding the bases into strings.
pub fn closure_dims(g: &GeneratorSet) -> Result<ClosureDims> {
    closure_dims_with_cap(g, None, None)
}

pub fn closure_dims_with_cap(g: &GeneratorSet, lie_cap: Option<usize>, assoc_cap: Option<usize>) -> Result<ClosureDims> {
    let (dim_l, dim_b, first_pass_dim) = match run_closure(g, lie_cap, assoc_cap)? {
        Closed::Orbit(_, lie, assoc, first) => (lie.len(), assoc.len(), first),
        Closed::Strings(lie, assoc, first) => (lie.len(), assoc.len(), first),
    };
    Ok(ClosureDims {
        dim_l,
        dim_b,
        first_pass_dim,
    })
}

/// Whether `m` lies in the complex span of `b`, with the absolute
/// Frobenius residual of the projection.
pub fn expressible(m: &ComplexMatrix, b: &[PauliSum]) -> Result<(bool, f64)> {
    let coeffs = pauli_decompose(m)?;
    check_sums(coeffs.num_qubits(), b)?;
    let mut span = SpanTracker::new();
    for e in b {
        span.try_insert(e.coefficient_vector());
    }
    let rel = span.relative_residual(coeffs.coefficient_vector());
    Ok((rel <= EXPRESSIBLE_TOL, rel * frobenius_norm(m)))
}

/// `max ||S B S^-1 - B||_F` over elements and symmetry matrices.
pub fn symmetric_invariance_check(b: &[PauliSum], syms: &[ComplexMatrix]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for e in b {
        let d = e.to_dense()?;
        for s in syms {
            // Symmetry matrices are unitary, so S^-1 = S^dagger.
            let conj = s.matmul(&d)?.matmul(&s.adjoint())?;
            worst = worst.max(frobenius_norm(&(&conj - &d)));
        }
    }
    Ok(worst)
}

/// Span of all products `T_M ... T_1` with `T_i` from the power basis of
/// generator `i`. `power_cap` bounds each power basis (identity included);
/// `product_cap` bounds the total number of products formed.
pub fn expressibility_by_sequence(
    generators: &[PauliSum],
    power_cap: usize,
    product_cap: usize,
) -> Result<Vec<PauliSum>> {
    let Some(first) = generators.first() else {
        return Err(Error::InvalidInput("empty generator sequence".into()));
    };
    let n = first.num_qubits();
    check_sums(n, generators)?;
    let alg = Strings { n };
    let cap = default_assoc_cap(n);
    let mut current: Vec<PauliSum> = vec![PauliSum::identity(n)];
    let mut formed = 0usize;
    for g in generators {
        let mut powers = Basis::new(power_cap.max(1));
        powers.offer(&alg, PauliSum::identity(n))?;
        let mut p = PauliSum::identity(n);
        while powers.elems.len() < power_cap {
            p = alg.product(g, &p);
            if !powers.offer(&alg, p.clone())? {
                break;
            }
        }
        formed = formed.saturating_add(powers.elems.len() * current.len());
        if formed > product_cap {
            return Err(Error::CapExceeded {
                cap: product_cap,
                reached: formed,
            });
        }
        let mut next = Basis::new(cap);
        for t in &powers.elems {
            for s in &current {
                next.offer(&alg, alg.product(t, s))?;
            }
        }
        current = next.elems;
    }
    Ok(current)
}
