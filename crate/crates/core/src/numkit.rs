//! Dense complex linear algebra shared by the rest of the crate.
//!
//! Matrices are small (at most 512 x 512), so everything is dense and
//! row-major. Eigen-decompositions are delegated to `nalgebra`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default absolute tolerance for structural checks.
pub const DEFAULT_TOL: f64 = 1e-10;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Dense complex matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim, dim);
        for i in 0..dim {
            m.data[i * dim + i] = ONE;
        }
        m
    }

    /// Builds a matrix from row-major data. Fails if the length is wrong or
    /// an entry is not finite.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let data = rows
            .iter()
            .flat_map(|row| row.iter().map(|&x| Complex64::new(x, 0.0)))
            .collect();
        Self { rows: r, cols: c, data }
    }

    pub fn from_rows(rows: &[&[Complex64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        let data = rows.iter().flat_map(|row| row.iter().copied()).collect();
        Self { rows: r, cols: c, data }
    }

    pub fn from_diag(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn row(&self, r: usize) -> &[Complex64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c].conj();
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(Complex64::new(s, 0.0))
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute value of an imaginary part.
    pub fn max_imag(&self) -> f64 {
        self.data.iter().fold(0.0, |m, z| m.max(z.im.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    /// Frobenius inner product `Tr(self^dagger other)`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        let oc = other.cols;
        for i in 0..self.rows {
            let out_row = &mut out.data[i * oc..(i + 1) * oc];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let brow = &other.data[k * oc..(k + 1) * oc];
                for (o, b) in out_row.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    /// Top-left `rows x cols` sub-block.
    pub fn top_left(&self, rows: usize, cols: usize) -> Self {
        let mut out = Self::zeros(rows, cols);
        for r in 0..rows {
            out.data[r * cols..(r + 1) * cols]
                .copy_from_slice(&self.data[r * self.cols..r * self.cols + cols]);
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    pub(crate) fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    /// Panics on a shape mismatch; use [`ComplexMatrix::matmul`] for a checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("matrix shape mismatch")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self[(r, c)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ar in 0..a.rows {
        for ac in 0..a.cols {
            let s = a[(ar, ac)];
            if s == ZERO {
                continue;
            }
            for br in 0..b.rows {
                for bc in 0..b.cols {
                    out[(ar * b.rows + br, ac * b.cols + bc)] = s * b[(br, bc)];
                }
            }
        }
    }
    out
}

pub fn frobenius_norm(a: &ComplexMatrix) -> f64 {
    a.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigen-decomposition of a hermitian matrix: ascending eigenvalues and the
/// matching eigenvectors as columns.
pub fn hermitian_eigen(h: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !h.is_square() {
        return Err(Error::NotSquare(h.rows, h.cols));
    }
    let eig = nalgebra::SymmetricEigen::new(h.to_nalgebra());
    let mut order: Vec<usize> = (0..h.rows).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = ComplexMatrix::zeros(h.rows, h.rows);
    for (new_c, &old_c) in order.iter().enumerate() {
        for r in 0..h.rows {
            vecs[(r, new_c)] = eig.eigenvectors[(r, old_c)];
        }
    }
    Ok((values, vecs))
}

/// Largest singular value, from the spectrum of `A^dagger A`.
pub fn spectral_norm(a: &ComplexMatrix) -> Result<f64> {
    if !a.is_square() {
        return Err(Error::NotSquare(a.rows, a.cols));
    }
    let gram = a.adjoint().matmul(a)?;
    let eig = nalgebra::SymmetricEigen::new(gram.to_nalgebra());
    let top = eig.eigenvalues.iter().fold(0.0f64, |m, &v| m.max(v));
    Ok(top.max(0.0).sqrt())
}

pub fn is_unitary(a: &ComplexMatrix, tol: f64) -> bool {
    if !a.is_square() {
        return false;
    }
    let prod = a.adjoint().matmul(a).expect("square");
    frobenius_norm(&(&prod - &ComplexMatrix::identity(a.rows))) <= tol
}

pub fn is_hermitian(a: &ComplexMatrix, tol: f64) -> bool {
    a.is_square() && frobenius_norm(&(a - &a.adjoint())) <= tol
}

/// `exp(g)` for anti-hermitian `g`, through the eigen-decomposition of the
/// hermitian matrix `i g`.
pub fn matrix_exp_antihermitian(g: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !g.is_square() {
        return Err(Error::NotSquare(g.rows, g.cols));
    }
    if frobenius_norm(&(g + &g.adjoint())) > DEFAULT_TOL {
        return Err(Error::NotAntiHermitian);
    }
    // g = -i h with h = i g hermitian, so exp(g) = V diag(exp(-i mu)) V^dagger.
    let h = g.scale(I);
    let h = (&h + &h.adjoint()).scale_real(0.5);
    let (mu, v) = hermitian_eigen(&h)?;
    let dim = g.rows;
    let mut scaled = v.clone();
    for c in 0..dim {
        let phase = Complex64::from_polar(1.0, -mu[c]);
        for r in 0..dim {
            scaled[(r, c)] *= phase;
        }
    }
    scaled.matmul(&v.adjoint())
}

pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]])
}

pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
}

pub fn hadamard() -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
    }

    #[test]
    fn kron_z_x_has_signed_blocks() {
        let k = kron(&pauli_z(), &pauli_x());
        let x = pauli_x();
        for r in 0..2 {
            for col in 0..2 {
                assert_eq!(k[(r, col)], x[(r, col)]);
                assert_eq!(k[(r + 2, col + 2)], -x[(r, col)]);
                assert_eq!(k[(r, col + 2)], ZERO);
                assert_eq!(k[(r + 2, col)], ZERO);
            }
        }
    }

    #[test]
    fn kron_xy_squares_to_identity() {
        let xy = kron(&pauli_x(), &pauli_y());
        let sq = &xy * &xy;
        assert!(sq.max_abs_diff(&ComplexMatrix::identity(4)) < 1e-15);
    }

    #[test]
    fn frobenius_examples() {
        assert_eq!(frobenius_norm(&ComplexMatrix::zeros(3, 3)), 0.0);
        assert!((frobenius_norm(&ComplexMatrix::identity(4)) - 2.0).abs() < 1e-15);
        let ones = ComplexMatrix::from_real_rows(&[&[1.0, 1.0], &[1.0, 1.0]]);
        // elementwise oracle: sqrt(4 * 1^2)
        let oracle: f64 = ones.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((frobenius_norm(&ones) - oracle).abs() < 1e-15);
        assert!((oracle - 2.0).abs() < 1e-15);
    }

    #[test]
    fn spectral_norm_examples() {
        assert!((spectral_norm(&pauli_z()).unwrap() - 1.0).abs() < 1e-12);
        let d = ComplexMatrix::from_diag(&[c(3.0, 0.0), c(1.0, 0.0)]);
        assert!((spectral_norm(&d).unwrap() - 3.0).abs() < 1e-12);
        assert!(matches!(
            spectral_norm(&ComplexMatrix::zeros(2, 3)),
            Err(Error::NotSquare(2, 3))
        ));
    }

    #[test]
    fn exp_examples() {
        let z = ComplexMatrix::zeros(4, 4);
        assert!(matrix_exp_antihermitian(&z)
            .unwrap()
            .max_abs_diff(&ComplexMatrix::identity(4))
            < 1e-14);
        let g = pauli_z().scale(c(0.0, FRAC_PI_2));
        let e = matrix_exp_antihermitian(&g).unwrap();
        let want = ComplexMatrix::from_diag(&[c(0.0, 1.0), c(0.0, -1.0)]);
        assert!(e.max_abs_diff(&want) < 1e-12);
    }

    #[test]
    fn exp_of_commuting_sum_matches_per_string_formula() {
        let zz = kron(&pauli_z(), &pauli_z());
        let xx = kron(&pauli_x(), &pauli_x());
        let t = 0.3;
        let g = (&zz + &xx).scale(c(0.0, t));
        let got = matrix_exp_antihermitian(&g).unwrap();
        let id = ComplexMatrix::identity(4);
        let ezz = &id.scale_real(t.cos()) + &zz.scale(c(0.0, t.sin()));
        let exx = &id.scale_real(t.cos()) + &xx.scale(c(0.0, t.sin()));
        assert!(got.max_abs_diff(&(&ezz * &exx)) < 1e-12);
    }

    #[test]
    fn exp_rejects_non_antihermitian() {
        assert!(matches!(
            matrix_exp_antihermitian(&pauli_z()),
            Err(Error::NotAntiHermitian)
        ));
    }

    #[test]
    fn unitary_and_hermitian_checks() {
        let id = ComplexMatrix::identity(2);
        assert!(is_unitary(&id, 1e-12) && is_hermitian(&id, 1e-12));
        assert!(is_unitary(&pauli_x(), 1e-12) && is_hermitian(&pauli_x(), 1e-12));
        let d = ComplexMatrix::from_diag(&[c(1.0, 0.0), c(2.0, 0.0)]);
        assert!(!is_unitary(&d, 1e-12));
        assert!(is_hermitian(&d, 1e-12));
    }

    #[test]
    fn from_vec_validates() {
        assert!(ComplexMatrix::from_vec(2, 2, vec![ZERO; 3]).is_err());
        assert!(ComplexMatrix::from_vec(1, 1, vec![c(f64::NAN, 0.0)]).is_err());
    }

    fn arb_matrix(dim: usize) -> impl proptest::strategy::Strategy<Value = ComplexMatrix> {
        use proptest::prelude::*;
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim * dim).prop_map(move |v| {
            ComplexMatrix::from_vec(dim, dim, v.into_iter().map(|(a, b)| c(a, b)).collect())
                .unwrap()
        })
    }

    fn anti_hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
        (m - &m.adjoint()).scale_real(0.5)
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn kron_is_associative(a in arb_matrix(2), b in arb_matrix(2), d in arb_matrix(2)) {
                let l = kron(&kron(&a, &b), &d);
                let r = kron(&a, &kron(&b, &d));
                prop_assert!(l.max_abs_diff(&r) <= 1e-12);
            }

            #[test]
            fn exp_of_g_times_exp_of_minus_g_is_identity(m in arb_matrix(4)) {
                let g = anti_hermitian_part(&m).scale_real(3.0);
                let e1 = matrix_exp_antihermitian(&g).unwrap();
                let e2 = matrix_exp_antihermitian(&g.scale_real(-1.0)).unwrap();
                prop_assert!(is_unitary(&e1, 1e-10));
                prop_assert!((&e1 * &e2).max_abs_diff(&ComplexMatrix::identity(4)) <= 1e-10);
            }

            #[test]
            fn spectral_norm_is_unitarily_invariant(
                a in arb_matrix(4), gu in arb_matrix(4), gv in arb_matrix(4)
            ) {
                let u = matrix_exp_antihermitian(&anti_hermitian_part(&gu).scale_real(2.0)).unwrap();
                let v = matrix_exp_antihermitian(&anti_hermitian_part(&gv).scale_real(2.0)).unwrap();
                let lhs = spectral_norm(&(&(&u * &a) * &v)).unwrap();
                prop_assert!((lhs - spectral_norm(&a).unwrap()).abs() <= 1e-9);
            }

            #[test]
            fn pauli_exponential_is_cos_plus_i_sin(
                x in 0u64..16, z in 0u64..16, theta in -4.0f64..4.0
            ) {
                let p = crate::pauli::PauliString::from_masks(2, x, z).to_dense().unwrap();
                let got = matrix_exp_antihermitian(&p.scale(c(0.0, theta))).unwrap();
                let want = &ComplexMatrix::identity(4).scale_real(theta.cos())
                    + &p.scale(c(0.0, theta.sin()));
                prop_assert!(got.max_abs_diff(&want) <= 1e-12);
            }
        }
    }

    #[test]
    fn heisenberg_two_site_norm_is_three() {
        // 2 SWAP - I has eigenvalues 1, 1, 1, -3.
        let xx = kron(&pauli_x(), &pauli_x());
        let yy = kron(&pauli_y(), &pauli_y());
        let zz = kron(&pauli_z(), &pauli_z());
        let h = &(&xx + &yy) + &zz;
        let (vals, _) = hermitian_eigen(&h).unwrap();
        assert!((vals[0] + 3.0).abs() < 1e-12);
        assert!((spectral_norm(&h).unwrap() - 3.0).abs() < 1e-10);
    }
}
