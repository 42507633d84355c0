//! Dense complex matrices and the spectral calculus the rest of the crate
//! is built on.
//!
//! Tensor products use one global ordering: the system factor varies
//! slowest and the ancilla factor fastest, so the basis vector
//! `|s>|a>` sits at index `s * dim_a + a`.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Relative floor for rank decisions: eigenvalues at or below
/// `SUPPORT_REL_EPS * max(1, largest eigenvalue)` count as zero.
pub const SUPPORT_REL_EPS: f64 = 1e-10;

/// Relative Hermiticity tolerance accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-9;

/// Most negative eigenvalue tolerated by square roots, logarithms and
/// fractional powers.
pub const NEGATIVE_EIGEN_TOL: f64 = 1e-8;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Support threshold for a spectrum whose largest eigenvalue is `max_eig`.
pub fn eps_support(max_eig: f64) -> f64 {
    SUPPORT_REL_EPS * max_eig.max(1.0)
}

/// A dense complex matrix with finite entries.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    /// Builds a matrix from row-major entries.
    pub fn new(rows: usize, cols: usize, row_major: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidShape(format!("{rows}x{cols} matrix")));
        }
        if row_major.len() != rows * cols {
            return Err(Error::InvalidShape(format!(
                "{} entries for a {rows}x{cols} matrix",
                row_major.len()
            )));
        }
        for (k, z) in row_major.iter().enumerate() {
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::NonFinite {
                    row: k / cols,
                    col: k % cols,
                });
            }
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, &row_major)))
    }

    /// Builds a matrix from rows of real entries. Panics on ragged input.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let cols = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        Self(DMatrix::from_fn(rows.len(), cols, |i, j| c(rows[i][j], 0.0)))
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        Self(DMatrix::from_fn(rows, cols, f))
    }

    pub fn from_nalgebra(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self(DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                c(diag[i], 0.0)
            } else {
                C64::default()
            }
        }))
    }

    /// `|i><i|` in dimension `dim`.
    pub fn basis_projector(dim: usize, i: usize) -> Self {
        Self(DMatrix::from_fn(dim, dim, |r, s| {
            if r == i && s == i {
                c(1.0, 0.0)
            } else {
                C64::default()
            }
        }))
    }

    /// Column vector holding `ket`.
    pub fn column(ket: &[C64]) -> Self {
        Self(DMatrix::from_column_slice(ket.len(), 1, ket))
    }

    /// `|u><v|`.
    pub fn outer(u: &[C64], v: &[C64]) -> Self {
        Self(DMatrix::from_fn(u.len(), v.len(), |i, j| u[i] * v[j].conj()))
    }

    /// `|v><v|`.
    pub fn ket_projector(v: &[C64]) -> Self {
        Self::outer(v, v)
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    /// Entries in row-major order.
    pub fn row_major(&self) -> Vec<C64> {
        let (r, cl) = self.0.shape();
        let mut out = Vec::with_capacity(r * cl);
        for i in 0..r {
            for j in 0..cl {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn column_vec(&self, j: usize) -> Vec<C64> {
        self.0.column(j).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self(self.0.map(|z| z * s))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Frobenius distance; `f64::INFINITY` for mismatched shapes.
    pub fn distance(&self, other: &Self) -> f64 {
        if self.0.shape() != other.0.shape() {
            return f64::INFINITY;
        }
        (self - other).frobenius_norm()
    }

    /// `‖A − A†‖_F`.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()).map(|z| z * 0.5))
    }

    /// `‖U†U − I‖_F`.
    pub fn unitarity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        (self.0.adjoint() * &self.0 - DMatrix::<C64>::identity(n, n))
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// `A B A†`.
    pub fn conjugate_by(&self, a: &Self) -> Self {
        Self(&a.0 * &self.0 * a.0.adjoint())
    }

    /// Copy of the `(r0..r0+nr, c0..c0+nc)` block.
    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Self {
        Self(self.0.view((r0, c0), (nr, nc)).into_owned())
    }

    /// Applies a permutation of basis labels: entry `(i, j)` moves to
    /// `(perm[i], perm[j])`.
    pub fn permute_basis(&self, perm: &[usize]) -> Self {
        let n = self.rows();
        assert_eq!(perm.len(), n);
        let mut out = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                out[(perm[i], perm[j])] = self.0[(i, j)];
            }
        }
        Self(out)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.0[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        ComplexMatrix(-&self.0)
    }
}

/// Wire form of a matrix: row-major `[re, im]` pairs.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixJson {
            rows: self.rows(),
            cols: self.cols(),
            data: self.row_major().into_iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = MatrixJson::deserialize(d)?;
        let data = raw.data.iter().map(|&[re, im]| c(re, im)).collect();
        ComplexMatrix::new(raw.rows, raw.cols, data).map_err(serde::de::Error::custom)
    }
}

/// Kronecker product `a ⊗ b` with `a` as the slow (system) factor.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Traces out the fast (ancilla) factor of a `(dim_s·dim_a)`-square matrix.
pub fn partial_trace_ancilla(
    m: &ComplexMatrix,
    dim_s: usize,
    dim_a: usize,
) -> Result<ComplexMatrix> {
    check_joint_shape(m, dim_s, dim_a, "partial_trace_ancilla")?;
    Ok(ComplexMatrix::from_fn(dim_s, dim_s, |s1, s2| {
        (0..dim_a)
            .map(|a| m.0[(s1 * dim_a + a, s2 * dim_a + a)])
            .sum()
    }))
}

/// Traces out the slow (system) factor of a `(dim_s·dim_a)`-square matrix.
pub fn partial_trace_system(
    m: &ComplexMatrix,
    dim_s: usize,
    dim_a: usize,
) -> Result<ComplexMatrix> {
    check_joint_shape(m, dim_s, dim_a, "partial_trace_system")?;
    Ok(ComplexMatrix::from_fn(dim_a, dim_a, |a1, a2| {
        (0..dim_s)
            .map(|s| m.0[(s * dim_a + a1, s * dim_a + a2)])
            .sum()
    }))
}

/// The `(m, n)` ancilla block `(I ⊗ <m|) X (I ⊗ |n>)` of a joint operator.
pub fn ancilla_block(x: &ComplexMatrix, dim_s: usize, dim_a: usize, m: usize, n: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim_s, dim_s, |s1, s2| x.0[(s1 * dim_a + m, s2 * dim_a + n)])
}

fn check_joint_shape(m: &ComplexMatrix, dim_s: usize, dim_a: usize, context: &'static str) -> Result<()> {
    let d = dim_s * dim_a;
    if !m.is_square() || m.rows() != d {
        return Err(Error::DimensionMismatch {
            context,
            expected: d,
            found: m.rows(),
        });
    }
    Ok(())
}

/// Permutation turning a matrix written with the ancilla factor slow into
/// the crate's system-slow ordering.
pub fn ancilla_slow_to_system_slow(m: &ComplexMatrix, dim_s: usize, dim_a: usize) -> ComplexMatrix {
    let perm: Vec<usize> = (0..dim_s * dim_a)
        .map(|k| {
            let (a, s) = (k / dim_s, k % dim_s);
            s * dim_a + a
        })
        .collect();
    m.permute_basis(&perm)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues descending.
#[derive(Clone, Debug)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Unitary whose columns are the eigenvectors.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianSpectrum {
    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues.first().copied().unwrap_or(0.0)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }

    pub fn eps_support(&self) -> f64 {
        eps_support(self.max_eigenvalue())
    }

    /// Number of eigenvalues above the support threshold.
    pub fn rank(&self) -> usize {
        let eps = self.eps_support();
        self.eigenvalues.iter().filter(|&&l| l > eps).count()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column_vec(k)
    }

    /// `V diag(f(λ)) V†`.
    pub fn rebuild(&self, mut f: impl FnMut(f64) -> f64) -> ComplexMatrix {
        let v = &self.eigenvectors.0;
        let n = v.nrows();
        let weights: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        let mut scaled = v.clone();
        for (j, w) in weights.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*w);
        }
        let out = scaled * v.adjoint();
        debug_assert_eq!(out.nrows(), n);
        ComplexMatrix(out)
    }

    /// Projector onto the eigenvectors whose eigenvalues pass the support
    /// threshold.
    pub fn support_projector(&self) -> ComplexMatrix {
        let eps = self.eps_support();
        self.rebuild(|l| if l > eps { 1.0 } else { 0.0 })
    }
}

/// Hermitian eigendecomposition. The input is symmetrized before
/// decomposing; inputs further than [`HERMITIAN_TOL`] (relative, Frobenius)
/// from Hermitian are rejected.
pub fn hermitian_eig(a: &ComplexMatrix) -> Result<HermitianSpectrum> {
    if !a.is_square() {
        return Err(Error::InvalidShape(format!(
            "eigendecomposition of a {}x{} matrix",
            a.rows(),
            a.cols()
        )));
    }
    let residual = a.hermiticity_residual();
    if residual > HERMITIAN_TOL * a.frobenius_norm().max(1.0) {
        return Err(Error::NotHermitian {
            what: "eigendecomposition input".into(),
            residual,
        });
    }
    Ok(hermitian_eig_unchecked(&a.hermitian_part()))
}

fn hermitian_eig_unchecked(h: &ComplexMatrix) -> HermitianSpectrum {
    let n = h.rows();
    let eig = SymmetricEigen::new(h.0.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    HermitianSpectrum {
        eigenvalues,
        eigenvectors: ComplexMatrix(eigenvectors),
    }
}

/// Scalar functions the spectral calculus understands.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarFn {
    Identity,
    Sqrt,
    /// Base-2 logarithm.
    Log2,
    Power(f64),
}

impl ScalarFn {
    fn needs_nonnegative(self) -> bool {
        match self {
            ScalarFn::Identity => false,
            ScalarFn::Sqrt | ScalarFn::Log2 => true,
            ScalarFn::Power(p) => p.fract() != 0.0 || p < 0.0,
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            ScalarFn::Identity => x,
            ScalarFn::Sqrt => x.max(0.0).sqrt(),
            ScalarFn::Log2 => x.log2(),
            ScalarFn::Power(p) => {
                if p.fract() != 0.0 {
                    x.max(0.0).powf(p)
                } else {
                    x.powf(p)
                }
            }
        }
    }
}

/// `V f(Λ) V†` for a Hermitian `a`. With `support_only`, eigenvalues at or
/// below the support threshold map to zero instead of through `f`.
pub fn matrix_function(a: &ComplexMatrix, f: ScalarFn, support_only: bool) -> Result<ComplexMatrix> {
    let spec = hermitian_eig(a)?;
    spectral_function(&spec, f, support_only)
}

/// [`matrix_function`] on a precomputed spectrum.
pub fn spectral_function(spec: &HermitianSpectrum, f: ScalarFn, support_only: bool) -> Result<ComplexMatrix> {
    if f.needs_nonnegative() && spec.min_eigenvalue() < -NEGATIVE_EIGEN_TOL {
        return Err(Error::NotPositive {
            what: format!("argument of {f:?}"),
            eigenvalue: spec.min_eigenvalue(),
        });
    }
    let eps = spec.eps_support();
    if !support_only {
        let singular = match f {
            ScalarFn::Log2 => true,
            ScalarFn::Power(p) => p < 0.0,
            _ => false,
        };
        if singular && spec.min_eigenvalue() <= eps {
            return Err(Error::NotPositive {
                what: format!("argument of {f:?} (singular without support restriction)"),
                eigenvalue: spec.min_eigenvalue(),
            });
        }
        return Ok(spec.rebuild(|l| f.apply(l)));
    }
    Ok(spec.rebuild(|l| if l > eps { f.apply(l) } else { 0.0 }))
}

/// Generalized inverse on the support of a Hermitian PSD matrix.
pub fn pseudo_inverse_on_support(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let spec = hermitian_eig(a)?;
    let eps = spec.eps_support();
    Ok(spec.rebuild(|l| if l > eps { 1.0 / l } else { 0.0 }))
}

/// Projector onto the support of a Hermitian PSD matrix.
pub fn support_projector(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    Ok(hermitian_eig(a)?.support_projector())
}

/// `Tr|A|`, the sum of singular values.
pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    let scale = a.frobenius_norm().max(1.0);
    if a.is_square() && a.hermiticity_residual() <= 1e-12 * scale {
        let spec = hermitian_eig_unchecked(&a.hermitian_part());
        return spec.eigenvalues.iter().map(|l| l.abs()).sum();
    }
    SVD::new(a.0.clone(), false, false).singular_values.iter().sum()
}

/// Hilbert–Schmidt inner product `Tr(A† B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.0.iter().zip(b.0.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// `Tr(A B)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    let n = a.rows();
    let mut acc = C64::default();
    for i in 0..n {
        for k in 0..a.cols() {
            acc += a.0[(i, k)] * b.0[(k, i)];
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(&[1.0, -1.0])
    }

    #[test]
    fn identity_tensor_identity() {
        let out = tensor_product(&ComplexMatrix::identity(2), &ComplexMatrix::identity(3));
        assert_eq!(out, ComplexMatrix::identity(6));
    }

    #[test]
    fn tensor_of_basis_projectors_is_hand_expansion() {
        let out = tensor_product(
            &ComplexMatrix::basis_projector(2, 0),
            &ComplexMatrix::basis_projector(2, 1),
        );
        assert_eq!(out, ComplexMatrix::basis_projector(4, 1));
    }

    #[test]
    fn identity_partial_trace() {
        let out = partial_trace_ancilla(&ComplexMatrix::identity(6), 2, 3).unwrap();
        assert_eq!(out, ComplexMatrix::identity(2).scale(3.0));
        let err = partial_trace_ancilla(&ComplexMatrix::identity(5), 2, 3).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let bell = [c(r, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(r, 0.0)];
        let out = partial_trace_ancilla(&ComplexMatrix::ket_projector(&bell), 2, 2).unwrap();
        assert!(out.distance(&ComplexMatrix::identity(2).scale(0.5)) < 1e-15);
    }

    #[test]
    fn eig_of_diagonal_and_pauli_x() {
        let spec = hermitian_eig(&ComplexMatrix::from_real_diagonal(&[1.0, 3.0])).unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.eigenvalues[1], 1.0, epsilon = 1e-14);

        let spec = hermitian_eig(&pauli_x()).unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.eigenvalues[1], -1.0, epsilon = 1e-14);
        let plus = spec.eigenvector(0);
        // up to a global phase, |+> has equal-modulus components with equal phase
        assert_abs_diff_eq!(plus[0].norm(), std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-14);
        assert_abs_diff_eq!((plus[0] - plus[1]).norm(), 0.0, epsilon = 1e-14);
        let minus = spec.eigenvector(1);
        assert_abs_diff_eq!((minus[0] + minus[1]).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn scalar_functions() {
        let s = matrix_function(&ComplexMatrix::from_real_diagonal(&[4.0, 9.0]), ScalarFn::Sqrt, false).unwrap();
        assert!(s.distance(&ComplexMatrix::from_real_diagonal(&[2.0, 3.0])) < 1e-14);

        let half = ComplexMatrix::identity(2).scale(0.5);
        let l = matrix_function(&half, ScalarFn::Log2, false).unwrap();
        assert!(l.distance(&ComplexMatrix::identity(2).scale(-1.0)) < 1e-14);

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexMatrix::ket_projector(&[c(r, 0.0), c(r, 0.0)]);
        let p0 = matrix_function(&plus, ScalarFn::Power(0.0), true).unwrap();
        assert!(p0.distance(&plus) < 1e-14);

        assert!(matches!(
            matrix_function(&plus, ScalarFn::Log2, false),
            Err(Error::NotPositive { .. })
        ));
        assert!(matches!(
            matrix_function(&pauli_z(), ScalarFn::Sqrt, true),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn pseudo_inverse_cases() {
        let p = pseudo_inverse_on_support(&ComplexMatrix::from_real_diagonal(&[2.0, 0.0])).unwrap();
        assert!(p.distance(&ComplexMatrix::from_real_diagonal(&[0.5, 0.0])) < 1e-14);

        let r = std::f64::consts::FRAC_1_SQRT_2;
        let proj = ComplexMatrix::ket_projector(&[c(r, 0.0), c(0.0, r)]);
        assert!(pseudo_inverse_on_support(&proj).unwrap().distance(&proj) < 1e-14);

        let z = ComplexMatrix::zeros(3, 3);
        assert_eq!(pseudo_inverse_on_support(&z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn trace_norms() {
        assert_abs_diff_eq!(trace_norm(&pauli_z()), 2.0, epsilon = 1e-14);
        assert_eq!(trace_norm(&ComplexMatrix::zeros(3, 3)), 0.0);
        let m = &ComplexMatrix::basis_projector(2, 0) - &ComplexMatrix::identity(2).scale(0.5);
        assert_abs_diff_eq!(trace_norm(&m), 1.0, epsilon = 1e-14);
        // non-normal: singular values of [[0,1],[0,0]] are (1, 0)
        let n = ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_abs_diff_eq!(trace_norm(&n), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn reorders_ancilla_slow_layout() {
        // |a=1>|s=0> in ancilla-slow layout is index 1*2+0 = 2; system-slow: 0*3+1 = 1
        let m = ComplexMatrix::basis_projector(6, 2);
        let out = ancilla_slow_to_system_slow(&m, 2, 3);
        assert_eq!(out, ComplexMatrix::basis_projector(6, 1));
    }
}
