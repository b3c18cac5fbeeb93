//! Dense complex-matrix primitives.
//!
//! Everything downstream is built on three validated wrappers around
//! [`CMatrix`]: [`HermitianMatrix`], [`DensityMatrix`] and [`UnitaryMatrix`].
//! The wrappers are immutable once built; operations return new values.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{QeeError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Entry-wise Hermiticity tolerance, scaled by `max(1, max |m_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_TOL, 0)` are clipped to zero; below that the input is rejected.
pub const PSD_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Largest entry-wise violation of `m_ij = conj(m_ji)`.
pub fn hermiticity_violation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `(M + M^dagger) / 2`.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c64(0.5, 0.0)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() || m.nrows() == 0 {
        return Err(QeeError::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(QeeError::NonFinite);
    }
    Ok(m.nrows())
}

fn check_hermitian(m: &CMatrix) -> Result<()> {
    let tolerance = HERMITIAN_TOL * max_abs(m).max(1.0);
    let violation = hermiticity_violation(m);
    if violation > tolerance {
        return Err(QeeError::NotHermitian {
            violation,
            tolerance,
        });
    }
    Ok(())
}

/// A square complex matrix equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Validates and stores the exactly Hermitian part of `m`.
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        check_hermitian(&m)?;
        Ok(Self(hermitize(&m)))
    }

    pub(crate) fn from_unchecked(m: CMatrix) -> Self {
        Self(hermitize(&m))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d = CVector::from_iterator(diag.len(), diag.iter().map(|&x| c64(x, 0.0)));
        Self(CMatrix::from_diagonal(&d))
    }

    /// Builds from row-major entries.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }
}

/// A Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        check_square(&m)?;
        check_hermitian(&m)?;
        let h = hermitize(&m);
        let tr = trace(&h).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(QeeError::BadTrace { trace: tr });
        }
        let min = h
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if min < -PSD_TOL {
            return Err(QeeError::NotPositive {
                min_eigenvalue: min,
            });
        }
        Ok(Self(h))
    }

    /// For matrices that are valid by construction (unitary images of valid states).
    pub(crate) fn from_unchecked(m: CMatrix) -> Self {
        Self(hermitize(&m))
    }

    /// `|psi><psi|` for a normalized `psi`.
    pub fn pure(psi: &CVector) -> Result<Self> {
        let norm = psi.norm_squared();
        if (norm - 1.0).abs() > TRACE_TOL {
            return Err(QeeError::VectorNotNormalized { norm });
        }
        Ok(Self::from_unchecked(psi * psi.adjoint()))
    }

    /// Diagonal state; the weights must be non-negative and sum to one.
    pub fn diagonal(weights: &[f64]) -> Result<Self> {
        let d = CVector::from_iterator(weights.len(), weights.iter().map(|&x| c64(x, 0.0)));
        Self::new(CMatrix::from_diagonal(&d))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim) * c64(1.0 / dim as f64, 0.0))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn as_hermitian(&self) -> HermitianMatrix {
        HermitianMatrix(self.0.clone())
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh(&self.0).0
    }

    /// `rho ⊗ other`.
    pub fn tensor(&self, other: &DensityMatrix) -> DensityMatrix {
        DensityMatrix(kron(&self.0, &other.0))
    }

    /// `U rho U^dagger`.
    pub fn conjugated(&self, u: &UnitaryMatrix) -> DensityMatrix {
        DensityMatrix::from_unchecked(u.conjugate(&self.0))
    }
}

/// A square matrix with `U U^dagger = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(CMatrix);

impl UnitaryMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let n = check_square(&m)?;
        let defect = (&m * m.adjoint() - CMatrix::identity(n, n)).norm();
        if defect > UNITARY_TOL {
            return Err(QeeError::NotUnitary { defect });
        }
        Ok(Self(m))
    }

    pub(crate) fn from_unchecked(m: CMatrix) -> Self {
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_inner(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix(self.0.adjoint())
    }

    /// Product `self * rhs`.
    pub fn compose(&self, rhs: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(&self.0 * &rhs.0)
    }

    pub fn tensor(&self, other: &UnitaryMatrix) -> UnitaryMatrix {
        UnitaryMatrix(kron(&self.0, &other.0))
    }

    /// `U m U^dagger`.
    pub fn conjugate(&self, m: &CMatrix) -> CMatrix {
        &self.0 * m * self.0.adjoint()
    }

    /// `||U U^dagger - I||_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.dim();
        (&self.0 * self.0.adjoint() - CMatrix::identity(n, n)).norm()
    }
}

pub fn matrix_from_rows(rows: &[Vec<Complex64>]) -> Result<CMatrix> {
    let n = rows.len();
    if n == 0 {
        return Err(QeeError::NotSquare { rows: 0, cols: 0 });
    }
    for r in rows {
        if r.len() != n {
            return Err(QeeError::NotSquare {
                rows: n,
                cols: r.len(),
            });
        }
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

/// Spectral decomposition `M = V diag(values) V^dagger`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Columns are the eigenvectors, each phase-fixed so its first
    /// non-negligible component is real and positive.
    pub vectors: UnitaryMatrix,
}

impl HermitianEigen {
    pub fn reconstruct(&self) -> CMatrix {
        let v = self.vectors.as_matrix();
        let d = CVector::from_iterator(self.values.len(), self.values.iter().map(|&x| c64(x, 0.0)));
        v * CMatrix::from_diagonal(&d) * v.adjoint()
    }

    /// `V f(diag) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Complex64) -> CMatrix {
        let v = self.vectors.as_matrix();
        let d = CVector::from_iterator(self.values.len(), self.values.iter().map(|&x| f(x)));
        // Scale columns instead of building the diagonal matrix.
        let mut scaled = v.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= d[j];
        }
        scaled * v.adjoint()
    }
}

pub fn hermitian_eig(m: &HermitianMatrix) -> HermitianEigen {
    let (values, vectors) = eigh(&m.0);
    HermitianEigen {
        values,
        vectors: UnitaryMatrix(vectors),
    }
}

fn is_diagonal(m: &CMatrix) -> bool {
    let n = m.nrows();
    (0..n).all(|i| (0..n).all(|j| i == j || m[(i, j)] == ZERO))
}

/// Eigendecomposition of an (assumed) Hermitian matrix, sorted descending
/// with phase-normalized eigenvectors.
pub(crate) fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    let (raw_values, raw_vectors): (Vec<f64>, CMatrix) = if is_diagonal(m) {
        (
            (0..n).map(|i| m[(i, i)].re).collect(),
            CMatrix::identity(n, n),
        )
    } else {
        let eig = SymmetricEigen::new(m.clone());
        (eig.eigenvalues.iter().cloned().collect(), eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort: ties keep solver order.
    order.sort_by(|&i, &j| raw_values[j].total_cmp(&raw_values[i]));

    let values = order.iter().map(|&i| raw_values[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let col = raw_vectors.column(src);
        let phase = col
            .iter()
            .find(|z| z.norm() > 1e-10)
            .map(|z| z.conj() / z.norm())
            .unwrap_or(c64(1.0, 0.0));
        vectors.set_column(dst, &(col * phase));
    }
    (values, vectors)
}

/// Eigenvalues only, descending.
pub(crate) fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let mut v: Vec<f64> = if is_diagonal(m) {
        (0..m.nrows()).map(|i| m[(i, i)].re).collect()
    } else {
        m.symmetric_eigenvalues().iter().cloned().collect()
    };
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let eig = hermitian_eig(m);
    let min = eig.values.last().cloned().unwrap_or(0.0);
    if min < -PSD_TOL {
        return Err(QeeError::NotPositive {
            min_eigenvalue: min,
        });
    }
    Ok(HermitianMatrix::from_unchecked(
        eig.map_spectrum(|x| c64(x.max(0.0).sqrt(), 0.0)),
    ))
}

/// `exp(-i V t)` for a Hermitian generator (ħ = 1).
pub fn propagator(v: &HermitianMatrix, t: f64) -> Result<UnitaryMatrix> {
    Generator::new(v.clone()).propagator(t)
}

/// A Hermitian generator with its eigendecomposition cached, so propagators
/// at many times cost one matrix product each.
#[derive(Debug, Clone)]
pub struct Generator {
    matrix: HermitianMatrix,
    eigen: HermitianEigen,
}

impl Generator {
    pub fn new(matrix: HermitianMatrix) -> Self {
        let eigen = hermitian_eig(&matrix);
        Self { matrix, eigen }
    }

    pub fn matrix(&self) -> &HermitianMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn propagator(&self, t: f64) -> Result<UnitaryMatrix> {
        if !t.is_finite() {
            return Err(QeeError::InvalidParameter(format!("time must be finite, got {t}")));
        }
        if t == 0.0 {
            return Ok(UnitaryMatrix::identity(self.dim()));
        }
        Ok(UnitaryMatrix(
            self.eigen.map_spectrum(|e| Complex64::from_polar(1.0, -e * t)),
        ))
    }
}

/// Relative floor under which eigenvalues count as numerical zeros when
/// restricting to a support.
fn support_floor(dim: usize, scale: f64) -> f64 {
    64.0 * f64::EPSILON * dim as f64 * scale.max(1.0)
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(QeeError::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

/// Uhlmann fidelity before clamping to `[0, 1]`.
///
/// Evaluates `tr sqrt(sqrt(rho1) rho2 sqrt(rho1))` in the eigenbasis of the
/// lower-rank argument, restricted to its support, so that pure and
/// rank-deficient states do not pick up `sqrt(eps)` noise from their null
/// spaces.
pub fn fidelity_unclamped(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho1.dim(), rho2.dim())?;
    let n = rho1.dim();
    let (v1, u1) = eigh(&rho1.0);
    let r1 = support_rank(&v1, n);
    let (values, vectors, other) = if r1 == n {
        let (v2, u2) = eigh(&rho2.0);
        if support_rank(&v2, n) < n {
            (v2, u2, &rho1.0)
        } else {
            (v1, u1, &rho2.0)
        }
    } else {
        (v1, u1, &rho2.0)
    };
    let r = support_rank(&values, n);
    if r == 0 {
        return Ok(0.0);
    }

    // A = V_r sqrt(Lambda_r); the nonzero spectrum of sqrt(rho1) rho2 sqrt(rho1)
    // equals that of A^dagger rho2 A.
    let mut a = vectors.columns(0, r).into_owned();
    for (j, mut col) in a.column_iter_mut().enumerate() {
        col *= c64(values[j].max(0.0).sqrt(), 0.0);
    }
    let inner = hermitize(&(a.adjoint() * other * &a));
    let mu = eigvalsh(&inner);
    let floor = support_floor(r, mu.first().cloned().unwrap_or(0.0));
    let root_sum: f64 = mu.iter().filter(|&&x| x > floor).map(|x| x.sqrt()).sum();
    Ok(root_sum * root_sum)
}

fn support_rank(values: &[f64], n: usize) -> usize {
    let floor = support_floor(n, values.first().cloned().unwrap_or(0.0));
    values.iter().filter(|&&x| x > floor).count()
}

/// Uhlmann fidelity `[tr sqrt(sqrt(rho1) rho2 sqrt(rho1))]^2`, clamped to `[0, 1]`.
pub fn fidelity(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    Ok(fidelity_unclamped(rho1, rho2)?.clamp(0.0, 1.0))
}

/// `tr rho^2`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    rho.0.iter().map(|z| z.norm_sqr()).sum()
}

/// `1 - tr rho^2`.
pub fn linear_entropy(rho: &DensityMatrix) -> f64 {
    1.0 - purity(rho)
}
