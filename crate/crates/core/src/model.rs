//! Pure-dephasing qubit-environment dynamics.
//!
//! A Hamiltonian block-diagonal in the qubit pointer states,
//! `H = |0><0| ⊗ V0 + |1><1| ⊗ V1`, evolves `|psi><psi| ⊗ R(0)` into a joint
//! state described completely by four environment blocks
//! `R_ij(t) = w_i(t) R(0) w_j(t)^dagger` with `w_i(t) = exp(-i V_i t)`.
//! Free qubit energies and a free environment Hamiltonian are folded into
//! `V0` and `V1` by the caller.

use num_complex::Complex64;

use crate::error::{QeeError, Result};
use crate::measure;
use crate::spectral::{
    c64, kron, trace, CMatrix, DensityMatrix, Generator, HermitianMatrix, UnitaryMatrix,
};

/// Largest joint (qubit + environment) dimension that is ever materialized.
pub const FULL_DIM_LIMIT: usize = 4096;

pub const AMPLITUDE_TOL: f64 = 1e-12;
pub const KRAUS_TOL: f64 = 1e-9;

/// Initial qubit state `a|0> + b|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitAmplitudes {
    a: Complex64,
    b: Complex64,
}

impl QubitAmplitudes {
    pub fn new(a: Complex64, b: Complex64) -> Result<Self> {
        let norm = a.norm_sqr() + b.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > AMPLITUDE_TOL {
            return Err(QeeError::NotNormalized { norm });
        }
        Ok(Self { a, b })
    }

    /// Rescales `(a, b)` to unit norm.
    pub fn normalized(a: Complex64, b: Complex64) -> Result<Self> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(QeeError::NotNormalized { norm: norm * norm });
        }
        Ok(Self {
            a: a / norm,
            b: b / norm,
        })
    }

    pub fn equal_superposition() -> Self {
        Self::with_phase(0.0)
    }

    /// `(|0> + e^{i phi}|1>) / sqrt(2)`.
    pub fn with_phase(phi: f64) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            a: c64(s, 0.0),
            b: Complex64::from_polar(s, phi),
        }
    }

    /// The pointer state `|0>` (`index == 0`) or `|1>`.
    pub fn pointer(index: usize) -> Self {
        let (a, b) = if index == 0 { (1.0, 0.0) } else { (0.0, 1.0) };
        Self {
            a: c64(a, 0.0),
            b: c64(b, 0.0),
        }
    }

    pub fn a(&self) -> Complex64 {
        self.a
    }

    pub fn b(&self) -> Complex64 {
        self.b
    }

    /// `4 |a|^2 |b|^2`, the prefactor of the entanglement measure.
    pub fn weight(&self) -> f64 {
        4.0 * self.a.norm_sqr() * self.b.norm_sqr()
    }
}

/// Which factor of the qubit ⊗ environment space an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Qubit,
    Environment,
}

/// Environment dimension, the conditional generators `V0`, `V1` and `R(0)`.
///
/// The generators' eigendecompositions are computed once; propagators at any
/// time are then a single product.
#[derive(Debug, Clone)]
pub struct DephasingModel {
    initial_env: DensityMatrix,
    gen0: Generator,
    gen1: Generator,
}

impl DephasingModel {
    pub fn new(v0: HermitianMatrix, v1: HermitianMatrix, initial_env: DensityMatrix) -> Result<Self> {
        let n = initial_env.dim();
        for v in [&v0, &v1] {
            if v.dim() != n {
                return Err(QeeError::DimensionMismatch {
                    expected: n,
                    found: v.dim(),
                });
            }
        }
        Ok(Self {
            initial_env,
            gen0: Generator::new(v0),
            gen1: Generator::new(v1),
        })
    }

    pub fn env_dim(&self) -> usize {
        self.initial_env.dim()
    }

    pub fn v0(&self) -> &HermitianMatrix {
        self.gen0.matrix()
    }

    pub fn v1(&self) -> &HermitianMatrix {
        self.gen1.matrix()
    }

    pub fn initial_env(&self) -> &DensityMatrix {
        &self.initial_env
    }

    /// `(w0(t), w1(t))`.
    pub fn build_propagators(&self, t: f64) -> Result<(UnitaryMatrix, UnitaryMatrix)> {
        Ok((self.gen0.propagator(t)?, self.gen1.propagator(t)?))
    }

    pub fn evolve(&self, amps: QubitAmplitudes, t: f64) -> Result<JointDephasingState> {
        let (w0, w1) = self.build_propagators(t)?;
        JointDephasingState::from_propagators(amps, &self.initial_env, &w0, &w1)
    }

    /// Equivalent propagator pair `(1, w1 w0^dagger)`.
    ///
    /// Applied to `R00(t)` as the reference state, the pair reproduces all four
    /// blocks at time `t`: `R11 = w R00 w^dagger`, `R01 = R00 w^dagger`.
    pub fn asymmetrize(&self, t: f64) -> Result<(UnitaryMatrix, UnitaryMatrix)> {
        let (w0, w1) = self.build_propagators(t)?;
        Ok((UnitaryMatrix::identity(self.env_dim()), w1.compose(&w0.adjoint())))
    }
}

/// The joint state
///
/// ```text
/// sigma = [[ |a|^2 R00,  a b* R01 ],
///          [ a* b R10,   |b|^2 R11 ]]
/// ```
///
/// written in the qubit pointer basis. `pointer_basis` holds the pointer
/// states as columns in the computational basis; it is the identity unless a
/// mixing qubit unitary has been applied.
#[derive(Debug, Clone)]
pub struct JointDephasingState {
    amps: QubitAmplitudes,
    pointer_basis: UnitaryMatrix,
    r00: DensityMatrix,
    r11: DensityMatrix,
    r01: CMatrix,
    r10: CMatrix,
}

impl JointDephasingState {
    pub fn from_propagators(
        amps: QubitAmplitudes,
        r0: &DensityMatrix,
        w0: &UnitaryMatrix,
        w1: &UnitaryMatrix,
    ) -> Result<Self> {
        let n = r0.dim();
        for w in [w0, w1] {
            if w.dim() != n {
                return Err(QeeError::DimensionMismatch {
                    expected: n,
                    found: w.dim(),
                });
            }
        }
        let w0m = w0.as_matrix();
        let w1m = w1.as_matrix();
        let r = r0.as_matrix();
        let w0r = w0m * r;
        let w1r = w1m * r;
        let r01 = &w0r * w1m.adjoint();
        Ok(Self {
            amps,
            pointer_basis: UnitaryMatrix::identity(2),
            r00: DensityMatrix::from_unchecked(&w0r * w0m.adjoint()),
            r11: DensityMatrix::from_unchecked(&w1r * w1m.adjoint()),
            r10: r01.adjoint(),
            r01,
        })
    }

    /// Direct block input; `R10` is taken as `R01^dagger`.
    pub fn from_blocks(
        amps: QubitAmplitudes,
        r00: DensityMatrix,
        r11: DensityMatrix,
        r01: CMatrix,
    ) -> Result<Self> {
        let n = r00.dim();
        for d in [r11.dim(), r01.nrows(), r01.ncols()] {
            if d != n {
                return Err(QeeError::DimensionMismatch {
                    expected: n,
                    found: d,
                });
            }
        }
        let tr = trace(&r01).norm();
        if tr > 1.0 + 1e-10 {
            return Err(QeeError::InvalidParameter(format!(
                "|tr R01| = {tr} exceeds 1"
            )));
        }
        Ok(Self {
            amps,
            pointer_basis: UnitaryMatrix::identity(2),
            r00,
            r11,
            r10: r01.adjoint(),
            r01,
        })
    }

    pub fn amps(&self) -> QubitAmplitudes {
        self.amps
    }

    pub fn pointer_basis(&self) -> &UnitaryMatrix {
        &self.pointer_basis
    }

    pub fn env_dim(&self) -> usize {
        self.r00.dim()
    }

    pub fn r00(&self) -> &DensityMatrix {
        &self.r00
    }

    pub fn r11(&self) -> &DensityMatrix {
        &self.r11
    }

    pub fn r01(&self) -> &CMatrix {
        &self.r01
    }

    pub fn r10(&self) -> &CMatrix {
        &self.r10
    }

    /// Weighted blocks `[[|a|^2 R00, ab* R01], [a*b R10, |b|^2 R11]]`.
    fn weighted_blocks(&self) -> [[CMatrix; 2]; 2] {
        let a = self.amps.a;
        let b = self.amps.b;
        [
            [
                self.r00.as_matrix() * c64(a.norm_sqr(), 0.0),
                &self.r01 * (a * b.conj()),
            ],
            [
                &self.r10 * (a.conj() * b),
                self.r11.as_matrix() * c64(b.norm_sqr(), 0.0),
            ],
        ]
    }

    /// The `2N x 2N` joint density matrix in the computational qubit basis.
    pub fn assemble_full(&self) -> Result<DensityMatrix> {
        let n = self.env_dim();
        let dim = 2 * n;
        if dim > FULL_DIM_LIMIT {
            return Err(QeeError::DimensionGuard {
                dim,
                limit: FULL_DIM_LIMIT,
            });
        }
        let blocks = rotate_blocks(&self.weighted_blocks(), self.pointer_basis.as_matrix());
        let mut sigma = CMatrix::zeros(dim, dim);
        for (i, row) in blocks.iter().enumerate() {
            for (j, block) in row.iter().enumerate() {
                sigma.view_mut((i * n, j * n), (n, n)).copy_from(block);
            }
        }
        Ok(DensityMatrix::from_unchecked(sigma))
    }

    /// Reduced qubit state `tr_E sigma`, in the pointer basis.
    pub fn reduced_qubit(&self) -> DensityMatrix {
        let a = self.amps.a;
        let b = self.amps.b;
        let off = a * b.conj() * trace(&self.r01);
        DensityMatrix::from_unchecked(CMatrix::from_row_slice(
            2,
            2,
            &[c64(a.norm_sqr(), 0.0), off, off.conj(), c64(b.norm_sqr(), 0.0)],
        ))
    }

    /// Maps every block through `R_ij -> sum_m K_m R_ij K_m^dagger`.
    pub fn apply_env_channel(&self, channel: &KrausChannel) -> Result<Self> {
        if channel.dim() != self.env_dim() {
            return Err(QeeError::DimensionMismatch {
                expected: self.env_dim(),
                found: channel.dim(),
            });
        }
        let r01 = channel.apply(&self.r01);
        Ok(Self {
            amps: self.amps,
            pointer_basis: self.pointer_basis.clone(),
            r00: DensityMatrix::from_unchecked(channel.apply(self.r00.as_matrix())),
            r11: DensityMatrix::from_unchecked(channel.apply(self.r11.as_matrix())),
            r10: r01.adjoint(),
            r01,
        })
    }

    /// Applies `1 ⊗ U` or `U ⊗ 1`.
    ///
    /// A qubit unitary rotates the pointer basis. The joint matrix is
    /// conjugated and the blocks are re-read in the rotated basis. A purely
    /// diagonal (phase) rotation is folded into the amplitudes instead, so the
    /// pointer basis stays computational.
    pub fn apply_local_unitary(&self, side: Side, u: &UnitaryMatrix) -> Result<Self> {
        match side {
            Side::Environment => {
                if u.dim() != self.env_dim() {
                    return Err(QeeError::DimensionMismatch {
                        expected: self.env_dim(),
                        found: u.dim(),
                    });
                }
                let r01 = u.conjugate(&self.r01);
                Ok(Self {
                    amps: self.amps,
                    pointer_basis: self.pointer_basis.clone(),
                    r00: self.r00.conjugated(u),
                    r11: self.r11.conjugated(u),
                    r10: r01.adjoint(),
                    r01,
                })
            }
            Side::Qubit => {
                if u.dim() != 2 {
                    return Err(QeeError::DimensionMismatch {
                        expected: 2,
                        found: u.dim(),
                    });
                }
                self.rotate_qubit(u)
            }
        }
    }

    fn rotate_qubit(&self, u: &UnitaryMatrix) -> Result<Self> {
        let um = u.as_matrix();
        // Joint matrix in the computational basis, then conjugated by U ⊗ 1.
        let computational = rotate_blocks(&self.weighted_blocks(), self.pointer_basis.as_matrix());
        let rotated = rotate_blocks(&computational, um);

        let new_basis = um * self.pointer_basis.as_matrix();
        let diagonal = new_basis[(0, 1)].norm() <= AMPLITUDE_TOL
            && new_basis[(1, 0)].norm() <= AMPLITUDE_TOL;
        let (amps, basis) = if diagonal {
            let d0 = new_basis[(0, 0)];
            let d1 = new_basis[(1, 1)];
            (
                QubitAmplitudes::normalized(d0 * self.amps.a, d1 * self.amps.b)?,
                CMatrix::identity(2, 2),
            )
        } else {
            (self.amps, new_basis)
        };
        let blocks = rotate_blocks(&rotated, &basis.adjoint());

        let p0 = amps.a.norm_sqr();
        let p1 = amps.b.norm_sqr();
        let cutoff = 1e-14;
        let r00 = if p0 > cutoff {
            DensityMatrix::from_unchecked(&blocks[0][0] / c64(p0, 0.0))
        } else {
            self.r00.clone()
        };
        let r11 = if p1 > cutoff {
            DensityMatrix::from_unchecked(&blocks[1][1] / c64(p1, 0.0))
        } else {
            self.r11.clone()
        };
        let r01 = if p0 > cutoff && p1 > cutoff {
            &blocks[0][1] / (amps.a * amps.b.conj())
        } else {
            self.r01.clone()
        };
        Ok(Self {
            amps,
            pointer_basis: UnitaryMatrix::from_unchecked(basis),
            r00,
            r11,
            r10: r01.adjoint(),
            r01,
        })
    }

    /// Checks the structural invariants. The full-matrix positivity check is
    /// only run when the joint matrix may be materialized.
    pub fn check_invariants(&self, tol: f64) -> Result<()> {
        let r10_defect = (&self.r10 - self.r01.adjoint()).norm();
        if r10_defect > tol {
            return Err(QeeError::InvalidParameter(format!(
                "R10 differs from R01^dagger by {r10_defect:.3e}"
            )));
        }
        let coh = trace(&self.r01).norm();
        if coh > 1.0 + 1e-10 {
            return Err(QeeError::InvalidParameter(format!("|tr R01| = {coh} exceeds 1")));
        }
        for r in [&self.r00, &self.r11] {
            DensityMatrix::new(r.as_matrix().clone())?;
        }
        if 2 * self.env_dim() <= FULL_DIM_LIMIT {
            let full = self.assemble_full()?;
            let tr = trace(full.as_matrix()).re;
            if (tr - 1.0).abs() > tol {
                return Err(QeeError::BadTrace { trace: tr });
            }
            let min = full.eigenvalues().last().cloned().unwrap_or(0.0);
            if min < -tol {
                return Err(QeeError::NotPositive {
                    min_eigenvalue: min,
                });
            }
        }
        Ok(())
    }
}

/// `(U ⊗ 1) S (U ⊗ 1)^dagger` for a 2x2 block operator `S`.
fn rotate_blocks(blocks: &[[CMatrix; 2]; 2], u: &CMatrix) -> [[CMatrix; 2]; 2] {
    let n = blocks[0][0].nrows();
    let mut out: [[CMatrix; 2]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| CMatrix::zeros(n, n)));
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    let coeff = u[(i, k)] * u[(j, l)].conj();
                    if coeff != Complex64::new(0.0, 0.0) {
                        out[i][j] += &blocks[k][l] * coeff;
                    }
                }
            }
        }
    }
    out
}

/// A completely positive trace-preserving map `rho -> sum_m K_m rho K_m^dagger`.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    operators: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn new(operators: Vec<CMatrix>) -> Result<Self> {
        let first = operators
            .first()
            .ok_or_else(|| QeeError::InvalidParameter("a channel needs at least one Kraus operator".into()))?;
        let n = first.nrows();
        for k in &operators {
            if k.nrows() != n || k.ncols() != n {
                return Err(QeeError::DimensionMismatch {
                    expected: n,
                    found: k.nrows().max(k.ncols()),
                });
            }
        }
        let channel = Self { operators };
        let defect = channel.completeness_defect();
        if defect.is_nan() || defect > KRAUS_TOL {
            return Err(QeeError::NotTracePreserving { defect });
        }
        Ok(channel)
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            operators: vec![CMatrix::identity(dim, dim)],
        }
    }

    pub fn unitary(u: &UnitaryMatrix) -> Self {
        Self {
            operators: vec![u.as_matrix().clone()],
        }
    }

    /// `rho -> tr(rho) 1/N`, via the `N^2` operators `|i><j| / sqrt(N)`.
    pub fn fully_depolarizing(dim: usize) -> Self {
        let s = c64(1.0 / (dim as f64).sqrt(), 0.0);
        let mut operators = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                let mut k = CMatrix::zeros(dim, dim);
                k[(i, j)] = s;
                operators.push(k);
            }
        }
        Self { operators }
    }

    pub fn dim(&self) -> usize {
        self.operators[0].nrows()
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    /// `||sum K^dagger K - 1||_F`.
    pub fn completeness_defect(&self) -> f64 {
        let n = self.dim();
        let sum = self
            .operators
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, k| acc + k.adjoint() * k);
        (sum - CMatrix::identity(n, n)).norm()
    }

    pub fn apply(&self, m: &CMatrix) -> CMatrix {
        let n = self.dim();
        self.operators
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, k| acc + k * m * k.adjoint())
    }
}

/// One independent environment component: `R^k(0)`, `V0^k`, `V1^k`.
#[derive(Debug, Clone)]
pub struct EnvComponent {
    initial: DensityMatrix,
    gen0: Generator,
    gen1: Generator,
}

impl EnvComponent {
    pub fn new(initial: DensityMatrix, v0: HermitianMatrix, v1: HermitianMatrix) -> Result<Self> {
        // Reuse the model's dimension checks.
        let model = DephasingModel::new(v0, v1, initial)?;
        Ok(Self {
            initial: model.initial_env,
            gen0: model.gen0,
            gen1: model.gen1,
        })
    }

    pub fn dim(&self) -> usize {
        self.initial.dim()
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.initial
    }

    pub fn v0(&self) -> &HermitianMatrix {
        self.gen0.matrix()
    }

    pub fn v1(&self) -> &HermitianMatrix {
        self.gen1.matrix()
    }

    pub fn evolve(&self, t: f64) -> Result<ComponentBlocks> {
        let w0 = self.gen0.propagator(t)?;
        let w1 = self.gen1.propagator(t)?;
        let w0m = w0.as_matrix();
        let w1m = w1.as_matrix();
        let r = self.initial.as_matrix();
        let w0r = w0m * r;
        let w1r = w1m * r;
        Ok(ComponentBlocks {
            r00: DensityMatrix::from_unchecked(&w0r * w0m.adjoint()),
            r11: DensityMatrix::from_unchecked(&w1r * w1m.adjoint()),
            r01: &w0r * w1m.adjoint(),
        })
    }
}

/// An environment of uncorrelated, non-interacting components, whose
/// conditional states stay in product form. The joint space is never built.
#[derive(Debug, Clone)]
pub struct FactoredEnvironment {
    components: Vec<EnvComponent>,
}

impl FactoredEnvironment {
    pub fn new(components: Vec<EnvComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(QeeError::InvalidParameter(
                "a factored environment needs at least one component".into(),
            ));
        }
        Ok(Self { components })
    }

    pub fn components(&self) -> &[EnvComponent] {
        &self.components
    }

    pub fn dims(&self) -> Vec<usize> {
        self.components.iter().map(EnvComponent::dim).collect()
    }

    /// `prod d_k`, or `None` if it overflows `usize`.
    pub fn total_dim(&self) -> Option<usize> {
        self.components
            .iter()
            .try_fold(1usize, |acc, c| acc.checked_mul(c.dim()))
    }

    pub fn evolve_factored(&self, amps: QubitAmplitudes, t: f64) -> Result<FactoredState> {
        let components = self
            .components
            .iter()
            .map(|c| c.evolve(t))
            .collect::<Result<Vec<_>>>()?;
        Ok(FactoredState { amps, components })
    }

    fn full_dim_checked(&self) -> Result<usize> {
        match self.total_dim() {
            Some(n) if 2 * n <= FULL_DIM_LIMIT => Ok(n),
            other => Err(QeeError::DimensionGuard {
                dim: other.map_or(usize::MAX, |n| n.saturating_mul(2)),
                limit: FULL_DIM_LIMIT,
            }),
        }
    }

    /// The equivalent full-space model with `V_i = sum_k 1 ⊗ .. ⊗ V_i^k ⊗ .. ⊗ 1`
    /// and `R(0) = ⊗_k R^k(0)`.
    pub fn to_model(&self) -> Result<DephasingModel> {
        let n = self.full_dim_checked()?;
        let dims = self.dims();
        let embed = |k: usize, op: &CMatrix| -> CMatrix {
            let left: usize = dims[..k].iter().product();
            let right: usize = dims[k + 1..].iter().product();
            kron(&kron(&CMatrix::identity(left, left), op), &CMatrix::identity(right, right))
        };
        let mut v0 = CMatrix::zeros(n, n);
        let mut v1 = CMatrix::zeros(n, n);
        for (k, c) in self.components.iter().enumerate() {
            v0 += embed(k, c.v0().as_matrix());
            v1 += embed(k, c.v1().as_matrix());
        }
        let r0 = self
            .components
            .iter()
            .skip(1)
            .fold(self.components[0].initial.clone(), |acc, c| acc.tensor(&c.initial));
        DephasingModel::new(
            HermitianMatrix::from_unchecked(v0),
            HermitianMatrix::from_unchecked(v1),
            r0,
        )
    }
}

/// Per-component blocks `R00^k`, `R11^k`, `R01^k` at one time.
#[derive(Debug, Clone)]
pub struct ComponentBlocks {
    pub r00: DensityMatrix,
    pub r11: DensityMatrix,
    pub r01: CMatrix,
}

impl ComponentBlocks {
    pub fn trace_r01(&self) -> Complex64 {
        trace(&self.r01)
    }
}

/// A joint state whose environment blocks are tensor products over components.
#[derive(Debug, Clone)]
pub struct FactoredState {
    pub amps: QubitAmplitudes,
    pub components: Vec<ComponentBlocks>,
}

impl FactoredState {
    /// `prod_k F(R00^k, R11^k)`.
    pub fn fidelity_total(&self) -> Result<f64> {
        measure::factored_fidelity(self.components.iter().map(|c| (&c.r00, &c.r11)))
    }

    pub fn qee(&self) -> Result<f64> {
        Ok(measure::qee_from_fidelity(self.amps, self.fidelity_total()?))
    }

    /// `tr R01 = prod_k tr R01^k`.
    pub fn trace_r01(&self) -> Complex64 {
        self.components.iter().map(ComponentBlocks::trace_r01).product()
    }

    pub fn coherence(&self) -> f64 {
        self.trace_r01().norm()
    }

    pub fn qubit_purity(&self) -> f64 {
        measure::purity_from_coherence(self.amps, self.coherence())
    }

    /// Materializes the tensor-product blocks (guarded).
    pub fn to_full(&self) -> Result<JointDephasingState> {
        let n: usize = self.components.iter().map(|c| c.r00.dim()).product();
        if 2 * n > FULL_DIM_LIMIT {
            return Err(QeeError::DimensionGuard {
                dim: 2 * n,
                limit: FULL_DIM_LIMIT,
            });
        }
        let (first, rest) = self.components.split_first().expect("non-empty");
        let mut r00 = first.r00.clone();
        let mut r11 = first.r11.clone();
        let mut r01 = first.r01.clone();
        for c in rest {
            r00 = r00.tensor(&c.r00);
            r11 = r11.tensor(&c.r11);
            r01 = kron(&r01, &c.r01);
        }
        JointDephasingState::from_blocks(self.amps, r00, r11, r01)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::fidelity;
    use approx::assert_abs_diff_eq;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])
    }

    fn simple_model(v0: CMatrix, v1: CMatrix, c0: f64) -> DephasingModel {
        DephasingModel::new(
            HermitianMatrix::new(v0).unwrap(),
            HermitianMatrix::new(v1).unwrap(),
            DensityMatrix::diagonal(&[c0, 1.0 - c0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn amplitudes_validation() {
        assert!(QubitAmplitudes::new(c64(1.0, 0.0), c64(1.0, 0.0)).is_err());
        let amps = QubitAmplitudes::normalized(c64(1.0, 0.0), c64(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(amps.weight(), 1.0, epsilon = 1e-15);
        assert_eq!(QubitAmplitudes::pointer(1).weight(), 0.0);
    }

    #[test]
    fn zero_time_gives_identity_propagators() {
        let m = simple_model(pauli_x(), pauli_x() * c64(-2.0, 0.0), 0.7);
        let (w0, w1) = m.build_propagators(0.0).unwrap();
        assert_eq!(w0, UnitaryMatrix::identity(2));
        assert_eq!(w1, UnitaryMatrix::identity(2));

        let s = m.evolve(QubitAmplitudes::equal_superposition(), 0.0).unwrap();
        for block in [s.r00().as_matrix(), s.r11().as_matrix(), s.r01(), s.r10()] {
            assert_eq!(block, m.initial_env().as_matrix());
        }
    }

    #[test]
    fn symmetric_coupling_is_separable() {
        let m = simple_model(pauli_x(), pauli_x(), 0.8);
        for t in [0.3, 1.1, 2.9] {
            let (w0, w1) = m.build_propagators(t).unwrap();
            assert_eq!(w0, w1);
            let s = m.evolve(QubitAmplitudes::equal_superposition(), t).unwrap();
            assert_eq!(s.r00(), s.r11());
            let (id, w) = m.asymmetrize(t).unwrap();
            assert_eq!(id, UnitaryMatrix::identity(2));
            assert!((w.as_matrix() - CMatrix::identity(2, 2)).norm() < 1e-14);
        }
    }

    #[test]
    fn asymmetrize_keeps_w1_when_v0_vanishes() {
        let m = simple_model(CMatrix::zeros(2, 2), pauli_x(), 0.8);
        let (_, w1) = m.build_propagators(0.9).unwrap();
        let (_, w) = m.asymmetrize(0.9).unwrap();
        assert!((w.as_matrix() - w1.as_matrix()).norm() < 1e-15);
    }

    #[test]
    fn blocks_follow_the_relative_propagator() {
        let v0 = CMatrix::from_row_slice(2, 2, &[c64(0.3, 0.0), c64(0.1, -0.4), c64(0.1, 0.4), c64(-0.2, 0.0)]);
        let m = simple_model(v0, pauli_x(), 0.65);
        let s = m.evolve(QubitAmplitudes::with_phase(0.4), 1.7).unwrap();
        let (w0, w1) = m.build_propagators(1.7).unwrap();
        let w = w1.compose(&w0.adjoint());
        let wm = w.as_matrix();
        let r00 = s.r00().as_matrix();
        assert!((wm * r00 * wm.adjoint() - s.r11().as_matrix()).norm() < 1e-14);
        assert!((r00 * wm.adjoint() - s.r01()).norm() < 1e-14);
        assert!((wm * r00 - s.r10()).norm() < 1e-14);
        s.check_invariants(1e-9).unwrap();
    }

    #[test]
    fn assemble_pointer_and_initial_states() {
        let m = simple_model(CMatrix::zeros(2, 2), pauli_x(), 0.7);
        let s = m.evolve(QubitAmplitudes::pointer(0), 0.8).unwrap();
        let full = s.assemble_full().unwrap();
        let zero = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
        assert!((full.as_matrix() - zero.tensor(s.r00()).as_matrix()).norm() < 1e-15);

        let amps = QubitAmplitudes::with_phase(1.2);
        let s = m.evolve(amps, 0.0).unwrap();
        let psi = crate::spectral::CVector::from_vec(vec![amps.a(), amps.b()]);
        let expect = DensityMatrix::pure(&psi).unwrap().tensor(m.initial_env());
        assert!((s.assemble_full().unwrap().as_matrix() - expect.as_matrix()).norm() < 1e-12);
    }

    #[test]
    fn full_space_is_refused_beyond_the_guard() {
        // 12 qubits: N = 4096, joint dimension 8192.
        let comps = (0..12)
            .map(|_| {
                EnvComponent::new(
                    DensityMatrix::diagonal(&[0.6, 0.4]).unwrap(),
                    HermitianMatrix::zeros(2),
                    HermitianMatrix::new(pauli_x()).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let env = FactoredEnvironment::new(comps).unwrap();
        let err = env.to_model().unwrap_err();
        assert!(matches!(err, QeeError::DimensionGuard { dim: 8192, .. }));
        assert!(err.to_string().contains("factored"));
        let st = env.evolve_factored(QubitAmplitudes::equal_superposition(), 0.4).unwrap();
        assert!(matches!(st.to_full(), Err(QeeError::DimensionGuard { .. })));
        assert!(st.qee().unwrap() > 0.0);
    }

    #[test]
    fn reduced_qubit_examples() {
        let m = simple_model(CMatrix::zeros(2, 2), pauli_x(), 1.0);
        let amps = QubitAmplitudes::equal_superposition();
        let q = m.evolve(amps, 0.0).unwrap().reduced_qubit();
        assert_abs_diff_eq!(crate::spectral::purity(&q), 1.0, epsilon = 1e-15);

        // w1 = exp(i t X) at t = pi/2 flips |0> to |1>: full dephasing.
        let s = m.evolve(amps, std::f64::consts::FRAC_PI_2).unwrap();
        let q = s.reduced_qubit();
        assert!(q.as_matrix()[(0, 1)].norm() < 1e-15);
        assert_abs_diff_eq!(crate::spectral::purity(&q), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn channel_examples() {
        let m = simple_model(CMatrix::zeros(2, 2), pauli_x(), 0.9);
        let s = m.evolve(QubitAmplitudes::equal_superposition(), 0.6).unwrap();

        let same = s.apply_env_channel(&KrausChannel::identity(2)).unwrap();
        assert_eq!(same.r00(), s.r00());
        assert_eq!(same.r01(), s.r01());

        let dep = s.apply_env_channel(&KrausChannel::fully_depolarizing(2)).unwrap();
        let half = DensityMatrix::maximally_mixed(2);
        assert!((dep.r00().as_matrix() - half.as_matrix()).norm() < 1e-15);
        assert!((dep.r11().as_matrix() - half.as_matrix()).norm() < 1e-15);
        assert_abs_diff_eq!(fidelity(dep.r00(), dep.r11()).unwrap(), 1.0, epsilon = 1e-14);

        let bad = KrausChannel::new(vec![CMatrix::identity(2, 2) * c64(0.9, 0.0)]);
        assert!(matches!(bad, Err(QeeError::NotTracePreserving { .. })));
        assert!(s.apply_env_channel(&KrausChannel::identity(3)).is_err());
    }

    #[test]
    fn local_unitary_identity_and_phase() {
        let m = simple_model(CMatrix::zeros(2, 2), pauli_x(), 0.9);
        let amps = QubitAmplitudes::with_phase(0.3);
        let s = m.evolve(amps, 0.6).unwrap();

        let same = s.apply_local_unitary(Side::Qubit, &UnitaryMatrix::identity(2)).unwrap();
        assert!((same.r01() - s.r01()).norm() < 1e-15);
        assert_eq!(same.amps(), s.amps());

        let theta = 0.8;
        let phase = UnitaryMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), Complex64::from_polar(1.0, theta)],
        ))
        .unwrap();
        let rotated = s.apply_local_unitary(Side::Qubit, &phase).unwrap();
        assert_eq!(rotated.pointer_basis(), &UnitaryMatrix::identity(2));
        assert!((rotated.amps().b() - amps.b() * Complex64::from_polar(1.0, theta)).norm() < 1e-15);
        assert!((rotated.r01() - s.r01()).norm() < 1e-14);
        assert!(s.apply_local_unitary(Side::Environment, &UnitaryMatrix::identity(3)).is_err());
    }

    #[test]
    fn mixing_qubit_unitary_rotates_the_pointer_basis() {
        let m = simple_model(CMatrix::zeros(2, 2), pauli_x(), 0.9);
        let s = m.evolve(QubitAmplitudes::with_phase(0.3), 0.6).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let hadamard = UnitaryMatrix::new(CMatrix::from_row_slice(
            2,
            2,
            &[c64(h, 0.0), c64(h, 0.0), c64(h, 0.0), c64(-h, 0.0)],
        ))
        .unwrap();
        let r = s.apply_local_unitary(Side::Qubit, &hadamard).unwrap();
        assert!((r.pointer_basis().as_matrix() - hadamard.as_matrix()).norm() < 1e-15);
        assert!((r.r00().as_matrix() - s.r00().as_matrix()).norm() < 1e-14);
        assert!((r.r11().as_matrix() - s.r11().as_matrix()).norm() < 1e-14);
        assert!((r.r01() - s.r01()).norm() < 1e-14);
        // Physical joint state is the rotated one.
        let u = kron(hadamard.as_matrix(), &CMatrix::identity(2, 2));
        let expect = &u * s.assemble_full().unwrap().as_matrix() * u.adjoint();
        assert!((r.assemble_full().unwrap().as_matrix() - expect).norm() < 1e-14);
        r.check_invariants(1e-9).unwrap();
    }

    #[test]
    fn factored_zero_time() {
        let comps = (0..3)
            .map(|k| {
                EnvComponent::new(
                    DensityMatrix::diagonal(&[0.6 + 0.1 * k as f64, 0.4 - 0.1 * k as f64]).unwrap(),
                    HermitianMatrix::zeros(2),
                    HermitianMatrix::new(pauli_x()).unwrap(),
                )
                .unwrap()
            })
            .collect();
        let env = FactoredEnvironment::new(comps).unwrap();
        let st = env.evolve_factored(QubitAmplitudes::equal_superposition(), 0.0).unwrap();
        for (c, comp) in st.components.iter().zip(env.components()) {
            assert_eq!(&c.r00, comp.initial());
            assert_eq!(&c.r11, comp.initial());
        }
        assert_abs_diff_eq!(st.qee().unwrap(), 0.0);
        assert_abs_diff_eq!(st.coherence(), 1.0, epsilon = 1e-15);
        assert_eq!(env.total_dim(), Some(8));
        assert!(FactoredEnvironment::new(vec![]).is_err());
    }
}
