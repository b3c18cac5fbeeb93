use thiserror::Error;

pub type Result<T, E = QeeError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QeeError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian: max |m_ij - conj(m_ji)| = {violation:.3e} (tolerance {tolerance:.1e})")]
    NotHermitian { violation: f64, tolerance: f64 },

    #[error("matrix is not positive semidefinite: smallest eigenvalue {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("density matrix trace is {trace:.12}, expected 1")]
    BadTrace { trace: f64 },

    #[error("matrix is not unitary: ||U U^dagger - I||_F = {defect:.3e}")]
    NotUnitary { defect: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("qubit amplitudes are not normalized: |a|^2 + |b|^2 = {norm:.15}")]
    NotNormalized { norm: f64 },

    #[error("environment vector is not normalized: norm^2 = {norm:.15}")]
    VectorNotNormalized { norm: f64 },

    #[error("joint dimension {dim} exceeds the full-matrix limit {limit}; use the factored path")]
    DimensionGuard { dim: usize, limit: usize },

    #[error("Kraus operators are not trace preserving: ||sum K^dagger K - I||_F = {defect:.3e}")]
    NotTracePreserving { defect: f64 },

    #[error("Bell-block construction requires |a| = |b|; got |a| = {a:.12}, |b| = {b:.12}")]
    UnequalAmplitudes { a: f64, b: f64 },

    #[error("partial transpose over the qubit needs an even dimension, got {0}")]
    OddDimension(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}
