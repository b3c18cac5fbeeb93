//! Entanglement between a qubit and its environment under pure dephasing.
//!
//! The qubit-environment state is described by four environment blocks
//! `R_ij = w_i R(0) w_j^dagger`. The measure `4 |a|^2 |b|^2 (1 - F(R00, R11))`
//! needs only the two diagonal blocks and, for uncorrelated environments,
//! only one small fidelity per component.
//!
//! ```
//! use qee_core::{qee, DensityMatrix, QubitAmplitudes};
//!
//! let zero = DensityMatrix::diagonal(&[1.0, 0.0]).unwrap();
//! let one = DensityMatrix::diagonal(&[0.0, 1.0]).unwrap();
//! let e = qee(QubitAmplitudes::equal_superposition(), &zero, &one).unwrap();
//! assert!((e - 1.0).abs() < 1e-15);
//! ```

pub mod error;
pub mod measure;
pub mod model;
pub mod oracles;
pub mod spectral;
pub mod spinbath;
pub mod verification;

pub use error::{QeeError, Result};
pub use num_complex::Complex64;
pub use measure::{qee, qee_factored, qee_of_state, qubit_purity};
pub use model::{
    ComponentBlocks, DephasingModel, EnvComponent, FactoredEnvironment, FactoredState, JointDephasingState,
    KrausChannel, QubitAmplitudes, Side, FULL_DIM_LIMIT,
};
pub use oracles::OracleReport;
pub use spectral::{c64, fidelity, CMatrix, CVector, DensityMatrix, HermitianMatrix, UnitaryMatrix};
pub use spinbath::{run_sweep, SpinBathConfig, SweepResult, TimeGrid};
