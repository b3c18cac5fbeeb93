//! Fixtures shared by the benchmarks.

use qee_core::{FactoredEnvironment, Result, SpinBathConfig, TimeGrid};

/// Uniformly mixed qubit bath of size `k` with `c0 = 0.6`.
pub fn qubit_bath(k: usize) -> Result<(SpinBathConfig, FactoredEnvironment)> {
    let cfg = SpinBathConfig::uniform(k, 0.6, 1.0, TimeGrid::new(0.0, std::f64::consts::TAU, 100)?);
    let env = cfg.to_factored()?;
    Ok((cfg, env))
}
