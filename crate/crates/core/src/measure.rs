//! The pure-dephasing entanglement measure
//! `E = 4 |a|^2 |b|^2 (1 - F(R00, R11))` and its companions.
//!
//! Everything here works from the environment blocks; the `2N`-dimensional
//! joint matrix is never formed.

use log::warn;

use crate::error::{QeeError, Result};
use crate::model::{JointDephasingState, QubitAmplitudes};
use crate::spectral::{self, eigvalsh, fidelity_unclamped, trace, CVector, DensityMatrix, UnitaryMatrix};

/// Default Frobenius tolerance for `R00 == R11`.
pub const DEFAULT_SEPARABILITY_TOL: f64 = 1e-10;
/// Pre-clamp excursions larger than this are logged.
pub const CLAMP_REPORT_TOL: f64 = 1e-9;
/// Conditional states obtained from one `R(0)` share a spectrum.
pub const SPECTRUM_MISMATCH_TOL: f64 = 1e-8;

fn clamp_unit(raw: f64, what: &str) -> f64 {
    if !(-CLAMP_REPORT_TOL..=1.0 + CLAMP_REPORT_TOL).contains(&raw) {
        warn!("{what} evaluated to {raw:.3e} before clamping to [0, 1]");
    }
    raw.clamp(0.0, 1.0)
}

/// `4 |a|^2 |b|^2 (1 - F)` clamped to `[0, 1]`.
pub fn qee_from_fidelity(amps: QubitAmplitudes, fidelity: f64) -> f64 {
    clamp_unit(amps.weight() * (1.0 - fidelity), "entanglement measure")
}

/// Largest difference between the sorted spectra of the two conditional states.
pub fn spectrum_mismatch(r00: &DensityMatrix, r11: &DensityMatrix) -> f64 {
    let a = eigvalsh(r00.as_matrix());
    let b = eigvalsh(r11.as_matrix());
    a.iter()
        .zip(&b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// The entanglement measure from the two conditional environment states.
///
/// Blocks that could not have come from a common `R(0)` (different spectra)
/// are still evaluated, with a warning.
pub fn qee(amps: QubitAmplitudes, r00: &DensityMatrix, r11: &DensityMatrix) -> Result<f64> {
    let f = fidelity_unclamped(r00, r11)?;
    if log::log_enabled!(log::Level::Warn) {
        let mismatch = spectrum_mismatch(r00, r11);
        if mismatch > SPECTRUM_MISMATCH_TOL {
            warn!("conditional states have different spectra (max deviation {mismatch:.3e})");
        }
    }
    Ok(qee_from_fidelity(amps, f))
}

pub fn qee_of_state(state: &JointDephasingState) -> Result<f64> {
    qee(state.amps(), state.r00(), state.r11())
}

/// `prod_k F(R00^k, R11^k)`.
pub fn factored_fidelity<'a>(
    pairs: impl IntoIterator<Item = (&'a DensityMatrix, &'a DensityMatrix)>,
) -> Result<f64> {
    let mut product = 1.0;
    let mut count = 0usize;
    for (r00, r11) in pairs {
        product *= spectral::fidelity(r00, r11)?;
        count += 1;
    }
    if count == 0 {
        return Err(QeeError::InvalidParameter(
            "factored evaluation needs at least one component".into(),
        ));
    }
    Ok(product)
}

/// The measure for product-form conditional states, from per-component pairs
/// `(R00^k, R11^k)`. Only `d_k x d_k` matrices are diagonalized.
pub fn qee_factored(amps: QubitAmplitudes, pairs: &[(DensityMatrix, DensityMatrix)]) -> Result<f64> {
    let f = factored_fidelity(pairs.iter().map(|(a, b)| (a, b)))?;
    Ok(qee_from_fidelity(amps, f))
}

/// Separability test `||R00 - R11||_F <= tol`.
pub fn is_separable(r00: &DensityMatrix, r11: &DensityMatrix, tol: f64) -> Result<bool> {
    if r00.dim() != r11.dim() {
        return Err(QeeError::DimensionMismatch {
            expected: r00.dim(),
            found: r11.dim(),
        });
    }
    Ok((r00.as_matrix() - r11.as_matrix()).norm() <= tol)
}

/// `|tr R01|`.
pub fn coherence_factor(state: &JointDephasingState) -> f64 {
    trace(state.r01()).norm()
}

/// `1 - 2 |a|^2 |b|^2 (1 - c^2)` for coherence factor `c`.
pub fn purity_from_coherence(amps: QubitAmplitudes, coherence: f64) -> f64 {
    1.0 - 0.5 * amps.weight() * (1.0 - coherence * coherence)
}

/// Purity of the reduced qubit state, from the coherence factor alone.
pub fn qubit_purity(state: &JointDephasingState) -> f64 {
    purity_from_coherence(state.amps(), coherence_factor(state))
}

/// Twice the linear entropy of the qubit for a pure environment `|R>`:
/// `4 |a|^2 |b|^2 (1 - |<R| w1^dagger w0 |R>|^2)`.
pub fn pure_state_entanglement(
    amps: QubitAmplitudes,
    env: &CVector,
    w0: &UnitaryMatrix,
    w1: &UnitaryMatrix,
) -> Result<f64> {
    let norm = env.norm_squared();
    if (norm - 1.0).abs() > spectral::TRACE_TOL {
        return Err(QeeError::VectorNotNormalized { norm });
    }
    for w in [w0, w1] {
        if w.dim() != env.len() {
            return Err(QeeError::DimensionMismatch {
                expected: env.len(),
                found: w.dim(),
            });
        }
    }
    let r0 = w0.as_matrix() * env;
    let r1 = w1.as_matrix() * env;
    let overlap = r1.dotc(&r0).norm_sqr();
    Ok(clamp_unit(amps.weight() * (1.0 - overlap), "pure-state entanglement"))
}
