//! A qubit dephasing against `K` non-interacting environment qubits.
//!
//! Each environment qubit starts in `c0|0><0| + (1-c0)|1><1|` and, with the
//! qubit in `|1>`, rotates as `w1^k(t) = e^{i w_k t}|+><+| + e^{-i w_k t}|-><-|`
//! (the `|0>` branch is left alone). Everything has a closed form, so sweeps
//! cost `O(K)` per time point for any `K`.
//!
//! Times on a [`TimeGrid`] are dimensionless, `tau = omega_max * t`.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{QeeError, Result};
use crate::measure::{purity_from_coherence, qee_from_fidelity};
use crate::model::{EnvComponent, FactoredEnvironment, QubitAmplitudes};
use crate::spectral::{c64, CMatrix, DensityMatrix, HermitianMatrix, UnitaryMatrix};

/// `w_k = 2 w_m k / (K (K + 1))` for `k = 1..=K`; sums to `w_m`.
pub fn omega_schedule(k: usize, omega_max: f64) -> Vec<f64> {
    let denom = (k * (k + 1)) as f64;
    (1..=k).map(|i| 2.0 * omega_max * i as f64 / denom).collect()
}

/// `e^{i w t}|+><+| + e^{-i w t}|-><-| = cos(wt) 1 + i sin(wt) X`.
pub fn spin_propagator(omega: f64, t: f64) -> UnitaryMatrix {
    let (s, c) = (omega * t).sin_cos();
    UnitaryMatrix::from_unchecked(CMatrix::from_row_slice(
        2,
        2,
        &[c64(c, 0.0), c64(0.0, s), c64(0.0, s), c64(c, 0.0)],
    ))
}

/// Generator of [`spin_propagator`]: `V = -w X`.
pub fn spin_generator(omega: f64) -> HermitianMatrix {
    HermitianMatrix::from_unchecked(CMatrix::from_row_slice(
        2,
        2,
        &[c64(0.0, 0.0), c64(-omega, 0.0), c64(-omega, 0.0), c64(0.0, 0.0)],
    ))
}

fn check_occupation(c0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&c0) {
        return Err(QeeError::InvalidParameter(format!(
            "occupation c0 must lie in [0, 1], got {c0}"
        )));
    }
    Ok(())
}

/// `R11^k(t)` in closed form; `R00^k(t) = R^k(0)` stays diagonal.
pub fn conditional_r11(c0: f64, omega: f64, t: f64) -> Result<DensityMatrix> {
    check_occupation(c0)?;
    let c1 = 1.0 - c0;
    let (s, c) = (omega * t).sin_cos();
    let (cc, ss) = (c * c, s * s);
    let off = (c0 - c1) * s * c;
    Ok(DensityMatrix::from_unchecked(CMatrix::from_row_slice(
        2,
        2,
        &[
            c64(c0 * cc + c1 * ss, 0.0),
            c64(0.0, -off),
            c64(0.0, off),
            c64(c0 * ss + c1 * cc, 0.0),
        ],
    )))
}

/// Closed-form `F(R00^k, R11^k) = (sqrt(l+) + sqrt(l-))^2`.
pub fn component_fidelity(c0: f64, omega: f64, t: f64) -> Result<f64> {
    check_occupation(c0)?;
    Ok(component_fidelity_unchecked(c0, omega * t))
}

fn component_fidelity_unchecked(c0: f64, phase: f64) -> f64 {
    let c1 = 1.0 - c0;
    let (s, c) = phase.sin_cos();
    let (cc, ss) = (c * c, s * s);
    let sum = (c0 * c0 + c1 * c1) * cc + 2.0 * c0 * c1 * ss;
    let diff = c0 - c1;
    let delta = ((c0 * c0 - c1 * c1) * cc).powi(2) + 4.0 * c0 * c1 * diff * diff * cc * ss;
    let lambda_plus = 0.5 * (sum + delta.max(0.0).sqrt());
    // l+ l- = det R00 det R11 = (c0 c1)^2; avoids cancellation in (sum - sqrt(delta)) / 2.
    let lambda_minus = if lambda_plus > 0.0 {
        (c0 * c1).powi(2) / lambda_plus
    } else {
        0.0
    };
    let root = lambda_plus.max(0.0).sqrt() + lambda_minus.max(0.0).sqrt();
    (root * root).clamp(0.0, 1.0)
}

/// `prod_k cos(w_k t)`, signed.
pub fn bath_coherence(omegas: &[f64], t: f64) -> f64 {
    omegas.iter().map(|w| (w * t).cos()).product()
}

/// `prod_k [1 - 2 c0^k (1 - c0^k)]`.
pub fn bath_purity(occupations: &[f64]) -> Result<f64> {
    occupations.iter().try_fold(1.0, |acc, &c0| {
        check_occupation(c0)?;
        Ok(acc * (1.0 - 2.0 * c0 * (1.0 - c0)))
    })
}

/// Uniform grid of `points` samples over `[start, end]`, both ends included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, points: usize) -> Result<Self> {
        let grid = Self { start, end, points };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(QeeError::InvalidParameter(format!(
                "a time grid needs at least 2 points, got {}",
                self.points
            )));
        }
        if !(self.start.is_finite() && self.end.is_finite()) || self.end < self.start {
            return Err(QeeError::InvalidParameter(format!(
                "invalid time range [{}, {}]",
                self.start, self.end
            )));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let span = self.end - self.start;
        let last = (self.points - 1) as f64;
        (0..self.points)
            .map(|i| {
                if i + 1 == self.points {
                    self.end
                } else {
                    self.start + span * i as f64 / last
                }
            })
            .collect()
    }

    /// `tau in [0, 2 pi]`, 1000 points.
    pub fn figure1() -> Self {
        Self {
            start: 0.0,
            end: 2.0 * PI,
            points: 1000,
        }
    }

    /// Half the revival period of the default schedule for `k` qubits,
    /// `tau in [0, pi K (K + 1) / 4]`, with an odd point count so the
    /// midpoint `pi / (2 w_2)` is a grid point.
    pub fn figure2(k: usize) -> Self {
        Self {
            start: 0.0,
            end: half_revival(k),
            points: 1001,
        }
    }
}

/// Smallest `tau > 0` at which every `cos(w_k t)^2` of the default schedule
/// returns to one is `pi K (K + 1) / 2`; this returns half of it.
pub fn half_revival(k: usize) -> f64 {
    PI * (k * (k + 1)) as f64 / 4.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpinBathConfig {
    /// `c0^k` per environment qubit; `K` is its length.
    pub occupations: Vec<f64>,
    pub omega_max: f64,
    /// Replaces the default schedule when set.
    pub explicit_omegas: Option<Vec<f64>>,
    pub amps: QubitAmplitudes,
    pub grid: TimeGrid,
    /// Keep `F(R00^k, R11^k)` for every component and time.
    pub record_components: bool,
}

impl SpinBathConfig {
    /// All `k` qubits with occupation `c0`, equal superposition on the qubit.
    pub fn uniform(k: usize, c0: f64, omega_max: f64, grid: TimeGrid) -> Self {
        Self {
            occupations: vec![c0; k],
            omega_max,
            explicit_omegas: None,
            amps: QubitAmplitudes::equal_superposition(),
            grid,
            record_components: false,
        }
    }

    /// Like [`uniform`](Self::uniform) but qubit `j` (1-based) starts pure in `|0>`.
    pub fn with_pure_component(k: usize, j: usize, c0: f64, omega_max: f64, grid: TimeGrid) -> Result<Self> {
        if j == 0 || j > k {
            return Err(QeeError::InvalidParameter(format!(
                "pure component index must lie in 1..={k}, got {j}"
            )));
        }
        let mut cfg = Self::uniform(k, c0, omega_max, grid);
        cfg.occupations[j - 1] = 1.0;
        Ok(cfg)
    }

    pub fn k(&self) -> usize {
        self.occupations.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.occupations.is_empty() {
            return Err(QeeError::InvalidParameter("K must be at least 1".into()));
        }
        for &c0 in &self.occupations {
            check_occupation(c0)?;
        }
        if !(self.omega_max.is_finite() && self.omega_max > 0.0) {
            return Err(QeeError::InvalidParameter(format!(
                "omega_max must be positive, got {}",
                self.omega_max
            )));
        }
        if let Some(omegas) = &self.explicit_omegas {
            if omegas.len() != self.k() {
                return Err(QeeError::InvalidParameter(format!(
                    "{} explicit frequencies for {} qubits",
                    omegas.len(),
                    self.k()
                )));
            }
            if let Some(bad) = omegas.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
                return Err(QeeError::InvalidParameter(format!(
                    "frequencies must be positive, got {bad}"
                )));
            }
        }
        self.grid.validate()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.explicit_omegas
            .clone()
            .unwrap_or_else(|| omega_schedule(self.k(), self.omega_max))
    }

    /// The same bath as generic components (`V0^k = 0`, `V1^k = -w_k X`),
    /// for the general-purpose factored and full-space paths. Times there are
    /// physical, `t = tau / omega_max`.
    pub fn to_factored(&self) -> Result<FactoredEnvironment> {
        self.validate()?;
        let components = self
            .occupations
            .iter()
            .zip(self.omegas())
            .map(|(&c0, w)| {
                EnvComponent::new(
                    DensityMatrix::diagonal(&[c0, 1.0 - c0])?,
                    HermitianMatrix::zeros(2),
                    spin_generator(w),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        FactoredEnvironment::new(components)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Dimensionless `tau = omega_max * t`.
    pub times: Vec<f64>,
    pub qee: Vec<f64>,
    /// Signed `tr R01`.
    pub coherence: Vec<f64>,
    pub qubit_purity: Vec<f64>,
    pub fidelity_total: Vec<f64>,
    /// `K x n_points`, when requested.
    pub per_component_fidelity: Option<Vec<Vec<f64>>>,
}

struct Point {
    qee: f64,
    coherence: f64,
    purity: f64,
    fidelity: f64,
    components: Option<Vec<f64>>,
}

/// Evaluates the bath on every grid point. Time points are processed in
/// parallel on the current rayon pool; output order follows the grid.
pub fn run_sweep(config: &SpinBathConfig) -> Result<SweepResult> {
    config.validate()?;
    let omegas = config.omegas();
    let times = config.grid.times();
    let amps = config.amps;
    let record = config.record_components;

    let points: Vec<Point> = times
        .par_iter()
        .map(|&tau| {
            let t = tau / config.omega_max;
            let mut fidelity = 1.0;
            let mut per = record.then(|| Vec::with_capacity(omegas.len()));
            for (&c0, &w) in config.occupations.iter().zip(&omegas) {
                let f = component_fidelity_unchecked(c0, w * t);
                fidelity *= f;
                if let Some(p) = per.as_mut() {
                    p.push(f);
                }
            }
            let coherence = bath_coherence(&omegas, t);
            Point {
                qee: qee_from_fidelity(amps, fidelity),
                coherence,
                purity: purity_from_coherence(amps, coherence.abs()),
                fidelity,
                components: per,
            }
        })
        .collect();

    let per_component_fidelity = record.then(|| {
        (0..omegas.len())
            .map(|k| {
                points
                    .iter()
                    .map(|p| p.components.as_ref().expect("recorded")[k])
                    .collect()
            })
            .collect()
    });
    Ok(SweepResult {
        qee: points.iter().map(|p| p.qee).collect(),
        coherence: points.iter().map(|p| p.coherence).collect(),
        qubit_purity: points.iter().map(|p| p.purity).collect(),
        fidelity_total: points.iter().map(|p| p.fidelity).collect(),
        per_component_fidelity,
        times,
    })
}
