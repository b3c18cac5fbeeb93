//! The five commands. Each computes everything first and then writes its
//! files, so a failed run leaves no partial output.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use qee_core::measure::{purity_from_coherence, qee_from_fidelity, qee_of_state};
use qee_core::oracles::negativity;
use qee_core::spectral::fidelity;
use qee_core::verification::{run_all, SuiteConfig};
use qee_core::{
    run_sweep, FactoredEnvironment, OracleReport, QeeError, SpinBathConfig, SweepResult, TimeGrid, FULL_DIM_LIMIT,
};
use rayon::prelude::*;

use crate::config::{BenchParams, FactoredSpec, Figure1Params, Figure2Params, Mode, ModelSpec, RunConfig, Scenario};
use crate::error::{CliError, CliResult};
use crate::output::{num, Provenance, Table};

/// Per-time-point series shared by every scenario type.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Series {
    pub times: Vec<f64>,
    pub qee: Vec<f64>,
    /// `|tr R01|`.
    pub coherence: Vec<f64>,
    pub qubit_purity: Vec<f64>,
    pub fidelity_total: Vec<f64>,
    /// Extra named columns (per-component fidelities, cross-checks).
    pub extra: Vec<(String, Vec<f64>)>,
}

impl Series {
    pub fn from_sweep(sweep: SweepResult) -> Self {
        let extra = sweep
            .per_component_fidelity
            .map(|rows| {
                rows.into_iter()
                    .enumerate()
                    .map(|(k, row)| (format!("fidelity_{}", k + 1), row))
                    .collect()
            })
            .unwrap_or_default();
        Self {
            coherence: sweep.coherence.iter().map(|c| c.abs()).collect(),
            times: sweep.times,
            qee: sweep.qee,
            qubit_purity: sweep.qubit_purity,
            fidelity_total: sweep.fidelity_total,
            extra,
        }
    }

    pub fn table(&self) -> Table {
        let mut header: Vec<String> = ["t", "qee", "coherence", "qubit_purity", "fidelity_total"]
            .map(String::from)
            .to_vec();
        let mut columns: Vec<&[f64]> = vec![
            &self.times,
            &self.qee,
            &self.coherence,
            &self.qubit_purity,
            &self.fidelity_total,
        ];
        for (name, col) in &self.extra {
            header.push(name.clone());
            columns.push(col);
        }
        Table::from_columns(header, &columns)
    }

    fn coherence_table(&self) -> Table {
        Table::from_columns(vec!["t".into(), "coherence".into()], &[&self.times, &self.coherence])
    }
}

struct Point {
    qee: f64,
    coherence: f64,
    purity: f64,
    fidelity: f64,
    extra: Vec<f64>,
}

fn collect_points(times: Vec<f64>, points: Vec<Point>, extra_names: Vec<String>) -> Series {
    let extra = extra_names
        .into_iter()
        .enumerate()
        .map(|(i, name)| (name, points.iter().map(|p| p.extra[i]).collect()))
        .collect();
    Series {
        qee: points.iter().map(|p| p.qee).collect(),
        coherence: points.iter().map(|p| p.coherence).collect(),
        qubit_purity: points.iter().map(|p| p.purity).collect(),
        fidelity_total: points.iter().map(|p| p.fidelity).collect(),
        extra,
        times,
    }
}

fn model_series(spec: &ModelSpec) -> CliResult<Series> {
    let n = spec.environment.dim();
    if 2 * n > FULL_DIM_LIMIT {
        return Err(QeeError::DimensionGuard {
            dim: 2 * n,
            limit: FULL_DIM_LIMIT,
        }
        .into());
    }
    let times = spec.grid.times();
    let points = times
        .par_iter()
        .map(|&t| -> CliResult<Point> {
            let blocks = spec.environment.evolve(t)?;
            let f = fidelity(&blocks.r00, &blocks.r11)?;
            let coherence = blocks.trace_r01().norm();
            Ok(Point {
                qee: qee_from_fidelity(spec.amps, f),
                coherence,
                purity: purity_from_coherence(spec.amps, coherence),
                fidelity: f,
                extra: Vec::new(),
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(collect_points(times, points, Vec::new()))
}

fn factored_series(spec: &FactoredSpec) -> CliResult<Series> {
    let full = if spec.cross_check_full {
        Some(spec.environment.to_model()?)
    } else {
        None
    };
    let times = spec.grid.times();
    let k = spec.environment.components().len();
    let points = times
        .par_iter()
        .map(|&t| -> CliResult<Point> {
            let state = spec.environment.evolve_factored(spec.amps, t)?;
            let per = state
                .components
                .iter()
                .map(|c| fidelity(&c.r00, &c.r11))
                .collect::<qee_core::Result<Vec<_>>>()?;
            let f: f64 = per.iter().product();
            let mut extra = if spec.record_components { per } else { Vec::new() };
            if let Some(model) = &full {
                extra.push(qee_of_state(&model.evolve(spec.amps, t)?)?);
            }
            Ok(Point {
                qee: qee_from_fidelity(spec.amps, f),
                coherence: state.coherence(),
                purity: state.qubit_purity(),
                fidelity: f,
                extra,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let mut names: Vec<String> = if spec.record_components {
        (1..=k).map(|i| format!("fidelity_{i}")).collect()
    } else {
        Vec::new()
    };
    if full.is_some() {
        names.push("qee_full".into());
    }
    Ok(collect_points(times, points, names))
}

pub fn simulate(scenario: &Scenario) -> CliResult<Series> {
    match scenario {
        Scenario::SpinBath(cfg) => Ok(Series::from_sweep(run_sweep(cfg)?)),
        Scenario::Model(spec) => model_series(spec),
        Scenario::Factored(spec) => factored_series(spec),
    }
}

pub fn cmd_simulate(config: &RunConfig, out: &Path, provenance: &Provenance, points: Option<usize>) -> CliResult<Vec<PathBuf>> {
    let series = simulate(&config.scenario(points)?)?;
    series.table().write(out, provenance)?;
    Ok(vec![out.to_path_buf()])
}

fn c0_label(c0: f64) -> String {
    format!("{c0}")
}

/// Named tables for the figure-1 curves: one measure series per
/// `(K, c0)` and one coherence series per `K`.
pub fn figure1_tables(params: &Figure1Params) -> CliResult<Vec<(String, Table)>> {
    let mut files = Vec::new();
    for &k in &params.ks {
        let sweeps = params
            .c0s
            .iter()
            .map(|&c0| Ok((c0, Series::from_sweep(run_sweep(&SpinBathConfig::uniform(k, c0, params.omega_max, params.grid))?))))
            .collect::<CliResult<Vec<_>>>()?;
        for (c0, s) in &sweeps {
            files.push((format!("qee_K{k}_c0_{}.csv", c0_label(*c0)), s.table()));
        }
        files.push((format!("coherence_K{k}.csv"), sweeps[0].1.coherence_table()));
    }
    Ok(files)
}

/// Measure series with qubit `j` pure, for every `(c0, j)` pair, plus the
/// shared coherence series.
pub fn figure2_tables(params: &Figure2Params) -> CliResult<Vec<(String, Table)>> {
    let k = params.k;
    let mut files = Vec::new();
    let mut coherence = None;
    for &c0 in &params.c0s {
        for &j in &params.js {
            let cfg = SpinBathConfig::with_pure_component(k, j, c0, params.omega_max, params.grid)?;
            let s = Series::from_sweep(run_sweep(&cfg)?);
            coherence.get_or_insert_with(|| s.coherence_table());
            files.push((format!("qee_K{k}_j{j}_c0_{}.csv", c0_label(c0)), s.table()));
        }
    }
    files.push((format!("coherence_K{k}.csv"), coherence.expect("at least one series")));
    Ok(files)
}

fn write_all(dir: &Path, tables: Vec<(String, Table)>, provenance: &Provenance) -> CliResult<Vec<PathBuf>> {
    tables
        .into_iter()
        .map(|(name, table)| {
            let path = dir.join(name);
            table.write(&path, provenance)?;
            Ok(path)
        })
        .collect()
}

pub fn cmd_figure1(params: &Figure1Params, out_dir: &Path, provenance: &Provenance) -> CliResult<Vec<PathBuf>> {
    write_all(out_dir, figure1_tables(params)?, provenance)
}

pub fn cmd_figure2(params: &Figure2Params, out_dir: &Path, provenance: &Provenance) -> CliResult<Vec<PathBuf>> {
    write_all(out_dir, figure2_tables(params)?, provenance)
}

pub fn report_table(reports: &[OracleReport]) -> Table {
    let mut t = Table::new(["name", "passed", "observed", "threshold", "details"]);
    t.rows = reports
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.passed.to_string(),
                num(r.observed),
                num(r.threshold),
                r.details.clone(),
            ]
        })
        .collect();
    t
}

/// Runs every suite. Failing suites are reported through the returned
/// reports; the caller decides the exit status.
pub fn cmd_verify(suites: &SuiteConfig) -> CliResult<Vec<OracleReport>> {
    Ok(run_all(suites)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub k: usize,
    pub t_factored: f64,
    pub t_full_measure: Option<f64>,
    pub t_negativity: Option<f64>,
}

fn median_seconds(repetitions: usize, mut f: impl FnMut() -> CliResult<()>) -> CliResult<f64> {
    let mut samples = Vec::with_capacity(repetitions);
    for _ in 0..repetitions {
        let start = Instant::now();
        f()?;
        samples.push(start.elapsed().as_secs_f64());
    }
    samples.sort_by(f64::total_cmp);
    let mid = samples.len() / 2;
    Ok(if samples.len() % 2 == 1 {
        samples[mid]
    } else {
        0.5 * (samples[mid - 1] + samples[mid])
    })
}

/// Whether the full-space columns are timed for a qubit bath of size `k`.
pub fn full_feasible(k: usize, full_max_k: usize) -> bool {
    k <= full_max_k && k < usize::BITS as usize - 1 && 2 * (1usize << k) <= FULL_DIM_LIMIT
}

/// Times the generic factored path, the block measure on the assembled
/// environment and the negativity of the assembled joint matrix, all on the
/// same qubit bath. Runs sequentially on the calling thread.
pub fn bench_rows(params: &BenchParams) -> CliResult<Vec<BenchRow>> {
    params
        .ks
        .iter()
        .map(|&k| {
            let grid = TimeGrid::new(0.0, std::f64::consts::TAU, params.points)?;
            let cfg = SpinBathConfig::uniform(k, params.c0, params.omega_max, grid);
            let env: FactoredEnvironment = cfg.to_factored()?;
            let times: Vec<f64> = grid.times().iter().map(|tau| tau / params.omega_max).collect();
            let amps = cfg.amps;

            let t_factored = median_seconds(params.repetitions, || {
                for &t in &times {
                    std::hint::black_box(env.evolve_factored(amps, t)?.qee()?);
                }
                Ok(())
            })?;
            let (t_full_measure, t_negativity) = if full_feasible(k, params.full_max_k) {
                let model = env.to_model()?;
                let full = median_seconds(params.repetitions, || {
                    for &t in &times {
                        std::hint::black_box(qee_of_state(&model.evolve(amps, t)?)?);
                    }
                    Ok(())
                })?;
                let neg = median_seconds(params.repetitions, || {
                    for &t in &times {
                        std::hint::black_box(negativity(&model.evolve(amps, t)?.assemble_full()?)?);
                    }
                    Ok(())
                })?;
                (Some(full), Some(neg))
            } else {
                (None, None)
            };
            info!("bench K = {k}: factored {t_factored:.3e} s");
            Ok(BenchRow {
                k,
                t_factored,
                t_full_measure,
                t_negativity,
            })
        })
        .collect()
}

pub fn bench_table(rows: &[BenchRow]) -> Table {
    let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
    let mut t = Table::new(["K", "t_factored", "t_full_measure", "t_negativity"]);
    t.rows = rows
        .iter()
        .map(|r| vec![r.k.to_string(), num(r.t_factored), opt(r.t_full_measure), opt(r.t_negativity)])
        .collect();
    t
}

/// Least-squares slope of `log t` against `log K`.
pub fn scaling_exponent(points: &[(usize, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let xy: Vec<(f64, f64)> = points.iter().map(|&(k, t)| ((k as f64).ln(), t.ln())).collect();
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Exponent over the rows with `K >= 10`.
pub fn factored_exponent(rows: &[BenchRow]) -> Option<f64> {
    let pts: Vec<(usize, f64)> = rows.iter().filter(|r| r.k >= 10).map(|r| (r.k, r.t_factored)).collect();
    scaling_exponent(&pts)
}

/// What a finished command produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Lines for standard output.
    pub messages: Vec<String>,
}

/// Parsed command-line request.
#[derive(Debug, Clone)]
pub struct Invocation {
    pub mode: Mode,
    pub config: RunConfig,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub points: Option<usize>,
}

fn default_output(mode: Mode) -> PathBuf {
    PathBuf::from(match mode {
        Mode::Simulate => "simulate.csv",
        Mode::Figure1 => "figure1",
        Mode::Figure2 => "figure2",
        Mode::Verify => "verify.csv",
        Mode::Bench => "bench.csv",
    })
}

/// Runs one command. Verification failures come back as
/// [`CliError::VerificationFailed`] after the report has been written.
pub fn run(inv: &Invocation) -> CliResult<Outcome> {
    inv.config.check_mode(inv.mode)?;
    let seed = inv.seed.unwrap_or_else(|| inv.config.seed());
    let out = inv
        .out
        .clone()
        .or_else(|| inv.config.output.clone())
        .unwrap_or_else(|| default_output(inv.mode));
    let provenance = Provenance::new(inv.mode, &inv.config, seed, inv.points);
    let mut messages = Vec::new();
    let files = match inv.mode {
        Mode::Simulate => cmd_simulate(&inv.config, &out, &provenance, inv.points)?,
        Mode::Figure1 => cmd_figure1(&inv.config.figure1(inv.points)?, &out, &provenance)?,
        Mode::Figure2 => cmd_figure2(&inv.config.figure2(inv.points)?, &out, &provenance)?,
        Mode::Verify => {
            let reports = cmd_verify(&inv.config.suites(seed)?)?;
            report_table(&reports).write(&out, &provenance)?;
            messages.extend(reports.iter().map(ToString::to_string));
            let failed = reports.iter().filter(|r| !r.passed).count();
            let passed = reports.len() - failed;
            messages.push(format!("{passed}/{} suites passed", reports.len()));
            if failed > 0 {
                for m in &messages {
                    println!("{m}");
                }
                return Err(CliError::VerificationFailed {
                    failed,
                    total: reports.len(),
                });
            }
            vec![out]
        }
        Mode::Bench => {
            let rows = bench_rows(&inv.config.bench(inv.points)?)?;
            bench_table(&rows).write(&out, &provenance)?;
            if let Some(e) = factored_exponent(&rows) {
                messages.push(format!("factored path scaling exponent in K (K >= 10): {e:.3}"));
            }
            vec![out]
        }
    };
    Ok(Outcome { files, messages })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponent_of_power_laws() {
        let pts: Vec<(usize, f64)> = [10, 20, 40, 80].iter().map(|&k| (k, 3e-4 * (k as f64).powf(1.1))).collect();
        assert!((scaling_exponent(&pts).unwrap() - 1.1).abs() < 1e-12);
        assert!(scaling_exponent(&pts[..1]).is_none());
    }

    #[test]
    fn feasibility_guard() {
        assert!(full_feasible(3, 6));
        assert!(!full_feasible(8, 6));
        assert!(full_feasible(11, 20));
        assert!(!full_feasible(12, 20));
        assert!(!full_feasible(80, 100));
    }

    #[test]
    fn bench_columns() {
        let params = BenchParams {
            ks: vec![3, 80],
            points: 3,
            repetitions: 1,
            ..BenchParams::default()
        };
        let rows = bench_rows(&params).unwrap();
        assert!(rows[0].t_full_measure.is_some() && rows[0].t_negativity.is_some());
        assert!(rows[1].t_full_measure.is_none() && rows[1].t_negativity.is_none());
        let t = bench_table(&rows);
        assert_eq!(t.rows[1][2], "");
    }

    #[test]
    fn figure_file_sets() {
        let f1 = figure1_tables(&Figure1Params {
            grid: TimeGrid::new(0.0, 1.0, 5).unwrap(),
            ..Figure1Params::default()
        })
        .unwrap();
        assert_eq!(f1.len(), 6);
        let f2 = figure2_tables(&Figure2Params {
            grid: TimeGrid::new(0.0, 1.0, 5).unwrap(),
            ..Figure2Params::default()
        })
        .unwrap();
        assert_eq!(f2.len(), 7);
        assert!(f2.last().unwrap().0.starts_with("coherence"));
    }
}
