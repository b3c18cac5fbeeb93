//! TOML run configuration. See `docs/config.md` for the schema.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use qee_core::verification::{SuiteConfig, SuiteCounts, SuiteTolerances};
use qee_core::{
    c64, CMatrix, CVector, Complex64, DensityMatrix, EnvComponent, FactoredEnvironment, HermitianMatrix, QubitAmplitudes,
    SpinBathConfig, TimeGrid,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

/// `[re, im]`.
pub type Complex = [f64; 2];
pub type MatrixRows = Vec<Vec<Complex>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Simulate,
    Figure1,
    Figure2,
    Verify,
    Bench,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Figure1 => "figure1",
            Mode::Figure2 => "figure2",
            Mode::Verify => "verify",
            Mode::Bench => "bench",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    /// Verification tolerance overrides by suite tolerance name.
    pub tolerances: Option<BTreeMap<String, f64>>,
    pub spin_bath: Option<SpinBathSection>,
    pub model: Option<ModelSection>,
    pub factored: Option<FactoredSection>,
    pub figure1: Option<Figure1Section>,
    pub figure2: Option<Figure2Section>,
    pub verify: Option<VerifySection>,
    pub bench: Option<BenchSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub start: Option<f64>,
    pub end: Option<f64>,
    pub points: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSection {
    pub a: Complex,
    pub b: Complex,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpinBathSection {
    pub k: Option<usize>,
    /// Uniform occupation; ignored when `occupations` is given.
    pub c0: Option<f64>,
    pub occupations: Option<Vec<f64>>,
    /// 1-based index of a qubit that starts pure in `|0>`.
    pub pure_component: Option<usize>,
    pub omega_max: Option<f64>,
    pub omegas: Option<Vec<f64>>,
    pub amplitudes: Option<AmplitudeSection>,
    pub record_components: Option<bool>,
    pub grid: Option<GridSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSection {
    pub v0: MatrixRows,
    pub v1: MatrixRows,
    pub initial: Option<MatrixRows>,
    pub initial_pure: Option<Vec<Complex>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub v0: MatrixRows,
    pub v1: MatrixRows,
    pub initial: Option<MatrixRows>,
    pub initial_pure: Option<Vec<Complex>>,
    pub amplitudes: Option<AmplitudeSection>,
    pub grid: Option<GridSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactoredSection {
    pub components: Vec<ComponentSection>,
    pub amplitudes: Option<AmplitudeSection>,
    pub grid: Option<GridSection>,
    pub record_components: Option<bool>,
    /// Also evaluate on the assembled tensor-product space (guarded).
    pub cross_check_full: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure1Section {
    pub k: Option<usize>,
    /// Several bath sizes; overrides `k`.
    pub k_list: Option<Vec<usize>>,
    pub c0: Option<Vec<f64>>,
    pub omega_max: Option<f64>,
    pub grid: Option<GridSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Figure2Section {
    pub k: Option<usize>,
    pub j: Option<Vec<usize>>,
    pub c0: Option<Vec<f64>>,
    pub omega_max: Option<f64>,
    pub grid: Option<GridSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    pub counts: Option<BTreeMap<String, usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub k_list: Option<Vec<usize>>,
    pub points: Option<usize>,
    pub repetitions: Option<usize>,
    /// Largest `K` for which the full-space columns are timed.
    pub full_max_k: Option<usize>,
    pub c0: Option<f64>,
    pub omega_max: Option<f64>,
}

pub const DEFAULT_SEED: u64 = 20_241_017;
pub const DEFAULT_K: usize = 10;
pub const FIGURE1_C0: [f64; 5] = [0.6, 0.7, 0.8, 0.9, 1.0];
pub const FIGURE2_C0: [f64; 2] = [0.6, 0.8];
pub const FIGURE2_J: [usize; 3] = [1, 2, 3];
pub const BENCH_K: [usize; 10] = [2, 3, 4, 5, 6, 8, 10, 20, 40, 80];

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.check_finite()?;
        Ok(cfg)
    }

    /// Canonical TOML of the effective configuration.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Rejects a `mode` key that disagrees with the requested command.
    pub fn check_mode(&self, mode: Mode) -> CliResult<()> {
        match self.mode {
            Some(m) if m != mode => Err(config_err(format!(
                "config is for mode `{}`, but `{}` was requested",
                m.name(),
                mode.name()
            ))),
            _ => Ok(()),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    fn check_finite(&self) -> CliResult<()> {
        // Every float in the file, found through the serialized form.
        fn walk(v: &toml::Value, path: &str) -> CliResult<()> {
            match v {
                toml::Value::Float(x) if !x.is_finite() => Err(config_err(format!("`{path}` is not finite"))),
                toml::Value::Array(items) => items
                    .iter()
                    .enumerate()
                    .try_for_each(|(i, x)| walk(x, &format!("{path}[{i}]"))),
                toml::Value::Table(t) => t.iter().try_for_each(|(k, x)| {
                    walk(x, &if path.is_empty() { k.clone() } else { format!("{path}.{k}") })
                }),
                _ => Ok(()),
            }
        }
        let value = toml::Value::try_from(self).map_err(|e| config_err(e.to_string()))?;
        walk(&value, "")
    }
}

fn grid_from(section: Option<&GridSection>, default: TimeGrid, points: Option<usize>, field: &str) -> CliResult<TimeGrid> {
    let s = section.cloned().unwrap_or_default();
    let grid = TimeGrid {
        start: s.start.unwrap_or(default.start),
        end: s.end.unwrap_or(default.end),
        points: points.or(s.points).unwrap_or(default.points),
    };
    grid.validate().map_err(|e| config_err(format!("{field}: {e}")))?;
    Ok(grid)
}

fn complex(z: Complex) -> Complex64 {
    c64(z[0], z[1])
}

fn matrix(rows: &MatrixRows, field: &str) -> CliResult<CMatrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(config_err(format!("`{field}` must be a non-empty square matrix")));
    }
    let data: Vec<_> = rows.iter().flatten().map(|z| complex(*z)).collect();
    Ok(CMatrix::from_row_slice(n, n, &data))
}

fn amplitudes(section: Option<&AmplitudeSection>, field: &str) -> CliResult<QubitAmplitudes> {
    match section {
        None => Ok(QubitAmplitudes::equal_superposition()),
        Some(s) => QubitAmplitudes::new(complex(s.a), complex(s.b))
            .map_err(|e| config_err(format!("`{field}.amplitudes`: {e}"))),
    }
}

impl ComponentSection {
    pub fn build(&self, field: &str) -> CliResult<EnvComponent> {
        let wrap = |what: &str, e: qee_core::QeeError| config_err(format!("`{field}.{what}`: {e}"));
        let v0 = HermitianMatrix::new(matrix(&self.v0, &format!("{field}.v0"))?).map_err(|e| wrap("v0", e))?;
        let v1 = HermitianMatrix::new(matrix(&self.v1, &format!("{field}.v1"))?).map_err(|e| wrap("v1", e))?;
        let initial = match (&self.initial, &self.initial_pure) {
            (Some(rows), None) => {
                DensityMatrix::new(matrix(rows, &format!("{field}.initial"))?).map_err(|e| wrap("initial", e))?
            }
            (None, Some(psi)) => {
                let v = CVector::from_iterator(psi.len(), psi.iter().map(|z| complex(*z)));
                DensityMatrix::pure(&v).map_err(|e| wrap("initial_pure", e))?
            }
            _ => {
                return Err(config_err(format!(
                    "`{field}` needs exactly one of `initial` or `initial_pure`"
                )))
            }
        };
        EnvComponent::new(initial, v0, v1).map_err(|e| config_err(format!("`{field}`: {e}")))
    }
}

/// A generic model resolved from `[model]`.
#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub environment: EnvComponent,
    pub amps: QubitAmplitudes,
    pub grid: TimeGrid,
}

/// A product environment resolved from `[factored]`.
#[derive(Debug, Clone)]
pub struct FactoredSpec {
    pub environment: FactoredEnvironment,
    pub amps: QubitAmplitudes,
    pub grid: TimeGrid,
    pub record_components: bool,
    pub cross_check_full: bool,
}

#[derive(Debug, Clone)]
pub enum Scenario {
    SpinBath(SpinBathConfig),
    Model(ModelSpec),
    Factored(FactoredSpec),
}

impl SpinBathSection {
    pub fn build(&self, points: Option<usize>) -> CliResult<SpinBathConfig> {
        let k = match (self.k, &self.occupations) {
            (Some(k), Some(occ)) if k != occ.len() => {
                return Err(config_err(format!(
                    "`spin_bath.k` = {k} but {} occupations are given",
                    occ.len()
                )))
            }
            (_, Some(occ)) => occ.len(),
            (Some(k), None) => k,
            (None, None) => DEFAULT_K,
        };
        let omega_max = self.omega_max.unwrap_or(1.0);
        let grid = grid_from(self.grid.as_ref(), TimeGrid::figure1(), points, "spin_bath.grid")?;
        let mut cfg = SpinBathConfig::uniform(k, self.c0.unwrap_or(0.6), omega_max, grid);
        if let Some(occ) = &self.occupations {
            cfg.occupations = occ.clone();
        }
        if let Some(j) = self.pure_component {
            if j == 0 || j > k {
                return Err(config_err(format!("`spin_bath.pure_component` must lie in 1..={k}, got {j}")));
            }
            cfg.occupations[j - 1] = 1.0;
        }
        cfg.explicit_omegas = self.omegas.clone();
        cfg.amps = amplitudes(self.amplitudes.as_ref(), "spin_bath")?;
        cfg.record_components = self.record_components.unwrap_or(false);
        cfg.validate().map_err(|e| config_err(format!("`spin_bath`: {e}")))?;
        Ok(cfg)
    }
}

impl RunConfig {
    /// The single scenario for `simulate`.
    pub fn scenario(&self, points: Option<usize>) -> CliResult<Scenario> {
        let default_grid = TimeGrid::figure1();
        match (&self.spin_bath, &self.model, &self.factored) {
            (Some(s), None, None) => Ok(Scenario::SpinBath(s.build(points)?)),
            (None, Some(m), None) => Ok(Scenario::Model(ModelSpec {
                environment: ComponentSection {
                    v0: m.v0.clone(),
                    v1: m.v1.clone(),
                    initial: m.initial.clone(),
                    initial_pure: m.initial_pure.clone(),
                }
                .build("model")?,
                amps: amplitudes(m.amplitudes.as_ref(), "model")?,
                grid: grid_from(m.grid.as_ref(), default_grid, points, "model.grid")?,
            })),
            (None, None, Some(f)) => {
                let components = f
                    .components
                    .iter()
                    .enumerate()
                    .map(|(i, c)| c.build(&format!("factored.components[{i}]")))
                    .collect::<CliResult<Vec<_>>>()?;
                Ok(Scenario::Factored(FactoredSpec {
                    environment: FactoredEnvironment::new(components)
                        .map_err(|e| config_err(format!("`factored`: {e}")))?,
                    amps: amplitudes(f.amplitudes.as_ref(), "factored")?,
                    grid: grid_from(f.grid.as_ref(), default_grid, points, "factored.grid")?,
                    record_components: f.record_components.unwrap_or(false),
                    cross_check_full: f.cross_check_full.unwrap_or(false),
                }))
            }
            _ => Err(config_err(
                "simulate needs exactly one of [spin_bath], [model] or [factored]",
            )),
        }
    }

    pub fn figure1(&self, points: Option<usize>) -> CliResult<Figure1Params> {
        let s = self.figure1.clone().unwrap_or_default();
        let ks = match (&s.k_list, s.k) {
            (Some(list), _) => list.clone(),
            (None, k) => vec![k.unwrap_or(DEFAULT_K)],
        };
        if ks.is_empty() || ks.contains(&0) {
            return Err(config_err("`figure1`: every K must be at least 1"));
        }
        let c0s = s.c0.clone().unwrap_or_else(|| FIGURE1_C0.to_vec());
        check_occupations(&c0s, "figure1.c0")?;
        Ok(Figure1Params {
            ks,
            c0s,
            omega_max: positive(s.omega_max.unwrap_or(1.0), "figure1.omega_max")?,
            grid: grid_from(s.grid.as_ref(), TimeGrid::figure1(), points, "figure1.grid")?,
        })
    }

    pub fn figure2(&self, points: Option<usize>) -> CliResult<Figure2Params> {
        let s = self.figure2.clone().unwrap_or_default();
        let k = s.k.unwrap_or(DEFAULT_K);
        if k == 0 {
            return Err(config_err("`figure2.k` must be at least 1"));
        }
        let js = s.j.clone().unwrap_or_else(|| FIGURE2_J.iter().copied().filter(|&j| j <= k).collect());
        if js.is_empty() {
            return Err(config_err("`figure2.j` is empty"));
        }
        if let Some(bad) = js.iter().find(|&&j| j == 0 || j > k) {
            return Err(config_err(format!("`figure2.j` entries must lie in 1..={k}, got {bad}")));
        }
        let c0s = s.c0.clone().unwrap_or_else(|| FIGURE2_C0.to_vec());
        check_occupations(&c0s, "figure2.c0")?;
        Ok(Figure2Params {
            k,
            js,
            c0s,
            omega_max: positive(s.omega_max.unwrap_or(1.0), "figure2.omega_max")?,
            grid: grid_from(s.grid.as_ref(), TimeGrid::figure2(k), points, "figure2.grid")?,
        })
    }

    pub fn suites(&self, seed: u64) -> CliResult<SuiteConfig> {
        let mut counts = SuiteCounts::default();
        if let Some(map) = self.verify.as_ref().and_then(|v| v.counts.as_ref()) {
            for (name, &n) in map {
                let slot = match name.as_str() {
                    "pure_state" => &mut counts.pure_state,
                    "separability" => &mut counts.separability,
                    "channels" => &mut counts.channels,
                    "channel_states" => &mut counts.channel_states,
                    "local_unitary" => &mut counts.local_unitary,
                    "factored_points" => &mut counts.factored_points,
                    "negativity" => &mut counts.negativity,
                    "strict_orthogonality" => &mut counts.strict_orthogonality,
                    other => return Err(config_err(format!("`verify.counts`: unknown suite `{other}`"))),
                };
                *slot = n;
            }
        }
        let mut tolerances = SuiteTolerances::default();
        for (name, &value) in self.tolerances.iter().flatten() {
            if !tolerances.set(name, value) {
                return Err(config_err(format!(
                    "`tolerances`: unknown name `{name}` (expected one of {})",
                    SuiteTolerances::NAMES.join(", ")
                )));
            }
        }
        Ok(SuiteConfig {
            seed,
            counts,
            tolerances,
        })
    }

    pub fn bench(&self, points: Option<usize>) -> CliResult<BenchParams> {
        let s = self.bench.clone().unwrap_or_default();
        let ks = s.k_list.clone().unwrap_or_else(|| BENCH_K.to_vec());
        if ks.is_empty() || ks.contains(&0) {
            return Err(config_err("`bench.k_list`: every K must be at least 1"));
        }
        let c0 = s.c0.unwrap_or(0.6);
        check_occupations(&[c0], "bench.c0")?;
        let repetitions = s.repetitions.unwrap_or(5);
        if repetitions == 0 {
            return Err(config_err("`bench.repetitions` must be at least 1"));
        }
        let points = points.or(s.points).unwrap_or(10);
        if points < 2 {
            return Err(config_err("`bench.points` must be at least 2"));
        }
        Ok(BenchParams {
            ks,
            points,
            repetitions,
            full_max_k: s.full_max_k.unwrap_or(6),
            c0,
            omega_max: positive(s.omega_max.unwrap_or(1.0), "bench.omega_max")?,
        })
    }
}

fn check_occupations(c0s: &[f64], field: &str) -> CliResult<()> {
    if c0s.is_empty() {
        return Err(config_err(format!("`{field}` is empty")));
    }
    match c0s.iter().find(|c| !(0.0..=1.0).contains(*c)) {
        Some(bad) => Err(config_err(format!("`{field}` entries must lie in [0, 1], got {bad}"))),
        None => Ok(()),
    }
}

fn positive(x: f64, field: &str) -> CliResult<f64> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(config_err(format!("`{field}` must be positive, got {x}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure1Params {
    pub ks: Vec<usize>,
    pub c0s: Vec<f64>,
    pub omega_max: f64,
    pub grid: TimeGrid,
}

impl Default for Figure1Params {
    fn default() -> Self {
        RunConfig::default().figure1(None).expect("defaults are valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure2Params {
    pub k: usize,
    pub js: Vec<usize>,
    pub c0s: Vec<f64>,
    pub omega_max: f64,
    pub grid: TimeGrid,
}

impl Default for Figure2Params {
    fn default() -> Self {
        RunConfig::default().figure2(None).expect("defaults are valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchParams {
    pub ks: Vec<usize>,
    pub points: usize,
    pub repetitions: usize,
    pub full_max_k: usize,
    pub c0: f64,
    pub omega_max: f64,
}

impl Default for BenchParams {
    fn default() -> Self {
        RunConfig::default().bench(None).expect("defaults are valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        let f1 = cfg.figure1(None).unwrap();
        assert_eq!(f1.ks, vec![10]);
        assert_eq!(f1.c0s.len(), 5);
        assert_eq!(f1.grid.points, 1000);
        assert_eq!(f1.grid.end, 2.0 * PI);
        let f2 = cfg.figure2(Some(11)).unwrap();
        assert_eq!(f2.grid.points, 11);
        assert_eq!(f2.grid.end, qee_core::spinbath::half_revival(10));
        assert_eq!(cfg.seed(), DEFAULT_SEED);
    }

    #[test]
    fn parse_errors_name_the_field() {
        let err = RunConfig::parse("[spin_bath]\nk = \"ten\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") || msg.contains("spin_bath"), "{msg}");
        assert_eq!(err.exit_code(), 2);

        let err = RunConfig::parse("[spin_bath]\nkk = 3\n").unwrap_err();
        assert!(err.to_string().contains("kk"));
        let err = RunConfig::parse("[spin_bath]\nc0 = nan\n").unwrap_err();
        assert!(err.to_string().contains("spin_bath.c0"), "{err}");
    }

    #[test]
    fn spin_bath_section() {
        let cfg = RunConfig::parse(
            "[spin_bath]\nk = 3\nc0 = 0.7\npure_component = 2\n[spin_bath.grid]\nend = 1.0\npoints = 5\n",
        )
        .unwrap();
        let Scenario::SpinBath(sb) = cfg.scenario(None).unwrap() else {
            panic!("expected a spin bath");
        };
        assert_eq!(sb.occupations, vec![0.7, 1.0, 0.7]);
        assert_eq!(sb.grid.points, 5);
        assert!(RunConfig::parse("[spin_bath]\nk = 3\npure_component = 4\n")
            .unwrap()
            .scenario(None)
            .is_err());
        assert!(RunConfig::parse("").unwrap().scenario(None).is_err());
    }

    #[test]
    fn model_section() {
        let text = r#"
[model]
v0 = [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]
v1 = [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]
initial_pure = [[1, 0], [0, 0]]
amplitudes = { a = [0.6, 0], b = [0, 0.8] }
"#;
        let Scenario::Model(m) = RunConfig::parse(text).unwrap().scenario(Some(7)).unwrap() else {
            panic!("expected a model");
        };
        assert_eq!(m.environment.dim(), 2);
        assert_eq!(m.grid.points, 7);
        let bad = text.replace("[0, 0.8]", "[0, 0.9]");
        assert!(RunConfig::parse(&bad).unwrap().scenario(None).is_err());
    }

    #[test]
    fn tolerance_and_count_overrides() {
        let cfg = RunConfig::parse("[tolerances]\npure_state = -1.0\n[verify.counts]\npure_state = 3\n").unwrap();
        let s = cfg.suites(1).unwrap();
        assert_eq!(s.tolerances.pure_state, -1.0);
        assert_eq!(s.counts.pure_state, 3);
        assert!(RunConfig::parse("[tolerances]\nbogus = 1.0\n").unwrap().suites(1).is_err());
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let cfg = RunConfig::parse("mode = \"figure1\"\n").unwrap();
        assert!(cfg.check_mode(Mode::Figure1).is_ok());
        assert_eq!(cfg.check_mode(Mode::Bench).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn serialization_round_trips() {
        let cfg = RunConfig::parse("seed = 5\n[figure2]\nj = [2]\n[figure2.grid]\npoints = 9\n").unwrap();
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }
}
