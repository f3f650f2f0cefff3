//! Run configuration: a TOML document plus `FRACVAR_<SECTION>__<KEY>`
//! environment overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fracvar::asymptotics::{PerturbationFamily, PerturbationKind, Tolerances, DEFAULT_ALPHAS};
use fracvar::grid::{Exponent, GeometrySpec};
use fracvar::kernels::QuadParams;
use serde::{Deserialize, Serialize};

use crate::exit::CliError;

pub const ENV_PREFIX: &str = "FRACVAR_";

/// Variables bound to command line flags rather than config keys.
const RESERVED: [&str; 4] = ["CONFIG", "OUT", "THREADS", "DETERMINISTIC"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub experiment: Experiments,
    #[serde(default)]
    pub seed: u64,
    /// Output directory used when `--out` is not given.
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub input: InputSpec,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub quadrature: QuadParams,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub gamma: GammaConfig,
    #[serde(default)]
    pub weak_star: WeakStarConfig,
    #[serde(default)]
    pub corpus: Vec<CorpusEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    AlphaToOne,
    BetaToAlpha,
    WeakStar,
    Gamma,
    Inequalities,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::AlphaToOne => "alpha_to_one",
            ExperimentKind::BetaToAlpha => "beta_to_alpha",
            ExperimentKind::WeakStar => "weak_star",
            ExperimentKind::Gamma => "gamma",
            ExperimentKind::Inequalities => "inequalities",
        }
    }
}

/// One experiment or a list run in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Experiments {
    One(ExperimentKind),
    Many(Vec<ExperimentKind>),
}

impl Default for Experiments {
    fn default() -> Self {
        Experiments::One(ExperimentKind::AlphaToOne)
    }
}

impl Experiments {
    pub fn list(&self) -> Vec<ExperimentKind> {
        match self {
            Experiments::One(k) => vec![*k],
            Experiments::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    pub half_width: f64,
    pub m: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 1,
            half_width: 8.0,
            m: 2049,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Bump {
        #[serde(default)]
        center: [f64; 2],
        #[serde(default = "one")]
        radius: f64,
        #[serde(default = "one")]
        height: f64,
    },
    GaussianCutoff {
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default = "four")]
        radius: f64,
    },
    RandomBumps {
        #[serde(default = "three")]
        count: usize,
        #[serde(default = "two")]
        reach: f64,
    },
    Zero,
    /// A field file written by `eval` (CSV, or binary for `.bin`).
    File {
        path: PathBuf,
    },
    Intervals {
        intervals: Vec<[f64; 2]>,
    },
    Polygons {
        rings: Vec<Vec<[f64; 2]>>,
    },
    /// A JSON geometry file: a list of intervals or a list of rings.
    Geometry {
        path: PathBuf,
    },
}

impl Default for InputSpec {
    fn default() -> Self {
        InputSpec::GaussianCutoff {
            sigma: 1.0,
            radius: 4.0,
        }
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

fn three() -> usize {
    3
}

fn four() -> f64 {
    4.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Gradient,
    Divergence,
    Riesz,
    Duality,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorConfig {
    #[serde(default = "gradient")]
    pub quantity: Quantity,
    #[serde(default = "half")]
    pub alpha: f64,
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "default_betas")]
    pub betas: Vec<f64>,
    #[serde(default = "p_one")]
    pub p: Exponent,
    #[serde(default = "half")]
    pub sigma: f64,
    /// Largest acceptable declared tolerance of an `eval` run.
    pub budget: Option<f64>,
}

fn gradient() -> Quantity {
    Quantity::Gradient
}

fn half() -> f64 {
    0.5
}

fn default_alphas() -> Vec<f64> {
    DEFAULT_ALPHAS.to_vec()
}

fn default_betas() -> Vec<f64> {
    vec![0.5, 0.6, 0.65, 0.69]
}

fn p_one() -> Exponent {
    Exponent::One
}

impl Default for OperatorConfig {
    fn default() -> Self {
        Self {
            quantity: Quantity::Gradient,
            alpha: 0.5,
            alphas: default_alphas(),
            betas: default_betas(),
            p: Exponent::One,
            sigma: 0.5,
            budget: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldFormat {
    #[default]
    Csv,
    Binary,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: FieldFormat,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GammaConfig {
    /// Base set as a list of intervals.
    #[serde(default = "gamma_set")]
    pub set: Vec<[f64; 2]>,
    #[serde(default = "gamma_window")]
    pub window: [f64; 2],
    #[serde(default = "gamma_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "gamma_families")]
    pub families: Vec<PerturbationFamily>,
}

fn gamma_set() -> Vec<[f64; 2]> {
    vec![[0.0, 1.0]]
}

fn gamma_window() -> [f64; 2] {
    [-2.0, 2.0]
}

fn gamma_alphas() -> Vec<f64> {
    vec![0.9, 0.95, 0.99, 0.995, 0.999]
}

fn gamma_families() -> Vec<PerturbationFamily> {
    vec![
        PerturbationFamily::new(PerturbationKind::Translation, 0.2, 1.0),
        PerturbationFamily::new(PerturbationKind::Dilation, 0.3, 0.5),
        PerturbationFamily::new(
            PerturbationKind::AdditiveHat {
                center: 0.5,
                radius: 0.25,
            },
            0.5,
            1.0,
        ),
    ]
}

impl Default for GammaConfig {
    fn default() -> Self {
        Self {
            set: gamma_set(),
            window: gamma_window(),
            alphas: gamma_alphas(),
            families: gamma_families(),
        }
    }
}

/// A bump test function.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestBump {
    #[serde(default)]
    pub center: [f64; 2],
    pub radius: f64,
    #[serde(default = "one")]
    pub height: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakStarConfig {
    #[serde(default = "weak_star_alphas")]
    pub alphas: Vec<f64>,
    #[serde(default = "weak_star_tests")]
    pub tests: Vec<TestBump>,
}

fn weak_star_alphas() -> Vec<f64> {
    vec![0.9, 0.99, 0.999]
}

fn weak_star_tests() -> Vec<TestBump> {
    vec![
        TestBump {
            center: [0.2, 0.0],
            radius: 0.5,
            height: 1.0,
        },
        TestBump {
            center: [0.9, 0.0],
            radius: 0.4,
            height: 2.0,
        },
    ]
}

impl Default for WeakStarConfig {
    fn default() -> Self {
        Self {
            alphas: weak_star_alphas(),
            tests: weak_star_tests(),
        }
    }
}

/// Entry of the inequality corpus. Fields use their own grid when given,
/// else the run grid; sets use `window` (an interval in 1D, a box in 2D,
/// or the whole space when absent).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusEntry {
    pub name: String,
    pub input: InputSpec,
    pub grid: Option<GridConfig>,
    pub window: Option<Vec<f64>>,
}

impl RunConfig {
    /// Reads the file (if any), applies environment overrides and validates.
    pub fn load(path: Option<&Path>, env: &BTreeMap<String, String>) -> Result<Self, CliError> {
        let mut doc = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                text.parse::<toml::Table>()
                    .map_err(|e| CliError::Config(format!("invalid config {}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        apply_overrides(&mut doc, env)?;
        let cfg: RunConfig = toml::Value::Table(doc)
            .try_into()
            .map_err(|e| CliError::Config(format!("invalid config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.quadrature.validate().map_err(CliError::from)?;
        if let Some(b) = self.operator.budget {
            if !(b > 0.0) {
                return Err(CliError::Config("operator.budget must be positive".into()));
            }
        }
        if self.gamma.window[0] >= self.gamma.window[1] {
            return Err(CliError::Config("gamma.window must be an increasing pair".into()));
        }
        Ok(())
    }
}

/// Applies `FRACVAR_KEY=value` and `FRACVAR_SECTION__KEY=value`. Values are
/// parsed as TOML when possible (numbers, arrays, booleans) and kept as
/// strings otherwise.
pub fn apply_overrides(doc: &mut toml::Table, env: &BTreeMap<String, String>) -> Result<(), CliError> {
    for (name, raw) in env {
        let Some(key) = name.strip_prefix(ENV_PREFIX) else {
            continue;
        };
        if RESERVED.contains(&key) {
            continue;
        }
        let path: Vec<String> = key.split("__").map(|s| s.to_ascii_lowercase()).collect();
        if path.iter().any(String::is_empty) {
            return Err(CliError::Config(format!("malformed override variable {name}")));
        }
        let value = parse_value(raw);
        let (last, parents) = path.split_last().expect("non-empty path");
        let mut table = &mut *doc;
        for p in parents {
            let entry = table
                .entry(p.clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            table = entry
                .as_table_mut()
                .ok_or_else(|| CliError::Config(format!("override {name}: '{p}' is not a section")))?;
        }
        table.insert(last.clone(), value);
    }
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

/// Reads a JSON geometry file.
pub fn read_geometry(path: &Path) -> Result<GeometrySpec, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read geometry {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("invalid geometry {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::load(None, &BTreeMap::new()).unwrap();
        assert_eq!(cfg.grid.n, 1);
        assert_eq!(cfg.experiment.list(), vec![ExperimentKind::AlphaToOne]);
        assert_eq!(cfg.gamma.families.len(), 3);
    }

    #[test]
    fn overrides_reach_nested_keys() {
        let e = env(&[
            ("FRACVAR_GRID__M", "129"),
            ("FRACVAR_OPERATOR__ALPHAS", "[0.9, 0.99]"),
            ("FRACVAR_OPERATOR__QUANTITY", "riesz"),
            ("FRACVAR_EXPERIMENT", "gamma"),
            ("FRACVAR_OUT", "ignored"),
            ("OTHER", "1"),
        ]);
        let cfg = RunConfig::load(None, &e).unwrap();
        assert_eq!(cfg.grid.m, 129);
        assert_eq!(cfg.operator.alphas, vec![0.9, 0.99]);
        assert_eq!(cfg.operator.quantity, Quantity::Riesz);
        assert_eq!(cfg.experiment.list(), vec![ExperimentKind::Gamma]);
        assert!(cfg.out.is_none());
    }

    #[test]
    fn tagged_sections_parse() {
        let text = r#"
            experiment = ["alpha_to_one", "gamma"]
            [input]
            kind = "intervals"
            intervals = [[0.0, 1.0]]
            [[gamma.families]]
            kind = "additive_hat"
            center = 0.5
            radius = 0.25
            amplitude = 0.5
            [[corpus]]
            name = "b"
            input = { kind = "bump", radius = 1.5 }
        "#;
        let cfg: RunConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.experiment.list().len(), 2);
        assert_eq!(
            cfg.gamma.families[0].kind,
            PerturbationKind::AdditiveHat {
                center: 0.5,
                radius: 0.25
            }
        );
        assert_eq!(cfg.gamma.families[0].power, 1.0);
        assert_eq!(cfg.corpus.len(), 1);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(toml::from_str::<RunConfig>("[grid]\nsize = 3").is_err());
    }
}
