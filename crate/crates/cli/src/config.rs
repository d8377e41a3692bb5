//! TOML experiment configuration.
//!
//! ```toml
//! [model]
//! symmetric_lambda = 0.5          # or: transitions = [[...], ...]
//! noise = { kind = "bsc", p = 0.2 }
//!
//! [eps]
//! log_grid = { min = 1e-4, max = 0.9, points = 13 }   # or: values = [...]
//!
//! [estimator]
//! replicas = 2
//! seed = 1
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Noise kinds: `bsc { p }`, `discrete { alphabet, probs }`,
//! `gaussian { means, sigma }`, `tabulated { grid, weights, densities }`.
//! Every table rejects unknown keys.

use std::path::{Path, PathBuf};

use filterstab_core::noise::TabulatedNoise;
use filterstab_core::{EstimatorConfig, HmmSpec, NoiseModel, SimplexVector, TransitionMatrix};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub eps: EpsGrid,
    #[serde(default)]
    pub estimator: EstimatorSettings,
    #[serde(default)]
    pub run: RunSelection,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// State labels; defaults to `0, 1, ..., d-1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<f64>>,
    /// Base transition matrix `Λ`, row-stochastic.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transitions: Option<Vec<Vec<f64>>>,
    /// Shorthand for the symmetric two-state chain `[[1-λ, λ], [λ, 1-λ]]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symmetric_lambda: Option<f64>,
    pub noise: NoiseConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum NoiseConfig {
    Bsc { p: f64 },
    Discrete { alphabet: Vec<f64>, probs: Vec<Vec<f64>> },
    Gaussian { means: Vec<f64>, sigma: f64 },
    Tabulated { grid: Vec<f64>, weights: Vec<f64>, densities: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_grid: Option<LogGrid>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSettings {
    /// Total steps per replica including burn-in; defaults to `max(10⁶, 100/ε)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<u64>,
    #[serde(default = "default_batches")]
    pub batches: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nu_bar: Option<Vec<f64>>,
}

fn default_batches() -> usize {
    filterstab_core::estimators::DEFAULT_BATCHES
}

fn default_replicas() -> usize {
    1
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self { n: None, burn_in: None, batches: default_batches(), replicas: 1, seed: 0, nu: None, nu_bar: None }
    }
}

/// Optional estimators; `γ`, `λ₁` and the wedge rate always run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSelection {
    #[serde(default = "yes")]
    pub entropy_rate: bool,
    #[serde(default = "yes")]
    pub misclassification: bool,
}

fn yes() -> bool {
    true
}

impl Default for RunSelection {
    fn default() -> Self {
        Self { entropy_rate: true, misclassification: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_plotdata")]
    pub plotdata: String,
    #[serde(default = "default_manifest")]
    pub manifest: String,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_csv() -> String {
    "sweep.csv".into()
}
fn default_plotdata() -> String {
    "plotdata.dat".into()
}
fn default_manifest() -> String {
    "manifest.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir(), csv: default_csv(), plotdata: default_plotdata(), manifest: default_manifest() }
    }
}

impl ExperimentConfig {
    /// Parses and validates a TOML document.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_owned(), source })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// The model with `ε = 1`, i.e. on the base chain.
    pub fn base_spec(&self) -> Result<HmmSpec, CliError> {
        let m = &self.model;
        let base = match (&m.transitions, m.symmetric_lambda) {
            (Some(rows), None) => TransitionMatrix::new(rows),
            (None, Some(l)) => TransitionMatrix::symmetric_two_state(l),
            _ => return Err(field("model", "set exactly one of `transitions` or `symmetric_lambda`")),
        }
        .map_err(|e| field("model.transitions", e))?;
        let noise = match &m.noise {
            NoiseConfig::Bsc { p } => NoiseModel::binary_symmetric(*p),
            NoiseConfig::Discrete { alphabet, probs } => NoiseModel::discrete(alphabet.clone(), probs),
            NoiseConfig::Gaussian { means, sigma } => NoiseModel::gaussian(means.clone(), *sigma),
            NoiseConfig::Tabulated { grid, weights, densities } => {
                TabulatedNoise::new(grid.clone(), weights.clone(), densities.clone()).map(NoiseModel::Tabulated)
            }
        }
        .map_err(|e| field("model.noise", e))?;
        let states = m.states.clone().unwrap_or_else(|| (0..base.dim()).map(|i| i as f64).collect());
        HmmSpec::new(states, base, noise, 1.0).map_err(|e| field("model", e))
    }

    /// Resolved ε grid, in the order given (log grids ascend).
    pub fn eps_values(&self) -> Result<Vec<f64>, CliError> {
        match (&self.eps.values, &self.eps.log_grid) {
            (Some(v), None) => Ok(v.clone()),
            (None, Some(g)) => {
                if !(g.min > 0.0 && g.max >= g.min && g.points >= 1) || (g.points == 1 && g.max != g.min) {
                    return Err(field("eps.log_grid", "need 0 < min <= max and points >= 1"));
                }
                if g.points == 1 {
                    return Ok(vec![g.min]);
                }
                let (lo, hi) = (g.min.log10(), g.max.log10());
                let step = (hi - lo) / (g.points - 1) as f64;
                let mut v: Vec<f64> = (0..g.points).map(|k| 10f64.powf(lo + step * k as f64)).collect();
                // Pin the endpoints against rounding in powf.
                v[0] = g.min;
                v[g.points - 1] = g.max;
                Ok(v)
            }
            _ => Err(field("eps", "set exactly one of `values` or `log_grid`")),
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let spec = self.base_spec()?;
        let max = spec.base().max_slow_eps();
        let eps = self.eps_values()?;
        if eps.is_empty() {
            return Err(field("eps", "grid is empty"));
        }
        for &e in &eps {
            if !(e > 0.0 && e <= max) {
                return Err(field("eps", format!("{e} outside (0, {max}]")));
            }
        }
        let est = &self.estimator;
        if est.replicas == 0 {
            return Err(field("estimator.replicas", "must be at least 1"));
        }
        if est.batches < filterstab_core::estimators::MIN_BATCHES {
            return Err(field("estimator.batches", format!("must be at least {}", filterstab_core::estimators::MIN_BATCHES)));
        }
        for (name, v) in [("estimator.nu", &est.nu), ("estimator.nu_bar", &est.nu_bar)] {
            if let Some(v) = v {
                if v.len() != spec.dim() {
                    return Err(field(name, format!("expected {} entries", spec.dim())));
                }
                SimplexVector::new(v.clone()).map_err(|e| field(name, e))?;
            }
        }
        Ok(())
    }

    /// Estimator settings for one ε and replica stream.
    pub fn estimator_config(&self, dim: usize, eps: f64, replica: u64) -> Result<EstimatorConfig, CliError> {
        let est = &self.estimator;
        let mut cfg = EstimatorConfig::for_eps(dim, eps, est.seed).with_batches(est.batches).with_replica(replica);
        if let Some(b) = est.burn_in {
            cfg = cfg.with_burn_in(b);
        }
        if let Some(n) = est.n {
            cfg = cfg.with_horizon(n);
        }
        let simplex = |v: &Option<Vec<f64>>, default: SimplexVector| match v {
            Some(v) => SimplexVector::new(v.clone()).map_err(|e| field("estimator", e)),
            None => Ok(default),
        };
        let nu = simplex(&est.nu, cfg.nu.clone())?;
        let nu_bar = simplex(&est.nu_bar, cfg.nu_bar.clone())?;
        Ok(cfg.with_priors(nu, nu_bar))
    }
}

fn field(name: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{name}`: {msg}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BSC: &str = r#"
[model]
symmetric_lambda = 0.5
noise = { kind = "bsc", p = 0.2 }

[eps]
log_grid = { min = 1e-4, max = 0.9, points = 5 }
"#;

    #[test]
    fn parses_minimal_bsc() {
        let cfg = ExperimentConfig::parse(BSC).unwrap();
        let eps = cfg.eps_values().unwrap();
        assert_eq!(eps.len(), 5);
        assert_eq!(eps[0], 1e-4);
        assert_eq!(eps[4], 0.9);
        assert!(eps.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(cfg.estimator.replicas, 1);
        assert!(cfg.base_spec().unwrap().as_bsc().is_some());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = ExperimentConfig::parse(BSC).unwrap();
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn reports_line_of_bad_field() {
        let err = ExperimentConfig::parse(&BSC.replace("points = 5", "points = \"five\"")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 7"), "{msg}");
        let err = ExperimentConfig::parse(&BSC.replace("[eps]", "[eps]\nbogus = 1")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn rejects_invalid_values() {
        let bad_eps = BSC.replace("max = 0.9", "max = 3.0");
        assert!(ExperimentConfig::parse(&bad_eps).unwrap_err().to_string().contains("eps"));
        let both = BSC.replace("symmetric_lambda = 0.5", "symmetric_lambda = 0.5\ntransitions = [[1.0]]");
        assert!(ExperimentConfig::parse(&both).is_err());
        let zero = format!("{BSC}\n[estimator]\nreplicas = 0\n");
        assert!(ExperimentConfig::parse(&zero).unwrap_err().to_string().contains("replicas"));
        let rows = BSC.replace("symmetric_lambda = 0.5", "transitions = [[0.5, 0.6], [0.5, 0.5]]");
        assert!(ExperimentConfig::parse(&rows).unwrap_err().to_string().contains("model.transitions"));
    }

    #[test]
    fn gaussian_model() {
        let text = r#"
[model]
transitions = [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.5, 0.5, 0.0]]
noise = { kind = "gaussian", means = [0.0, 1.0, 3.0], sigma = 1.0 }
[eps]
values = [0.01, 0.1]
[estimator]
n = 100000
burn_in = 1000
nu = [1.0, 0.0, 0.0]
"#;
        let cfg = ExperimentConfig::parse(text).unwrap();
        let est = cfg.estimator_config(3, 0.01, 4).unwrap();
        assert_eq!(est.burn_in, 1000);
        assert_eq!(est.replica, 4);
        assert!(est.n >= 100_000 && est.recorded().is_multiple_of(est.batches as u64));
        est.validate().unwrap();
    }
}
