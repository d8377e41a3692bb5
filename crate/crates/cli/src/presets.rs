//! Built-in experiments.

use crate::config::{
    EpsGrid, EstimatorSettings, ExperimentConfig, LogGrid, ModelConfig, NoiseConfig, OutputConfig, RunSelection,
};

/// Stability index of the binary symmetric channel over a log-spaced ε
/// grid from 10⁻⁴ to 0.9.
pub fn bsc_preset(p: f64, lambda: f64, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelConfig {
            states: None,
            transitions: None,
            symmetric_lambda: Some(lambda),
            noise: NoiseConfig::Bsc { p },
        },
        eps: EpsGrid { values: None, log_grid: Some(LogGrid { min: 1e-4, max: 0.9, points: 13 }) },
        estimator: EstimatorSettings { replicas: 2, seed, ..EstimatorSettings::default() },
        run: RunSelection::default(),
        output: OutputConfig::default(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_validates() {
        let cfg = bsc_preset(0.2, 0.5, 1);
        cfg.validate().unwrap();
        assert_eq!(cfg.eps_values().unwrap().len(), 13);
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }
}
