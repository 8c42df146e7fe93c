use std::path::Path;

use serde::Deserialize;

use sensel::harness::{DistributionChoice, ExperimentConfig};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepMode {
    Zeta,
    Gamma,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawDistribution {
    Named(String),
    Custom(Vec<f64>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    d: Option<usize>,
    eta: Option<usize>,
    gamma: Option<usize>,
    gammas: Option<Vec<usize>>,
    delta: Option<f64>,
    zetas: Option<Vec<f64>>,
    sigma2: Option<f64>,
    q_scale: Option<f64>,
    trials: Option<usize>,
    distribution: Option<RawDistribution>,
    mode: Option<SweepMode>,
}

#[derive(Debug, Clone)]
pub struct CliConfig {
    pub experiment: ExperimentConfig,
    pub mode: SweepMode,
}

impl CliConfig {
    pub fn load(path: Option<&Path>, seed: u64) -> Result<Self, CliError> {
        let raw = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
            }
            None => RawConfig::default(),
        };
        Self::from_raw(raw, seed)
    }

    fn from_raw(raw: RawConfig, seed: u64) -> Result<Self, CliError> {
        let defaults = ExperimentConfig::default();
        let gammas = match (raw.gamma, raw.gammas) {
            (Some(_), Some(_)) => {
                return Err(CliError::Input(
                    "config sets both \"gamma\" and \"gammas\"".into(),
                ))
            }
            (Some(g), None) => vec![g],
            (None, Some(gs)) => gs,
            (None, None) => defaults.gammas.clone(),
        };
        let distribution = match raw.distribution {
            None => defaults.distribution.clone(),
            Some(RawDistribution::Named(name)) => match name.as_str() {
                "uniform" => DistributionChoice::Uniform,
                "heuristic" => DistributionChoice::Heuristic,
                other => {
                    return Err(CliError::Input(format!(
                        "unknown distribution \"{other}\" (expected \"uniform\", \"heuristic\" or an array)"
                    )))
                }
            },
            Some(RawDistribution::Custom(p)) => DistributionChoice::Custom(p),
        };
        let mode = raw.mode.unwrap_or(if gammas.len() > 1 {
            SweepMode::Gamma
        } else {
            SweepMode::Zeta
        });
        let experiment = ExperimentConfig {
            d: raw.d.unwrap_or(defaults.d),
            eta: raw.eta.unwrap_or(defaults.eta),
            gammas,
            delta: raw.delta.unwrap_or(defaults.delta),
            zetas: raw.zetas.unwrap_or(defaults.zetas),
            sigma2: raw.sigma2.unwrap_or(defaults.sigma2),
            q_scale: raw.q_scale.unwrap_or(defaults.q_scale),
            trials: raw.trials.unwrap_or(defaults.trials),
            seed,
            distribution,
        };
        experiment.validate()?;
        Ok(Self { experiment, mode })
    }
}
