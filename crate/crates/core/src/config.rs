//! TOML scenario files.
//!
//! ```toml
//! [dims]
//! n = 100
//! k = 400
//! la = 10
//! lb = 10
//!
//! [noise]
//! snr_db = [0, 10, 20, 30]
//! sigma_alpha2 = 1.0
//! sigma_beta2 = 1.0
//!
//! [estimators]
//! lambda = 0.05          # optional BPDN weight
//!
//! [run]
//! trials = 500
//! seed = 7
//! estimators = ["omp", "cosamp", "bpdn", "oracle_ls"]
//! deflation = "both"
//! prior = "gaussian"
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::harness::{DeflationMode, EstimatorKind, GridPoint, Scenario, Workload};
use crate::model::{AmplitudePrior, DictionaryKind, ProblemDims};

/// Environment variable overriding the worker count.
pub const WORKERS_ENV: &str = "DEFLATECRB_WORKERS";

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DimsSection {
    pub n: usize,
    pub k: usize,
    pub la: usize,
    pub lb: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    pub snr_db: Vec<f64>,
    #[serde(default = "one")]
    pub sigma_alpha2: f64,
    #[serde(default = "one")]
    pub sigma_beta2: f64,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorSection {
    pub lambda: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "all_estimators")]
    pub estimators: Vec<EstimatorKind>,
    #[serde(default = "default_deflation")]
    pub deflation: DeflationMode,
    #[serde(default = "default_prior")]
    pub prior: AmplitudePrior,
    #[serde(default = "default_dictionary")]
    pub dictionary: DictionaryKind,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            trials: default_trials(),
            seed: 0,
            estimators: all_estimators(),
            deflation: default_deflation(),
            prior: default_prior(),
            dictionary: default_dictionary(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_trials() -> usize {
    500
}
fn all_estimators() -> Vec<EstimatorKind> {
    EstimatorKind::ALL.to_vec()
}
fn default_deflation() -> DeflationMode {
    DeflationMode::On
}
fn default_prior() -> AmplitudePrior {
    AmplitudePrior::Gaussian
}
fn default_dictionary() -> DictionaryKind {
    DictionaryKind::Gaussian
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub dims: DimsSection,
    pub noise: NoiseSection,
    #[serde(default)]
    pub estimators: EstimatorSection,
    #[serde(default)]
    pub run: RunSection,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_scenario(&self) -> Result<Scenario> {
        let d = &self.dims;
        let dims = ProblemDims::new(d.n, d.k, d.la, d.lb)?;
        let scenario = Scenario {
            figure_id: 0,
            grid: self
                .noise
                .snr_db
                .iter()
                .map(|&snr_db| GridPoint { dims, snr_db })
                .collect(),
            sigma_alpha2: self.noise.sigma_alpha2,
            sigma_beta2: self.noise.sigma_beta2,
            prior: self.run.prior,
            dictionary: self.run.dictionary,
            trials: self.run.trials,
            estimators: self.run.estimators.clone(),
            deflation: self.run.deflation,
            seed: self.run.seed,
            workload: Workload::Estimation,
            lambda: self.estimators.lambda,
        };
        scenario.validate()?;
        Ok(scenario)
    }
}

/// Worker count from the environment, if set.
pub fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&w| w > 0)
            .map(Some)
            .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got '{v}'"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Error::Config(format!("{WORKERS_ENV}: {e}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[dims]
n = 100
k = 400
la = 10
lb = 10

[noise]
snr_db = [0, 10.5]
sigma_alpha2 = 1.0
sigma_beta2 = 4.0

[estimators]
lambda = 0.1

[run]
trials = 12
seed = 9
estimators = ["omp", "oracle_ls"]
deflation = "both"
prior = "rademacher"
"#;

    #[test]
    fn parses_full_file() {
        let s = ScenarioConfig::parse(FULL).unwrap().to_scenario().unwrap();
        assert_eq!(s.grid.len(), 2);
        assert_eq!(s.grid[1].snr_db, 10.5);
        assert_eq!(s.sigma_beta2, 4.0);
        assert_eq!(s.trials, 12);
        assert_eq!(s.seed, 9);
        assert_eq!(s.estimators, vec![EstimatorKind::Omp, EstimatorKind::OracleLs]);
        assert_eq!(s.deflation, DeflationMode::Both);
        assert_eq!(s.prior, AmplitudePrior::Rademacher);
        assert_eq!(s.lambda, Some(0.1));
    }

    #[test]
    fn defaults_fill_run_section() {
        let text = "[dims]\nn = 40\nk = 80\nla = 4\nlb = 4\n[noise]\nsnr_db = [10]\n";
        let s = ScenarioConfig::parse(text).unwrap().to_scenario().unwrap();
        assert_eq!(s.trials, 500);
        assert_eq!(s.estimators.len(), 4);
        assert_eq!(s.deflation, DeflationMode::On);
    }

    #[test]
    fn rejects_bad_files() {
        assert!(matches!(ScenarioConfig::parse("[dims]\nn = 1"), Err(Error::Config(_))));
        let typo = FULL.replace("trials", "trails");
        assert!(ScenarioConfig::parse(&typo).is_err());
        let bad_mode = FULL.replace("\"both\"", "\"sometimes\"");
        assert!(ScenarioConfig::parse(&bad_mode).is_err());
        let bad_dims = FULL.replace("k = 400", "k = 50");
        let err = ScenarioConfig::parse(&bad_dims).unwrap().to_scenario().unwrap_err();
        assert!(err.is_usage());
        assert!(matches!(
            ScenarioConfig::load(Path::new("/nonexistent/scenario.toml")),
            Err(Error::Config(_))
        ));
    }
}
