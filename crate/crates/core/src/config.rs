//! Scenario configuration file.
//!
//! The on-disk format is TOML. Keys ending in `_db` are decibel values and
//! are converted to linear units by [`ScenarioConfig::to_scenario`]; all
//! other numeric keys are linear. Example (the default scenario):
//!
//! ```toml
//! num_bands = 4
//! true_bands = [0, 2]
//! fake_bands = [1, 3]
//! alpha = 0.8
//! total_power_db = 10.0
//! deception_threshold = 0.5
//! rician_k_db = 10.0
//! trials = 500
//! seed = 7
//! ```
//!
//! Optional keys: `eve_rician_k_db` (defaults to `rician_k_db`),
//! `bob_mean_gain` and `eve_mean_gain` (default 1), `bob_noise` and
//! `eve_noise` (default 1, linear).
//!
//! Serialization is round-trip stable: `from_toml_str(&c.to_toml_string()?)`
//! yields a config equal to `c`, and therefore an identical [`Scenario`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{db_to_linear, BandPlan, RicianParams, Scenario};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub num_bands: usize,
    pub true_bands: Vec<usize>,
    pub fake_bands: Vec<usize>,
    pub alpha: f64,
    pub total_power_db: f64,
    pub deception_threshold: f64,
    pub rician_k_db: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve_rician_k_db: Option<f64>,
    #[serde(default = "one")]
    pub bob_mean_gain: f64,
    #[serde(default = "one")]
    pub eve_mean_gain: f64,
    #[serde(default = "one")]
    pub bob_noise: f64,
    #[serde(default = "one")]
    pub eve_noise: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for ScenarioConfig {
    /// Four sources, true signals on the first and third band, Rician
    /// factor 10 dB on both links, 10 dB total power.
    fn default() -> Self {
        Self {
            num_bands: 4,
            true_bands: vec![0, 2],
            fake_bands: vec![1, 3],
            alpha: 0.8,
            total_power_db: 10.0,
            deception_threshold: 0.5,
            rician_k_db: 10.0,
            trials: 500,
            seed: 7,
            eve_rician_k_db: None,
            bob_mean_gain: 1.0,
            eve_mean_gain: 1.0,
            bob_noise: 1.0,
            eve_noise: 1.0,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Fails only for seeds above `i64::MAX`, which TOML integers cannot hold.
    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_scenario(&self) -> Scenario {
        Scenario {
            band_plan: BandPlan::new(
                self.num_bands,
                self.true_bands.clone(),
                self.fake_bands.clone(),
                self.alpha,
            ),
            rician_bob: RicianParams::new(self.rician_k_db, self.bob_mean_gain),
            rician_eve: RicianParams::new(
                self.eve_rician_k_db.unwrap_or(self.rician_k_db),
                self.eve_mean_gain,
            ),
            total_power: db_to_linear(self.total_power_db),
            deception_threshold: self.deception_threshold,
            trials: self.trials,
            seed: self.seed,
            bob_noise: self.bob_noise,
            eve_noise: self.eve_noise,
        }
    }
}
