//! Run configuration: one JSON document covering the scene, trial windows,
//! both cleaning conditions and the metrics, with `ERASE_*` environment
//! overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::metrics::{FdCorrParams, SnrParams, StftParams};
use crate::pipeline::{ConventionalConfig, EraseConfig};
use crate::synth::SceneSpec;

pub const ENV_PREFIX: &str = "ERASE_";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialWindow {
    /// Idle epoch length before each movement onset.
    pub idle_s: f64,
    pub move_s: f64,
    /// Forward-backward preprocessing filter (offline analysis).
    pub zero_phase: bool,
}

impl Default for TrialWindow {
    fn default() -> Self {
        TrialWindow {
            idle_s: 1.0,
            move_s: 2.0,
            zero_phase: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MetricsConfig {
    pub stft: StftParams,
    pub snr: SnrParams,
    pub fd: FdCorrParams,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub scene: SceneSpec,
    pub trials: TrialWindow,
    pub erase: EraseConfig,
    pub conventional: ConventionalConfig,
    pub metrics: MetricsConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// One master seed drives the scene, the virtual EMG and ICA.
    pub fn set_seed(&mut self, seed: u64) {
        self.scene.seed = seed;
        self.erase.emg.seed = seed;
        self.erase.ica.seed = seed;
        self.conventional.ica.seed = seed;
    }

    pub fn set_theta(&mut self, theta: f64) {
        self.erase.theta = theta;
    }

    /// Apply overrides from `(name, value)` pairs. `ERASE_SEED` and
    /// `ERASE_THETA` map to the setters above; any other `ERASE_A__B__C`
    /// sets the field at path `a.b.c`, the value parsed as JSON or taken
    /// as a string. `ERASE_LOG` (the log filter) and names without the
    /// prefix are ignored.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<()>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut overrides: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| {
                k.as_ref()
                    .strip_prefix(ENV_PREFIX)
                    .map(|rest| (rest.to_ascii_lowercase(), v.as_ref().to_string()))
            })
            .collect();
        // Environment order is unspecified; sort so results never depend on it.
        overrides.sort();
        for (key, value) in overrides {
            match key.as_str() {
                "seed" => self.set_seed(parse_num(&key, &value)?),
                "theta" => self.set_theta(parse_num(&key, &value)?),
                "log" => {}
                _ => self.set_path(&key.split("__").collect::<Vec<_>>(), &value)?,
            }
        }
        Ok(())
    }

    fn set_path(&mut self, path: &[&str], raw: &str) -> Result<()> {
        let mut doc = serde_json::to_value(&*self).expect("config serializes");
        let mut slot = &mut doc;
        for part in path {
            slot = slot
                .get_mut(*part)
                .ok_or_else(|| Error::Config(format!("unknown override {}{}", ENV_PREFIX, path.join("__").to_uppercase())))?;
        }
        *slot = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        *self = serde_json::from_value(doc).map_err(|e| Error::Config(format!("{}: {e}", path.join("."))))?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.erase.emg.validate(self.scene.sample_rate)?;
        if !self.erase.theta.is_finite() || self.erase.theta < 0.0 {
            return Err(Error::Config(format!("theta must be finite and ≥ 0, got {}", self.erase.theta)));
        }
        if !(self.trials.idle_s > 0.0 && self.trials.move_s > 0.0) {
            return Err(Error::Config("trial windows must be positive".into()));
        }
        Ok(())
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{}{}: cannot parse {value:?}", ENV_PREFIX, key.to_uppercase())))
}
