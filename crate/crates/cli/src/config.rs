//! Run configuration, loaded from JSON. Every field has a default so a
//! partial file (or none) is valid; command-line flags override it.

use std::path::Path;

use csisniff_core::datastore::MERGE_WINDOW_S;
use csisniff_core::estimate::Flavor;
use csisniff_core::receiver::ReceiverConfig;
use csisniff_core::MacAddr;
use csisniff_positioning::features::FeatureLayout;
use csisniff_positioning::TrainConfig;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub receiver: ReceiverConfig,
    /// `None` disables MAC filtering.
    pub allowlist: Option<Vec<MacAddr>>,
    pub merge_window_s: f64,
    /// Flavor used by merge, train and eval.
    pub flavor: Flavor,
    pub layout: FeatureLayout,
    pub train: TrainConfig,
    /// Maximum distance in time between a group and its position record.
    pub position_tolerance_s: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            receiver: ReceiverConfig::default(),
            allowlist: None,
            merge_window_s: MERGE_WINDOW_S,
            flavor: Flavor::CpDenoised,
            layout: FeatureLayout::four_sniffers(),
            train: TrainConfig::default(),
            position_tolerance_s: 1e-3,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> CliResult<RunConfig> {
        let cfg = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        if !(self.merge_window_s >= 0.0 && self.merge_window_s.is_finite()) {
            return Err(CliError::Config("merge_window_s must be finite and non-negative".into()));
        }
        if !(self.position_tolerance_s >= 0.0) {
            return Err(CliError::Config("position_tolerance_s must be non-negative".into()));
        }
        if self.receiver.flavors.is_empty() {
            return Err(CliError::Config("receiver.flavors is empty".into()));
        }
        self.train.validate().map_err(CliError::config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_uses_defaults() {
        let c: RunConfig = serde_json::from_str(r#"{"merge_window_s": 0.01, "train": {"epochs": 3}}"#).unwrap();
        assert_eq!(c.merge_window_s, 0.01);
        assert_eq!(c.train.epochs, 3);
        assert_eq!(c.train.learning_rate, 1e-4);
        assert_eq!(c.receiver, ReceiverConfig::default());
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"merge_windw": 1}"#).is_err());
    }

    #[test]
    fn roundtrip() {
        let c = RunConfig { allowlist: Some(vec![MacAddr([2, 0, 0, 0, 0, 9])]), ..Default::default() };
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
