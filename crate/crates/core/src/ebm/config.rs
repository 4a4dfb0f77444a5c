use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Step used for leaf values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientMode {
    /// Leaf value = mean residual `y - p`.
    FirstOrder,
    /// Leaf value = sum(y - p) / sum(p(1 - p)).
    Newton,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 8 outer bags, 4 inner bags, 500 rounds.
    Desk,
    /// 100 outer bags, 100 inner bags, 5000 rounds.
    Full,
}

impl FromStr for Profile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "full" => Ok(Profile::Full),
            _ => Err(Error::Argument(format!("unknown profile {s:?}, expected desk or full"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Independently trained models averaged term-wise. 1 disables resampling.
    pub outer_bags: usize,
    /// Bootstrap resamples each boosting update is averaged over. 1 disables.
    pub inner_bags: usize,
    pub max_bins: usize,
    pub max_interaction_bins: usize,
    pub max_leaves_per_tree: usize,
    pub boosting_rounds: usize,
    pub early_stop_patience: usize,
    /// Fraction of rows held out per outer bag for early stopping. 0 disables.
    pub validation_fraction: f64,
    pub n_interactions: usize,
    pub gradient: GradientMode,
    /// Apply the standard scaler before binning.
    pub scale: bool,
    /// Features excluded from scaling.
    pub unscaled_features: Vec<String>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            outer_bags: 100,
            inner_bags: 100,
            max_bins: 256,
            max_interaction_bins: 32,
            max_leaves_per_tree: 3,
            boosting_rounds: 5000,
            early_stop_patience: 50,
            validation_fraction: 0.15,
            n_interactions: 10,
            gradient: GradientMode::Newton,
            scale: true,
            unscaled_features: Vec::new(),
            seed: 42,
        }
    }
}

impl TrainConfig {
    pub fn full() -> Self {
        TrainConfig::default()
    }

    pub fn desk() -> Self {
        TrainConfig { outer_bags: 8, inner_bags: 4, boosting_rounds: 500, ..TrainConfig::default() }
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => TrainConfig::desk(),
            Profile::Full => TrainConfig::full(),
        }
    }

    /// Single model, no resampling, no early stopping.
    pub fn unbagged() -> Self {
        TrainConfig { outer_bags: 1, inner_bags: 1, validation_fraction: 0.0, ..TrainConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Argument("learning_rate must be > 0".into()));
        }
        if self.outer_bags < 1 || self.inner_bags < 1 {
            return Err(Error::Argument("bag counts must be >= 1".into()));
        }
        if self.boosting_rounds < 1 {
            return Err(Error::Argument("boosting_rounds must be >= 1".into()));
        }
        if self.max_bins < 1 || self.max_interaction_bins < 1 {
            return Err(Error::Argument("bin limits must be >= 1".into()));
        }
        if self.max_bins > u16::MAX as usize || self.max_interaction_bins > 1024 {
            return Err(Error::Argument("bin limits too large".into()));
        }
        if self.max_leaves_per_tree < 1 {
            return Err(Error::Argument("max_leaves_per_tree must be >= 1".into()));
        }
        if !(0.0..0.9).contains(&self.validation_fraction) {
            return Err(Error::Argument("validation_fraction must be in [0, 0.9)".into()));
        }
        Ok(())
    }
}
