//! Training hyper-parameters.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::Result;

/// Hyper-parameters for embedding training.
///
/// Serializes to JSON with these exact field names; unknown fields are
/// rejected so config-file typos surface as errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Context window half-width per axis (Chebyshev radius).
    pub context_window: usize,
    /// Negative samples drawn per positive.
    pub negatives: usize,
    /// Embedding dimension.
    pub dimension: usize,
    pub learning_rate: f64,
    /// L2 norm penalty coefficient.
    pub penalty: f64,
    /// Quantization level count.
    pub quantization: u16,
    /// Pairs per self-paced batch.
    pub batch_size: u64,
    pub epochs: u32,
    pub seed: u64,
    /// Subsampling constant: a voxel with center symbol `c` is kept with
    /// probability `min(1, sqrt(threshold * T / freq(c)))`.
    pub subsample_threshold: f64,
    /// Every observed symbol is forced to appear as a center at least this
    /// many times per epoch.
    pub min_samples_per_symbol: u64,
    /// Exclude the current center and its context from the negative pool.
    pub exclude_context: bool,
    /// Self-paced curriculum: filter hard negatives early and re-weight the
    /// candidate pool by informativeness.
    pub self_paced: bool,
    /// Debug switch: use the growth threshold formula without clamping
    /// toward 1 from below (takes the max with 1 instead of the min).
    pub threshold_literal_max: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            context_window: 1,
            negatives: 3,
            dimension: 30,
            learning_rate: 0.05,
            penalty: 0.005,
            quantization: 64,
            batch_size: 1000,
            epochs: 1,
            seed: 42,
            subsample_threshold: 1e-3,
            min_samples_per_symbol: 8,
            exclude_context: true,
            self_paced: true,
            threshold_literal_max: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Parameter(msg));
        if self.context_window < 1 {
            return fail("context_window must be >= 1".into());
        }
        if self.negatives < 1 {
            return fail("negatives must be >= 1".into());
        }
        if self.dimension < 1 {
            return fail("dimension must be >= 1".into());
        }
        // NaN must not pass validation.
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 {
            return fail(format!("learning_rate must be > 0, got {}", self.learning_rate));
        }
        if self.penalty.is_nan() || self.penalty < 0.0 {
            return fail(format!("penalty must be >= 0, got {}", self.penalty));
        }
        if self.quantization == 0 {
            return fail("quantization must be >= 1".into());
        }
        if self.batch_size < 1 {
            return fail("batch_size must be >= 1".into());
        }
        if self.epochs < 1 {
            return fail("epochs must be >= 1".into());
        }
        let rho_valid = self.subsample_threshold > 0.0 && self.subsample_threshold <= 1.0;
        if !rho_valid {
            return fail(format!(
                "subsample_threshold must be in (0, 1], got {}",
                self.subsample_threshold
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        TrainConfig::default().validate().unwrap();
    }

    #[test]
    fn json_round_trip_uses_field_names() {
        let cfg = TrainConfig::default();
        let json = serde_json::to_string(&cfg).unwrap();
        for key in [
            "context_window",
            "negatives",
            "dimension",
            "learning_rate",
            "penalty",
            "quantization",
            "batch_size",
            "epochs",
            "seed",
            "subsample_threshold",
            "min_samples_per_symbol",
        ] {
            assert!(json.contains(key), "missing {key} in {json}");
        }
        let back: TrainConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn partial_json_fills_defaults() {
        let cfg: TrainConfig = serde_json::from_str(r#"{"negatives": 5}"#).unwrap();
        assert_eq!(cfg.negatives, 5);
        assert_eq!(cfg.dimension, 30);
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = TrainConfig::default();
        cfg.subsample_threshold = 0.0;
        assert!(cfg.validate().is_err());
        cfg = TrainConfig::default();
        cfg.learning_rate = -1.0;
        assert!(cfg.validate().is_err());
        cfg = TrainConfig::default();
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
    }
}
