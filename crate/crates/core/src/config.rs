//! Analysis configuration: the knobs shared by the whole pipeline.
//!
//! Config files are flat `key = value` text; every field can also be
//! overridden from the command line by a flag of the same name.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::error::Error;
use crate::Result;

/// Tunables for one analysis run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    /// Correlation window length in samples.
    pub window_length: usize,
    /// Step between consecutive windows, in samples.
    pub stride: usize,
    /// Pearson-correlation threshold for an edge, in (0, 1).
    pub similarity_threshold: f64,
    /// Centered moving-average width (frames) applied to k_i(t) before
    /// the sign of its derivative is taken.
    pub smoothing_width: usize,
    /// Impulse detector threshold in robust sigmas above baseline.
    pub impulse_k_sigma: f64,
    /// Maximum relative variation (max-min)/median of xi over a plateau.
    pub freeze_tolerance: f64,
    /// |m| below this counts as "near the critical point".
    pub m_threshold: f64,
    /// Seed for anything stochastic downstream (synthetic data, jitter).
    pub rng_seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            window_length: 256,
            stride: 32,
            similarity_threshold: 0.7,
            smoothing_width: 5,
            impulse_k_sigma: 6.0,
            freeze_tolerance: 0.05,
            m_threshold: 0.1,
            rng_seed: 0,
        }
    }
}

impl AnalysisConfig {
    /// Parse a flat key/value config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: AnalysisConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check field-level invariants.
    pub fn validate(&self) -> Result<()> {
        if self.window_length < 4 {
            return Err(Error::InvalidConfig(format!(
                "window_length must be >= 4, got {}",
                self.window_length
            )));
        }
        if self.stride < 1 {
            return Err(Error::InvalidConfig("stride must be >= 1".into()));
        }
        if !(self.similarity_threshold > 0.0 && self.similarity_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "similarity_threshold must lie in (0, 1), got {}",
                self.similarity_threshold
            )));
        }
        if self.smoothing_width < 1 {
            return Err(Error::InvalidConfig("smoothing_width must be >= 1".into()));
        }
        if !(self.impulse_k_sigma > 0.0) {
            return Err(Error::InvalidConfig("impulse_k_sigma must be > 0".into()));
        }
        if !(self.freeze_tolerance > 0.0) {
            return Err(Error::InvalidConfig("freeze_tolerance must be > 0".into()));
        }
        if !(self.m_threshold > 0.0 && self.m_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "m_threshold must lie in (0, 1), got {}",
                self.m_threshold
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        AnalysisConfig::default().validate().unwrap();
    }

    #[test]
    fn rejects_bad_threshold() {
        let cfg = AnalysisConfig {
            similarity_threshold: 1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn parses_flat_key_values() {
        let dir = std::env::temp_dir().join(format!("crackle-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.toml");
        std::fs::write(
            &path,
            "window_length = 128\nstride = 8\nsimilarity_threshold = 0.85\nrng_seed = 42\n",
        )
        .unwrap();
        let cfg = AnalysisConfig::from_file(&path).unwrap();
        assert_eq!(cfg.window_length, 128);
        assert_eq!(cfg.stride, 8);
        assert_eq!(cfg.rng_seed, 42);
        // untouched fields keep defaults
        assert_eq!(cfg.smoothing_width, 5);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_unknown_key() {
        let r: std::result::Result<AnalysisConfig, _> = toml::from_str("window_len = 3\n");
        assert!(r.is_err());
    }
}
