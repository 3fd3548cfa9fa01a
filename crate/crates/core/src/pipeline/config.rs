use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Estimator;
use crate::formant::{ErrorBoundary, FormantConfig};
use crate::par::Execution;
use crate::posterior::{PhoneSets, SelectionConfig, FRAME_HOP_S, FRAME_WINDOW_S};
use crate::stats::Variance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AudioConfig {
    /// Set to false to analyse the whole recording.
    pub trim: bool,
    /// dB relative to the loudest 20 ms window.
    pub trim_threshold_db: f64,
    pub window_s: f64,
    pub hop_s: f64,
}

impl Default for AudioConfig {
    fn default() -> Self {
        AudioConfig {
            trim: true,
            trim_threshold_db: -35.0,
            window_s: FRAME_WINDOW_S,
            hop_s: FRAME_HOP_S,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreeningConfig {
    pub f1_max_hz: f64,
    pub f2_min_hz: f64,
    /// Drop flagged frames before aggregation. Otherwise they are only
    /// counted.
    pub exclude_flagged: bool,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        let b = ErrorBoundary::default();
        ScreeningConfig {
            f1_max_hz: b.f1_max_hz,
            f2_min_hz: b.f2_min_hz,
            exclude_flagged: false,
        }
    }
}

impl ScreeningConfig {
    pub fn boundary(&self) -> ErrorBoundary {
        ErrorBoundary {
            f1_max_hz: self.f1_max_hz,
            f2_min_hz: self.f2_min_hz,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ManualConfig {
    /// Hop of the dense grid used inside annotated segments.
    pub hop_s: f64,
}

impl Default for ManualConfig {
    fn default() -> Self {
        ManualConfig { hop_s: 0.010 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsConfig {
    pub variance: Variance,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            variance: Variance::Pooled,
        }
    }
}

/// Every tunable of the pipeline. Loaded from TOML; all keys optional.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub estimators: Vec<Estimator>,
    /// Estimator whose representatives are drawn in plots.
    pub plot_estimator: Estimator,
    pub execution: Execution,
    /// Accept posteriorgrams without a decoded column.
    pub allow_missing_decoded: bool,
    pub audio: AudioConfig,
    pub selection: SelectionConfig,
    pub phone_sets: PhoneSets,
    pub formant: FormantConfig,
    pub screening: ScreeningConfig,
    pub manual: ManualConfig,
    pub stats: StatsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            estimators: Estimator::DEFAULT_SET.to_vec(),
            plot_estimator: Estimator::Mean,
            execution: Execution::Parallel,
            allow_missing_decoded: false,
            audio: AudioConfig::default(),
            selection: SelectionConfig::default(),
            phone_sets: PhoneSets::default(),
            formant: FormantConfig::default(),
            screening: ScreeningConfig::default(),
            manual: ManualConfig::default(),
            stats: StatsConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| e.context(path.display().to_string()))
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// Phone sets actually used for selection.
    pub fn effective_phone_sets(&self) -> PhoneSets {
        if self.selection.corner_only {
            PhoneSets::corner_only()
        } else {
            self.phone_sets.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.estimators.is_empty() {
            return Err(Error::Config("estimators must not be empty".into()));
        }
        let mut names: Vec<String> = self.estimators.iter().map(|e| e.to_string()).collect();
        names.sort();
        names.dedup();
        if names.len() != self.estimators.len() {
            return Err(Error::Config("estimators must be distinct".into()));
        }
        let a = &self.audio;
        if !(a.trim_threshold_db < 0.0) {
            return Err(Error::Config("trim_threshold_db must be negative".into()));
        }
        if !(a.hop_s > 0.0 && a.hop_s <= a.window_s) {
            return Err(Error::Config("need 0 < hop_s <= window_s".into()));
        }
        if !(self.manual.hop_s > 0.0) {
            return Err(Error::Config("manual.hop_s must be positive".into()));
        }
        self.selection.validate()?;
        self.phone_sets.validate()?;
        self.formant.validate()?;
        self.screening.boundary().validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_toml_is_default() {
        assert_eq!(PipelineConfig::from_toml_str("").unwrap(), PipelineConfig::default());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = PipelineConfig::default();
        assert_eq!(PipelineConfig::from_toml_str(&cfg.to_toml_string()).unwrap(), cfg);
    }

    #[test]
    fn partial_override() {
        let cfg = PipelineConfig::from_toml_str(
            r#"
            estimators = ["mean", "p90"]
            execution = "sequential"
            [selection]
            alpha = 0.3
            corner_only = true
            [screening]
            f1_max_hz = 950.0
            exclude_flagged = true
            "#,
        )
        .unwrap();
        assert_eq!(cfg.estimators.len(), 2);
        assert_eq!(cfg.selection.k, 4);
        assert_eq!(cfg.selection.alpha, 0.3);
        assert_eq!(cfg.screening.f1_max_hz, 950.0);
        assert_eq!(cfg.screening.f2_min_hz, 1688.0);
        assert!(cfg.screening.exclude_flagged);
        assert_eq!(cfg.effective_phone_sets(), PhoneSets::corner_only());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(PipelineConfig::from_toml_str("[selection]\nk = 0").is_err());
        assert!(PipelineConfig::from_toml_str("estimators = [\"p40\"]").is_err());
        assert!(PipelineConfig::from_toml_str("estimators = []").is_err());
        assert!(PipelineConfig::from_toml_str("[audio]\ntrim_threshold_db = 3.0").is_err());
        assert!(PipelineConfig::from_toml_str("unknown = 1").is_err());
    }
}
