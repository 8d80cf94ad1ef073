//! Analysis configuration: built-in defaults, a JSON file, then
//! command-line flags, each layer overriding the previous one.

use std::collections::BTreeMap;
use std::path::Path;

use isa_rhythm_core::onsets::{OnsetConfig, SmoothingShape};
use isa_rhythm_core::separate::{IcaBasis, IsaConfig};
use isa_rhythm_core::spectral::StftConfig;
use isa_rhythm_core::tatum::TatumConfig;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::MidiRenderConfig;

/// Per-stream changes to the base onset configuration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OnsetOverride {
    pub decimation_factor: Option<usize>,
    pub smoothing_window_ms: Option<f64>,
    pub smoothing_shape: Option<SmoothingShape>,
    pub rdf_floor: Option<f64>,
    pub threshold: Option<f64>,
    pub min_spacing_s: Option<f64>,
    pub loudness_window_ms: Option<f64>,
    pub min_relative_loudness: Option<f64>,
}

impl OnsetOverride {
    pub fn apply(&self, base: &OnsetConfig) -> OnsetConfig {
        OnsetConfig {
            decimation_factor: self.decimation_factor.unwrap_or(base.decimation_factor),
            smoothing_window_ms: self.smoothing_window_ms.unwrap_or(base.smoothing_window_ms),
            smoothing_shape: self.smoothing_shape.unwrap_or(base.smoothing_shape),
            rdf_floor: self.rdf_floor.unwrap_or(base.rdf_floor),
            threshold: self.threshold.unwrap_or(base.threshold),
            min_spacing_s: self.min_spacing_s.unwrap_or(base.min_spacing_s),
            loudness_window_ms: self.loudness_window_ms.unwrap_or(base.loudness_window_ms),
            min_relative_loudness: self.min_relative_loudness.unwrap_or(base.min_relative_loudness),
        }
    }

    /// `self` with every field set in `top` replaced.
    pub fn layered(&self, top: &OnsetOverride) -> OnsetOverride {
        OnsetOverride {
            decimation_factor: top.decimation_factor.or(self.decimation_factor),
            smoothing_window_ms: top.smoothing_window_ms.or(self.smoothing_window_ms),
            smoothing_shape: top.smoothing_shape.or(self.smoothing_shape),
            rdf_floor: top.rdf_floor.or(self.rdf_floor),
            threshold: top.threshold.or(self.threshold),
            min_spacing_s: top.min_spacing_s.or(self.min_spacing_s),
            loudness_window_ms: top.loudness_window_ms.or(self.loudness_window_ms),
            min_relative_loudness: top.min_relative_loudness.or(self.min_relative_loudness),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisChoice {
    Temporal,
    #[default]
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub components: usize,
    pub retained: Option<usize>,
    pub basis: BasisChoice,
    /// Absent or `null`: sized to the input sample rate.
    pub stft: Option<StftConfig>,
    pub onsets: OnsetConfig,
    /// Keyed by stream index.
    pub stream_onsets: BTreeMap<usize, OnsetOverride>,
    pub tatum: TatumConfig,
    pub midi: MidiRenderConfig,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            components: 2,
            retained: None,
            basis: BasisChoice::default(),
            stft: None,
            onsets: OnsetConfig::default(),
            stream_onsets: BTreeMap::new(),
            tatum: TatumConfig::default(),
            midi: MidiRenderConfig::default(),
        }
    }
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::NotFound(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::from_json(&text)
    }

    /// Built-in defaults, or the file at `path` when given.
    pub fn load_or_default(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(Self::default()), Self::load)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serialises")
    }

    pub fn isa(&self) -> IsaConfig {
        IsaConfig {
            retained: self.retained,
            stft: self.stft,
            basis: match self.basis {
                BasisChoice::Temporal => IcaBasis::Temporal,
                BasisChoice::Spectral => IcaBasis::Spectral,
            },
            ..IsaConfig::new(self.components)
        }
    }

    /// Onset configuration of stream `index`: base, then that stream's
    /// override, then `flags`.
    pub fn onsets_for(&self, index: usize, flags: &OnsetOverride) -> OnsetConfig {
        let file = self.stream_onsets.get(&index).cloned().unwrap_or_default();
        file.layered(flags).apply(&self.onsets)
    }

    pub fn validate(&self) -> Result<()> {
        if self.components == 0 {
            return Err(Error::Config("components must be at least 1".into()));
        }
        if let Some(stft) = &self.stft {
            stft.validate()?;
        }
        self.onsets.validate()?;
        for (i, o) in &self.stream_onsets {
            o.apply(&self.onsets).validate().map_err(|e| Error::Config(format!("stream {i}: {e}")))?;
        }
        self.tatum.validate()?;
        self.midi.validate()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = AnalysisConfig::from_json(r#"{"components": 3, "onsets": {"threshold": 0.5}}"#).unwrap();
        assert_eq!(c.components, 3);
        assert_eq!(c.onsets.threshold, 0.5);
        assert_eq!(c.onsets.min_spacing_s, OnsetConfig::default().min_spacing_s);
        assert_eq!(c.tatum, TatumConfig::default());
        assert!(AnalysisConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn layering_order() {
        let c = AnalysisConfig::from_json(
            r#"{"onsets": {"threshold": 0.4}, "stream_onsets": {"1": {"threshold": 0.6, "min_spacing_s": 0.2}}}"#,
        )
        .unwrap();
        let none = OnsetOverride::default();
        assert_eq!(c.onsets_for(0, &none).threshold, 0.4);
        assert_eq!(c.onsets_for(1, &none).threshold, 0.6);
        let flags = OnsetOverride { threshold: Some(0.9), ..Default::default() };
        let s1 = c.onsets_for(1, &flags);
        assert_eq!(s1.threshold, 0.9);
        assert_eq!(s1.min_spacing_s, 0.2);
    }

    #[test]
    fn json_round_trip() {
        let c = AnalysisConfig::default();
        assert_eq!(AnalysisConfig::from_json(&c.to_json()).unwrap(), c);
        assert!(c.validate().is_ok());
        let bad = AnalysisConfig { components: 0, ..AnalysisConfig::default() };
        assert!(bad.validate().is_err());
    }
}
