//! Tool configuration file.
//!
//! Every section and field is optional; missing values take the module
//! defaults. Times are decimal seconds.
//!
//! ```json
//! {
//!   "grid": {"frames_per_second": 12.5},
//!   "vocab": {"text_vocab_size": 32000, "n_channels": 4, "codebook_size": 4037,
//!             "fsq_levels": [8, 5, 5, 5], "silence_codes": null},
//!   "builder": {"pre_agent_gap_s": 0.64, "barge_in_residual_s": 0.64,
//!               "max_turn_duration_s": 25.0, "inter_pair_gap_s": 0.64},
//!   "metrics": {"success_window_s": 1.5, "false_alarm_exemption_s": 0.1,
//!               "resume_guard_s": null}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::builder::BuilderConfig;
use crate::codec::{FsqLevels, SpeechTokenSpace, VocabMap};
use crate::error::{Error, Result};
use crate::metrics::MetricsConfig;
use crate::scalar::{seconds_from_f64, Seconds};
use crate::time::TimeGrid;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub frames_per_second: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VocabSection {
    pub text_vocab_size: Option<u32>,
    pub n_channels: Option<u32>,
    pub codebook_size: Option<u32>,
    pub fsq_levels: Option<Vec<u32>>,
    pub silence_codes: Option<Vec<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BuilderSection {
    pub pre_agent_gap_s: Option<f64>,
    pub barge_in_residual_s: Option<f64>,
    pub max_turn_duration_s: Option<f64>,
    pub inter_pair_gap_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    pub success_window_s: Option<f64>,
    pub false_alarm_exemption_s: Option<f64>,
    pub resume_guard_s: Option<f64>,
}

/// Raw configuration file contents.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub grid: GridSection,
    pub vocab: VocabSection,
    pub builder: BuilderSection,
    pub metrics: MetricsSection,
}

/// Resolved and validated configuration.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ToolConfig {
    pub grid: TimeGrid,
    pub vocab: VocabMap,
    pub builder: BuilderConfig<Seconds>,
    pub metrics: MetricsConfig<Seconds>,
}

fn secs(value: Option<f64>, default: Seconds, what: &str) -> Result<Seconds> {
    match value {
        None => Ok(default),
        Some(v) => seconds_from_f64(v).map_err(|e| Error::InvalidParameter(format!("{what}: {e}"))),
    }
}

impl ConfigFile {
    pub fn resolve(&self) -> Result<ToolConfig> {
        let grid = match self.grid.frames_per_second {
            None => TimeGrid::default(),
            Some(v) => TimeGrid::new(secs(
                Some(v),
                Seconds::from_integer(0),
                "frames_per_second",
            )?)?,
        };

        let defaults = SpeechTokenSpace::default();
        let fsq = self
            .vocab
            .fsq_levels
            .clone()
            .map(FsqLevels::new)
            .transpose()?;
        let mut speech = SpeechTokenSpace::new(
            self.vocab.n_channels.unwrap_or(defaults.n_channels()),
            self.vocab.codebook_size.unwrap_or(defaults.codebook_size()),
            fsq,
        )?;
        if let Some(codes) = &self.vocab.silence_codes {
            speech = speech.with_silence_codes(codes.clone())?;
        }
        let vocab = VocabMap::new(
            self.vocab
                .text_vocab_size
                .unwrap_or(VocabMap::default().text_vocab_size()),
            speech,
        )?;

        let b = BuilderConfig::<Seconds>::default();
        let builder = BuilderConfig {
            pre_agent_gap: secs(
                self.builder.pre_agent_gap_s,
                b.pre_agent_gap,
                "pre_agent_gap_s",
            )?,
            barge_in_residual: secs(
                self.builder.barge_in_residual_s,
                b.barge_in_residual,
                "barge_in_residual_s",
            )?,
            max_turn_duration: secs(
                self.builder.max_turn_duration_s,
                b.max_turn_duration,
                "max_turn_duration_s",
            )?,
            inter_pair_gap: secs(
                self.builder.inter_pair_gap_s,
                b.inter_pair_gap,
                "inter_pair_gap_s",
            )?,
        };
        builder.validate()?;

        let m = MetricsConfig::<Seconds>::default();
        let metrics = MetricsConfig {
            success_window: secs(
                self.metrics.success_window_s,
                m.success_window,
                "success_window_s",
            )?,
            false_alarm_exemption: secs(
                self.metrics.false_alarm_exemption_s,
                m.false_alarm_exemption,
                "false_alarm_exemption_s",
            )?,
            resume_guard: self
                .metrics
                .resume_guard_s
                .map(|g| secs(Some(g), m.success_window, "resume_guard_s"))
                .transpose()?,
        };
        metrics.validate()?;

        Ok(ToolConfig {
            grid,
            vocab,
            builder,
            metrics,
        })
    }
}

impl ToolConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ConfigFile =
            serde_json::from_str(text).map_err(|e| Error::Schema(format!("config: {e}")))?;
        file.resolve()
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Schema(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}
