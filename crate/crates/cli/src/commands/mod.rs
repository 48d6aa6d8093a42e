pub mod align;
pub mod duplexify;
pub mod eval;
pub mod impatient;
pub mod inspect;
pub mod simulate;

use std::io::Write;

use anyhow::{bail, Result};
use duplex_core::manifest::conversation_to_line;
use duplex_core::scalar::parse_decimal;
use duplex_core::{BuilderConfig, Conversation, Seconds};

/// Exact seconds from a decimal command-line value.
pub fn parse_seconds(text: &str) -> Result<Seconds, String> {
    parse_decimal(text).map_err(|e| e.to_string())
}

/// Builder settings that may override the config file.
#[derive(clap::Args, Debug, Clone, Default)]
pub struct BuilderOverrides {
    /// Silence between a user turn and the agent answer (seconds).
    #[arg(long, value_parser = parse_seconds)]
    pub pre_agent_gap: Option<Seconds>,
    /// Agent speech kept after a barge-in (seconds).
    #[arg(long, value_parser = parse_seconds)]
    pub barge_in_residual: Option<Seconds>,
    /// Turns this long or longer are filtered out (seconds).
    #[arg(long, value_parser = parse_seconds)]
    pub max_turn_duration: Option<Seconds>,
    /// Gap between concatenated conversations (seconds).
    #[arg(long, value_parser = parse_seconds)]
    pub inter_pair_gap: Option<Seconds>,
}

impl BuilderOverrides {
    pub fn apply(&self, base: BuilderConfig<Seconds>) -> Result<BuilderConfig<Seconds>> {
        let cfg = BuilderConfig {
            pre_agent_gap: self.pre_agent_gap.unwrap_or(base.pre_agent_gap),
            barge_in_residual: self.barge_in_residual.unwrap_or(base.barge_in_residual),
            max_turn_duration: self.max_turn_duration.unwrap_or(base.max_turn_duration),
            inter_pair_gap: self.inter_pair_gap.unwrap_or(base.inter_pair_gap),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub fn write_conversation(out: &mut impl Write, conv: &Conversation<Seconds>) -> Result<()> {
    out.write_all(conversation_to_line(conv).as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

/// Conversation ids become file names in some outputs.
pub fn check_file_id(id: &str) -> Result<()> {
    if id.is_empty() || id.starts_with('.') || id.contains(['/', '\\', '\0']) {
        bail!("id {id:?} cannot be used as a file name");
    }
    Ok(())
}
