use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use duplex_core::manifest::parse_conversation_line;
use duplex_core::{
    align_conversation, serialize_matrix, AcousticMatrix, AgentTurnTokens, Conversation, Seconds,
    ToolConfig, TurnPlacement,
};
use serde::{Deserialize, Serialize};

use super::check_file_id;
use crate::pipeline::{write_atomic, ItemError, LineChunks};
use crate::Ctx;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Conversation JSONL.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Directory holding `<id>.json` token files.
    #[arg(long)]
    pub tokens_dir: PathBuf,
    /// Directory receiving `<id>.dupx` and `<id>.json`.
    #[arg(long)]
    pub output_dir: PathBuf,
    /// Frames between the text BOS and the speech BOS of each turn.
    #[arg(long, default_value_t = 1)]
    pub delay: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TokenFile {
    turns: Vec<TurnTokens>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TurnTokens {
    turn_index: usize,
    text_tokens: Vec<u32>,
    speech_codes: Vec<Vec<u32>>,
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    id: &'a str,
    n_frames: usize,
    fps: String,
    delay_frames: usize,
    placements: &'a [TurnPlacement],
}

pub fn run(ctx: &mut Ctx, args: &Args) -> Result<()> {
    fs::create_dir_all(&args.output_dir)
        .with_context(|| format!("cannot create {}", args.output_dir.display()))?;
    let config = ctx.config.clone();
    for chunk in LineChunks::open(&args.input)? {
        let chunk = chunk?;
        ctx.summary.n_items += chunk.len();
        let results = ctx.par_map(chunk, |line| {
            let conv = parse_conversation_line(&line.text)
                .map_err(|e| ItemError::at_line(line.number, e))?;
            align_one(&conv, &config, args)
                .map_err(|e| ItemError::at_line(line.number, format!("{e:#}")).with_id(conv.id()))
        });
        for r in results {
            match r {
                Ok(()) => ctx.summary.n_written += 1,
                Err(e) => ctx.summary.error(e),
            }
        }
    }
    Ok(())
}

fn align_one(conv: &Conversation<Seconds>, config: &ToolConfig, args: &Args) -> Result<()> {
    check_file_id(conv.id())?;
    let tokens = load_tokens(&args.tokens_dir.join(format!("{}.json", conv.id())), config)?;
    let alignment = align_conversation(conv, &tokens, &config.vocab, &config.grid, args.delay)?;
    let bytes = serialize_matrix(&alignment.matrix)?;
    let sidecar = Sidecar {
        id: conv.id(),
        n_frames: alignment.matrix.n_frames(),
        fps: alignment.matrix.grid().frames_per_second().to_string(),
        delay_frames: args.delay,
        placements: &alignment.placements,
    };
    let mut json = serde_json::to_string_pretty(&sidecar)?;
    json.push('\n');
    write_atomic(&args.output_dir.join(format!("{}.dupx", conv.id())), &bytes)?;
    write_atomic(
        &args.output_dir.join(format!("{}.json", conv.id())),
        json.as_bytes(),
    )?;
    Ok(())
}

fn load_tokens(path: &Path, config: &ToolConfig) -> Result<Vec<AgentTurnTokens>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read tokens {}", path.display()))?;
    let file: TokenFile = serde_json::from_str(&text)
        .with_context(|| format!("malformed tokens {}", path.display()))?;
    file.turns
        .into_iter()
        .map(|t| {
            let speech_codes = AcousticMatrix::new(t.speech_codes, config.vocab.speech())
                .with_context(|| format!("turn {}", t.turn_index))?;
            Ok(AgentTurnTokens {
                turn_ref: t.turn_index,
                text_tokens: t.text_tokens,
                speech_codes,
            })
        })
        .collect()
}
