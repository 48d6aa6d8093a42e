use std::io::Write;
use std::path::PathBuf;

use anyhow::{bail, Result};
use duplex_core::manifest::parse_conversation_line;
use duplex_core::scalar::format_decimal;
use duplex_core::{tracks_from_conversation, Conversation, Seconds, SpeakerRole, TimeGrid};

use crate::pipeline::{write_atomic, LineChunks};
use crate::Ctx;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Conversation JSONL.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Conversation to render.
    #[arg(long)]
    pub id: String,
    /// Write the rendering here instead of stdout.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

pub fn run(ctx: &mut Ctx, args: &Args) -> Result<()> {
    if args.id.is_empty() {
        bail!("--id must not be empty");
    }
    let mut found = None;
    'scan: for chunk in LineChunks::open(&args.input)? {
        for line in chunk? {
            // cheap pre-filter before a full parse
            if !line.text.contains(&args.id) {
                continue;
            }
            let conv = parse_conversation_line(&line.text).map_err(|e| {
                anyhow::anyhow!("{} line {}: {e}", args.input.display(), line.number)
            })?;
            if conv.id() == args.id {
                found = Some(conv);
                break 'scan;
            }
        }
    }
    let Some(conv) = found else {
        bail!(
            "no conversation with id {:?} in {}",
            args.id,
            args.input.display()
        );
    };
    let text = render(&conv, &ctx.config.grid)?;
    ctx.summary.n_items = 1;
    ctx.summary.n_written = 1;
    match &args.output {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

/// Two rows, one cell per frame; a cell is marked when its frame start lies
/// inside a segment of that speaker.
pub fn render(conv: &Conversation<Seconds>, grid: &TimeGrid) -> Result<String> {
    let tl = tracks_from_conversation(conv)?;
    let n_frames = grid.frames_covering(tl.total_duration())?.max(0);
    let frame_ms = format_decimal(grid.frame_duration() * Seconds::from_integer(1000))
        .unwrap_or_else(|| grid.frame_duration().to_string());
    let mut out = format!(
        "{}  {} frames, {} ms per cell, duration {} s\n",
        conv.id(),
        n_frames,
        frame_ms,
        format_decimal(tl.total_duration()).unwrap_or_default()
    );
    let ruler: String = (0..n_frames)
        .map(|k| {
            if k % 10 == 0 {
                '|'
            } else if k % 5 == 0 {
                '+'
            } else {
                '.'
            }
        })
        .collect();
    out.push_str(&format!("frame {ruler}\n"));
    for role in [SpeakerRole::User, SpeakerRole::Agent] {
        let track = tl.track(role);
        let row: String = (0..n_frames)
            .map(|k| {
                if track.contains(grid.frame_start::<Seconds>(k)) {
                    '#'
                } else {
                    '-'
                }
            })
            .collect();
        out.push_str(&format!("{:<5} {row}\n", role.as_str()));
    }
    Ok(out)
}
