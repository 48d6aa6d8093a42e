use std::path::PathBuf;

use anyhow::{bail, Result};
use duplex_core::manifest::parse_conversation_line;
use duplex_core::{make_impatient, Seconds};
use num_traits::{One, Zero};

use super::{parse_seconds, write_conversation};
use crate::pipeline::{AtomicFile, ItemError, LineChunks};
use crate::Ctx;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Conversation JSONL.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Impatient conversation JSONL.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Multiplier for the silence between consecutive user turns, in (0, 1].
    #[arg(long, default_value = "0.5", value_parser = parse_seconds)]
    pub factor: Seconds,
}

pub fn run(ctx: &mut Ctx, args: &Args) -> Result<()> {
    if args.factor <= Seconds::zero() || args.factor > Seconds::one() {
        bail!("--factor must be in (0, 1], got {}", args.factor);
    }
    let cfg = ctx.config.builder;
    let factor = args.factor;
    let mut out = AtomicFile::create(&args.output)?;
    for chunk in LineChunks::open(&args.input)? {
        let chunk = chunk?;
        ctx.summary.n_items += chunk.len();
        let results = ctx.par_map(chunk, |line| {
            let conv = parse_conversation_line(&line.text)
                .map_err(|e| ItemError::at_line(line.number, e))?;
            make_impatient(&conv, factor, &cfg)
                .map_err(|e| ItemError::at_line(line.number, e).with_id(conv.id()))
        });
        for r in results {
            match r {
                Ok(conv) => {
                    write_conversation(&mut out, &conv)?;
                    ctx.summary.n_written += 1;
                }
                Err(e) => ctx.summary.error(e),
            }
        }
    }
    out.commit()
}
