use std::path::PathBuf;

use anyhow::{bail, Result};
use duplex_core::builder::TailPolicy;
use duplex_core::manifest::{parse_source_line, SourceItem};
use duplex_core::scalar::millis;
use duplex_core::{
    apply_barge_in_with, build_duplex_single_turn, concat_multiturn, enforce_turn_limit,
    BuilderConfig, Conversation, Seconds, SpeakerRole,
};
use rand::seq::SliceRandom;
use rand::Rng;

use super::{write_conversation, BuilderOverrides};
use crate::pipeline::{
    item_rng, AtomicFile, ItemError, LineChunks, STREAM_BARGE_IN, STREAM_SHUFFLE,
};
use crate::Ctx;

/// Groups formed per shuffle block when concatenating.
const GROUPS_PER_BLOCK: usize = 1024;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// QA pair or conversation JSONL.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Duplex conversation JSONL.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Concatenate this many randomly paired items into each output.
    #[arg(long, default_value_t = 1)]
    pub multiturn: usize,
    /// Fraction of outputs that receive a barge-in.
    #[arg(long, default_value_t = 0.0)]
    pub barge_in: f64,
    #[command(flatten)]
    pub builder: BuilderOverrides,
}

/// A conversation together with the input line it came from.
struct Item {
    line: usize,
    conv: Conversation<Seconds>,
}

pub fn run(ctx: &mut Ctx, args: &Args) -> Result<()> {
    if args.multiturn == 0 {
        bail!("--multiturn must be at least 1");
    }
    if !(0.0..=1.0).contains(&args.barge_in) {
        bail!("--barge-in must be in [0, 1], got {}", args.barge_in);
    }
    let cfg = args.builder.apply(ctx.config.builder)?;
    let mut out = AtomicFile::create(&args.output)?;
    let block_size = args.multiturn * GROUPS_PER_BLOCK;
    let mut block: Vec<Item> = Vec::new();
    let mut n_blocks = 0u64;
    let mut n_groups = 0u64;

    for chunk in LineChunks::open(&args.input)? {
        let chunk = chunk?;
        ctx.summary.n_items += chunk.len();
        let parsed = ctx.par_map(chunk, |line| {
            let conv = match parse_source_line(&line.text) {
                Ok(SourceItem::Pair(pair)) => build_duplex_single_turn(&pair, &cfg),
                Ok(SourceItem::Conversation(conv)) => Ok(conv),
                Err(e) => Err(e),
            };
            match conv {
                Err(e) => Err(Ok(ItemError::at_line(line.number, e))),
                Ok(conv) => match enforce_turn_limit(conv, &cfg) {
                    Ok(conv) => Ok(Item {
                        line: line.number,
                        conv,
                    }),
                    Err(rej) => Err(Err(
                        ItemError::at_line(line.number, &rej).with_id(&rej.conversation_id)
                    )),
                },
            }
        });
        for r in parsed {
            match r {
                Ok(item) => block.push(item),
                Err(Ok(e)) => ctx.summary.error(e),
                Err(Err(filtered)) => ctx.summary.filter(filtered),
            }
            if block.len() == block_size {
                emit_block(
                    ctx,
                    args,
                    &cfg,
                    std::mem::take(&mut block),
                    n_blocks,
                    &mut n_groups,
                    &mut out,
                )?;
                n_blocks += 1;
            }
        }
    }
    if !block.is_empty() {
        emit_block(ctx, args, &cfg, block, n_blocks, &mut n_groups, &mut out)?;
    }
    out.commit()
}

fn emit_block(
    ctx: &mut Ctx,
    args: &Args,
    cfg: &BuilderConfig<Seconds>,
    mut block: Vec<Item>,
    block_index: u64,
    n_groups: &mut u64,
    out: &mut AtomicFile,
) -> Result<()> {
    if args.multiturn > 1 {
        block.shuffle(&mut item_rng(ctx.seed, STREAM_SHUFFLE, block_index));
    }
    let mut groups = Vec::new();
    let mut rest = block.into_iter().peekable();
    while rest.peek().is_some() {
        let group: Vec<Item> = rest.by_ref().take(args.multiturn).collect();
        groups.push((*n_groups, group));
        *n_groups += 1;
    }
    let seed = ctx.seed;
    let results = ctx.par_map(groups, |(g, group)| build_group(seed, g, group, args, cfg));
    for r in results {
        match r {
            Ok(conv) => {
                write_conversation(out, &conv)?;
                ctx.summary.n_written += 1;
            }
            Err(e) => ctx.summary.error(e),
        }
    }
    Ok(())
}

fn build_group(
    seed: u64,
    group_index: u64,
    group: Vec<Item>,
    args: &Args,
    cfg: &BuilderConfig<Seconds>,
) -> Result<Conversation<Seconds>, ItemError> {
    let first_line = group[0].line;
    let lines: Vec<String> = group.iter().map(|i| i.line.to_string()).collect();
    let fail = |e: duplex_core::Error| {
        let mut err = ItemError::at_line(first_line, e);
        if group.len() > 1 {
            err.message = format!("{} (items from lines {})", err.message, lines.join(", "));
        }
        err
    };
    let convs: Vec<Conversation<Seconds>> = group.iter().map(|i| i.conv.clone()).collect();
    let conv = concat_multiturn(&convs, cfg).map_err(&fail)?;
    if args.barge_in <= 0.0 {
        return Ok(conv);
    }
    let mut rng = item_rng(seed, STREAM_BARGE_IN, group_index);
    if !rng.random_bool(args.barge_in) {
        return Ok(conv);
    }
    let turns = conv.turns();
    // agent turns that are followed by a user turn
    let candidates: Vec<(usize, usize)> = turns
        .iter()
        .enumerate()
        .filter(|(_, t)| t.role() == SpeakerRole::Agent)
        .filter_map(|(i, _)| {
            turns[i + 1..]
                .iter()
                .position(|t| t.role() == SpeakerRole::User)
                .map(|p| (i, i + 1 + p))
        })
        .collect();
    if candidates.is_empty() {
        return Ok(conv);
    }
    let (agent_idx, user_idx) = candidates[rng.random_range(0..candidates.len())];
    let agent = &turns[agent_idx];
    // whole milliseconds strictly inside the agent turn
    let k = Seconds::from_integer(1000);
    let lo = (agent.start() * k).floor().to_integer() + 1;
    let hi = (agent.end() * k).ceil().to_integer() - 1;
    if lo > hi {
        return Ok(conv);
    }
    let t_interrupt = millis(rng.random_range(lo..=hi));
    let next_user = turns[user_idx].clone();
    apply_barge_in_with(
        &conv,
        agent_idx,
        t_interrupt,
        &next_user,
        cfg,
        TailPolicy::Restitch { user_idx },
    )
    .map_err(&fail)
}
