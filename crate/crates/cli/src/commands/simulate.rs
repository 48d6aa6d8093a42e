use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use duplex_core::simulator::{simulate_named, AgentPolicySpec, LogRecord, UserScriptSpec};
use duplex_core::{AgentPolicy, UserScript};
use rand::Rng;
use serde::de::DeserializeOwned;

use super::write_conversation;
use crate::pipeline::{item_rng, AtomicFile, ItemError, STREAM_SIMULATE};
use crate::Ctx;

/// Runs handed to the worker pool at once.
const BATCH: usize = 2048;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Agent policy JSON.
    #[arg(long)]
    pub policy: PathBuf,
    /// User script JSON.
    #[arg(long)]
    pub script: PathBuf,
    /// Number of conversations.
    #[arg(long, short)]
    pub n: usize,
    /// Conversation JSONL.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Ground-truth log JSONL, one line per conversation.
    #[arg(long)]
    pub log: PathBuf,
    /// Conversation ids are `<prefix>-<index>`.
    #[arg(long, default_value = "sim")]
    pub id_prefix: String,
}

fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {what} {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid {what} {}", path.display()))
}

pub fn run(ctx: &mut Ctx, args: &Args) -> Result<()> {
    let policy = AgentPolicy::try_from(&read_json::<AgentPolicySpec>(&args.policy, "policy")?)
        .with_context(|| format!("invalid policy {}", args.policy.display()))?;
    policy
        .validate()
        .with_context(|| format!("invalid policy {}", args.policy.display()))?;
    let script = UserScript::try_from(&read_json::<UserScriptSpec>(&args.script, "script")?)
        .with_context(|| format!("invalid script {}", args.script.display()))?;
    script
        .validate()
        .with_context(|| format!("invalid script {}", args.script.display()))?;

    let mut out = AtomicFile::create(&args.output)?;
    let mut log_out = AtomicFile::create(&args.log)?;
    let seed = ctx.seed;
    let mut start = 0;
    while start < args.n {
        let indices: Vec<usize> = (start..args.n.min(start + BATCH)).collect();
        start += indices.len();
        ctx.summary.n_items += indices.len();
        let results = ctx.par_map(indices, |i| {
            let run_seed: u64 = item_rng(seed, STREAM_SIMULATE, i as u64).random();
            let id = format!("{}-{i}", args.id_prefix);
            simulate_named(id.as_str(), &policy, &script, run_seed)
                .map(|(conv, log)| (conv, LogRecord::from_log(&id, &log)))
                .map_err(|e| ItemError {
                    line: None,
                    id: Some(id),
                    message: e.to_string(),
                })
        });
        for r in results {
            match r {
                Ok((conv, rec)) => {
                    write_conversation(&mut out, &conv)?;
                    serde_json::to_writer(&mut log_out, &rec)?;
                    log_out.write_all(b"\n")?;
                    ctx.summary.n_written += 1;
                }
                Err(e) => ctx.summary.error(e),
            }
        }
    }
    out.commit()?;
    log_out.commit()
}
