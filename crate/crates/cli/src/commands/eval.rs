use std::collections::HashMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use duplex_core::manifest::{parse_eval_line, EvalItem};
use duplex_core::scalar::seconds_to_f64;
use duplex_core::simulator::{oracle_timeline, LogRecord};
use duplex_core::{
    aggregate, evaluate_timeline, tracks_from_conversation, GroundTruthLog, MetricsAccumulator,
    MetricsConfig, MetricsReport, Seconds,
};

use super::parse_seconds;
use crate::pipeline::{write_atomic, AtomicFile, ItemError, LineChunks};
use crate::report::{write_events_csv, OracleJson, ReportJson};
use crate::Ctx;

#[derive(clap::Args, Debug)]
pub struct Args {
    /// Conversation or segment-log JSONL.
    #[arg(long, short)]
    pub input: PathBuf,
    /// JSON report.
    #[arg(long, short)]
    pub output: PathBuf,
    /// Per-event CSV.
    #[arg(long)]
    pub events_csv: Option<PathBuf>,
    /// Ground-truth log JSONL from `simulate`; the report gains an oracle section.
    #[arg(long)]
    pub oracle: Option<PathBuf>,
    /// Longest stop latency that counts as a successful barge-in (seconds).
    #[arg(long, value_parser = parse_seconds)]
    pub success_window: Option<Seconds>,
    /// Agent onsets with at most this much user speech left are not false alarms (seconds).
    #[arg(long, value_parser = parse_seconds)]
    pub false_alarm_exemption: Option<Seconds>,
    /// How long after stopping the agent must stay silent (seconds).
    #[arg(long, value_parser = parse_seconds)]
    pub resume_guard: Option<Seconds>,
}

pub fn run(ctx: &mut Ctx, args: &Args) -> Result<()> {
    let base = ctx.config.metrics;
    let cfg = MetricsConfig {
        success_window: args.success_window.unwrap_or(base.success_window),
        false_alarm_exemption: args
            .false_alarm_exemption
            .unwrap_or(base.false_alarm_exemption),
        resume_guard: args.resume_guard.or(base.resume_guard),
    };
    cfg.validate()?;
    let logs = args.oracle.as_ref().map(|p| load_logs(p)).transpose()?;

    let mut acc = MetricsAccumulator::new();
    let mut oracle = Vec::new();
    let mut oracle_missing = Vec::new();
    for chunk in LineChunks::open(&args.input)? {
        let chunk = chunk?;
        ctx.summary.n_items += chunk.len();
        let results = ctx.par_map(chunk, |line| {
            let (id, tl) = match parse_eval_line(&line.text) {
                Ok(EvalItem::Conversation(conv)) => {
                    let tl = tracks_from_conversation(&conv)
                        .map_err(|e| ItemError::at_line(line.number, e).with_id(conv.id()))?;
                    (conv.id().to_string(), tl)
                }
                Ok(EvalItem::Segments(id, tl)) => (id, tl),
                Err(e) => return Err(ItemError::at_line(line.number, e)),
            };
            let engine = evaluate_timeline(id.as_str(), &tl, &cfg);
            let from_log = match &logs {
                None => None,
                Some(logs) => Some(match logs.get(&id) {
                    Some(log) => {
                        oracle_timeline(id.as_str(), log, &cfg)
                            .map(Some)
                            .map_err(|e| {
                                ItemError::at_line(line.number, format!("oracle: {e}")).with_id(&id)
                            })?
                    }
                    None => None,
                }),
            };
            Ok((id, engine, from_log))
        });
        for r in results {
            match r {
                Ok((id, engine, from_log)) => {
                    acc.add(engine);
                    match from_log {
                        Some(Some(m)) => oracle.push(m),
                        Some(None) => oracle_missing.push(id),
                        None => {}
                    }
                    ctx.summary.n_written += 1;
                }
                Err(e) => ctx.summary.error(e),
            }
        }
    }

    let report = acc.finish();
    let mut json = ReportJson::new(&report, &cfg);
    if logs.is_some() {
        let n_logs = oracle.len();
        let oracle_report = aggregate(oracle);
        let mut mismatches = compare(&report, &oracle_report);
        for id in &oracle_missing {
            mismatches.push(format!("no ground-truth log for {id}"));
        }
        for m in &mismatches {
            ctx.summary.error(ItemError {
                line: None,
                id: None,
                message: format!("oracle mismatch: {m}"),
            });
        }
        json.oracle = Some(OracleJson {
            n_logs,
            agrees: mismatches.is_empty(),
            n_barge_in_opportunities: oracle_report.n_barge_in_opportunities,
            n_successes: oracle_report.n_successes,
            n_false_alarms: oracle_report.n_false_alarms,
            mean_barge_in_latency_s: oracle_report.mean_barge_in_latency.map(seconds_to_f64),
            mismatches,
        });
    }
    if let Some(path) = &args.events_csv {
        let mut out = AtomicFile::create(path)?;
        write_events_csv(&report, &mut out)?;
        out.commit()?;
    }
    write_atomic(&args.output, json.to_json()?.as_bytes())
}

fn load_logs(path: &Path) -> Result<HashMap<String, GroundTruthLog>> {
    let mut logs = HashMap::new();
    for chunk in LineChunks::open(path)? {
        for line in chunk? {
            let rec: LogRecord = serde_json::from_str(&line.text).with_context(|| {
                format!("{} line {}: not a log record", path.display(), line.number)
            })?;
            let log = rec
                .to_log()
                .with_context(|| format!("{} line {}", path.display(), line.number))?;
            if logs.insert(rec.id.clone(), log).is_some() {
                bail!(
                    "{} line {}: duplicate id {}",
                    path.display(),
                    line.number,
                    rec.id
                );
            }
        }
    }
    Ok(logs)
}

fn compare(engine: &MetricsReport<Seconds>, oracle: &MetricsReport<Seconds>) -> Vec<String> {
    let mut out = Vec::new();
    let mut check = |name: &str, a: usize, b: usize| {
        if a != b {
            out.push(format!("{name}: engine {a}, oracle {b}"));
        }
    };
    check("timelines", engine.n_timelines, oracle.n_timelines);
    check(
        "opportunities",
        engine.n_barge_in_opportunities,
        oracle.n_barge_in_opportunities,
    );
    check("successes", engine.n_successes, oracle.n_successes);
    check(
        "false alarm candidates",
        engine.n_false_alarm_candidates,
        oracle.n_false_alarm_candidates,
    );
    check("false alarms", engine.n_false_alarms, oracle.n_false_alarms);
    if engine.mean_barge_in_latency != oracle.mean_barge_in_latency {
        out.push(format!(
            "mean latency: engine {:?}, oracle {:?}",
            engine.mean_barge_in_latency.map(seconds_to_f64),
            oracle.mean_barge_in_latency.map(seconds_to_f64)
        ));
    }
    if out.is_empty() && engine != oracle {
        out.push("per-event evidence differs".to_string());
    }
    out
}
