mod commands;
mod pipeline;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use duplex_core::ToolConfig;

use pipeline::RunSummary;

/// Build, align, evaluate and simulate full-duplex dialogue data.
#[derive(Parser, Debug)]
#[command(name = "duplexkit", version, about)]
struct Cli {
    /// JSON configuration file (grid, vocab, builder, metrics sections).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Seed for every random choice made by the subcommand.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = one per CPU).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    /// Write a JSON summary of item-level errors here.
    #[arg(long, global = true)]
    errors_json: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Turn QA pairs or conversations into duplex conversations.
    Duplexify(commands::duplexify::Args),
    /// Scale the silence between consecutive user turns.
    Impatient(commands::impatient::Args),
    /// Place agent text and speech tokens on the frame grid (DUPX files).
    Align(commands::align::Args),
    /// Compute turn-taking metrics for a manifest or segment log.
    Eval(commands::eval::Args),
    /// Simulate conversations with a labeled ground-truth log.
    Simulate(commands::simulate::Args),
    /// Render the user and agent tracks of one conversation as text.
    Inspect(commands::inspect::Args),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Duplexify(_) => "duplexify",
            Command::Impatient(_) => "impatient",
            Command::Align(_) => "align",
            Command::Eval(_) => "eval",
            Command::Simulate(_) => "simulate",
            Command::Inspect(_) => "inspect",
        }
    }
}

/// Shared state for one subcommand invocation.
pub struct Ctx {
    pub config: ToolConfig,
    pub seed: u64,
    pub pool: rayon::ThreadPool,
    pub summary: RunSummary,
}

impl Ctx {
    /// Maps `f` over `items` on the worker pool, keeping input order.
    pub fn par_map<I, O, F>(&self, items: Vec<I>, f: F) -> Vec<O>
    where
        I: Send,
        O: Send,
        F: Fn(I) -> O + Sync + Send,
    {
        use rayon::prelude::*;
        self.pool
            .install(|| items.into_par_iter().map(&f).collect())
    }
}

fn build_ctx(cli: &Cli) -> Result<Ctx> {
    let config = match &cli.config {
        Some(p) => {
            ToolConfig::from_path(p).with_context(|| format!("loading config {}", p.display()))?
        }
        None => ToolConfig::default(),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.jobs)
        .build()
        .context("cannot start worker pool")?;
    Ok(Ctx {
        config,
        seed: cli.seed,
        pool,
        summary: RunSummary::new(cli.command.name()),
    })
}

fn run(cli: &Cli, ctx: &mut Ctx) -> Result<()> {
    match &cli.command {
        Command::Duplexify(a) => commands::duplexify::run(ctx, a),
        Command::Impatient(a) => commands::impatient::run(ctx, a),
        Command::Align(a) => commands::align::run(ctx, a),
        Command::Eval(a) => commands::eval::run(ctx, a),
        Command::Simulate(a) => commands::simulate::run(ctx, a),
        Command::Inspect(a) => commands::inspect::run(ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut summary_on_fatal = RunSummary::new(cli.command.name());
    let outcome = build_ctx(&cli).and_then(|mut ctx| {
        let r = run(&cli, &mut ctx);
        summary_on_fatal = std::mem::take(&mut ctx.summary);
        r
    });
    let mut summary = summary_on_fatal;
    let code = match &outcome {
        Ok(()) if summary.n_errors == 0 => ExitCode::SUCCESS,
        Ok(()) => {
            eprintln!("{} item error(s)", summary.n_errors);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            summary.fatal = Some(format!("{e:#}"));
            ExitCode::from(2)
        }
    };
    if summary.command.is_empty() {
        summary.command = cli.command.name().to_string();
    }
    if let Some(path) = &cli.errors_json {
        if let Err(e) = summary.write_json(path) {
            eprintln!("error: cannot write error summary: {e:#}");
            return ExitCode::from(2);
        }
    }
    code
}
