use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use gravwell::config::AnalysisConfig;
use gravwell::gravity::ExitDirection;
use gravwell::pipeline::{cmd_calibrate, Pipeline};

#[derive(Parser)]
#[command(
    name = "gravwell",
    version,
    about = "Echo-chamber exit analysis for threaded comment corpora"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse inputs and write a corpus summary.
    Ingest(Common),
    /// Score every user's history and write the bias report.
    Bias(Common),
    /// Bias plus pull forces and predicted exit ranks.
    Simulate(Common),
    /// Spearman evaluation of predicted against observed exit order.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Use an existing force table instead of recomputing it.
        #[arg(long)]
        forces: Option<PathBuf>,
    },
    /// Every stage, every artifact.
    Run(Common),
    /// Agreement between human and model labels.
    Calibrate {
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comment dump (JSON Lines). Repeatable; replaces the config's inputs.
    #[arg(long = "input")]
    inputs: Vec<PathBuf>,
    /// Restrict to these subreddits. Repeatable.
    #[arg(long = "subreddit")]
    subreddits: Vec<String>,
    #[arg(long)]
    max_ancestors: Option<usize>,
    #[arg(long)]
    exit_direction: Option<ExitDirection>,
    #[arg(long)]
    max_in_flight: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<(AnalysisConfig, PathBuf)> {
        let mut config = match &self.config {
            Some(p) => AnalysisConfig::load(p)?,
            None => AnalysisConfig::default(),
        };
        if !self.inputs.is_empty() {
            config.inputs = self.inputs.clone();
        }
        if !self.subreddits.is_empty() {
            config.subreddits = self.subreddits.clone();
        }
        if let Some(n) = self.max_ancestors {
            config.max_ancestors = n;
        }
        if let Some(d) = self.exit_direction {
            config.exit_direction = d;
        }
        if let Some(n) = self.max_in_flight {
            config.scorer.max_in_flight = n;
        }
        config.validate()?;
        let out = self
            .out
            .clone()
            .or_else(|| config.out_dir.clone())
            .unwrap_or_else(|| PathBuf::from("out"));
        Ok((config, out))
    }
}

fn prepare(common: &Common) -> Result<(Pipeline, PathBuf)> {
    let (config, out) = common.resolve()?;
    create_out(&out)?;
    Ok((Pipeline::from_config(config)?, out))
}

fn create_out(out: &Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(common) => {
            let (p, out) = prepare(&common)?;
            let s = p.cmd_ingest(&out)?;
            println!(
                "{} comments, {} users, {} threads ({} malformed, {} dropped, {} duplicates)",
                s.comments, s.users, s.threads, s.malformed, s.dropped, s.duplicates
            );
            for sub in &s.subreddits {
                println!("  {}: {} comments, {} users", sub.subreddit, sub.comments, sub.users);
            }
        }
        Command::Bias(common) => {
            let (p, out) = prepare(&common)?;
            let stage = p.cmd_bias(&out)?;
            println!(
                "{} users scored, {} diagnostics",
                stage.records.len(),
                stage.diagnostics.len()
            );
        }
        Command::Simulate(common) => {
            let (p, out) = prepare(&common)?;
            let stage = p.cmd_simulate(&out)?;
            println!("{} forces, {} diagnostics", stage.rows.len(), stage.diagnostics.len());
        }
        Command::Evaluate { common, forces } => {
            let (p, out) = prepare(&common)?;
            for e in p.cmd_evaluate(&out, forces.as_deref())? {
                match (e.spearman_rho, e.p_value) {
                    (Some(rho), Some(pv)) => println!("{}: n={} rho={rho:.4} p={pv:.4}", e.subreddit, e.n_common),
                    _ => println!("{}: n={} insufficient data", e.subreddit, e.n_common),
                }
            }
        }
        Command::Run(common) => {
            let (p, out) = prepare(&common)?;
            let s = p.cmd_run(&out)?;
            println!(
                "{} subreddits, {} users, {} forces, {} scoring failures; {} scoring calls, {} embedding calls",
                s.subreddits, s.users, s.forces, s.scoring_failures, s.scoring_calls, s.embedding_calls
            );
            println!("artifacts in {}", out.display());
        }
        Command::Calibrate { labels, out } => {
            create_out(&out)?;
            for r in cmd_calibrate(&labels, &out)? {
                println!(
                    "{}: n={} qwk={:.4} nmae={:.4} ({})",
                    r.kind, r.n, r.qwk, r.nmae, r.agreement
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
