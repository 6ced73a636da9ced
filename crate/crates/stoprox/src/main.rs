use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use stoprox::bench::{run_suite, Suite};
use stoprox::config::RunConfig;
use stoprox::pipeline::{restore, simulate, validate, RestoreOptions};

#[derive(Parser)]
#[command(name = "stoprox", version, about = "Online image restoration by stochastic proximal splitting")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Run configuration (key=value lines); defaults when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed of the observation stream
    #[arg(long)]
    seed: Option<u64>,
    /// Iteration budget
    #[arg(long)]
    iters: Option<usize>,
    /// Keep every n-th iterate for the residual curve
    #[arg(long)]
    stride: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::read(path).with_context(|| format!("loading {}", path.display()))?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(iters) = self.iters {
            cfg.max_iterations = iters;
        }
        if let Some(stride) = self.stride {
            cfg.checkpoint_stride = stride;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a stream manifest and degraded previews
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of records
        #[arg(long, default_value_t = 2)]
        count: usize,
    },
    /// Run the online restoration
    Restore {
        #[command(flatten)]
        common: Common,
        /// Run even if the step sizes fail validation
        #[arg(long)]
        force: bool,
    },
    /// Check the convergence conditions of a configuration
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Run a benchmark suite: prox, linops, fb-quadratic, pd-tiny-tv, oracle-stats
    Bench { suite: String },
}

fn run() -> Result<bool> {
    match Cli::parse().command {
        Command::Simulate { common, count } => {
            let cfg = common.load()?;
            let report = simulate(&cfg, count, &cfg.output)?;
            println!("manifest {} ({} records)", report.manifest.display(), report.count);
            for p in &report.previews {
                let path = p.path.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
                println!("preview {} snr_db={:.2} {}", p.index, p.snr_db, path);
            }
            Ok(true)
        }
        Command::Restore { common, force } => {
            let cfg = common.load()?;
            let report = restore(&cfg, &RestoreOptions { force, write_outputs: true })?;
            println!("restored snr_db={:.2}", report.snr_db);
            println!("best preview snr_db={:.2}", report.best_preview_snr());
            println!("kkt={:e}", report.kkt);
            for w in &report.trace.warnings {
                println!("warning: {w}");
            }
            println!("outputs in {}", report.output.display());
            Ok(true)
        }
        Command::Validate { common } => {
            let report = validate(&common.load()?)?;
            println!("{report}");
            Ok(report.passed())
        }
        Command::Bench { suite } => {
            let suite: Suite = suite.parse()?;
            let report = run_suite(suite)?;
            print!("{report}");
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
