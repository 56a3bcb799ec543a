//! Batch front end: TOML configuration, task dispatch, reports.

pub mod config;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{Model, ModelConfig, Numerics, RunConfig, Task};
pub use run::{run, RunOutcome, EXIT_DOMAIN, EXIT_OK, EXIT_RESOURCE, EXIT_VERIFICATION};

use crate::error::Result;

/// Command line flags. `--task` and `--seed` override the configuration.
#[derive(Debug, Parser)]
#[command(name = "hypdim", version, about = "Dimension estimates for hyperbolic sets")]
pub struct CliArgs {
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// entropy | pressure | dim | boxcount | sweep | holder | verify
    #[arg(long)]
    pub task: Option<String>,
    /// Output directory (default: the config's `out`, else ./out).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; affects speed only.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn resolve(args: &CliArgs) -> Result<(RunConfig, PathBuf)> {
    let mut config = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => {
            let task = args.task.as_deref().unwrap_or("verify");
            RunConfig::from_toml(&format!("task = \"{}\"", task.parse::<Task>()?.name()))?
        }
    };
    if let Some(t) = &args.task {
        config.task = t.parse()?;
    }
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    let out = args
        .out
        .clone()
        .or_else(|| config.out.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    Ok((config, out))
}

/// Runs the front end and returns the process exit status.
pub fn main_with(args: CliArgs) -> i32 {
    if let Some(n) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global() {
            eprintln!("cli: cannot configure {n} threads: {e}");
            return EXIT_DOMAIN;
        }
    }
    let outcome = resolve(&args).and_then(|(config, out)| run(&config, &out).map(|o| (o, out)));
    match outcome {
        Ok((o, out)) => {
            for line in &o.summary {
                println!("{line}");
            }
            println!("wrote {} files to {}", o.files.len(), out.display());
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
