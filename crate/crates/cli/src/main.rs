//! `ergolab`: run the numerical experiments from a config file.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::output::{RunDir, RunRecord};

#[derive(Parser)]
#[command(name = "ergolab", version, about = "Random toral automorphisms and their stationary measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lyapunov exponents and total-variation robustness.
    Exponents(Common),
    /// Eigen analysis, cone certificates and perturbation bisection.
    Cones(Common),
    /// Classify the stationary measure.
    Trichotomy(Common),
    /// Stopping-time tables.
    StoppingTimes(Common),
    /// Projective exponent of the mixed cocycle against its closed form.
    MixedCocycle(Common),
    /// Correlation dimension of a sample or a conditional slice.
    Dimension(Common),
}

#[derive(clap::Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: PathBuf,
    /// Output root.
    #[arg(long, default_value = "runs")]
    out: PathBuf,
    /// Comma-separated seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

type Runner = fn(&Config, &RunDir) -> Result<commands::Outcome, commands::CmdError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args, runner): (&str, Common, Runner) = match cli.command {
        Command::Exponents(a) => ("exponents", a, commands::exponents),
        Command::Cones(a) => ("cones", a, commands::cones),
        Command::Trichotomy(a) => ("trichotomy", a, commands::trichotomy),
        Command::StoppingTimes(a) => ("stopping-times", a, commands::stopping_times_cmd),
        Command::MixedCocycle(a) => ("mixed-cocycle", a, commands::mixed_cocycle),
        Command::Dimension(a) => ("dimension", a, commands::dimension),
    };
    match run(name, args, runner) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {name}: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(name: &str, args: Common, runner: Runner) -> Result<bool, String> {
    let mut cfg = Config::load(&args.config).map_err(|e| e.0)?;
    if let Some(seeds) = args.seeds {
        cfg.seeds = seeds;
    }
    cfg.validate().map_err(|e| e.0)?;
    if let Some(n) = args.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| format!("thread pool: {e}"))?;
    }
    let hash = cfg.hash();
    let dir = RunDir::create(&args.out, name, &hash, &cfg.seeds).map_err(|e| format!("creating run directory: {e}"))?;
    let t0 = Instant::now();
    let outcome = runner(&cfg, &dir).map_err(|e| e.0)?;
    let record = RunRecord {
        experiment: name.to_string(),
        run_id: dir.run_id.clone(),
        config_hash: hash,
        config: cfg,
        metrics: outcome.metrics,
        checks: outcome.checks,
        wall_time_s: t0.elapsed().as_secs_f64(),
    };
    dir.write_json("record.json", &record).map_err(|e| format!("writing record: {e}"))?;
    for c in &record.checks {
        println!("{}: {} ({})", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    println!("run {} ({}) written to {}", record.run_id, dir.header(), dir.path.display());
    Ok(record.passed())
}
