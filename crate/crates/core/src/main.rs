use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use intractable::harness::{
    acd_for_trace, posterior_summary, run_experiment, simulate_dataset, ExperimentConfig, RunOptions, RunStatus,
    SimulateConfig,
};
use intractable::outer::trace::write_atomic;
use intractable::Error;

#[derive(Parser)]
#[command(name = "intractable", version, about = "Samplers and diagnostics for doubly-intractable posteriors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset from a model at fixed parameters.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Output data file; overrides `out` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a tuning-grid experiment.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Continue interrupted chains from their checkpoints.
        #[arg(long)]
        resume: bool,
    },
    /// Compute the curvature diagnostic for an existing trace.
    Acd {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        /// Report path; defaults to `acd.json` next to the trace.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Posterior summary and density grid of a trace.
    Summarize {
        #[arg(long)]
        trace: PathBuf,
        /// Output directory; defaults to the trace's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Parse { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

fn set_workers(workers: Option<usize>) {
    if let Some(n) = workers {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn run(cli: Cli) -> Result<u8, Error> {
    match cli.command {
        Command::Simulate { config, out, seed } => {
            let mut cfg = SimulateConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let path = out
                .or(cfg.out.clone())
                .ok_or_else(|| Error::Config("out: no output file given".into()))?;
            let stats = simulate_dataset(&cfg, &path)?;
            println!("wrote {} (S = {stats:?})", path.display());
            Ok(0)
        }
        Command::Run {
            config,
            out,
            seed,
            workers,
            resume,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let outcome = run_experiment(&cfg, &RunOptions { out, workers, resume })?;
            for e in &outcome.entries {
                let acd = e
                    .acd
                    .as_ref()
                    .map(|a| format!("ACD {:.3} [{:.3}, {:.3}] {}", a.mean, a.lo, a.hi, if a.pass { "pass" } else { "fail" }))
                    .unwrap_or_default();
                println!("{} = {}: {} {acd}", e.tuning, e.value, e.status);
            }
            println!("summary: {}", outcome.dir.join("summary.csv").display());
            Ok(match outcome.status {
                RunStatus::Complete => 0,
                RunStatus::Partial => EXIT_PARTIAL,
                RunStatus::Failed => EXIT_RUNTIME,
            })
        }
        Command::Acd {
            config,
            trace,
            out,
            seed,
            workers,
        } => {
            set_workers(workers);
            let cfg = ExperimentConfig::load(&config)?;
            let report = acd_for_trace(&cfg, &trace, seed)?;
            let path = out.unwrap_or_else(|| trace.with_file_name("acd.json"));
            let json = serde_json::to_vec_pretty(&report).map_err(|e| Error::Unsupported(e.to_string()))?;
            write_atomic(&path, &json)?;
            println!(
                "ACD mean {:.4} [{:.4}, {:.4}], threshold {:.2}: {}",
                report.mean,
                report.lo,
                report.hi,
                report.threshold,
                if report.pass { "pass" } else { "fail" }
            );
            Ok(0)
        }
        Command::Summarize { trace, out } => {
            let dir = out.unwrap_or_else(|| trace.parent().map(PathBuf::from).unwrap_or_default());
            for p in posterior_summary(&trace, &dir)? {
                println!("wrote {}", p.display());
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
