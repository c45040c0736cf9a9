//! Command-line driver.
//!
//! ```text
//! mdc run <config> [--output-dir DIR] [--max-iterations N]
//! mdc gradcheck <config>
//! mdc init <problem> [--output FILE]
//! ```
//!
//! Exit codes: 0 on success, 1 on configuration and file errors, 2 on
//! numerical failures.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use mdc::config::{parse_config, ProblemKind, RunConfig};
use mdc::driver::{gradient_check, run_optimization, GRADCHECK_FLOOR};

#[derive(Parser)]
#[command(name = "mdc", version, about = "Topology optimization with moving deformable components")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize the configured problem and write the result files.
    Run {
        config: PathBuf,
        /// Overrides `output.dir`.
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Overrides `optimizer.max_iterations`.
        #[arg(long)]
        max_iterations: Option<usize>,
    },
    /// Compare analytic gradients with central finite differences.
    Gradcheck { config: PathBuf },
    /// Write a default configuration for a benchmark problem.
    Init {
        /// short_beam_a, short_beam_b, mbb or custom.
        problem: String,
        /// Destination file; printed to stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

enum Failure {
    Config(String),
    Numerical(String),
}

fn load(path: &PathBuf) -> Result<RunConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    parse_config(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

/// Unwritable output locations are configuration problems; everything else
/// the pipeline reports is numerical.
fn classify(e: mdc::Error) -> Failure {
    let mut inner = &e;
    while let mdc::Error::AtIteration { source, .. } = inner {
        inner = source;
    }
    match inner {
        mdc::Error::Io(_) => Failure::Config(e.to_string()),
        _ => Failure::Numerical(e.to_string()),
    }
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run {
            config,
            output_dir,
            max_iterations,
        } => {
            let mut cfg = load(&config)?;
            if let Some(dir) = output_dir {
                cfg.output.dir = dir;
            }
            if let Some(n) = max_iterations {
                if n == 0 {
                    return Err(Failure::Config("--max-iterations must be at least 1".into()));
                }
                cfg.optimizer.max_iterations = n;
            }
            let start = Instant::now();
            let result = run_optimization(&cfg).map_err(classify)?;
            println!("problem            {}", cfg.problem.name());
            println!("components         {}", result.components.len());
            println!("design variables   {}", result.design_variable_count);
            println!("iterations         {}", result.history.len());
            println!("converged          {}", result.converged);
            println!("reported iteration {}", result.final_iteration);
            println!("feasible           {}", result.feasible);
            println!("compliance         {:.4}", result.final_compliance);
            println!("volume fraction    {:.6}", result.final_volume_fraction);
            println!("elapsed            {:.1} s", start.elapsed().as_secs_f64());
            println!("output             {}", cfg.output.dir.display());
        }
        Command::Gradcheck { config } => {
            let cfg = load(&config)?;
            let start = Instant::now();
            let report = gradient_check(&cfg).map_err(classify)?;
            println!("components                  {}", report.components.len());
            println!("max rel. error (compliance) {:.3e}", report.max_rel_compliance);
            println!("max rel. error (volume)     {:.3e}", report.max_rel_volume);
            println!("max relative error          {:.3e}", report.max_relative_error());
            println!("absolute floor              {GRADCHECK_FLOOR:e}");
            println!("elapsed                     {:.1} s", start.elapsed().as_secs_f64());
        }
        Command::Init { problem, output } => {
            let kind = ProblemKind::from_name(&problem).ok_or_else(|| {
                Failure::Config(format!(
                    "unknown problem {problem:?} (short_beam_a, short_beam_b, mbb, custom)"
                ))
            })?;
            let text = RunConfig::defaults(kind).serialize();
            match output {
                Some(path) => fs::write(&path, text)
                    .map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
