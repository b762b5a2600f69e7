use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgAction, Parser, Subcommand};

use srbkit::harness::{describe, model_listing, run, ExperimentConfig};
use srbkit::parallel::WORKERS_ENV;

/// Experiment runner for the srbkit toolkit.
#[derive(Parser)]
#[command(version, about, after_help = format!("Worker threads are read from {WORKERS_ENV}."))]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a JSON config.
    Run {
        config: PathBuf,
        /// Overrides `output_dir` from the config.
        #[arg(short, long)]
        output_dir: Option<PathBuf>,
    },
    /// List the available models and their parameters.
    ListModels,
    /// Describe an experiment: parameters, files and assertions.
    Describe { experiment: String },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match cli.command {
        Command::ListModels => {
            print!("{}", model_listing());
            ExitCode::SUCCESS
        }
        Command::Describe { experiment } => match describe(&experiment) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::Run { config, output_dir } => {
            let mut cfg = match ExperimentConfig::from_path(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Some(dir) = output_dir {
                cfg.output_dir = dir;
            }
            match run(&cfg) {
                Ok(summary) => {
                    for a in &summary.assertions {
                        println!("{} {}: {}", if a.passed { "PASS" } else { "FAIL" }, a.name, a.detail);
                    }
                    println!("summary written to {}", cfg.output_dir.join("summary.json").display());
                    if summary.passed {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
