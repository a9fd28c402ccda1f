//! Experiment runner: parse a TOML config, dispatch the scenario, write the
//! norm series / fits / verdicts, and exit 0 iff every theorem-case
//! assertion passed.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fraclab::config::ExperimentConfig;
use fraclab::runner;

#[derive(Parser)]
#[command(name = "fraclab", version, about = "space-time fractional diffusion laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        /// Path to the TOML experiment config.
        config: PathBuf,
        /// Output directory for CSV/JSON artifacts (defaults to the config's
        /// out_dir, or "out").
        #[arg(long)]
        out: Option<PathBuf>,
        /// Assert-only mode: run the scenario checks, write nothing.
        #[arg(long)]
        check: bool,
        /// Grid/basis refinement factor (power of two) for resolution studies.
        #[arg(long, default_value_t = 1)]
        resolution_scale: u32,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            check,
            resolution_scale,
        } => {
            let cfg = match ExperimentConfig::from_path(&config) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            let out_dir = if check {
                None
            } else {
                Some(
                    out.or_else(|| cfg.out_dir.clone().map(PathBuf::from))
                        .unwrap_or_else(|| PathBuf::from("out")),
                )
            };
            match runner::run(&cfg, out_dir.as_deref(), resolution_scale) {
                Ok(outcome) => {
                    for a in &outcome.assertions {
                        let flag = if a.pass { "PASS" } else { "FAIL" };
                        println!("[{flag}] {}: {}", a.case, a.detail);
                    }
                    for p in &outcome.artifacts {
                        println!("wrote {}", p.display());
                    }
                    if outcome.all_passed() {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::FAILURE
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
