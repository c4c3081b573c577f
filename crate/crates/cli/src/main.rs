use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use wgmc_cli::{report, resolve_workers, run, validate, CliError, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "wgmc", version, about = "Run, validate and report wgmc experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the suite named in the config and write artifacts plus a manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print diagnostics for a config without running anything.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Aggregate the artifacts of a finished run.
    Report {
        /// Manifest file or the run's output directory.
        manifest: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", serde_json::to_string(&e.report()).expect("error report serializes"));
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            workers,
            out,
        } => {
            let result = resolve_workers(workers).and_then(|w| {
                let cfg = ExperimentConfig::load(&config, &Overrides { seed, out })?;
                run(&cfg, w)
            });
            match result {
                Ok(m) => {
                    println!("{}", serde_json::json!({"status": "completed", "out": m.config.out, "config_hash": m.config_hash, "files": m.files.len()}));
                    ExitCode::SUCCESS
                }
                Err(e) => fail(e),
            }
        }
        Command::Validate {
            config,
            seed,
            workers,
            out,
        } => {
            let result = resolve_workers(workers).and_then(|w| {
                let cfg = ExperimentConfig::load(&config, &Overrides { seed, out })?;
                Ok(validate(&cfg, w))
            });
            // Load failures are reported as diagnostics too: validation itself never errors.
            let v = match result {
                Ok(v) => v,
                Err(e) => wgmc_cli::Validation {
                    diagnostics: vec![wgmc_cli::Diagnostic {
                        code: e.kind().into(),
                        field: match &e {
                            CliError::Schema { path, .. } => path.clone(),
                            _ => String::new(),
                        },
                        message: e.to_string(),
                        bound: None,
                    }],
                    memory_estimate_bytes: 0,
                },
            };
            println!("{}", serde_json::to_string_pretty(&v).expect("diagnostics serialize"));
            if v.is_clean() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Command::Report { manifest, json } => match report(&manifest) {
            Ok(r) => {
                if json {
                    println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
                } else {
                    print!("{}", r.to_text());
                }
                ExitCode::SUCCESS
            }
            Err(e) => fail(e),
        },
    }
}
