//! Experiment runner and verification CLI.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use aoi_core::experiment::{run_experiment, ExperimentConfig};
use aoi_core::types::{Age, ArrivalFlag};
use aoi_core::verify::{verify, VerifyGrid};
use aoi_core::whittle::{optimal_threshold, whittle_index, SubproblemParams};

#[derive(Parser)]
#[command(
    name = "aoi",
    about = "Age-of-information scheduling experiments: Whittle index policy vs brute-force optima"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config and write CSV results.
    Run {
        /// Path to the experiment config.
        config: PathBuf,
        /// Output directory (overrides the config's [output] section).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Override run.horizon.
        #[arg(long)]
        horizon: Option<u64>,
        /// Override run.replications.
        #[arg(long)]
        replications: Option<u32>,
        /// Override run.seed_base.
        #[arg(long)]
        seed_base: Option<u64>,
    },
    /// Cross-check the closed forms against the value-iteration oracles.
    Verify {
        #[arg(long, value_enum, default_value_t = GridArg::Small)]
        grid: GridArg,
    },
    /// Print the Whittle index I(x, lambda) for one state.
    Index {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        x: u64,
        #[arg(long)]
        lambda: u8,
    },
    /// Print the cost-optimal threshold for (p, cost).
    Threshold {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        cost: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum GridArg {
    Small,
    Full,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run_command(command: Command) -> aoi_core::Result<ExitCode> {
    match command {
        Command::Run {
            config,
            output,
            horizon,
            replications,
            seed_base,
        } => {
            let mut config = ExperimentConfig::from_file(&config)?;
            if let Some(h) = horizon {
                config.run.horizon = h;
            }
            if let Some(r) = replications {
                config.run.replications = r;
            }
            if let Some(s) = seed_base {
                config.run.seed_base = s;
            }
            let result = run_experiment(&config)?;
            let dir = output
                .or_else(|| config.output.as_ref().map(|o| o.dir.clone()))
                .unwrap_or_else(|| PathBuf::from("results"));
            result.write_to_dir(&dir)?;
            println!("arrival_p scheduler mean_age std_error");
            for s in &result.summaries {
                let label: Vec<String> = s.arrival_p.iter().map(|p| p.to_string()).collect();
                println!(
                    "{} {} {:.6} {:.6}",
                    label.join(";"),
                    s.scheduler,
                    s.mean_age,
                    s.std_error
                );
            }
            println!("wrote results to {}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { grid } => {
            let grid = match grid {
                GridArg::Small => VerifyGrid::Small,
                GridArg::Full => VerifyGrid::Full,
            };
            let report = verify(grid)?;
            for check in &report.checks {
                let status = if check.passed { "PASS" } else { "FAIL" };
                println!(
                    "{status} {} (worst residual {:.3e}): {}",
                    check.name, check.residual, check.detail
                );
            }
            if report.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Index { p, x, lambda } => {
            let arrival = match lambda {
                0 => ArrivalFlag::Absent,
                1 => ArrivalFlag::Present,
                other => {
                    return Err(aoi_core::Error::Config(format!(
                        "lambda must be 0 or 1, got {other}"
                    )))
                }
            };
            if !(p > 0.0 && p <= 1.0) {
                return Err(aoi_core::Error::InvalidProbability { value: p });
            }
            if x == 0 {
                return Err(aoi_core::Error::Config("age must be at least 1".into()));
            }
            println!("{}", whittle_index(Age::new(x), arrival, p));
            Ok(ExitCode::SUCCESS)
        }
        Command::Threshold { p, cost } => {
            let threshold = optimal_threshold(SubproblemParams::new(p, cost)?)?;
            println!("{threshold}");
            Ok(ExitCode::SUCCESS)
        }
    }
}
