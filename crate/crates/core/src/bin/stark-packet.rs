use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use stark_packet::config::{load_config, ScenarioConfig};
use stark_packet::figures::{run_fig2, run_fig3};
use stark_packet::scenario::{run_scenario, write_outputs};
use stark_packet::sweep::{run_sweep, sweep_csv, threads_from_env, Range};
use stark_packet::validation::run_validation;
use stark_packet::Error;

#[derive(Parser)]
#[command(
    name = "stark-packet",
    version,
    about = "Single-photon wave packet driving a waveguide-coupled two-level emitter"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write series.csv and summary.json.
    Simulate {
        config: PathBuf,
        /// Output directory (default: output.directory from the config).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Export the absolute transition frequency instead of the shift.
        #[arg(long)]
        absolute: bool,
    },
    /// Shift series for the three reference packets.
    Fig2 {
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
    },
    /// Interference signals for the three reference packets.
    Fig3 {
        #[arg(short, long, default_value = ".")]
        output: PathBuf,
    },
    /// Summary table over a (delta, linewidth) grid, written to stdout.
    Sweep {
        config: PathBuf,
        /// start:end:n
        #[arg(long, allow_hyphen_values = true)]
        delta: Range,
        /// start:end:n
        #[arg(long, allow_hyphen_values = true)]
        linewidth: Range,
    },
    /// Run every validation check and print a report.
    Validate {
        /// Scenario used for the convergence and round-trip checks.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Simulate {
            config,
            output,
            absolute,
        } => {
            let mut cfg = load_config(&config)?;
            cfg.output.absolute |= absolute;
            let result = run_scenario(&cfg)?;
            let dir = output.unwrap_or_else(|| cfg.output.directory.clone());
            write_outputs(&result, &dir)?;
            println!(
                "{}",
                serde_json::to_string(&result.summary).expect("summary is serializable")
            );
        }
        Command::Fig2 { output } => {
            for path in run_fig2(&output)? {
                println!("{}", path.display());
            }
        }
        Command::Fig3 { output } => {
            for path in run_fig3(&output)? {
                println!("{}", path.display());
            }
        }
        Command::Sweep {
            config,
            delta,
            linewidth,
        } => {
            let base = load_config(&config)?;
            let rows = run_sweep(
                &base,
                &delta.points(),
                &linewidth.points(),
                threads_from_env()?,
            )?;
            print!("{}", sweep_csv(&rows));
        }
        Command::Validate { config } => {
            let base = match config {
                Some(path) => load_config(&path)?,
                None => ScenarioConfig::default(),
            };
            let report = run_validation(&base);
            println!("{report}");
            if !report.passed() {
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
