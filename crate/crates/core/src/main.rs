use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coupled_osc::run::run_file;
use coupled_osc::verify::verify_suite;
use coupled_osc::Error;

#[derive(Parser)]
#[command(name = "coupled-osc", version, about = "Exact state exchange between two coupled harmonic oscillators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file and write the requested outputs.
    Run {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a built-in invariant battery: rotation, evolution, oracle or exchange.
    Verify {
        suite: String,
        /// Replace every default threshold with this value.
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { scenario, out } => match run_file(&scenario, &out) {
            Ok(summary) => {
                println!("{}", summary.line);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(e.exit_code() as u8)
            }
        },
        Command::Verify { suite, tol } => match verify_suite(&suite, tol) {
            Ok(report) => {
                print!("{report}");
                if report.passed() {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(3)
                }
            }
            Err(e @ Error::UnknownSuite(_)) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(3)
            }
        },
    }
}
