use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use fsaction_cli::config::MethodName;
use fsaction_cli::run::{run_solve, Overrides};
use fsaction_cli::sweep::run_sweep;

#[derive(Parser)]
#[command(
    name = "fsaction",
    version,
    about = "Least-action paths of parametrized unitary state families"
)]
struct Cli {
    #[command(subcommand)]
    command: Commands,
}

#[derive(Subcommand)]
enum Commands {
    /// Solve one problem and write the result document.
    Solve {
        /// Problem configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Result document file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the node table as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Override the solver method from the config.
        #[arg(long)]
        method: Option<MethodName>,
        /// Override the grid size N (N+1 nodes).
        #[arg(long)]
        grid: Option<usize>,
        /// Override the shooting restart seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Rerun one config over a list of values for a scalar field.
    Sweep {
        /// Problem configuration (TOML).
        #[arg(long)]
        config: PathBuf,
        /// Dotted path of the swept field, e.g. solver.grid_n or
        /// boundary.lambda_B.1.
        #[arg(long)]
        param: String,
        /// Comma-separated values to sweep over.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        /// Directory for the per-value documents and summary.csv.
        #[arg(long = "out-dir")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    // clap exits 2 on usage errors by default; exit 2 here is reserved for
    // a solver that ran without converging, so usage errors exit 1.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            return ExitCode::FAILURE;
        }
    };

    let outcome = match &cli.command {
        Commands::Solve {
            config,
            out,
            csv,
            method,
            grid,
            seed,
        } => run_solve(
            config,
            out.as_ref(),
            csv.as_ref(),
            &Overrides {
                method: *method,
                grid_n: *grid,
                seed: *seed,
            },
        ),
        Commands::Sweep {
            config,
            param,
            values,
            out_dir,
        } => run_sweep(config, param, values, out_dir),
    };

    match outcome {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
