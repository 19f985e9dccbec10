//! One solve from a config file to a result document, with optional
//! command-line overrides and CSV export.

use std::fs;
use std::path::{Path, PathBuf};

use fsaction::solver::{
    solve_shooting, solve_transcription, ShootingOptions, SolveResult, TranscriptionOptions,
};

use crate::config::{build_problem, BuiltProblem, MethodName, ProblemConfig};
use crate::output::{node_csv, result_document, to_json};

/// What went wrong, sorted by exit code: configuration and I/O problems
/// exit 1, a solver that ran but did not converge exits 2 (after still
/// writing the flagged result).
#[derive(Debug)]
pub enum RunError {
    Config(String),
    Io(String),
    NoSolution(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Io(_) => 1,
            Self::NoSolution(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Self::Config(m) | Self::Io(m) | Self::NoSolution(m) => m,
        }
    }
}

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub method: Option<MethodName>,
    pub grid_n: Option<usize>,
    pub seed: Option<u64>,
}

/// Load a config file and fold in the overrides, so the echoed config in
/// the result document is the one that actually ran.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ProblemConfig, RunError> {
    let text = fs::read_to_string(path)
        .map_err(|e| RunError::Io(format!("cannot read {}: {e}", path.display())))?;
    let mut config = ProblemConfig::from_toml(&text).map_err(RunError::Config)?;
    if let Some(method) = overrides.method {
        config.solver.method = Some(method);
    }
    if let Some(grid_n) = overrides.grid_n {
        config.solver.grid_n = Some(grid_n);
    }
    if let Some(seed) = overrides.seed {
        config.solver.seed = Some(seed);
    }
    Ok(config)
}

/// Solve the problem a config describes. Non-convergence is not an error
/// here: the result comes back with `converged = false` and the caller
/// decides the exit code after writing it out.
pub fn solve(built: &BuiltProblem) -> Result<SolveResult, RunError> {
    let result = match built.method {
        MethodName::Transcription => solve_transcription(
            &built.problem,
            built.grid_n,
            &TranscriptionOptions {
                max_iterations: built.max_iter.unwrap_or(100_000),
                ..TranscriptionOptions::default()
            },
        ),
        MethodName::Shooting => solve_shooting(
            &built.problem,
            &ShootingOptions {
                grid_n: built.grid_n,
                restarts: built.restarts,
                seed: built.seed,
                max_newton: built.max_iter.unwrap_or(50),
            },
        ),
    };
    result.map_err(|e| match e {
        fsaction::Error::NoSolution { .. } => RunError::NoSolution(e.to_string()),
        other => RunError::Config(format!("solver: {other}")),
    })
}

fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    fs::write(path, text).map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))
}

/// The `solve` subcommand. Returns the process exit code.
pub fn run_solve(
    config_path: &Path,
    out: Option<&PathBuf>,
    csv: Option<&PathBuf>,
    overrides: &Overrides,
) -> Result<i32, RunError> {
    let config = load_config(config_path, overrides)?;
    let built = build_problem(&config).map_err(RunError::Config)?;
    let result = solve(&built)?;

    let document = result_document(&config, &built.problem, &result).map_err(RunError::Config)?;
    let json = to_json(&document).map_err(RunError::Config)?;
    match out {
        Some(path) => write_text(path, &json)?,
        None => println!("{json}"),
    }
    if let Some(path) = csv {
        write_text(path, &node_csv(&document.nodes))?;
    }

    if result.converged {
        Ok(0)
    } else {
        eprintln!(
            "warning: solver stopped before convergence (residual {:.3e}); result written anyway",
            result.el_residual_max
        );
        Ok(2)
    }
}
