//! Parameter sweeps: rerun one config with a scalar field swept over a
//! list of values, one result document per value plus a summary CSV.
//!
//! The swept field is named by a dotted path into the config document,
//! for example `solver.grid_n` or `boundary.lambda_B.1`. A single-value
//! sweep is exactly one `solve` run.

use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use crate::config::{build_problem, ProblemConfig};
use crate::output::{result_document, to_json};
use crate::run::{solve, RunError};

/// Parse one sweep value the way TOML would: integer, then float, then
/// bare string.
fn parse_sweep_value(text: &str) -> toml::Value {
    if let Ok(i) = text.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(x) = text.parse::<f64>() {
        return toml::Value::Float(x);
    }
    toml::Value::String(text.to_string())
}

/// Set `root[path] = value` where `path` is dot-separated; numeric
/// segments index into arrays, which must already exist at that length.
/// Missing intermediate tables are created.
fn set_path(root: &mut toml::Value, path: &str, value: toml::Value) -> Result<(), String> {
    let mut cursor = root;
    let segments: Vec<&str> = path.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(format!("parameter {path:?} has an empty segment"));
    }
    let (last, walk) = segments.split_last().expect("split on nonempty");
    for segment in walk {
        cursor = match segment.parse::<usize>() {
            Ok(index) => cursor
                .get_mut(index)
                .ok_or_else(|| format!("parameter {path:?}: no element {index}"))?,
            Err(_) => cursor
                .as_table_mut()
                .ok_or_else(|| format!("parameter {path:?}: {segment:?} is not a table"))?
                .entry(segment.to_string())
                .or_insert_with(|| toml::Value::Table(toml::map::Map::new())),
        };
    }
    match last.parse::<usize>() {
        Ok(index) => {
            let slot = cursor
                .get_mut(index)
                .ok_or_else(|| format!("parameter {path:?}: no element {index}"))?;
            *slot = value;
        }
        Err(_) => {
            let table = cursor
                .as_table_mut()
                .ok_or_else(|| format!("parameter {path:?}: {last:?} is not a table"))?;
            table.insert(last.to_string(), value);
        }
    }
    Ok(())
}

/// Keep file names portable: anything outside [A-Za-z0-9._-] becomes '_'.
fn sanitize(value: &str) -> String {
    value
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '_' | '-') {
                c
            } else {
                '_'
            }
        })
        .collect()
}

struct SweepOutcome {
    json: String,
    action: f64,
    accumulated: [f64; 3],
    converged: bool,
}

struct SweepRow {
    value: String,
    outcome: Result<SweepOutcome, RunError>,
}

fn run_one(config: &ProblemConfig) -> Result<SweepOutcome, RunError> {
    let built = build_problem(config).map_err(RunError::Config)?;
    let result = solve(&built)?;
    let document = result_document(config, &built.problem, &result).map_err(RunError::Config)?;
    Ok(SweepOutcome {
        json: to_json(&document).map_err(RunError::Config)?,
        action: result.action,
        accumulated: [
            result.accumulated.entanglement,
            result.accumulated.antiflatness,
            result.accumulated.coherence,
        ],
        converged: result.converged,
    })
}

/// The `sweep` subcommand. Returns the process exit code: 1 if any value
/// produced a config error, else 2 if any solve failed to converge, else 0.
pub fn run_sweep(
    config_path: &Path,
    param: &str,
    values: &[String],
    out_dir: &Path,
) -> Result<i32, RunError> {
    if values.is_empty() {
        return Err(RunError::Config("sweep needs at least one value".into()));
    }
    let text = fs::read_to_string(config_path)
        .map_err(|e| RunError::Io(format!("cannot read {}: {e}", config_path.display())))?;
    let base: toml::Value = text
        .parse()
        .map_err(|e| RunError::Config(format!("{e}")))?;
    fs::create_dir_all(out_dir)
        .map_err(|e| RunError::Io(format!("cannot create {}: {e}", out_dir.display())))?;

    // Build every variant config up front so a bad parameter name or value
    // fails fast, before any solving starts.
    let mut configs = Vec::with_capacity(values.len());
    for value in values {
        let mut doc = base.clone();
        set_path(&mut doc, param, parse_sweep_value(value)).map_err(RunError::Config)?;
        let config: ProblemConfig = doc
            .try_into()
            .map_err(|e| RunError::Config(format!("value {value:?}: {e}")))?;
        configs.push(config);
    }

    // Values are independent, so they can run concurrently; a shared work
    // index hands them out in order.
    let workers = thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(values.len());
    let next = AtomicUsize::new(0);
    let rows: Vec<Mutex<Option<SweepRow>>> = values.iter().map(|_| Mutex::new(None)).collect();
    thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                if k >= values.len() {
                    break;
                }
                *rows[k].lock().unwrap() = Some(SweepRow {
                    value: values[k].clone(),
                    outcome: run_one(&configs[k]),
                });
            });
        }
    });

    let mut summary = String::from("value,action,E,F,Q\n");
    let mut worst = 0;
    for (k, slot) in rows.iter().enumerate() {
        let row = slot.lock().unwrap().take().expect("worker filled every slot");
        match row.outcome {
            Ok(outcome) => {
                let name = format!("{k:03}_{}.json", sanitize(&row.value));
                let path = out_dir.join(name);
                fs::write(&path, outcome.json)
                    .map_err(|e| RunError::Io(format!("cannot write {}: {e}", path.display())))?;
                summary.push_str(&format!(
                    "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                    row.value,
                    outcome.action,
                    outcome.accumulated[0],
                    outcome.accumulated[1],
                    outcome.accumulated[2]
                ));
                if !outcome.converged {
                    eprintln!("warning: value {:?} did not converge", row.value);
                    worst = worst.max(2);
                }
            }
            Err(e) => {
                eprintln!("error: value {:?}: {}", row.value, e.message());
                summary.push_str(&format!("{},,,,\n", row.value));
                worst = worst.max(e.exit_code());
            }
        }
    }
    let summary_path = out_dir.join("summary.csv");
    fs::write(&summary_path, summary)
        .map_err(|e| RunError::Io(format!("cannot write {}: {e}", summary_path.display())))?;
    Ok(worst)
}
