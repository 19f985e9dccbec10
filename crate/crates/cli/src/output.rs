//! Result documents: a schema-versioned JSON report with the echoed
//! config and the full node table, plus an optional CSV export of the
//! table. Every float is serialized with 17 significant digits so results
//! are bit-stable and reproducible byte for byte.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

use fsaction::resource::PotentialSpec;
use fsaction::solver::{lagrangian, ActionProblem, SolveResult};

use crate::config::ProblemConfig;

pub const SCHEMA_VERSION: u32 = 1;

/// One sampled path node: grid position, parameters, the three resource
/// values, and the Lagrangian.
#[derive(Debug, Clone, Serialize)]
pub struct NodeRow {
    pub s: f64,
    pub lambda: Vec<f64>,
    #[serde(rename = "E")]
    pub entanglement: f64,
    #[serde(rename = "F")]
    pub antiflatness: f64,
    #[serde(rename = "Q")]
    pub coherence: f64,
    #[serde(rename = "L")]
    pub lagrangian: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AccumulatedOut {
    pub entanglement: f64,
    pub antiflatness: f64,
    pub coherence: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BranchOut {
    pub initial_velocity: Vec<f64>,
    pub action: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResultDocument<'a> {
    pub schema_version: u32,
    /// The effective configuration, command-line overrides included;
    /// re-parses to the configuration that produced this document.
    pub config: &'a ProblemConfig,
    pub method: &'static str,
    pub converged: bool,
    pub iterations: usize,
    pub initialization: &'a str,
    pub action: f64,
    pub el_residual_max: f64,
    pub accumulated: AccumulatedOut,
    /// All distinct shooting solutions, least action first; empty for
    /// transcription.
    pub branches: Vec<BranchOut>,
    pub nodes: Vec<NodeRow>,
}

/// Build the full document for one solve.
pub fn result_document<'a>(
    config: &'a ProblemConfig,
    problem: &ActionProblem,
    result: &'a SolveResult,
) -> Result<ResultDocument<'a>, String> {
    Ok(ResultDocument {
        schema_version: SCHEMA_VERSION,
        config,
        method: result.method.as_str(),
        converged: result.converged,
        iterations: result.iterations,
        initialization: &result.init_label,
        action: result.action,
        el_residual_max: result.el_residual_max,
        accumulated: AccumulatedOut {
            entanglement: result.accumulated.entanglement,
            antiflatness: result.accumulated.antiflatness,
            coherence: result.accumulated.coherence,
        },
        branches: result
            .branches
            .iter()
            .map(|b| BranchOut {
                initial_velocity: b.initial_velocity.clone(),
                action: b.action,
            })
            .collect(),
        nodes: node_rows(problem, result)?,
    })
}

/// Sample the resources and the Lagrangian at every node of the solved
/// path, using the problem's bipartition and dephasing basis.
pub fn node_rows(problem: &ActionProblem, result: &SolveResult) -> Result<Vec<NodeRow>, String> {
    let n = result.path.n();
    let dims = problem.family.dims();
    let velocities = result
        .path
        .velocities()
        .map_err(|e| format!("node table: {e}"))?;
    let e_spec = PotentialSpec::Entanglement {
        keep: problem.keep.clone(),
    };
    let f_spec = PotentialSpec::Antiflatness {
        keep: problem.keep.clone(),
    };
    let q_spec = PotentialSpec::Coherence {
        projectors: problem.projectors.clone(),
    };
    let mut rows = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let lambda = result.path.node(k);
        let velocity = velocities.row(k).to_vec();
        let psi = problem
            .family
            .state(&lambda)
            .map_err(|e| format!("node table: {e}"))?;
        let value = |spec: &PotentialSpec| {
            spec.value_at_state(&psi, dims)
                .map_err(|e| format!("node table: {e}"))
        };
        rows.push(NodeRow {
            s: k as f64 / n as f64,
            lambda: lambda.clone(),
            entanglement: value(&e_spec)?,
            antiflatness: value(&f_spec)?,
            coherence: value(&q_spec)?,
            lagrangian: lagrangian(problem, &lambda, &velocity)
                .map_err(|e| format!("node table: {e}"))?,
        });
    }
    Ok(rows)
}

/// Pretty JSON whose floats carry 17 significant digits ({:.16e}); the
/// structural layout is delegated to the stock two-space pretty printer.
struct Digits17<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for Digits17<'_> {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_array(writer)
    }

    fn end_array<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_array(writer)
    }

    fn begin_array_value<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_array_value(writer, first)
    }

    fn end_array_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_array_value(writer)
    }

    fn begin_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object(writer)
    }

    fn end_object<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_object(writer)
    }

    fn begin_object_key<W>(&mut self, writer: &mut W, first: bool) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object_key(writer, first)
    }

    fn begin_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.begin_object_value(writer)
    }

    fn end_object_value<W>(&mut self, writer: &mut W) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        self.inner.end_object_value(writer)
    }
}

/// Serialize any document with the 17-digit float convention.
pub fn to_json(value: &impl Serialize) -> Result<String, String> {
    let mut bytes = Vec::new();
    let mut serializer = Serializer::with_formatter(
        &mut bytes,
        Digits17 {
            inner: PrettyFormatter::new(),
        },
    );
    value
        .serialize(&mut serializer)
        .map_err(|e| format!("serialization: {e}"))?;
    String::from_utf8(bytes).map_err(|e| format!("serialization: {e}"))
}

/// CSV of the node table. Column order is fixed: s, one lambda_<i> per
/// parameter, then E, F, Q, L. Exactly one data row per grid node.
pub fn node_csv(rows: &[NodeRow]) -> String {
    let m = rows.first().map_or(0, |r| r.lambda.len());
    let mut out = String::from("s");
    for mu in 0..m {
        out.push_str(&format!(",lambda_{mu}"));
    }
    out.push_str(",E,F,Q,L\n");
    for row in rows {
        out.push_str(&format!("{:.16e}", row.s));
        for x in &row.lambda {
            out.push_str(&format!(",{x:.16e}"));
        }
        out.push_str(&format!(
            ",{:.16e},{:.16e},{:.16e},{:.16e}\n",
            row.entanglement, row.antiflatness, row.coherence, row.lagrangian
        ));
    }
    out
}
