//! The problem-configuration schema, its TOML front end, and the bridge
//! from a parsed configuration to a solvable [`ActionProblem`].
//!
//! Configs are deliberately strict: unknown keys are rejected, amplitude
//! lists must be normalized within 1e-8, and every validation message names
//! the field it complains about.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use fsaction::family::HamiltonianFamily;
use fsaction::qmath::{computational_projectors, pauli_string, projectors_from_vectors, CMat,
    CVec, C64};
use fsaction::resource::PotentialSpec;
use fsaction::solver::{ActionProblem, Kinetic};

/// Largest accepted deviation of an amplitude list from unit norm.
pub const NORM_TOL: f64 = 1e-8;

/// One Hermitian generator: a Pauli string over qubit factors, or a dense
/// row-major complex matrix with entries written as [re, im] pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeneratorSpec {
    #[serde(rename = "pauli")]
    Pauli(String),
    #[serde(rename = "dense")]
    Dense(Vec<Vec<[f64; 2]>>),
}

/// Named preset or an explicit amplitude list ([re, im] pairs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ReferenceState {
    Named(String),
    Amplitudes(Vec<[f64; 2]>),
}

/// Kinetic term: K1 is the Fubini-Study speed, K2 its square.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KineticName {
    K1,
    K2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialName {
    Entanglement,
    Antiflatness,
    Coherence,
    None,
}

/// Dephasing basis: the "computational" preset, or explicit orthonormal
/// basis vectors (one amplitude list per vector) defining the rank-1
/// projectors of the dephasing map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DephasingBasis {
    Named(String),
    Vectors(Vec<Vec<[f64; 2]>>),
}

/// A boundary angle: a plain number or an expression over pi such as
/// "pi/4" or "2*pi", so benchmark endpoints stay exact in the config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Angle {
    Number(f64),
    Expression(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boundary {
    #[serde(rename = "lambda_A")]
    pub lambda_a: Vec<Angle>,
    #[serde(rename = "lambda_B")]
    pub lambda_b: Vec<Angle>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Transcription,
    Shooting,
}

/// Solver knobs. Every field is optional; an absent field means the
/// method's default (method transcription, grid_n 400, restarts 16,
/// seed 0, and an iteration budget of 100000 for transcription or 50
/// Newton steps for shooting).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<MethodName>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// The full problem statement as written by the user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Local dimension of each tensor factor.
    pub dimension: Vec<usize>,
    pub generators: Vec<GeneratorSpec>,
    /// "plus01" = (|00⟩ + |01⟩)/sqrt(2), or explicit amplitudes.
    pub reference_state: ReferenceState,
    pub kinetic: KineticName,
    pub potential: PotentialName,
    /// Tensor factors kept by the partial trace; defaults to [0].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bipartition: Option<Vec<usize>>,
    /// Defaults to the computational basis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dephasing_basis: Option<DephasingBasis>,
    pub boundary: Boundary,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl ProblemConfig {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| e.to_string())
    }
}

/// Everything needed to actually run: the physics problem plus resolved
/// solver settings.
#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub problem: ActionProblem,
    pub method: MethodName,
    pub grid_n: usize,
    pub max_iter: Option<usize>,
    pub restarts: usize,
    pub seed: u64,
}

/// Evaluate an angle entry.
pub fn resolve_angle(angle: &Angle) -> Result<f64, String> {
    match angle {
        Angle::Number(x) => Ok(*x),
        Angle::Expression(src) => parse_angle_expression(src),
    }
}

fn resolve_angles(angles: &[Angle], field: &str) -> Result<Vec<f64>, String> {
    angles
        .iter()
        .enumerate()
        .map(|(i, a)| resolve_angle(a).map_err(|e| format!("{field}[{i}]: {e}")))
        .collect()
}

fn complex_vector(entries: &[[f64; 2]]) -> CVec {
    Array1::from_iter(entries.iter().map(|&[re, im]| C64::new(re, im)))
}

fn dense_matrix(rows: &[Vec<[f64; 2]>], d: usize) -> Result<CMat, String> {
    if rows.len() != d {
        return Err(format!("matrix has {} rows, the state dimension is {d}", rows.len()));
    }
    let mut out: CMat = Array2::zeros((d, d));
    for (i, row) in rows.iter().enumerate() {
        if row.len() != d {
            return Err(format!("row {i} has {} entries, the state dimension is {d}", row.len()));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            out[[i, j]] = C64::new(re, im);
        }
    }
    Ok(out)
}

/// Validate a configuration and assemble the problem it describes. Errors
/// name the offending field.
pub fn build_problem(config: &ProblemConfig) -> Result<BuiltProblem, String> {
    if config.dimension.is_empty() {
        return Err("dimension: at least one tensor factor is required".into());
    }
    if let Some(bad) = config.dimension.iter().find(|&&f| f < 2) {
        return Err(format!("dimension: factors must be >= 2, got {bad}"));
    }
    let d: usize = config
        .dimension
        .iter()
        .try_fold(1usize, |acc, &f| acc.checked_mul(f))
        .ok_or("dimension: factor product overflows")?;

    if config.generators.is_empty() {
        return Err("generators: at least one generator is required".into());
    }
    let generators = config
        .generators
        .iter()
        .enumerate()
        .map(|(i, spec)| match spec {
            GeneratorSpec::Pauli(s) => {
                if config.dimension.iter().any(|&f| f != 2) {
                    return Err(format!(
                        "generators[{i}].pauli: pauli strings need all-qubit factors, \
                         dimension is {:?}",
                        config.dimension
                    ));
                }
                if s.chars().count() != config.dimension.len() {
                    return Err(format!(
                        "generators[{i}].pauli: {s:?} has {} letters, need one per factor ({})",
                        s.chars().count(),
                        config.dimension.len()
                    ));
                }
                pauli_string(s).map_err(|e| format!("generators[{i}].pauli: {e}"))
            }
            GeneratorSpec::Dense(rows) => {
                dense_matrix(rows, d).map_err(|e| format!("generators[{i}].dense: {e}"))
            }
        })
        .collect::<Result<Vec<_>, String>>()?;

    let reference = match &config.reference_state {
        ReferenceState::Named(name) if name == "plus01" => {
            if d < 2 {
                return Err("reference_state: the plus01 preset needs dimension >= 2".into());
            }
            let mut psi: CVec = Array1::zeros(d);
            let inv = C64::new(1.0 / 2.0_f64.sqrt(), 0.0);
            psi[0] = inv;
            psi[1] = inv;
            psi
        }
        ReferenceState::Named(other) => {
            return Err(format!(
                "reference_state: unknown preset {other:?}; the only named preset is \"plus01\""
            ));
        }
        ReferenceState::Amplitudes(entries) => {
            if entries.len() != d {
                return Err(format!(
                    "reference_state: {} amplitudes given, the state dimension is {d}",
                    entries.len()
                ));
            }
            let psi = complex_vector(entries);
            let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(format!(
                    "reference_state: amplitudes have norm {norm:.12}, must be 1 within {NORM_TOL:.0e}"
                ));
            }
            psi.mapv(|z| z / norm)
        }
    };

    let family = HamiltonianFamily::new(generators, reference, config.dimension.clone())
        .map_err(|e| format!("generators: {e}"))?;

    let kinetic = match config.kinetic {
        KineticName::K1 => Kinetic::Speed,
        KineticName::K2 => Kinetic::SpeedSquared,
    };

    let keep = config.bipartition.clone().unwrap_or_else(|| vec![0]);

    let projectors = match &config.dephasing_basis {
        None => computational_projectors(d),
        Some(DephasingBasis::Named(name)) if name == "computational" => {
            computational_projectors(d)
        }
        Some(DephasingBasis::Named(other)) => {
            return Err(format!(
                "dephasing_basis: unknown preset {other:?}; use \"computational\" or explicit \
                 basis vectors"
            ));
        }
        Some(DephasingBasis::Vectors(vectors)) => {
            for (i, v) in vectors.iter().enumerate() {
                if v.len() != d {
                    return Err(format!(
                        "dephasing_basis[{i}]: vector has {} amplitudes, the state dimension \
                         is {d}",
                        v.len()
                    ));
                }
            }
            let columns: Vec<CVec> = vectors.iter().map(|v| complex_vector(v)).collect();
            projectors_from_vectors(&columns).map_err(|e| format!("dephasing_basis: {e}"))?
        }
    };

    let potential = match config.potential {
        PotentialName::Entanglement => PotentialSpec::Entanglement { keep: keep.clone() },
        PotentialName::Antiflatness => PotentialSpec::Antiflatness { keep: keep.clone() },
        PotentialName::Coherence => PotentialSpec::Coherence {
            projectors: projectors.clone(),
        },
        PotentialName::None => PotentialSpec::None,
    };

    let lambda_a = resolve_angles(&config.boundary.lambda_a, "boundary.lambda_A")?;
    let lambda_b = resolve_angles(&config.boundary.lambda_b, "boundary.lambda_B")?;

    let problem = ActionProblem::new(family, kinetic, potential, lambda_a, lambda_b)
        .and_then(|p| p.with_accumulation(keep, projectors))
        .map_err(|e| match e {
            fsaction::Error::BadFactorization { .. } => format!("bipartition: {e}"),
            fsaction::Error::DimMismatch { .. } => format!("boundary: {e}"),
            other => format!("config: {other}"),
        })?;

    Ok(BuiltProblem {
        problem,
        method: config.solver.method.unwrap_or(MethodName::Transcription),
        grid_n: config.solver.grid_n.unwrap_or(400),
        max_iter: config.solver.max_iter,
        restarts: config.solver.restarts.unwrap_or(16),
        seed: config.solver.seed.unwrap_or(0),
    })
}

/// Arithmetic over numbers and pi with + - * /, unary minus, and
/// parentheses. Small enough to read in one sitting, strict enough to
/// reject anything else.
pub fn parse_angle_expression(src: &str) -> Result<f64, String> {
    let tokens = tokenize(src)?;
    let mut pos = 0;
    let value = parse_sum(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(format!("unexpected trailing input in {src:?}"));
    }
    Ok(value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Token {
    Number(f64),
    Pi,
    Plus,
    Minus,
    Star,
    Slash,
    Open,
    Close,
}

fn tokenize(src: &str) -> Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let bytes = src.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '*' => {
                tokens.push(Token::Star);
                i += 1;
            }
            '/' => {
                tokens.push(Token::Slash);
                i += 1;
            }
            '(' => {
                tokens.push(Token::Open);
                i += 1;
            }
            ')' => {
                tokens.push(Token::Close);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len() && matches!(bytes[i] as char, '0'..='9' | '.') {
                    i += 1;
                }
                let text = &src[start..i];
                let value: f64 = text
                    .parse()
                    .map_err(|_| format!("bad number {text:?} in {src:?}"))?;
                tokens.push(Token::Number(value));
            }
            _ => {
                if src[i..].starts_with("pi") {
                    tokens.push(Token::Pi);
                    i += 2;
                } else {
                    return Err(format!("unexpected character {c:?} in {src:?}"));
                }
            }
        }
    }
    if tokens.is_empty() {
        return Err("empty angle expression".into());
    }
    Ok(tokens)
}

fn parse_sum(tokens: &[Token], pos: &mut usize) -> Result<f64, String> {
    let mut value = parse_term(tokens, pos)?;
    while let Some(&op) = tokens.get(*pos) {
        match op {
            Token::Plus => {
                *pos += 1;
                value += parse_term(tokens, pos)?;
            }
            Token::Minus => {
                *pos += 1;
                value -= parse_term(tokens, pos)?;
            }
            _ => break,
        }
    }
    Ok(value)
}

fn parse_term(tokens: &[Token], pos: &mut usize) -> Result<f64, String> {
    let mut value = parse_factor(tokens, pos)?;
    while let Some(&op) = tokens.get(*pos) {
        match op {
            Token::Star => {
                *pos += 1;
                value *= parse_factor(tokens, pos)?;
            }
            Token::Slash => {
                *pos += 1;
                let rhs = parse_factor(tokens, pos)?;
                if rhs == 0.0 {
                    return Err("division by zero in angle expression".into());
                }
                value /= rhs;
            }
            _ => break,
        }
    }
    Ok(value)
}

fn parse_factor(tokens: &[Token], pos: &mut usize) -> Result<f64, String> {
    match tokens.get(*pos) {
        Some(Token::Minus) => {
            *pos += 1;
            Ok(-parse_factor(tokens, pos)?)
        }
        Some(Token::Open) => {
            *pos += 1;
            let value = parse_sum(tokens, pos)?;
            if tokens.get(*pos) != Some(&Token::Close) {
                return Err("missing closing parenthesis in angle expression".into());
            }
            *pos += 1;
            Ok(value)
        }
        Some(Token::Number(x)) => {
            *pos += 1;
            Ok(*x)
        }
        Some(Token::Pi) => {
            *pos += 1;
            Ok(std::f64::consts::PI)
        }
        _ => Err("expected a number, pi, or a parenthesized expression".into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angle_expressions_cover_the_benchmark_endpoints() {
        assert_eq!(parse_angle_expression("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle_expression("2*pi").unwrap(), 2.0 * PI);
        assert_eq!(parse_angle_expression("0").unwrap(), 0.0);
        assert_eq!(parse_angle_expression("-(pi)/2 + 1").unwrap(), -PI / 2.0 + 1.0);
        assert_eq!(parse_angle_expression("3/2/2").unwrap(), 0.75);
    }

    #[test]
    fn bad_expressions_are_rejected_with_context() {
        for bad in ["", "pie", "2*", "(pi", "1/0", "pi pi"] {
            let err = parse_angle_expression(bad).unwrap_err();
            assert!(!err.is_empty(), "no message for {bad:?}");
        }
    }

    fn benchmark_toml() -> String {
        r#"
            dimension = [2, 2]
            generators = [{ pauli = "XX" }, { pauli = "ZZ" }]
            reference_state = "plus01"
            kinetic = "K2"
            potential = "entanglement"
            bipartition = [0]
            boundary = { lambda_A = [0, 0], lambda_B = ["pi/4", "2*pi"] }
        "#
        .to_string()
    }

    #[test]
    fn the_benchmark_config_parses_and_builds() {
        let config = ProblemConfig::from_toml(&benchmark_toml()).unwrap();
        let built = build_problem(&config).unwrap();
        assert_eq!(built.grid_n, 400);
        assert_eq!(built.method, MethodName::Transcription);
        assert_eq!(built.problem.lambda_b[0], PI / 4.0);
        assert_eq!(built.problem.lambda_b[1], 2.0 * PI);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = benchmark_toml() + "\nextra_knob = 3\n";
        let err = ProblemConfig::from_toml(&text).unwrap_err();
        assert!(err.contains("extra_knob"), "{err}");
    }

    #[test]
    fn field_level_messages_name_the_field() {
        let config = ProblemConfig {
            potential: PotentialName::Coherence,
            ..ProblemConfig::from_toml(&benchmark_toml()).unwrap()
        };
        let mut bad = config.clone();
        bad.boundary.lambda_b[1] = Angle::Expression("2*tau".into());
        assert!(build_problem(&bad).unwrap_err().contains("boundary.lambda_B[1]"));

        let mut bad = config.clone();
        bad.bipartition = Some(vec![5]);
        assert!(build_problem(&bad).unwrap_err().contains("bipartition"));

        let mut bad = config.clone();
        bad.generators[0] = GeneratorSpec::Pauli("XXX".into());
        assert!(build_problem(&bad).unwrap_err().contains("generators[0]"));

        let mut bad = config;
        bad.reference_state = ReferenceState::Amplitudes(vec![[0.8, 0.0]; 4]);
        assert!(build_problem(&bad).unwrap_err().contains("reference_state"));
    }

    #[test]
    fn amplitude_lists_slightly_off_norm_are_renormalized() {
        let a = (0.5f64.sqrt() * (1.0 + 4e-9)).to_string();
        let text = benchmark_toml().replace(
            "reference_state = \"plus01\"",
            &format!("reference_state = [[{a}, 0], [{a}, 0], [0, 0], [0, 0]]"),
        );
        let config = ProblemConfig::from_toml(&text).unwrap();
        let built = build_problem(&config).unwrap();
        let norm: f64 = built
            .problem
            .family
            .reference()
            .iter()
            .map(|z| z.norm_sqr())
            .sum();
        assert!((norm - 1.0).abs() < 1e-14);
    }
}
