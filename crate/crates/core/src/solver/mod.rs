//! Action evaluation and least-action path solvers.
//!
//! A path is a curve λ(s) in parameter space, s ∈ [0, 1], with both endpoints
//! fixed. Its action is I = ∫₀¹ (K − V) ds where K is the Fubini-Study speed
//! or its square and V a resource potential. Two independent solver routes
//! are provided: direct transcription (minimize the discretized action over
//! interior nodes, then polish to stationarity) and, for the squared-speed
//! kinetic term, shooting on the Euler-Lagrange ODE with a Newton iteration
//! on the unknown initial velocity. Cross-checking the two is the main
//! correctness instrument, since they share no discretization machinery.

mod grid;
mod shooting;
mod transcription;

pub use grid::{Grid, MIN_GRID};
pub use shooting::{solve_shooting, ShootingOptions};
pub use transcription::{solve_transcription, TranscriptionOptions};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::family::{HamiltonianFamily, StateJet};
use crate::geometry::{fs_speed, fs_speed_squared};
use crate::qmath::{computational_projectors, CMat};
use crate::resource::{antiflatness, coherence, entanglement, PotentialSpec};

/// Below this Euclidean velocity norm a node counts as a rest point, where the
/// speed kinetic term is not differentiable.
pub const REST_SPEED: f64 = 1e-8;

/// Kinetic term of the Lagrangian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kinetic {
    /// Fubini-Study speed: a length functional, reparametrization-invariant.
    Speed,
    /// Squared Fubini-Study speed: fixes the parametrization, geodesic-like.
    SpeedSquared,
}

/// Which solver produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Transcription,
    Shooting,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Transcription => "transcription",
            Self::Shooting => "shooting",
        }
    }
}

/// Full problem statement: which family, which Lagrangian, which endpoints,
/// and the reduction/dephasing choices used when accumulating resources.
#[derive(Debug, Clone)]
pub struct ActionProblem {
    pub family: HamiltonianFamily,
    pub kinetic: Kinetic,
    pub potential: PotentialSpec,
    /// Tensor factors kept by the partial trace when accumulating E and F.
    pub keep: Vec<usize>,
    /// Dephasing basis used when accumulating Q.
    pub projectors: Vec<CMat>,
    pub lambda_a: Vec<f64>,
    pub lambda_b: Vec<f64>,
}

impl ActionProblem {
    /// Accumulation settings default to whatever the potential uses; with a
    /// free or coherence potential the bipartition falls back to the first
    /// factor, and with a non-coherence potential the dephasing basis falls
    /// back to computational.
    pub fn new(
        family: HamiltonianFamily,
        kinetic: Kinetic,
        potential: PotentialSpec,
        lambda_a: Vec<f64>,
        lambda_b: Vec<f64>,
    ) -> Result<Self> {
        let keep = match &potential {
            PotentialSpec::Entanglement { keep } | PotentialSpec::Antiflatness { keep } => {
                keep.clone()
            }
            _ => vec![0],
        };
        let projectors = match &potential {
            PotentialSpec::Coherence { projectors } => projectors.clone(),
            _ => computational_projectors(family.dim()),
        };
        let problem = Self {
            family,
            kinetic,
            potential,
            keep,
            projectors,
            lambda_a,
            lambda_b,
        };
        problem.validate()?;
        Ok(problem)
    }

    /// Override the accumulation bipartition and dephasing basis.
    pub fn with_accumulation(mut self, keep: Vec<usize>, projectors: Vec<CMat>) -> Result<Self> {
        self.keep = keep;
        self.projectors = projectors;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let m = self.family.num_params();
        for (name, ep) in [("start", &self.lambda_a), ("end", &self.lambda_b)] {
            if ep.len() != m {
                return Err(Error::DimMismatch {
                    context: format!(
                        "{name} point has {} entries, family has {m} parameters",
                        ep.len()
                    ),
                });
            }
        }
        let factors = self.family.dims().len();
        if self.keep.is_empty()
            || self.keep.windows(2).any(|w| w[0] >= w[1])
            || *self.keep.last().unwrap() >= factors
        {
            return Err(Error::BadFactorization {
                context: format!(
                    "keep set {:?} must be strictly increasing with entries < {factors}",
                    self.keep
                ),
            });
        }
        Ok(())
    }
}

/// A discretized path: uniform samples λ(s_k), endpoints included.
#[derive(Debug, Clone)]
pub struct Path {
    /// (N+1) × m node matrix; row k is λ(k/N).
    pub nodes: Array2<f64>,
}

impl Path {
    pub fn new(nodes: Array2<f64>) -> Result<Self> {
        Grid::new(nodes.nrows().saturating_sub(1))?;
        Ok(Self { nodes })
    }

    /// Straight line from `a` to `b` on an N-segment grid, endpoints exact.
    pub fn straight_line(a: &[f64], b: &[f64], n: usize) -> Result<Self> {
        Grid::new(n)?;
        if a.len() != b.len() {
            return Err(Error::DimMismatch {
                context: format!("endpoints have lengths {} and {}", a.len(), b.len()),
            });
        }
        let m = a.len();
        let mut nodes = Array2::zeros((n + 1, m));
        for k in 0..=n {
            let t = k as f64 / n as f64;
            for j in 0..m {
                nodes[[k, j]] = a[j] + t * (b[j] - a[j]);
            }
        }
        for j in 0..m {
            nodes[[0, j]] = a[j];
            nodes[[n, j]] = b[j];
        }
        Ok(Self { nodes })
    }

    /// Number of segments N.
    pub fn n(&self) -> usize {
        self.nodes.nrows() - 1
    }

    pub fn params(&self) -> usize {
        self.nodes.ncols()
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.n())
    }

    pub fn node(&self, k: usize) -> Vec<f64> {
        self.nodes.row(k).to_vec()
    }

    /// λ′ at every node from the grid difference stencils.
    pub fn velocities(&self) -> Result<Array2<f64>> {
        self.grid()?.derivative(&self.nodes)
    }
}

/// Resources integrated along a path with Simpson quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accumulated {
    pub entanglement: f64,
    pub antiflatness: f64,
    pub coherence: f64,
}

/// One shooting solution: the initial velocity that hits the far endpoint,
/// and the action of the resulting path.
#[derive(Debug, Clone)]
pub struct Branch {
    pub initial_velocity: Vec<f64>,
    pub action: f64,
}

/// Output of either solver.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub path: Path,
    pub action: f64,
    /// Max-norm of the Euler-Lagrange residual field on the final path.
    pub el_residual_max: f64,
    pub accumulated: Accumulated,
    pub method: Method,
    pub iterations: usize,
    /// False means the iteration budget ran out; the fields still describe the
    /// best path found.
    pub converged: bool,
    /// All distinct shooting solutions found, least action first; empty for
    /// transcription. The returned path belongs to the first entry.
    pub branches: Vec<Branch>,
    /// Description of the initial guess, recorded so runs are reproducible.
    pub init_label: String,
}

/// Acceleration demanded by stationarity of the squared-speed action:
/// λ″ = −Γ(λ′, λ′) − ½ g⁻¹ ∇V, and this returns the negated right side, so a
/// stationary path satisfies λ″ + stationarity_force = 0.
pub(crate) fn stationarity_force(
    problem: &ActionProblem,
    lambda: &[f64],
    velocity: &[f64],
) -> Result<Vec<f64>> {
    let m = lambda.len();
    let family = &problem.family;
    let (g, gamma) = crate::geometry::metric_and_christoffel(
        |x| crate::geometry::metric_at(family, x),
        lambda,
    )?;
    let gv = problem.potential.gradient(family, lambda)?;
    let mut rhs = Array2::zeros((m, 1));
    for a in 0..m {
        rhs[[a, 0]] = 0.5 * gv[a];
    }
    let pull = crate::qmath::solve_real(&g, &rhs)?;
    let mut out = vec![0.0; m];
    for a in 0..m {
        let mut quad = 0.0;
        for b in 0..m {
            for c in 0..m {
                quad += gamma[a][[b, c]] * velocity[b] * velocity[c];
            }
        }
        out[a] = quad + pull[[a, 0]];
    }
    Ok(out)
}

fn kinetic_value(kinetic: Kinetic, jet: &StateJet, velocity: &[f64]) -> Result<f64> {
    match kinetic {
        Kinetic::Speed => fs_speed(jet, velocity),
        Kinetic::SpeedSquared => fs_speed_squared(jet, velocity),
    }
}

pub(crate) fn lagrangian_with_jet(
    problem: &ActionProblem,
    jet: &StateJet,
    velocity: &[f64],
) -> Result<f64> {
    let k = kinetic_value(problem.kinetic, jet, velocity)?;
    let v = problem
        .potential
        .value_at_state(&jet.psi, problem.family.dims())?;
    Ok(k - v)
}

/// L(λ, λ′) = K − V at a single phase-space point.
pub fn lagrangian(problem: &ActionProblem, lambda: &[f64], lambda_prime: &[f64]) -> Result<f64> {
    let jet = problem.family.state_jet(lambda)?;
    lagrangian_with_jet(problem, &jet, lambda_prime)
}

fn check_path(problem: &ActionProblem, path: &Path) -> Result<Grid> {
    if path.params() != problem.family.num_params() {
        return Err(Error::DimMismatch {
            context: format!(
                "path has {} parameter columns, family has {}",
                path.params(),
                problem.family.num_params()
            ),
        });
    }
    path.grid()
}

/// I[λ] by composite Simpson quadrature of the Lagrangian along the path,
/// with λ′ from the 4th-order difference stencils.
pub fn action(problem: &ActionProblem, path: &Path) -> Result<f64> {
    let grid = check_path(problem, path)?;
    let vel = grid.derivative(&path.nodes)?;
    let mut samples = Vec::with_capacity(path.n() + 1);
    for k in 0..=path.n() {
        let jet = problem.family.state_jet(&path.node(k))?;
        samples.push(lagrangian_with_jet(problem, &jet, &vel.row(k).to_vec())?);
    }
    grid.integrate(&samples)
}

/// Euler-Lagrange residual field r_kμ = d/ds[∂L/∂λ′_μ] − ∂L/∂λ_μ at the
/// interior nodes of a path.
#[derive(Debug, Clone)]
pub struct ElResidual {
    /// (N−1) × m; row i belongs to node k = i+1. Undefined rows hold zeros.
    pub values: Array2<f64>,
    /// Interior node indices where the residual is undefined because the path
    /// is at rest there (speed kinetic term only).
    pub undefined: Vec<usize>,
}

impl ElResidual {
    /// Largest magnitude over the defined rows.
    pub fn max_norm(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.values.nrows() {
            if self.undefined.contains(&(i + 1)) {
                continue;
            }
            for v in self.values.row(i) {
                best = best.max(v.abs());
            }
        }
        best
    }
}

/// FD step scales used by [`el_residual`].
const EL_STEP_LAMBDA: f64 = 1e-5;
const EL_STEP_VELOCITY: f64 = 1e-3;

/// Numerical Euler-Lagrange residual: ∂L partials by central differences in
/// (λ, λ′), the outer d/ds by the grid difference stencils.
///
/// For the speed kinetic term, nodes where |λ′| < [`REST_SPEED`] have no
/// defined residual (the Lagrangian has a kink at rest); those nodes, and
/// interior nodes whose d/ds stencil reads them, are flagged in `undefined`.
pub fn el_residual(problem: &ActionProblem, path: &Path) -> Result<ElResidual> {
    let grid = check_path(problem, path)?;
    let n = path.n();
    let m = path.params();
    let vel = grid.derivative(&path.nodes)?;

    // ∂L/∂λ′ at every node. The potential is velocity-independent, so the
    // central difference in λ′ reuses one jet per node.
    let mut p = Array2::zeros((n + 1, m));
    let mut rest = vec![false; n + 1];
    for k in 0..=n {
        let lam = path.node(k);
        let v = vel.row(k).to_vec();
        let speed = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if problem.kinetic == Kinetic::Speed && speed < REST_SPEED {
            rest[k] = true;
            continue;
        }
        let jet = problem.family.state_jet(&lam)?;
        let mut probe = v.clone();
        for mu in 0..m {
            let h = EL_STEP_VELOCITY * v[mu].abs().max(1.0);
            probe[mu] = v[mu] + h;
            let plus = kinetic_value(problem.kinetic, &jet, &probe)?;
            probe[mu] = v[mu] - h;
            let minus = kinetic_value(problem.kinetic, &jet, &probe)?;
            probe[mu] = v[mu];
            p[[k, mu]] = (plus - minus) / (2.0 * h);
        }
    }
    let dp = grid.derivative(&p)?;

    // Interior nodes whose d/ds stencil touches a rest node inherit the flag.
    let stencil_sources = |k: usize| -> std::ops::RangeInclusive<usize> {
        if k == 1 {
            0..=4
        } else if k == n - 1 {
            n - 4..=n
        } else {
            k - 2..=k + 2
        }
    };

    let mut values = Array2::zeros((n - 1, m));
    let mut undefined = Vec::new();
    for k in 1..n {
        if rest[k] || stencil_sources(k).into_iter().any(|j| rest[j]) {
            undefined.push(k);
            continue;
        }
        let lam = path.node(k);
        let v = vel.row(k).to_vec();
        let mut probe = lam.clone();
        for mu in 0..m {
            let h = EL_STEP_LAMBDA * lam[mu].abs().max(1.0);
            probe[mu] = lam[mu] + h;
            let plus = lagrangian(problem, &probe, &v)?;
            probe[mu] = lam[mu] - h;
            let minus = lagrangian(problem, &probe, &v)?;
            probe[mu] = lam[mu];
            let dl_dlam = (plus - minus) / (2.0 * h);
            values[[k - 1, mu]] = dp[[k, mu]] - dl_dlam;
        }
    }
    Ok(ElResidual { values, undefined })
}

/// Ē, F̄, Q̄: Simpson quadrature of each resource along the path. All three
/// are always reported, whichever potential drove the optimization.
pub fn accumulate(problem: &ActionProblem, path: &Path) -> Result<Accumulated> {
    let grid = check_path(problem, path)?;
    let n = path.n();
    let dims = problem.family.dims();
    let (mut es, mut fs, mut qs) = (
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
        Vec::with_capacity(n + 1),
    );
    for k in 0..=n {
        let psi = problem.family.state(&path.node(k))?;
        es.push(entanglement(&psi, dims, &problem.keep)?);
        fs.push(antiflatness(&psi, dims, &problem.keep)?);
        qs.push(coherence(&psi, &problem.projectors)?);
    }
    Ok(Accumulated {
        entanglement: grid.integrate(&es)?,
        antiflatness: grid.integrate(&fs)?,
        coherence: grid.integrate(&qs)?,
    })
}

/// m-dimensional straight line warped in parameter: λ(w(k/N)) with
/// w(s) = s + a·sin(πs), the same endpoints, a different speed profile.
#[cfg(test)]
fn warped_line(a: &[f64], b: &[f64], amp: f64, n: usize) -> Path {
    let mut nodes = Array2::zeros((n + 1, a.len()));
    for k in 0..=n {
        let s = k as f64 / n as f64;
        let w = s + amp * (std::f64::consts::PI * s).sin();
        for mu in 0..a.len() {
            nodes[[k, mu]] = a[mu] + w * (b[mu] - a[mu]);
        }
    }
    for mu in 0..a.len() {
        nodes[[0, mu]] = a[mu];
        nodes[[n, mu]] = b[mu];
    }
    Path { nodes }
}

/// Assemble a [`SolveResult`] from a final path: evaluates the action, the
/// residual diagnostic and the accumulated resources.
pub(crate) fn finish_result(
    problem: &ActionProblem,
    path: Path,
    method: Method,
    iterations: usize,
    converged: bool,
    branches: Vec<Branch>,
    init_label: String,
) -> Result<SolveResult> {
    let action = action(problem, &path)?;
    let el_residual_max = el_residual(problem, &path)?.max_norm();
    let accumulated = accumulate(problem, &path)?;
    Ok(SolveResult {
        path,
        action,
        el_residual_max,
        accumulated,
        method,
        iterations,
        converged,
        branches,
        init_label,
    })
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    use super::*;
    use crate::resource::PotentialSpec;

    fn benchmark(kinetic: Kinetic, potential: PotentialSpec) -> ActionProblem {
        ActionProblem::new(
            HamiltonianFamily::two_qubit_xx_zz(),
            kinetic,
            potential,
            vec![0.0, 0.0],
            vec![PI / 4.0, 2.0 * PI],
        )
        .unwrap()
    }

    fn entanglement_closed(theta: f64, phi: f64) -> f64 {
        0.5 * (2.0 * theta).sin().powi(2) * (2.0 * phi).sin().powi(2)
    }

    #[test]
    fn lagrangian_matches_closed_forms() {
        let ent = benchmark(
            Kinetic::Speed,
            PotentialSpec::Entanglement { keep: vec![0] },
        );
        let coh = benchmark(Kinetic::SpeedSquared, PotentialSpec::coherence_computational(4));
        let points: [(f64, f64, f64, f64); 3] = [
            (0.3, 0.7, 1.0, -2.0),
            (PI / 8.0, PI / 4.0, 0.5, 0.25),
            (1.1, 4.9, -0.3, 2.2),
        ];
        for &(theta, phi, dtheta, dphi) in &points {
            let speed = (dtheta * dtheta + dphi * dphi).sqrt();
            let got = lagrangian(&ent, &[theta, phi], &[dtheta, dphi]).unwrap();
            assert_abs_diff_eq!(
                got,
                speed - entanglement_closed(theta, phi),
                epsilon = 1e-10
            );

            let got = lagrangian(&coh, &[theta, phi], &[dtheta, dphi]).unwrap();
            let expect = dtheta * dtheta + dphi * dphi + ((4.0 * theta).cos() - 5.0) / 8.0;
            assert_abs_diff_eq!(got, expect, epsilon = 1e-10);
        }
    }

    #[test]
    fn free_action_of_straight_line_is_squared_distance() {
        let problem = benchmark(Kinetic::SpeedSquared, PotentialSpec::None);
        let path = Path::straight_line(&problem.lambda_a, &problem.lambda_b, 64).unwrap();
        let expect = (PI / 4.0).powi(2) + (2.0 * PI).powi(2);
        assert_abs_diff_eq!(action(&problem, &path).unwrap(), expect, epsilon = 1e-10);
    }

    #[test]
    fn constant_path_action_is_minus_potential() {
        let free = ActionProblem::new(
            HamiltonianFamily::two_qubit_xx_zz(),
            Kinetic::SpeedSquared,
            PotentialSpec::None,
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        let path = Path::straight_line(&[0.0, 0.0], &[0.0, 0.0], 32).unwrap();
        assert_abs_diff_eq!(action(&free, &path).unwrap(), 0.0, epsilon = 1e-14);

        let coh = ActionProblem::new(
            HamiltonianFamily::two_qubit_xx_zz(),
            Kinetic::SpeedSquared,
            PotentialSpec::coherence_computational(4),
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        // At the reference point the dephased purity is 1/2, so V = 1/2.
        assert_abs_diff_eq!(action(&coh, &path).unwrap(), -0.5, epsilon = 1e-12);
    }

    #[test]
    fn speed_action_ignores_parametrization() {
        let problem = benchmark(Kinetic::Speed, PotentialSpec::None);
        let line = Path::straight_line(&problem.lambda_a, &problem.lambda_b, 64).unwrap();
        let warped = warped_line(&problem.lambda_a, &problem.lambda_b, 0.1, 64);
        let a1 = action(&problem, &line).unwrap();
        let a2 = action(&problem, &warped).unwrap();
        let length = ((PI / 4.0).powi(2) + (2.0 * PI).powi(2)).sqrt();
        assert_abs_diff_eq!(a1, length, epsilon = 1e-10);
        assert_abs_diff_eq!(a2, length, epsilon = 1e-6);
    }

    #[test]
    fn straight_free_path_has_tiny_residual() {
        let problem = benchmark(Kinetic::SpeedSquared, PotentialSpec::None);
        let path = Path::straight_line(&problem.lambda_a, &problem.lambda_b, 64).unwrap();
        let res = el_residual(&problem, &path).unwrap();
        assert!(res.undefined.is_empty());
        assert!(res.max_norm() < 1e-8, "residual {}", res.max_norm());
    }

    #[test]
    fn resting_speed_path_is_flagged_everywhere() {
        let problem = ActionProblem::new(
            HamiltonianFamily::two_qubit_xx_zz(),
            Kinetic::Speed,
            PotentialSpec::None,
            vec![0.1, 0.2],
            vec![0.1, 0.2],
        )
        .unwrap();
        let path = Path::straight_line(&[0.1, 0.2], &[0.1, 0.2], 32).unwrap();
        let res = el_residual(&problem, &path).unwrap();
        assert_eq!(res.undefined, (1..32).collect::<Vec<_>>());
        assert_eq!(res.max_norm(), 0.0);
    }

    #[test]
    fn accumulate_constant_reference_path() {
        let problem = ActionProblem::new(
            HamiltonianFamily::two_qubit_xx_zz(),
            Kinetic::SpeedSquared,
            PotentialSpec::None,
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        let path = Path::straight_line(&[0.0, 0.0], &[0.0, 0.0], 32).unwrap();
        let acc = accumulate(&problem, &path).unwrap();
        assert_abs_diff_eq!(acc.entanglement, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(acc.antiflatness, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(acc.coherence, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn accumulate_straight_benchmark_line() {
        // Along λ(s) = (πs/4, 2πs) the entanglement averages to exactly 1/8:
        // the oscillating factors integrate away over the full period.
        let problem = benchmark(Kinetic::SpeedSquared, PotentialSpec::None);
        let path = Path::straight_line(&problem.lambda_a, &problem.lambda_b, 400).unwrap();
        let acc = accumulate(&problem, &path).unwrap();
        assert_abs_diff_eq!(acc.entanglement, 0.125, epsilon = 1e-7);
    }

    #[test]
    fn path_shape_is_validated() {
        let problem = benchmark(Kinetic::SpeedSquared, PotentialSpec::None);
        let path = Path::straight_line(&[0.0], &[1.0], 32).unwrap();
        assert!(matches!(
            action(&problem, &path),
            Err(Error::DimMismatch { .. })
        ));
        assert!(Path::straight_line(&[0.0, 0.0], &[1.0, 1.0], 7).is_err());
    }

    #[test]
    fn accumulation_settings_follow_the_potential() {
        let problem = benchmark(
            Kinetic::SpeedSquared,
            PotentialSpec::Entanglement { keep: vec![1] },
        );
        assert_eq!(problem.keep, vec![1]);
        assert_eq!(problem.projectors.len(), 4);
        let overridden = problem.with_accumulation(
            vec![0],
            crate::qmath::computational_projectors(4),
        );
        assert!(overridden.is_ok());
        let bad = benchmark(Kinetic::SpeedSquared, PotentialSpec::None)
            .with_accumulation(vec![2], crate::qmath::computational_projectors(4));
        assert!(bad.is_err());
    }
}
