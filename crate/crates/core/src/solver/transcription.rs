//! Direct transcription solver.
//!
//! The action is discretized segment-wise with midpoint metric evaluations
//! and trapezoid potential quadrature, then minimized over the interior nodes
//! with a preconditioned L-BFGS iteration (the preconditioner is the exact
//! kinetic Hessian of the flat squared-speed problem, a tridiagonal system).
//! For the squared-speed kinetic term the minimizer is then polished by a
//! Newton iteration on the collocated stationarity equations
//! λ″ + Γ(λ′, λ′) + ½ g⁻¹ ∇V = 0, which restores high-order accuracy in the
//! interior.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::family::HamiltonianFamily;
use crate::geometry::{metric_at, METRIC_STEP};
use crate::qmath::solve_real;
use crate::resource::PotentialSpec;

use super::grid::Grid;
use super::{
    finish_result, stationarity_force, ActionProblem, Kinetic, Method, Path, SolveResult,
};

/// Transcription needs enough nodes for the quadrature and the difference
/// stencils to be meaningful.
pub const MIN_TRANSCRIPTION_GRID: usize = 32;

/// Gradient sup-norm below which the discrete minimization stops.
const GRAD_TOL: f64 = 1e-8;
/// Relative objective decrease below which the minimization stops.
const REL_TOL: f64 = 1e-12;
/// L-BFGS history length.
const LBFGS_MEMORY: usize = 10;
/// Armijo sufficient-decrease constant.
const ARMIJO_C1: f64 = 1e-4;
/// Collocation polish stops when the stationarity residual drops below this.
const POLISH_TOL: f64 = 1e-9;
const POLISH_MAX_ITER: usize = 12;
/// FD step scale for the force Jacobian blocks of the polish.
const POLISH_JACOBIAN_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct TranscriptionOptions {
    /// Iteration budget for the discrete minimization.
    pub max_iterations: usize,
    /// Starting path; straight line when absent. Must live on the same grid
    /// and match the problem endpoints.
    pub init: Option<Path>,
}

impl Default for TranscriptionOptions {
    fn default() -> Self {
        Self {
            max_iterations: 100_000,
            init: None,
        }
    }
}

/// The discretized action and its analytic gradient over the interior nodes.
///
/// Segment k contributes Δᵀg(μ)Δ/h (squared speed) or √(Δᵀg(μ)Δ) (speed),
/// with Δ the node difference and μ the segment midpoint; the potential is
/// integrated by the trapezoid rule. Metric derivatives entering the gradient
/// use central differences with step [`METRIC_STEP`].
struct Discretized<'a> {
    problem: &'a ActionProblem,
    grid: Grid,
    m: usize,
}

impl<'a> Discretized<'a> {
    fn new(problem: &'a ActionProblem, n: usize) -> Result<Self> {
        Ok(Self {
            problem,
            grid: Grid::new(n)?,
            m: problem.family.num_params(),
        })
    }

    fn n(&self) -> usize {
        self.grid.n()
    }

    /// Interior unknowns packed row-major: x[(k-1)m + μ] = λ_μ(s_k).
    fn unpack(&self, x: &[f64]) -> Array2<f64> {
        let (n, m) = (self.n(), self.m);
        let mut nodes = Array2::zeros((n + 1, m));
        for mu in 0..m {
            nodes[[0, mu]] = self.problem.lambda_a[mu];
            nodes[[n, mu]] = self.problem.lambda_b[mu];
        }
        for k in 1..n {
            for mu in 0..m {
                nodes[[k, mu]] = x[(k - 1) * m + mu];
            }
        }
        nodes
    }

    fn pack(&self, nodes: &Array2<f64>) -> Vec<f64> {
        let (n, m) = (self.n(), self.m);
        let mut x = vec![0.0; (n - 1) * m];
        for k in 1..n {
            for mu in 0..m {
                x[(k - 1) * m + mu] = nodes[[k, mu]];
            }
        }
        x
    }

    fn degenerate_segment(&self, delta_norm: f64) -> Error {
        Error::Unsupported {
            context: format!(
                "speed kinetic term degenerates on a segment at rest \
                 (|Δλ| = {delta_norm:.3e}); use the squared-speed kinetic term"
            ),
        }
    }

    fn kinetic_segment(&self, q: f64, delta_norm: f64) -> Result<f64> {
        match self.problem.kinetic {
            Kinetic::SpeedSquared => Ok(q / self.grid.h()),
            Kinetic::Speed => {
                if delta_norm < 1e-8 * self.grid.h() {
                    return Err(self.degenerate_segment(delta_norm));
                }
                Ok(q.max(0.0).sqrt())
            }
        }
    }

    fn objective(&self, x: &[f64]) -> Result<f64> {
        let nodes = self.unpack(x);
        let (n, m, h) = (self.n(), self.m, self.grid.h());
        let family = &self.problem.family;
        let mut f = 0.0;
        for k in 0..n {
            let mut mid = vec![0.0; m];
            let mut delta = vec![0.0; m];
            for mu in 0..m {
                delta[mu] = nodes[[k + 1, mu]] - nodes[[k, mu]];
                mid[mu] = 0.5 * (nodes[[k, mu]] + nodes[[k + 1, mu]]);
            }
            let g = metric_at(family, &mid)?;
            let mut q = 0.0;
            for i in 0..m {
                for j in 0..m {
                    q += delta[i] * g[[i, j]] * delta[j];
                }
            }
            let dn = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
            f += self.kinetic_segment(q, dn)?;
        }
        if !matches!(self.problem.potential, PotentialSpec::None) {
            for k in 0..=n {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                let v = self
                    .problem
                    .potential
                    .value(family, &nodes.row(k).to_vec())?;
                f -= h * w * v;
            }
        }
        Ok(f)
    }

    fn objective_gradient(&self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let nodes = self.unpack(x);
        let (n, m, h) = (self.n(), self.m, self.grid.h());
        let family = &self.problem.family;
        let mut f = 0.0;
        let mut grad = vec![0.0; (n - 1) * m];

        for k in 0..n {
            let mut mid = vec![0.0; m];
            let mut delta = vec![0.0; m];
            for mu in 0..m {
                delta[mu] = nodes[[k + 1, mu]] - nodes[[k, mu]];
                mid[mu] = 0.5 * (nodes[[k, mu]] + nodes[[k + 1, mu]]);
            }
            let (g, dg) = metric_and_derivatives(family, &mid)?;
            let mut q = 0.0;
            let mut gd = vec![0.0; m];
            for i in 0..m {
                for j in 0..m {
                    q += delta[i] * g[[i, j]] * delta[j];
                    gd[i] += g[[i, j]] * delta[j];
                }
            }
            // dq[a] = Δᵀ (∂_a g) Δ; the midpoint shifts by ½ per endpoint node.
            let mut dq = vec![0.0; m];
            for a in 0..m {
                for i in 0..m {
                    for j in 0..m {
                        dq[a] += delta[i] * dg[a][[i, j]] * delta[j];
                    }
                }
            }
            let dn = delta.iter().map(|d| d * d).sum::<f64>().sqrt();
            match self.problem.kinetic {
                Kinetic::SpeedSquared => {
                    f += q / h;
                    for a in 0..m {
                        let dmu = dq[a] / (2.0 * h);
                        let dend = 2.0 * gd[a] / h;
                        if k >= 1 {
                            grad[(k - 1) * m + a] += dmu - dend;
                        }
                        if k < n - 1 {
                            grad[k * m + a] += dmu + dend;
                        }
                    }
                }
                Kinetic::Speed => {
                    if dn < 1e-8 * h {
                        return Err(self.degenerate_segment(dn));
                    }
                    let ell = q.max(0.0).sqrt();
                    if ell < 1e-12 {
                        return Err(self.degenerate_segment(dn));
                    }
                    f += ell;
                    for a in 0..m {
                        let dmu = dq[a] / (4.0 * ell);
                        let dend = gd[a] / ell;
                        if k >= 1 {
                            grad[(k - 1) * m + a] += dmu - dend;
                        }
                        if k < n - 1 {
                            grad[k * m + a] += dmu + dend;
                        }
                    }
                }
            }
        }

        if !matches!(self.problem.potential, PotentialSpec::None) {
            for k in 0..=n {
                let w = if k == 0 || k == n { 0.5 } else { 1.0 };
                let lam = nodes.row(k).to_vec();
                f -= h * w * self.problem.potential.value(family, &lam)?;
                if k >= 1 && k < n {
                    let gv = self.problem.potential.gradient(family, &lam)?;
                    for a in 0..m {
                        grad[(k - 1) * m + a] -= h * gv[a];
                    }
                }
            }
        }
        Ok((f, grad))
    }

    /// Apply the inverse kinetic preconditioner H₀⁻¹ = (h/2) (T⁻¹ ⊗ I_m)
    /// where T is the (N−1)-point second-difference matrix. Solved by the
    /// Thomas algorithm per parameter component.
    fn precondition(&self, q: &[f64]) -> Vec<f64> {
        let (n, m, h) = (self.n(), self.m, self.grid.h());
        let rows = n - 1;
        let mut out = vec![0.0; rows * m];
        let mut diag = vec![0.0; rows];
        let mut rhs = vec![0.0; rows];
        for mu in 0..m {
            for i in 0..rows {
                rhs[i] = q[i * m + mu];
            }
            diag[0] = 2.0;
            for i in 1..rows {
                diag[i] = 2.0 - 1.0 / diag[i - 1];
                rhs[i] = q[i * m + mu] + rhs[i - 1] / diag[i - 1];
            }
            let mut z = vec![0.0; rows];
            z[rows - 1] = rhs[rows - 1] / diag[rows - 1];
            for i in (0..rows - 1).rev() {
                z[i] = (rhs[i] + z[i + 1]) / diag[i];
            }
            for i in 0..rows {
                out[i * m + mu] = 0.5 * h * z[i];
            }
        }
        out
    }
}

/// Metric and its coordinate derivatives ∂_a g at one point, by central
/// differences with step [`METRIC_STEP`] · max(1, |λ_a|).
fn metric_and_derivatives(
    family: &HamiltonianFamily,
    lambda: &[f64],
) -> Result<(Array2<f64>, Vec<Array2<f64>>)> {
    let m = lambda.len();
    let g = metric_at(family, lambda)?;
    let mut probe = lambda.to_vec();
    let mut dg = Vec::with_capacity(m);
    for a in 0..m {
        let h = METRIC_STEP * lambda[a].abs().max(1.0);
        probe[a] = lambda[a] + h;
        let gp = metric_at(family, &probe)?;
        probe[a] = lambda[a] - h;
        let gm = metric_at(family, &probe)?;
        probe[a] = lambda[a];
        dg.push((gp - gm) / (2.0 * h));
    }
    Ok((g, dg))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Minimize the discretized action with L-BFGS, preconditioned by the flat
/// kinetic Hessian. Returns (solution, iterations, converged).
fn minimize(dsc: &Discretized, x0: Vec<f64>, max_iterations: usize) -> Result<(Vec<f64>, usize, bool)> {
    let mut x = x0;
    let (mut f, mut grad) = dsc.objective_gradient(&x)?;
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new(); // (s, y, 1/yᵀs)
    let mut iterations = 0;

    while iterations < max_iterations {
        if inf_norm(&grad) < GRAD_TOL {
            return Ok((x, iterations, true));
        }
        iterations += 1;

        // Two-loop recursion with H₀⁻¹ in the center.
        let mut q = grad.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        let mut dir = dsc.precondition(&q);
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &dir);
            for (di, si) in dir.iter_mut().zip(s) {
                *di += (a - b) * si;
            }
        }
        for d in dir.iter_mut() {
            *d = -*d;
        }

        let mut slope = dot(&dir, &grad);
        if slope >= 0.0 {
            // Curvature information went stale; restart from the
            // preconditioned steepest descent direction.
            history.clear();
            dir = dsc.precondition(&grad);
            for d in dir.iter_mut() {
                *d = -*d;
            }
            slope = dot(&dir, &grad);
        }

        // Armijo backtracking.
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..50 {
            let cand: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + alpha * di).collect();
            let fc = dsc.objective(&cand)?;
            if fc <= f + ARMIJO_C1 * alpha * slope {
                accepted = Some((cand, fc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((x_new, f_new)) = accepted else {
            // No descent at any step length: the objective is at its
            // numerical floor along this direction.
            return Ok((x, iterations, true));
        };

        let (f2, grad_new) = dsc.objective_gradient(&x_new)?;
        let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let ys = dot(&y, &s);
        let ss = dot(&s, &s).sqrt() * dot(&y, &y).sqrt();
        if ys > 1e-12 * ss.max(1e-300) {
            history.push((s, y, 1.0 / ys));
            if history.len() > LBFGS_MEMORY {
                history.remove(0);
            }
        }
        let decrease = f - f_new;
        x = x_new;
        f = f2;
        grad = grad_new;
        if decrease.abs() <= REL_TOL * f.abs().max(1.0) {
            return Ok((x, iterations, true));
        }
    }
    Ok((x, iterations, false))
}

/// Collocated stationarity residual R_k = (λ″)_k + F_k at the interior nodes,
/// with λ″ from a 5-point stencil (3-point at the first and last interior
/// node) and λ′ from the grid difference stencils.
fn collocation_residual(
    problem: &ActionProblem,
    grid: &Grid,
    nodes: &Array2<f64>,
) -> Result<Array2<f64>> {
    let n = grid.n();
    let m = nodes.ncols();
    let h = grid.h();
    let vel = grid.derivative(nodes)?;
    let mut res = Array2::zeros((n - 1, m));
    for k in 1..n {
        let lam = nodes.row(k).to_vec();
        let v = vel.row(k).to_vec();
        let f = stationarity_force(problem, &lam, &v)?;
        for mu in 0..m {
            let d2 = if k == 1 || k == n - 1 {
                (nodes[[k - 1, mu]] - 2.0 * nodes[[k, mu]] + nodes[[k + 1, mu]]) / (h * h)
            } else {
                (-nodes[[k - 2, mu]] + 16.0 * nodes[[k - 1, mu]] - 30.0 * nodes[[k, mu]]
                    + 16.0 * nodes[[k + 1, mu]]
                    - nodes[[k + 2, mu]])
                    / (12.0 * h * h)
            };
            res[[k - 1, mu]] = d2 + f[mu];
        }
    }
    Ok(res)
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Newton polish of the collocated stationarity equations. The Jacobian
/// combines the exact second-difference coefficients with per-node force
/// derivative blocks (finite differences, velocity coupling neglected);
/// steps are damped whenever they fail to reduce the residual.
///
/// Returns the best node matrix found and the iteration count.
fn polish(
    problem: &ActionProblem,
    grid: &Grid,
    start: Array2<f64>,
) -> Result<(Array2<f64>, usize, f64)> {
    let n = grid.n();
    let m = start.ncols();
    let h = grid.h();
    let unknowns = (n - 1) * m;

    let mut nodes = start;
    let mut res = collocation_residual(problem, grid, &nodes)?;
    let mut rmax = max_abs(&res);
    let mut best = (nodes.clone(), rmax);
    let mut iterations = 0;

    while iterations < POLISH_MAX_ITER && rmax > POLISH_TOL {
        iterations += 1;
        let vel = grid.derivative(&nodes)?;
        let mut jac = Array2::zeros((unknowns, unknowns));
        for k in 1..n {
            let row0 = (k - 1) * m;
            // Second-difference coefficients on interior unknowns.
            let coeffs: &[(isize, f64)] = if k == 1 || k == n - 1 {
                &[(-1, 1.0), (0, -2.0), (1, 1.0)]
            } else {
                &[
                    (-2, -1.0 / 12.0),
                    (-1, 16.0 / 12.0),
                    (0, -30.0 / 12.0),
                    (1, 16.0 / 12.0),
                    (2, -1.0 / 12.0),
                ]
            };
            for &(off, c) in coeffs {
                let j = k as isize + off;
                if j >= 1 && j <= (n - 1) as isize {
                    let col0 = (j as usize - 1) * m;
                    for mu in 0..m {
                        jac[[row0 + mu, col0 + mu]] += c / (h * h);
                    }
                }
            }
            // Force derivative block at node k.
            let lam = nodes.row(k).to_vec();
            let v = vel.row(k).to_vec();
            let mut probe = lam.clone();
            for a in 0..m {
                let step = POLISH_JACOBIAN_STEP * lam[a].abs().max(1.0);
                probe[a] = lam[a] + step;
                let fp = stationarity_force(problem, &probe, &v)?;
                probe[a] = lam[a] - step;
                let fm = stationarity_force(problem, &probe, &v)?;
                probe[a] = lam[a];
                for mu in 0..m {
                    jac[[row0 + mu, row0 + a]] += (fp[mu] - fm[mu]) / (2.0 * step);
                }
            }
        }

        let mut rhs = Array2::zeros((unknowns, 1));
        for k in 1..n {
            for mu in 0..m {
                rhs[[(k - 1) * m + mu, 0]] = -res[[k - 1, mu]];
            }
        }
        let delta = solve_real(&jac, &rhs)?;

        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..=6 {
            let mut cand = nodes.clone();
            for k in 1..n {
                for mu in 0..m {
                    cand[[k, mu]] += alpha * delta[[(k - 1) * m + mu, 0]];
                }
            }
            let cres = collocation_residual(problem, grid, &cand)?;
            let cmax = max_abs(&cres);
            if cmax < rmax {
                nodes = cand;
                res = cres;
                rmax = cmax;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            break;
        }
        if rmax < best.1 {
            best = (nodes.clone(), rmax);
        }
    }
    Ok((best.0, iterations, best.1))
}

/// Solve by direct transcription on an N-segment grid (N even, ≥ 32).
///
/// Both kinetic terms are supported. With the plain speed term a path segment
/// collapsing to rest makes the length functional non-differentiable, in
/// which case the solver stops with an error recommending the squared-speed
/// term.
pub fn solve_transcription(
    problem: &ActionProblem,
    n: usize,
    options: &TranscriptionOptions,
) -> Result<SolveResult> {
    if n < MIN_TRANSCRIPTION_GRID {
        return Err(Error::BadGrid {
            n,
            min: MIN_TRANSCRIPTION_GRID,
        });
    }
    let dsc = Discretized::new(problem, n)?;
    let m = problem.family.num_params();

    let (x0, init_label) = match &options.init {
        None => {
            let line = Path::straight_line(&problem.lambda_a, &problem.lambda_b, n)?;
            (dsc.pack(&line.nodes), "straight line".to_string())
        }
        Some(path) => {
            if path.n() != n || path.params() != m {
                return Err(Error::DimMismatch {
                    context: format!(
                        "initial path is {}x{}, expected {}x{}",
                        path.n() + 1,
                        path.params(),
                        n + 1,
                        m
                    ),
                });
            }
            for mu in 0..m {
                if (path.nodes[[0, mu]] - problem.lambda_a[mu]).abs() > 1e-9
                    || (path.nodes[[n, mu]] - problem.lambda_b[mu]).abs() > 1e-9
                {
                    return Err(Error::Invalid {
                        context: "initial path endpoints do not match the problem".to_string(),
                    });
                }
            }
            (dsc.pack(&path.nodes), "supplied path".to_string())
        }
    };

    let (x, mut iterations, converged) = minimize(&dsc, x0, options.max_iterations)?;
    let mut nodes = dsc.unpack(&x);

    if problem.kinetic == Kinetic::SpeedSquared {
        let (polished, polish_iters, residual) = polish(problem, &dsc.grid, nodes)?;
        nodes = polished;
        iterations += polish_iters;
        if residual > 1e-8 {
            log::warn!("stationarity polish stalled at residual {residual:.3e}");
        }
    }

    finish_result(
        problem,
        Path { nodes },
        Method::Transcription,
        iterations,
        converged,
        Vec::new(),
        init_label,
    )
}

#[cfg(test)]
mod tests {
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    use super::*;
    use crate::family::HamiltonianFamily;
    use crate::solver::{accumulate, warped_line, Kinetic};

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

    #[test]
    fn free_squared_speed_recovers_the_straight_line() {
        let problem = benchmark(Kinetic::SpeedSquared, PotentialSpec::None);
        let init = warped_line(&problem.lambda_a, &problem.lambda_b, 0.05, 48);
        let options = TranscriptionOptions {
            init: Some(init),
            ..Default::default()
        };
        let result = solve_transcription(&problem, 48, &options).unwrap();
        assert!(result.converged);
        assert_eq!(result.init_label, "supplied path");
        let line = Path::straight_line(&problem.lambda_a, &problem.lambda_b, 48).unwrap();
        let worst = (&result.path.nodes - &line.nodes)
            .iter()
            .fold(0.0_f64, |acc, x| acc.max(x.abs()));
        assert!(worst < 1e-7, "node deviation {worst}");
        let expect = (PI / 4.0).powi(2) + (2.0 * PI).powi(2);
        assert_abs_diff_eq!(result.action, expect, epsilon = 1e-9);
    }

    #[test]
    fn speed_length_is_parametrization_blind() {
        let problem = benchmark(Kinetic::Speed, PotentialSpec::None);
        let length = ((PI / 4.0).powi(2) + (2.0 * PI).powi(2)).sqrt();

        let straight = solve_transcription(&problem, 48, &TranscriptionOptions::default()).unwrap();
        assert_abs_diff_eq!(straight.action, length, epsilon = 1e-8);

        let init = warped_line(&problem.lambda_a, &problem.lambda_b, 0.1, 48);
        let warped = solve_transcription(
            &problem,
            48,
            &TranscriptionOptions {
                init: Some(init),
                ..Default::default()
            },
        )
        .unwrap();
        assert_abs_diff_eq!(warped.action, length, epsilon = 1e-6);
    }

    #[test]
    fn resting_speed_segments_are_rejected() {
        let problem = ActionProblem::new(
            HamiltonianFamily::two_qubit_xx_zz(),
            Kinetic::Speed,
            PotentialSpec::None,
            vec![0.3, 0.3],
            vec![0.3, 0.3],
        )
        .unwrap();
        let err = solve_transcription(&problem, 32, &TranscriptionOptions::default()).unwrap_err();
        let text = err.to_string();
        assert!(text.contains("squared-speed"), "got: {text}");
    }

    #[test]
    fn coinciding_endpoints_give_the_constant_path() {
        let problem = ActionProblem::new(
            HamiltonianFamily::two_qubit_xx_zz(),
            Kinetic::SpeedSquared,
            PotentialSpec::coherence_computational(4),
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        )
        .unwrap();
        let result = solve_transcription(&problem, 32, &TranscriptionOptions::default()).unwrap();
        assert!(result.converged);
        let worst = result.path.nodes.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        assert!(worst < 1e-10, "drift {worst}");
        assert_abs_diff_eq!(result.action, -0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(result.accumulated.coherence, 0.5, epsilon = 1e-10);
    }

    #[test]
    fn entanglement_pull_bends_the_path() {
        let problem = benchmark(
            Kinetic::SpeedSquared,
            PotentialSpec::Entanglement { keep: vec![0] },
        );
        let result = solve_transcription(&problem, 48, &TranscriptionOptions::default()).unwrap();
        assert!(result.converged);
        // Grid-converged references from a fine independent run.
        assert_abs_diff_eq!(result.accumulated.entanglement, 0.13152604, epsilon = 5e-4);
        assert_abs_diff_eq!(result.accumulated.antiflatness, 0.02810019, epsilon = 5e-4);
        assert_abs_diff_eq!(result.accumulated.coherence, 0.63131336, epsilon = 5e-4);
        let again = accumulate(&problem, &result.path).unwrap();
        assert_abs_diff_eq!(again.entanglement, result.accumulated.entanglement, epsilon = 0.0);
    }
}
