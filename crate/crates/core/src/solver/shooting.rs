//! Shooting solver for the squared-speed kinetic term.
//!
//! The stationarity conditions form a second-order ODE boundary-value
//! problem: λ″ = −Γ(λ′, λ′) − ½ g⁻¹ ∇V with both endpoints pinned. Shooting
//! turns it into root-finding on the unknown initial velocity: integrate the
//! ODE from λ(0) = λ_A and Newton-iterate v₀ until λ(1) hits λ_B. The
//! integrator is an adaptive embedded 5(4) Runge-Kutta pair; its tolerance is
//! tightened in stages as the Newton residual shrinks so early iterations
//! stay cheap. Multi-start over seeded perturbations of the secant guess
//! v₀ = λ_B − λ_A finds distinct stationary branches; the least action wins.

use ndarray::Array2;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qmath::solve_real;

use super::grid::Grid;
use super::{
    action, finish_result, stationarity_force, ActionProblem, Branch, Kinetic, Method, Path,
    SolveResult,
};

/// Integrator tolerance ladder, keyed to the Newton residual.
const RTOL_COARSE: f64 = 1e-7;
const RTOL_MID: f64 = 1e-10;
const RTOL_FINAL: f64 = 1e-12;
const ENTER_MID: f64 = 1e-5;
const ENTER_FINAL: f64 = 1e-8;
/// Boundary residual below which a branch counts as converged (checked at
/// the tightest integrator tolerance).
const BOUNDARY_TOL: f64 = 1e-10;
const ATOL: f64 = 1e-14;
/// Forward-difference step scale for the Newton Jacobian in v₀.
const JACOBIAN_STEP: f64 = 1e-7;
/// Two converged initial velocities closer than this are the same branch.
const DUPLICATE_TOL: f64 = 1e-3;
/// Restart perturbations are uniform in ±this around the secant guess.
const RESTART_SPREAD: f64 = 3.0;
const MAX_STEPS: usize = 200_000;
const MIN_STEP: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct ShootingOptions {
    /// Output grid segments for the returned path (even, ≥ 8).
    pub grid_n: usize,
    /// Number of perturbed starts tried after the secant guess.
    pub restarts: usize,
    /// Seed for the restart perturbations.
    pub seed: u64,
    /// Newton iteration budget for the first start; restarts get half.
    pub max_newton: usize,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self {
            grid_n: 400,
            restarts: 16,
            seed: 0,
            max_newton: 50,
        }
    }
}

/// Dormand-Prince 5(4) stage coefficients. The derivative field has no
/// explicit s dependence, so the stage abscissae never appear.
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// 5th-order weights (row 7 of A: first-same-as-last pair).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
/// Embedded 4th-order weights.
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Integrator<'a> {
    problem: &'a ActionProblem,
    m: usize,
}

impl<'a> Integrator<'a> {
    fn new(problem: &'a ActionProblem) -> Self {
        Self {
            problem,
            m: problem.family.num_params(),
        }
    }

    /// Phase-space derivative of u = (λ, λ′).
    fn rhs(&self, u: &[f64]) -> Result<Vec<f64>> {
        let (lam, v) = u.split_at(self.m);
        let f = stationarity_force(self.problem, lam, v)?;
        let mut du = Vec::with_capacity(2 * self.m);
        du.extend_from_slice(v);
        du.extend(f.iter().map(|x| -x));
        Ok(du)
    }

    /// Integrate from s = 0 with initial velocity `v0` and record λ at each
    /// of the strictly increasing output points in (0, 1].
    fn integrate(&self, v0: &[f64], rtol: f64, outputs: &[f64]) -> Result<Vec<Vec<f64>>> {
        let m = self.m;
        let dim = 2 * m;
        let mut u: Vec<f64> = Vec::with_capacity(dim);
        u.extend_from_slice(&self.problem.lambda_a);
        u.extend_from_slice(v0);
        let mut s = 0.0_f64;
        let mut k1 = self.rhs(&u)?;
        let mut h_prop = 1e-2_f64;
        let mut recorded = Vec::with_capacity(outputs.len());
        let mut steps = 0usize;

        for &target in outputs {
            while s < target {
                if steps >= MAX_STEPS {
                    return Err(Error::Invalid {
                        context: format!("integrator exceeded {MAX_STEPS} steps"),
                    });
                }
                steps += 1;
                let h = h_prop.min(target - s);
                if h < MIN_STEP {
                    return Err(Error::Invalid {
                        context: "integrator step size underflow".to_string(),
                    });
                }

                let mut stages: Vec<Vec<f64>> = Vec::with_capacity(7);
                stages.push(k1.clone());
                for a_row in &A[1..7] {
                    let mut arg = u.clone();
                    for i in 0..dim {
                        let mut acc = 0.0;
                        for (j, kj) in stages.iter().enumerate() {
                            acc += a_row[j] * kj[i];
                        }
                        arg[i] += h * acc;
                    }
                    stages.push(self.rhs(&arg)?);
                }

                let mut y5 = u.clone();
                let mut err = 0.0_f64;
                for i in 0..dim {
                    let mut acc5 = 0.0;
                    let mut acc4 = 0.0;
                    for j in 0..7 {
                        acc5 += B5[j] * stages[j][i];
                        acc4 += B4[j] * stages[j][i];
                    }
                    y5[i] += h * acc5;
                    let scale = ATOL + rtol * u[i].abs().max(y5[i].abs());
                    let e = h * (acc5 - acc4) / scale;
                    err += e * e;
                }
                err = (err / dim as f64).sqrt();

                if err <= 1.0 {
                    s = if (target - s - h).abs() < 1e-14 { target } else { s + h };
                    u = y5;
                    // First-same-as-last: stage 7 is the derivative at the
                    // accepted point.
                    k1 = stages[6].clone();
                    let factor = if err == 0.0 {
                        5.0
                    } else {
                        (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    h_prop = h * factor;
                } else {
                    let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
                    h_prop = h * factor;
                }
            }
            recorded.push(u[..m].to_vec());
        }
        Ok(recorded)
    }

    /// λ(1) for a given initial velocity.
    fn endpoint(&self, v0: &[f64], rtol: f64) -> Result<Vec<f64>> {
        Ok(self.integrate(v0, rtol, &[1.0])?.pop().unwrap())
    }
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

fn rtol_for(residual: f64) -> f64 {
    if residual > ENTER_MID {
        RTOL_COARSE
    } else if residual > ENTER_FINAL {
        RTOL_MID
    } else {
        RTOL_FINAL
    }
}

enum StartOutcome {
    Converged(Vec<f64>),
    Duplicate,
    Failed,
}

/// Newton iteration on the initial velocity. `known` holds the initial
/// velocities of branches already found; once the residual is small the
/// iterate is pinned to one solution, so a close match lets the start stop
/// early instead of polishing a duplicate.
fn newton_start(
    integrator: &Integrator,
    lambda_b: &[f64],
    v0: &[f64],
    budget: usize,
    known: &[Vec<f64>],
    iterations: &mut usize,
) -> StartOutcome {
    let m = lambda_b.len();
    let mut v = v0.to_vec();
    let mut rtol = RTOL_COARSE;

    let mut residual = match integrator.endpoint(&v, rtol) {
        Ok(end) => sub(&end, lambda_b),
        Err(_) => return StartOutcome::Failed,
    };

    for _ in 0..budget {
        let mut rnorm = inf_norm(&residual);
        let wanted = rtol_for(rnorm);
        if wanted < rtol {
            rtol = wanted;
            residual = match integrator.endpoint(&v, rtol) {
                Ok(end) => sub(&end, lambda_b),
                Err(_) => return StartOutcome::Failed,
            };
            rnorm = inf_norm(&residual);
        }
        if rtol == RTOL_FINAL && rnorm <= BOUNDARY_TOL {
            return StartOutcome::Converged(v);
        }
        if rnorm < ENTER_MID
            && known
                .iter()
                .any(|k| inf_norm(&sub(&v, k)) < DUPLICATE_TOL)
        {
            return StartOutcome::Duplicate;
        }
        *iterations += 1;

        // Forward-difference Jacobian of the boundary residual in v₀.
        let mut jac = Array2::zeros((m, m));
        let base_end: Vec<f64> = residual.iter().zip(lambda_b).map(|(r, b)| r + b).collect();
        let mut ok = true;
        for a in 0..m {
            let step = JACOBIAN_STEP * (1.0 + v[a].abs());
            let mut vp = v.clone();
            vp[a] += step;
            match integrator.endpoint(&vp, rtol) {
                Ok(end) => {
                    for mu in 0..m {
                        jac[[mu, a]] = (end[mu] - base_end[mu]) / step;
                    }
                }
                Err(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            return StartOutcome::Failed;
        }
        let mut rhs = Array2::zeros((m, 1));
        for mu in 0..m {
            rhs[[mu, 0]] = -residual[mu];
        }
        let step = match solve_real(&jac, &rhs) {
            Ok(d) => d,
            Err(_) => return StartOutcome::Failed,
        };

        // Damped update: halve until the residual improves.
        let mut alpha = 1.0_f64;
        let mut accepted = false;
        for _ in 0..=6 {
            let cand: Vec<f64> = (0..m).map(|a| v[a] + alpha * step[[a, 0]]).collect();
            if let Ok(end) = integrator.endpoint(&cand, rtol) {
                let cres = sub(&end, lambda_b);
                if inf_norm(&cres) < rnorm {
                    v = cand;
                    residual = cres;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if !accepted {
            return StartOutcome::Failed;
        }
    }
    StartOutcome::Failed
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Solve by shooting on the stationarity ODE (squared-speed kinetic term
/// only; the speed term has no second-order initial-value form).
pub fn solve_shooting(problem: &ActionProblem, options: &ShootingOptions) -> Result<SolveResult> {
    if problem.kinetic == Kinetic::Speed {
        return Err(Error::Unsupported {
            context: "shooting needs the squared-speed kinetic term; \
                      use transcription for the speed term"
                .to_string(),
        });
    }
    let grid = Grid::new(options.grid_n)?;
    let integrator = Integrator::new(problem);
    let m = problem.family.num_params();
    let secant = sub(&problem.lambda_b, &problem.lambda_a);

    // Evaluate the derivative once up front so problem-definition errors
    // surface directly instead of disguising themselves as failed starts.
    {
        let mut u = problem.lambda_a.clone();
        u.extend_from_slice(&secant);
        integrator.rhs(&u)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let mut iterations = 0usize;
    // (initial velocity, action, nodes), deduplicated.
    let mut found: Vec<(Vec<f64>, f64, Array2<f64>)> = Vec::new();

    for start in 0..=options.restarts {
        let v0: Vec<f64> = if start == 0 {
            secant.clone()
        } else {
            secant
                .iter()
                .map(|x| x + rng.gen_range(-RESTART_SPREAD..RESTART_SPREAD))
                .collect()
        };
        let budget = if start == 0 {
            options.max_newton
        } else {
            options.max_newton / 2
        };
        let known: Vec<Vec<f64>> = found.iter().map(|(v, _, _)| v.clone()).collect();
        let outcome = newton_start(
            &integrator,
            &problem.lambda_b,
            &v0,
            budget,
            &known,
            &mut iterations,
        );
        let StartOutcome::Converged(v) = outcome else {
            continue;
        };
        if found
            .iter()
            .any(|(k, _, _)| inf_norm(&sub(&v, k)) < DUPLICATE_TOL)
        {
            continue;
        }

        // Record the full trajectory for this branch on the output grid.
        let targets: Vec<f64> = (1..=grid.n()).map(|k| grid.s(k)).collect();
        let samples = integrator.integrate(&v, RTOL_FINAL, &targets)?;
        let mut nodes = Array2::zeros((grid.n() + 1, m));
        for mu in 0..m {
            nodes[[0, mu]] = problem.lambda_a[mu];
            // The boundary residual is at rounding level; pin the endpoint.
            nodes[[grid.n(), mu]] = problem.lambda_b[mu];
        }
        for (k, lam) in samples.iter().enumerate().take(grid.n() - 1) {
            for mu in 0..m {
                nodes[[k + 1, mu]] = lam[mu];
            }
        }
        let branch_action = action(problem, &Path {
            nodes: nodes.clone(),
        })?;
        found.push((v, branch_action, nodes));
    }

    if found.is_empty() {
        return Err(Error::NoSolution {
            context: "no shooting branch reached the far endpoint; \
                      transcription is the robust fallback"
                .to_string(),
        });
    }
    found.sort_by(|a, b| a.1.total_cmp(&b.1));
    let branches: Vec<Branch> = found
        .iter()
        .map(|(v, act, _)| Branch {
            initial_velocity: v.clone(),
            action: *act,
        })
        .collect();
    let best = found.swap_remove(0);
    let init_label = format!(
        "endpoint-difference velocity with {} seeded restarts (seed {})",
        options.restarts, options.seed
    );

    finish_result(
        problem,
        Path { nodes: best.2 },
        Method::Shooting,
        iterations,
        true,
        branches,
        init_label,
    )
}
