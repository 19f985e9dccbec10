//! Fubini-Study geometry of a parametrized state family.
//!
//! The overlap matrix of state derivatives splits as
//! ⟨∂_iψ, ∂_jψ⟩ = γ_ij + i σ_ij, and β_i = -i⟨ψ, ∂_iψ⟩ is real for a
//! normalized family. The combination g = γ - β βᵀ is invariant under
//! λ-dependent phase changes ψ ↦ e^{iα(λ)}ψ and is the metric this module
//! exposes; γ and β individually are gauge covariants, carried along so the
//! transformation behavior itself can be inspected.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::family::{HamiltonianFamily, StateJet};
use crate::qmath::{solve_real, CVec, C64};

/// FD step scale for metric derivatives inside [`christoffel`].
pub const METRIC_STEP: f64 = 1e-4;

/// Pieces of the quantum geometric tensor at one point, all real-valued.
#[derive(Debug, Clone)]
pub struct QgtResult {
    /// Re ⟨∂_iψ, ∂_jψ⟩, symmetric.
    pub gamma: Array2<f64>,
    /// Im ⟨∂_iψ, ∂_jψ⟩, antisymmetric.
    pub sigma: Array2<f64>,
    /// -i ⟨ψ, ∂_iψ⟩.
    pub beta: Array1<f64>,
    /// Gauge-invariant metric γ - β βᵀ.
    pub metric: Array2<f64>,
}

fn inner(a: &CVec, b: &CVec) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Quantum geometric tensor of a state jet.
pub fn qgt(jet: &StateJet) -> QgtResult {
    let m = jet.dpsi.len();
    let mut gamma = Array2::zeros((m, m));
    let mut sigma = Array2::zeros((m, m));
    let mut beta = Array1::zeros(m);
    for i in 0..m {
        beta[i] = (-C64::new(0.0, 1.0) * inner(&jet.psi, &jet.dpsi[i])).re;
        for j in 0..m {
            let o = inner(&jet.dpsi[i], &jet.dpsi[j]);
            gamma[[i, j]] = o.re;
            sigma[[i, j]] = o.im;
        }
    }
    let mut metric = gamma.clone();
    for i in 0..m {
        for j in 0..m {
            metric[[i, j]] -= beta[i] * beta[j];
        }
    }
    QgtResult {
        gamma,
        sigma,
        beta,
        metric,
    }
}

/// Squared Fubini-Study speed λ'ᵀ g λ' of a parameter velocity.
pub fn fs_speed_squared(jet: &StateJet, velocity: &[f64]) -> Result<f64> {
    let m = jet.dpsi.len();
    if velocity.len() != m {
        return Err(Error::DimMismatch {
            context: format!("velocity has {} entries, jet has {m}", velocity.len()),
        });
    }
    let g = qgt(jet).metric;
    let mut s = 0.0;
    for i in 0..m {
        for j in 0..m {
            s += velocity[i] * g[[i, j]] * velocity[j];
        }
    }
    Ok(s)
}

/// Fubini-Study speed, the square root of [`fs_speed_squared`] clamped at zero.
pub fn fs_speed(jet: &StateJet, velocity: &[f64]) -> Result<f64> {
    Ok(fs_speed_squared(jet, velocity)?.max(0.0).sqrt())
}

/// The same squared speed computed projectively:
/// ⟨ψ', (1 - |ψ⟩⟨ψ|) ψ'⟩ with ψ' = Σ_μ λ'_μ ∂_μψ.
///
/// Agrees with [`fs_speed_squared`] identically; kept as an independent route
/// for cross-checking since it never forms γ, β, or g.
pub fn fs_speed_squared_projective(jet: &StateJet, velocity: &[f64]) -> Result<f64> {
    let m = jet.dpsi.len();
    if velocity.len() != m {
        return Err(Error::DimMismatch {
            context: format!("velocity has {} entries, jet has {m}", velocity.len()),
        });
    }
    let d = jet.psi.len();
    let mut dpsi_dt: CVec = Array1::zeros(d);
    for (v, dp) in velocity.iter().zip(&jet.dpsi) {
        dpsi_dt = dpsi_dt + dp.mapv(|z| z * *v);
    }
    let overlap = inner(&jet.psi, &dpsi_dt);
    Ok((inner(&dpsi_dt, &dpsi_dt) - overlap.conj() * overlap).re)
}

/// Apply the phase change ψ ↦ e^{iα}ψ to a jet, given the local phase value
/// and its parameter gradient: ∂_μψ̃ = e^{iα}(i (∂_μα) ψ + ∂_μψ).
pub fn gauge_transformed_jet(jet: &StateJet, alpha: f64, dalpha: &[f64]) -> Result<StateJet> {
    let m = jet.dpsi.len();
    if dalpha.len() != m {
        return Err(Error::DimMismatch {
            context: format!("phase gradient has {} entries, jet has {m}", dalpha.len()),
        });
    }
    let phase = C64::new(0.0, alpha).exp();
    let psi = jet.psi.mapv(|z| z * phase);
    let dpsi = jet
        .dpsi
        .iter()
        .zip(dalpha.iter())
        .map(|(dp, &da)| {
            let shift = jet.psi.mapv(|z| z * C64::new(0.0, da));
            (dp + &shift).mapv(|z| z * phase)
        })
        .collect();
    Ok(StateJet { psi, dpsi })
}

/// Metric of a family at a parameter point.
pub fn metric_at(family: &HamiltonianFamily, lambda: &[f64]) -> Result<Array2<f64>> {
    Ok(qgt(&family.state_jet(lambda)?).metric)
}

/// Christoffel symbols Γ^a_{bc} = ½ g^{ad} (∂_b g_{dc} + ∂_c g_{db} - ∂_d g_{bc})
/// of an arbitrary metric field, by central differences with step
/// [`METRIC_STEP`] · max(1, |λ_d|) per coordinate.
///
/// Returned as one m×m matrix per upper index a, each symmetric in (b, c).
pub fn christoffel<F>(metric: F, lambda: &[f64]) -> Result<Vec<Array2<f64>>>
where
    F: Fn(&[f64]) -> Result<Array2<f64>>,
{
    Ok(metric_and_christoffel(metric, lambda)?.1)
}

/// [`christoffel`] together with the metric at the same point, sharing the
/// center evaluation.
pub fn metric_and_christoffel<F>(
    metric: F,
    lambda: &[f64],
) -> Result<(Array2<f64>, Vec<Array2<f64>>)>
where
    F: Fn(&[f64]) -> Result<Array2<f64>>,
{
    let m = lambda.len();
    let g0 = metric(lambda)?;
    if g0.nrows() != m || g0.ncols() != m {
        return Err(Error::DimMismatch {
            context: format!(
                "metric is {}x{}, parameter space has dimension {m}",
                g0.nrows(),
                g0.ncols()
            ),
        });
    }
    // dg[d][[i, j]] = ∂_d g_ij
    let mut dg = Vec::with_capacity(m);
    let mut probe = lambda.to_vec();
    for d in 0..m {
        let h = METRIC_STEP * lambda[d].abs().max(1.0);
        probe[d] = lambda[d] + h;
        let plus = metric(&probe)?;
        probe[d] = lambda[d] - h;
        let minus = metric(&probe)?;
        probe[d] = lambda[d];
        dg.push((&plus - &minus).mapv(|v| v / (2.0 * h)));
    }
    // Lowered symbols as columns, then one solve against g per (b, c) pair.
    let mut rhs = Array2::zeros((m, m * (m + 1) / 2));
    let mut col = 0;
    for b in 0..m {
        for c in b..m {
            for d in 0..m {
                rhs[[d, col]] = 0.5 * (dg[b][[d, c]] + dg[c][[d, b]] - dg[d][[b, c]]);
            }
            col += 1;
        }
    }
    let x = solve_real(&g0, &rhs)?;
    let mut out = vec![Array2::zeros((m, m)); m];
    let mut col = 0;
    for b in 0..m {
        for c in b..m {
            for a in 0..m {
                out[a][[b, c]] = x[[a, col]];
                out[a][[c, b]] = x[[a, col]];
            }
            col += 1;
        }
    }
    Ok((g0, out))
}
