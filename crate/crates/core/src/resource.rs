//! Resource potentials evaluated on pure states: linear-entropy entanglement,
//! anti-flatness of the reduced spectrum, and 2-norm coherence.
//!
//! Each potential also exists as a function of the path parameter through a
//! [`HamiltonianFamily`], with gradients taken by central differences; the
//! potentials are smooth in λ, so the O(h²) stencil with h ~ 1e-5 sits
//! comfortably between truncation and roundoff error.

use crate::error::{Error, Result};
use crate::family::HamiltonianFamily;
use crate::qmath::{
    computational_projectors, dephase, partial_trace, pure_density, purity, CMat, CVec,
};

/// Base step for potential gradients; scaled per coordinate by max(1, |λ_mu|).
pub const GRAD_STEP: f64 = 1e-5;

/// Linear entropy 1 - tr[ρ_keep²] of the reduction onto the `keep` factors.
pub fn entanglement(psi: &CVec, dims: &[usize], keep: &[usize]) -> Result<f64> {
    let red = partial_trace(&pure_density(psi), dims, keep)?;
    Ok(1.0 - purity(&red))
}

/// tr[ρ³] - (tr[ρ²])² of the reduced state: zero exactly when the nonzero
/// reduced spectrum is flat (product and maximally entangled states alike).
pub fn antiflatness(psi: &CVec, dims: &[usize], keep: &[usize]) -> Result<f64> {
    let red = partial_trace(&pure_density(psi), dims, keep)?;
    let sq = red.dot(&red);
    let tr2 = purity(&red);
    let d = red.nrows();
    let mut tr3 = 0.0;
    for i in 0..d {
        for j in 0..d {
            tr3 += (sq[[i, j]] * red[[j, i]]).re;
        }
    }
    Ok(tr3 - tr2 * tr2)
}

/// 1 - tr[Δ(ρ)²] where Δ removes coherences relative to the projector basis.
pub fn coherence(psi: &CVec, projectors: &[CMat]) -> Result<f64> {
    let dephased = dephase(&pure_density(psi), projectors)?;
    Ok(1.0 - purity(&dephased))
}

/// Which potential term the action carries.
#[derive(Debug, Clone)]
pub enum PotentialSpec {
    /// Free motion, V = 0.
    None,
    /// Linear-entropy entanglement across the bipartition given by `keep`.
    Entanglement { keep: Vec<usize> },
    /// Anti-flatness of the reduction onto `keep`.
    Antiflatness { keep: Vec<usize> },
    /// 2-norm coherence relative to a complete rank-1 projector basis.
    Coherence { projectors: Vec<CMat> },
}

impl PotentialSpec {
    /// Coherence relative to the computational basis of dimension `d`.
    pub fn coherence_computational(d: usize) -> Self {
        Self::Coherence {
            projectors: computational_projectors(d),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Entanglement { .. } => "entanglement",
            Self::Antiflatness { .. } => "antiflatness",
            Self::Coherence { .. } => "coherence",
        }
    }

    /// V(λ) evaluated through the family.
    pub fn value(&self, family: &HamiltonianFamily, lambda: &[f64]) -> Result<f64> {
        match self {
            Self::None => Ok(0.0),
            _ => self.value_at_state(&family.state(lambda)?, family.dims()),
        }
    }

    /// V(ψ) for an already-computed state (saves the exponential when the
    /// caller holds one).
    pub fn value_at_state(&self, psi: &CVec, dims: &[usize]) -> Result<f64> {
        match self {
            Self::None => Ok(0.0),
            Self::Entanglement { keep } => entanglement(psi, dims, keep),
            Self::Antiflatness { keep } => antiflatness(psi, dims, keep),
            Self::Coherence { projectors } => coherence(psi, projectors),
        }
    }

    /// ∇V(λ) by central differences, one coordinate at a time.
    pub fn gradient(&self, family: &HamiltonianFamily, lambda: &[f64]) -> Result<Vec<f64>> {
        let m = lambda.len();
        if matches!(self, Self::None) {
            if m != family.num_params() {
                return Err(Error::DimMismatch {
                    context: format!(
                        "lambda has {m} entries, family has {} parameters",
                        family.num_params()
                    ),
                });
            }
            return Ok(vec![0.0; m]);
        }
        let mut grad = vec![0.0; m];
        let mut probe = lambda.to_vec();
        for mu in 0..m {
            let h = GRAD_STEP * lambda[mu].abs().max(1.0);
            probe[mu] = lambda[mu] + h;
            let plus = self.value(family, &probe)?;
            probe[mu] = lambda[mu] - h;
            let minus = self.value(family, &probe)?;
            probe[mu] = lambda[mu];
            grad[mu] = (plus - minus) / (2.0 * h);
        }
        Ok(grad)
    }
}
