//! Parametrized families of pure states ψ(λ) = exp(iH(λ)) |Ω⟩ with
//! H(λ) = Σ_μ λ_μ G_μ for fixed Hermitian generators G_μ.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::qmath::{
    self, exp_i_hermitian, frechet_exp_i, pauli_string, require_hermitian, CMat, CVec, C64,
    DEFAULT_DIM_LIMIT, STATE_TOL,
};

/// A state together with its first derivatives along every parameter direction.
#[derive(Debug, Clone)]
pub struct StateJet {
    pub psi: CVec,
    /// dpsi[mu] = ∂ψ/∂λ_mu.
    pub dpsi: Vec<CVec>,
}

/// Fixed reference state, fixed generator set, tensor-factor bookkeeping.
#[derive(Debug, Clone)]
pub struct HamiltonianFamily {
    generators: Vec<CMat>,
    reference: CVec,
    dims: Vec<usize>,
}

impl HamiltonianFamily {
    /// Validates shapes, hermiticity (generators are stored symmetrized), the
    /// tensor factorization, and normalization of the reference state.
    pub fn new(generators: Vec<CMat>, reference: CVec, dims: Vec<usize>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::Invalid {
                context: "at least one generator is required".into(),
            });
        }
        let d = reference.len();
        if d > DEFAULT_DIM_LIMIT {
            return Err(Error::DimensionLimit {
                dim: d,
                limit: DEFAULT_DIM_LIMIT,
            });
        }
        if dims.is_empty() || dims.iter().any(|&f| f < 2) {
            return Err(Error::BadFactorization {
                context: format!("factor dimensions must all be >= 2, got {dims:?}"),
            });
        }
        if dims.iter().product::<usize>() != d {
            return Err(Error::BadFactorization {
                context: format!(
                    "factors {dims:?} do not multiply to the state dimension {d}"
                ),
            });
        }
        let norm = reference.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::NotNormalized { norm });
        }
        let generators = generators
            .into_iter()
            .enumerate()
            .map(|(mu, g)| {
                if g.nrows() != d || g.ncols() != d {
                    return Err(Error::DimMismatch {
                        context: format!(
                            "generator {mu} is {}x{}, state dimension is {d}",
                            g.nrows(),
                            g.ncols()
                        ),
                    });
                }
                require_hermitian(&g)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            generators,
            reference,
            dims,
        })
    }

    /// Two-parameter, two-qubit family H(θ, φ) = θ X⊗X + φ Z⊗Z acting on the
    /// reference (|00⟩ + |01⟩)/√2. Used as the standard benchmark throughout.
    pub fn two_qubit_xx_zz() -> Self {
        let inv = C64::new(1.0 / 2.0_f64.sqrt(), 0.0);
        let mut omega: CVec = Array1::zeros(4);
        omega[0] = inv;
        omega[1] = inv;
        Self::new(
            vec![pauli_string("XX").unwrap(), pauli_string("ZZ").unwrap()],
            omega,
            vec![2, 2],
        )
        .expect("benchmark family is well formed")
    }

    pub fn dim(&self) -> usize {
        self.reference.len()
    }

    /// Number of parameters (generators).
    pub fn num_params(&self) -> usize {
        self.generators.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn reference(&self) -> &CVec {
        &self.reference
    }

    pub fn generators(&self) -> &[CMat] {
        &self.generators
    }

    fn check_lambda(&self, lambda: &[f64]) -> Result<()> {
        if lambda.len() != self.num_params() {
            return Err(Error::DimMismatch {
                context: format!(
                    "lambda has {} entries, family has {} parameters",
                    lambda.len(),
                    self.num_params()
                ),
            });
        }
        Ok(())
    }

    /// H(λ) = Σ_mu λ_mu G_mu.
    pub fn hamiltonian_at(&self, lambda: &[f64]) -> Result<CMat> {
        self.check_lambda(lambda)?;
        let d = self.dim();
        let mut h: CMat = Array2::zeros((d, d));
        for (coef, g) in lambda.iter().zip(&self.generators) {
            h = h + g.mapv(|z| z * *coef);
        }
        Ok(h)
    }

    /// ψ(λ) = exp(iH(λ)) |Ω⟩.
    pub fn state(&self, lambda: &[f64]) -> Result<CVec> {
        let u = exp_i_hermitian(&self.hamiltonian_at(lambda)?)?;
        Ok(u.dot(&self.reference))
    }

    /// State and all first derivatives. ∂_mu ψ applies the derivative of the
    /// exponential map along G_mu to the reference state.
    pub fn state_jet(&self, lambda: &[f64]) -> Result<StateJet> {
        let h = self.hamiltonian_at(lambda)?;
        let psi = exp_i_hermitian(&h)?.dot(&self.reference);
        let dpsi = self
            .generators
            .iter()
            .map(|g| Ok(frechet_exp_i(&h, g)?.dot(&self.reference)))
            .collect::<Result<Vec<_>>>()?;
        Ok(StateJet { psi, dpsi })
    }

    /// ρ(λ) = |ψ⟩⟨ψ| as a dense matrix.
    pub fn density(&self, lambda: &[f64]) -> Result<CMat> {
        Ok(qmath::pure_density(&self.state(lambda)?))
    }
}
