//! Least-action paths of parametrized unitary evolution on the pure-state manifold.
//!
//! A family of states ψ(λ) = exp(iH(λ))|Ω⟩ with H(λ) = Σ_μ λ_μ G_μ is driven along a
//! curve λ(s), s ∈ [0,1], between fixed endpoints. The action integrates a kinetic
//! term (the Fubini-Study speed, or its square) against a resource potential:
//! linear-entropy entanglement, anti-flatness of the reduced spectrum, or 2-norm
//! coherence. The crate finds stationary paths and the resources accumulated
//! along them.
//!
//! Layout:
//! - [`qmath`]: dense complex matrix kernels (Kronecker products, partial trace,
//!   Hermitian exponential and its directional derivative, dephasing, Pauli strings).
//! - [`family`]: Hamiltonian families and first-order state jets.
//! - [`resource`]: the scalar resource functionals and potential gradients.
//! - [`geometry`]: quantum geometric tensor, Fubini-Study speed, Christoffel symbols.
//! - [`solver`]: action evaluation, Euler-Lagrange residuals, direct transcription
//!   and shooting solvers, accumulated-resource quadrature.

pub mod error;
pub mod family;
pub mod geometry;
pub mod resource;
pub mod solver;
pub mod qmath;

pub use error::{Error, Result};
