//! Dense complex matrix kernels sized for few-qubit work.
//!
//! Everything here operates on `ndarray` storage with `Complex64` entries. Dimensions
//! are small by contract (the Kronecker limit defaults to 64), so the kernels favor
//! clarity and exactness over asymptotic cleverness: eigendecomposition is a cyclic
//! Jacobi iteration, the general exponential is Padé 13 with scaling and squaring,
//! and the partial trace walks mixed-radix indices directly.
//!
//! Hermiticity policy: deviations up to [`HERM_REPAIR_LIMIT`] are repaired by
//! replacing A with (A + A†)/2 (a warning is logged above [`HERM_WARN_LIMIT`]);
//! larger deviations are hard errors. This tolerates accumulated roundoff without
//! hiding genuinely non-Hermitian inputs.

mod eig;
mod expm;

pub use eig::hermitian_eig;
pub use expm::{expm, solve_lu, solve_lu_vec, solve_real};

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
/// Dense complex matrix.
pub type CMat = Array2<C64>;
/// Dense complex vector.
pub type CVec = Array1<C64>;

/// Largest Hilbert-space dimension `kron` will produce by default.
pub const DEFAULT_DIM_LIMIT: usize = 64;
/// Hermiticity deviation above which inputs are rejected.
pub const HERM_REPAIR_LIMIT: f64 = 1e-8;
/// Hermiticity deviation above which the repair is logged.
pub const HERM_WARN_LIMIT: f64 = 1e-10;
/// Trace / normalization / projector validation tolerance.
pub const STATE_TOL: f64 = 1e-10;

pub fn identity(d: usize) -> CMat {
    Array2::from_diag_elem(d, C64::new(1.0, 0.0))
}

/// Conjugate transpose.
pub fn dagger(a: &CMat) -> CMat {
    a.t().mapv(|z| z.conj())
}

pub fn trace(a: &CMat) -> C64 {
    a.diag().sum()
}

/// max_ij |A_ij - conj(A_ji)|
pub fn herm_deviation(a: &CMat) -> f64 {
    let d = a.nrows();
    let mut dev: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            dev = dev.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    dev
}

pub(crate) fn check_square(a: &CMat) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(a.nrows())
}

/// Validate hermiticity and return the symmetrized matrix (A + A†)/2.
///
/// See the module docs for the repair-vs-reject policy.
pub fn require_hermitian(a: &CMat) -> Result<CMat> {
    check_square(a)?;
    let dev = herm_deviation(a);
    if dev > HERM_REPAIR_LIMIT {
        return Err(Error::NotHermitian {
            deviation: dev,
            limit: HERM_REPAIR_LIMIT,
        });
    }
    if dev > HERM_WARN_LIMIT {
        log::warn!("symmetrizing input with hermiticity deviation {dev:.3e}");
    }
    let adj = dagger(a);
    Ok((a + &adj).mapv(|z| 0.5 * z))
}

/// Kronecker product with the first factor most significant, capped at
/// [`DEFAULT_DIM_LIMIT`].
pub fn kron(a: &CMat, b: &CMat) -> Result<CMat> {
    kron_with_limit(a, b, DEFAULT_DIM_LIMIT)
}

/// Kronecker product with an explicit output-dimension cap.
pub fn kron_with_limit(a: &CMat, b: &CMat, limit: usize) -> Result<CMat> {
    let (ra, ca) = (a.nrows(), a.ncols());
    let (rb, cb) = (b.nrows(), b.ncols());
    let rows = ra.checked_mul(rb).ok_or(Error::DimensionLimit {
        dim: usize::MAX,
        limit,
    })?;
    let cols = ca * cb;
    if rows.max(cols) > limit {
        return Err(Error::DimensionLimit {
            dim: rows.max(cols),
            limit,
        });
    }
    let mut out = Array2::zeros((rows, cols));
    for i1 in 0..ra {
        for j1 in 0..ca {
            let aij = a[[i1, j1]];
            for i2 in 0..rb {
                for j2 in 0..cb {
                    out[[i1 * rb + i2, j1 * cb + j2]] = aij * b[[i2, j2]];
                }
            }
        }
    }
    Ok(out)
}

fn validate_factorization(dim: usize, dims: &[usize]) -> Result<()> {
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(Error::BadFactorization {
            context: format!("factor dimensions must all be >= 2, got {dims:?}"),
        });
    }
    let prod: usize = dims.iter().product();
    if prod != dim {
        return Err(Error::BadFactorization {
            context: format!("factors {dims:?} multiply to {prod}, matrix dimension is {dim}"),
        });
    }
    Ok(())
}

/// Trace out every tensor factor not listed in `keep`.
///
/// `dims` are the factor dimensions ordered most-significant first (matching
/// [`kron`]); `keep` must be a strictly increasing, non-empty, proper-or-full
/// subset of factor indices. `rho` must be Hermitian with unit trace.
pub fn partial_trace(rho: &CMat, dims: &[usize], keep: &[usize]) -> Result<CMat> {
    let d = check_square(rho)?;
    validate_factorization(d, dims)?;
    if keep.is_empty() {
        return Err(Error::BadFactorization {
            context: "keep set is empty".into(),
        });
    }
    if keep.windows(2).any(|w| w[0] >= w[1]) || *keep.last().unwrap() >= dims.len() {
        return Err(Error::BadFactorization {
            context: format!(
                "keep set {keep:?} must be strictly increasing with entries < {}",
                dims.len()
            ),
        });
    }
    let rho = require_hermitian(rho)?;
    let tr = trace(&rho);
    if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
        return Err(Error::BadTrace {
            trace: tr.re,
            tol: STATE_TOL,
        });
    }

    let kept: Vec<usize> = keep.to_vec();
    let traced: Vec<usize> = (0..dims.len()).filter(|f| !kept.contains(f)).collect();
    let dk: usize = kept.iter().map(|&f| dims[f]).product();
    let dt: usize = traced.iter().map(|&f| dims[f]).product();

    // Strides of each factor inside the full row-major index.
    let mut strides = vec![1usize; dims.len()];
    for f in (0..dims.len().saturating_sub(1)).rev() {
        strides[f] = strides[f + 1] * dims[f + 1];
    }
    // Global index from a mixed-radix sub-index over the given factor list.
    let compose = |factors: &[usize], mut sub: usize| -> usize {
        let mut idx = 0;
        for &f in factors.iter().rev() {
            idx += (sub % dims[f]) * strides[f];
            sub /= dims[f];
        }
        idx
    };

    let mut out = Array2::zeros((dk, dk));
    for k1 in 0..dk {
        let base1 = compose(&kept, k1);
        for k2 in 0..dk {
            let base2 = compose(&kept, k2);
            let mut acc = C64::new(0.0, 0.0);
            for t in 0..dt {
                let off = compose(&traced, t);
                acc += rho[[base1 + off, base2 + off]];
            }
            out[[k1, k2]] = acc;
        }
    }
    Ok(out)
}

/// Unitary exp(iH) of a Hermitian matrix, through its eigendecomposition.
pub fn exp_i_hermitian(h: &CMat) -> Result<CMat> {
    let h = require_hermitian(h)?;
    let (vals, vecs) = hermitian_eig(&h)?;
    let d = vals.len();
    let mut core = Array2::zeros((d, d));
    for (j, &v) in vals.iter().enumerate() {
        let phase = C64::new(0.0, v).exp();
        for i in 0..d {
            core[[i, j]] = vecs[[i, j]] * phase;
        }
    }
    Ok(core.dot(&dagger(&vecs)))
}

/// Directional derivative of H ↦ exp(iH) at `h` along `e`:
/// d/dt exp(i(H + tE)) at t = 0.
///
/// Computed from the block identity
/// exp(i [[H, E], [0, H]]) = [[exp(iH), D], [0, exp(iH)]],
/// which sidesteps the degenerate-eigenvalue case of the eigenbasis
/// divided-difference formula (that formula is kept as a test oracle).
pub fn frechet_exp_i(h: &CMat, e: &CMat) -> Result<CMat> {
    let d = check_square(h)?;
    let h = require_hermitian(h)?;
    if e.nrows() != d || e.ncols() != d {
        return Err(Error::DimMismatch {
            context: format!(
                "direction is {}x{}, matrix is {d}x{d}",
                e.nrows(),
                e.ncols()
            ),
        });
    }
    let i = C64::new(0.0, 1.0);
    let mut block: CMat = Array2::zeros((2 * d, 2 * d));
    for r in 0..d {
        for c in 0..d {
            block[[r, c]] = i * h[[r, c]];
            block[[r + d, c + d]] = i * h[[r, c]];
            block[[r, c + d]] = i * e[[r, c]];
        }
    }
    let big = expm(&block);
    Ok(big.slice(ndarray::s![0..d, d..2 * d]).to_owned())
}

/// Remove all off-diagonal structure relative to a complete orthonormal set of
/// rank-1 projectors: rho ↦ Σ_k χ_k rho χ_k.
pub fn dephase(rho: &CMat, projectors: &[CMat]) -> Result<CMat> {
    let d = check_square(rho)?;
    let rho = require_hermitian(rho)?;
    validate_projectors(projectors, d)?;
    let mut out = Array2::zeros((d, d));
    for p in projectors {
        out = out + p.dot(&rho).dot(p);
    }
    Ok(out)
}

fn validate_projectors(projectors: &[CMat], d: usize) -> Result<()> {
    if projectors.len() != d {
        return Err(Error::BadProjectors {
            context: format!("need {d} rank-1 projectors, got {}", projectors.len()),
        });
    }
    let mut sum: CMat = Array2::zeros((d, d));
    for (k, p) in projectors.iter().enumerate() {
        if p.nrows() != d || p.ncols() != d {
            return Err(Error::BadProjectors {
                context: format!("projector {k} is {}x{}, need {d}x{d}", p.nrows(), p.ncols()),
            });
        }
        if herm_deviation(p) > STATE_TOL {
            return Err(Error::BadProjectors {
                context: format!("projector {k} is not Hermitian"),
            });
        }
        let idem = (&p.dot(p) - p).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if idem > STATE_TOL {
            return Err(Error::BadProjectors {
                context: format!("projector {k} is not idempotent (deviation {idem:.3e})"),
            });
        }
        let tr = trace(p);
        if (tr - C64::new(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::BadProjectors {
                context: format!("projector {k} has trace {tr}, need 1 (rank 1)"),
            });
        }
        sum += p;
    }
    let dev = (&sum - &identity(d))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if dev > STATE_TOL {
        return Err(Error::BadProjectors {
            context: format!("projectors do not resolve the identity (deviation {dev:.3e})"),
        });
    }
    Ok(())
}

/// The computational dephasing basis: |k⟩⟨k| for k = 0..d.
pub fn computational_projectors(d: usize) -> Vec<CMat> {
    (0..d)
        .map(|k| {
            let mut p = Array2::zeros((d, d));
            p[[k, k]] = C64::new(1.0, 0.0);
            p
        })
        .collect()
}

/// Rank-1 projectors |v⟩⟨v| built from orthonormal basis vectors.
pub fn projectors_from_vectors(vectors: &[CVec]) -> Result<Vec<CMat>> {
    let projs: Vec<CMat> = vectors
        .iter()
        .map(|v| {
            let d = v.len();
            let mut p = Array2::zeros((d, d));
            for i in 0..d {
                for j in 0..d {
                    p[[i, j]] = v[i] * v[j].conj();
                }
            }
            p
        })
        .collect();
    if let Some(v) = vectors.first() {
        validate_projectors(&projs, v.len())?;
    } else {
        return Err(Error::BadProjectors {
            context: "empty basis".into(),
        });
    }
    Ok(projs)
}

fn pauli_1q(c: char) -> Result<CMat> {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    let m = match c {
        'I' => vec![one, z, z, one],
        'X' => vec![z, one, one, z],
        'Y' => vec![z, -i, i, z],
        'Z' => vec![one, z, z, -one],
        _ => {
            return Err(Error::Invalid {
                context: format!("unknown Pauli letter {c:?}; expected I, X, Y or Z"),
            })
        }
    };
    Ok(Array2::from_shape_vec((2, 2), m).expect("2x2 shape"))
}

/// Expand a Pauli string like "XX" or "IZY" into its 2^n-dimensional matrix,
/// first letter most significant.
pub fn pauli_string(s: &str) -> Result<CMat> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Invalid {
            context: "empty Pauli string".into(),
        });
    }
    let mut chars = s.chars();
    let mut acc = pauli_1q(chars.next().unwrap())?;
    for c in chars {
        acc = kron(&acc, &pauli_1q(c)?)?;
    }
    Ok(acc)
}

/// tr[rho^2] of a Hermitian matrix.
pub fn purity(rho: &CMat) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// Outer product |ψ⟩⟨ψ|.
pub fn pure_density(psi: &CVec) -> CMat {
    let d = psi.len();
    let mut rho = Array2::zeros((d, d));
    for i in 0..d {
        for j in 0..d {
            rho[[i, j]] = psi[i] * psi[j].conj();
        }
    }
    rho
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    pub(crate) fn random_hermitian(d: usize, rng: &mut impl Rng) -> CMat {
        let mut a: CMat = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                a[[i, j]] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let adj = dagger(&a);
        (a + adj).mapv(|z| 0.5 * z)
    }

    pub(crate) fn random_state(d: usize, rng: &mut impl Rng) -> CVec {
        let mut v: CVec = Array1::zeros(d);
        for i in 0..d {
            v[i] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.mapv(|z| z / n)
    }

    fn max_abs(a: &CMat) -> f64 {
        a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    // Brute-force Kronecker oracle straight from the index formula.
    fn kron_oracle(a: &CMat, b: &CMat) -> CMat {
        let (ra, ca) = (a.nrows(), a.ncols());
        let (rb, cb) = (b.nrows(), b.ncols());
        let mut out = Array2::zeros((ra * rb, ca * cb));
        for i in 0..ra * rb {
            for j in 0..ca * cb {
                out[[i, j]] = a[[i / rb, j / cb]] * b[[i % rb, j % cb]];
            }
        }
        out
    }

    #[test]
    fn kron_identity_pair() {
        let id2 = identity(2);
        assert_eq!(kron(&id2, &id2).unwrap(), identity(4));
    }

    #[test]
    fn kron_pauli_values() {
        let zz = pauli_string("ZZ").unwrap();
        for (k, want) in [1.0, -1.0, -1.0, 1.0].into_iter().enumerate() {
            assert_eq!(zz[[k, k]], C64::new(want, 0.0));
        }
        let xx = pauli_string("XX").unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i + j == 3 { 1.0 } else { 0.0 };
                assert_eq!(xx[[i, j]], C64::new(want, 0.0));
            }
        }
    }

    #[test]
    fn kron_matches_index_oracle_and_associates() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let a = random_hermitian(2, &mut rng);
            let b = random_hermitian(3, &mut rng);
            let c = random_hermitian(2, &mut rng);
            let ab = kron(&a, &b).unwrap();
            assert!(max_abs(&(&ab - &kron_oracle(&a, &b))) < 1e-15);
            let left = kron(&ab, &c).unwrap();
            let right = kron(&a, &kron(&b, &c).unwrap()).unwrap();
            assert!(max_abs(&(&left - &right)) < 1e-14);
        }
    }

    #[test]
    fn kron_respects_dimension_limit() {
        let id8 = identity(8);
        let err = kron(&id8, &identity(16)).unwrap_err();
        assert!(matches!(err, Error::DimensionLimit { dim: 128, .. }));
        assert!(kron_with_limit(&id8, &identity(16), 128).is_ok());
    }

    #[test]
    fn partial_trace_of_a_product_projector() {
        // |00><00| reduced to the first factor is |0><0|.
        let mut rho: CMat = Array2::zeros((4, 4));
        rho[[0, 0]] = C64::new(1.0, 0.0);
        let red = partial_trace(&rho, &[2, 2], &[0]).unwrap();
        assert!((red[[0, 0]] - C64::new(1.0, 0.0)).norm() < TOL);
        assert!(red[[1, 1]].norm() < TOL);
    }

    #[test]
    fn partial_trace_of_bell_is_maximally_mixed() {
        let inv = 1.0 / 2.0_f64.sqrt();
        let mut psi: CVec = Array1::zeros(4);
        psi[0] = C64::new(inv, 0.0);
        psi[3] = C64::new(inv, 0.0);
        let mut rho: CMat = Array2::zeros((4, 4));
        for i in 0..4 {
            for j in 0..4 {
                rho[[i, j]] = psi[i] * psi[j].conj();
            }
        }
        for keep in [[0usize], [1usize]] {
            let red = partial_trace(&rho, &[2, 2], &keep).unwrap();
            assert!(max_abs(&(&red - &identity(2).mapv(|z| 0.5 * z))) < TOL);
            assert_abs_diff_eq!(purity(&red), 0.5, epsilon = TOL);
        }
    }

    #[test]
    fn partial_trace_preserves_trace_and_hermiticity() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let psi = random_state(12, &mut rng);
            let mut rho: CMat = Array2::zeros((12, 12));
            for i in 0..12 {
                for j in 0..12 {
                    rho[[i, j]] = psi[i] * psi[j].conj();
                }
            }
            let red = partial_trace(&rho, &[2, 3, 2], &[1]).unwrap();
            assert!((trace(&red) - C64::new(1.0, 0.0)).norm() < 1e-12);
            assert!(herm_deviation(&red) < 1e-12);
            assert!(purity(&red) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_inputs() {
        let rho = identity(4).mapv(|z| 0.25 * z);
        assert!(matches!(
            partial_trace(&rho, &[2, 3], &[0]),
            Err(Error::BadFactorization { .. })
        ));
        assert!(matches!(
            partial_trace(&rho, &[2, 2], &[]),
            Err(Error::BadFactorization { .. })
        ));
        assert!(matches!(
            partial_trace(&rho, &[2, 2], &[1, 0]),
            Err(Error::BadFactorization { .. })
        ));
        let bad_trace = identity(4);
        assert!(matches!(
            partial_trace(&bad_trace, &[2, 2], &[0]),
            Err(Error::BadTrace { .. })
        ));
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let z: CMat = Array2::zeros((3, 3));
        assert!(max_abs(&(&exp_i_hermitian(&z).unwrap() - &identity(3))) < TOL);
    }

    #[test]
    fn exp_of_half_pi_z() {
        let z = pauli_string("Z").unwrap();
        let u = exp_i_hermitian(&z.mapv(|v| v * std::f64::consts::FRAC_PI_2)).unwrap();
        assert!((u[[0, 0]] - C64::new(0.0, 1.0)).norm() < TOL);
        assert!((u[[1, 1]] - C64::new(0.0, -1.0)).norm() < TOL);
        assert!(u[[0, 1]].norm() < TOL && u[[1, 0]].norm() < TOL);
    }

    // Power-series oracle, valid for the small norms used in tests.
    fn exp_i_series(h: &CMat) -> CMat {
        let d = h.nrows();
        let ih = h.mapv(|z| C64::new(0.0, 1.0) * z);
        let mut term = identity(d);
        let mut sum = identity(d);
        for k in 1..60 {
            term = term.dot(&ih).mapv(|z| z / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn exp_matches_power_series() {
        let x = pauli_string("X").unwrap();
        let u = exp_i_hermitian(&x.mapv(|v| v * 0.3)).unwrap();
        let want = exp_i_series(&x.mapv(|v| v * 0.3));
        assert!(max_abs(&(&u - &want)) < TOL);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for d in [2usize, 4, 6] {
            let h = random_hermitian(d, &mut rng);
            let u = exp_i_hermitian(&h).unwrap();
            assert!(max_abs(&(&u - &exp_i_series(&h))) < 1e-12);
        }
    }

    #[test]
    fn exp_is_unitary_for_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for d in [2usize, 3, 4, 8] {
            for _ in 0..10 {
                let h = random_hermitian(d, &mut rng).mapv(|z| z * 3.0);
                let u = exp_i_hermitian(&h).unwrap();
                assert!(max_abs(&(&u.dot(&dagger(&u)) - &identity(d))) < 1e-12);
            }
        }
    }

    #[test]
    fn hermiticity_policy_repairs_small_and_rejects_large() {
        let mut h = pauli_string("X").unwrap();
        h[[0, 1]] += C64::new(0.0, 1e-9); // within repair range
        assert!(exp_i_hermitian(&h).is_ok());
        h[[0, 1]] += C64::new(1e-6, 0.0); // too far gone
        assert!(matches!(
            exp_i_hermitian(&h),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn frechet_at_zero_matrix_is_i_times_direction() {
        let z: CMat = Array2::zeros((4, 4));
        let e = pauli_string("XZ").unwrap();
        let d = frechet_exp_i(&z, &e).unwrap();
        let want = e.mapv(|v| C64::new(0.0, 1.0) * v);
        assert!(max_abs(&(&d - &want)) < TOL);
    }

    #[test]
    fn frechet_along_zero_direction_vanishes() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let h = random_hermitian(4, &mut rng);
        let d = frechet_exp_i(&h, &Array2::zeros((4, 4))).unwrap();
        assert!(max_abs(&d) < TOL);
    }

    #[test]
    fn frechet_commuting_closed_form() {
        // H = t XX, E = XX commute: derivative is i XX exp(i t XX), and
        // exp(i t XX) = cos t + i sin t XX because XX squares to 1.
        let t = 0.4;
        let xx = pauli_string("XX").unwrap();
        let d = frechet_exp_i(&xx.mapv(|v| v * t), &xx).unwrap();
        let u = identity(4).mapv(|z| z * C64::new(t.cos(), 0.0))
            + xx.mapv(|v| v * C64::new(0.0, t.sin()));
        let want = xx.dot(&u).mapv(|z| C64::new(0.0, 1.0) * z);
        assert!(max_abs(&(&d - &want)) < TOL);
    }

    // Divided-difference (eigenbasis) oracle for the same derivative.
    fn frechet_eigenbasis_oracle(h: &CMat, e: &CMat) -> CMat {
        let (vals, vecs) = hermitian_eig(h).unwrap();
        let d = vals.len();
        let et = dagger(&vecs).dot(e).dot(&vecs);
        let mut phi = Array2::zeros((d, d));
        for a in 0..d {
            for b in 0..d {
                let (x, y) = (vals[a], vals[b]);
                phi[[a, b]] = if (x - y).abs() < 1e-9 {
                    C64::new(0.0, 1.0) * C64::new(0.0, x).exp()
                } else {
                    (C64::new(0.0, x).exp() - C64::new(0.0, y).exp()) / C64::new(x - y, 0.0)
                } * et[[a, b]];
            }
        }
        vecs.dot(&phi).dot(&dagger(&vecs))
    }

    #[test]
    fn frechet_matches_eigenbasis_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for d in [2usize, 4, 6] {
            for _ in 0..8 {
                let h = random_hermitian(d, &mut rng).mapv(|z| z * 2.0);
                let e = random_hermitian(d, &mut rng);
                let got = frechet_exp_i(&h, &e).unwrap();
                let want = frechet_eigenbasis_oracle(&h, &e);
                assert!(max_abs(&(&got - &want)) < 1e-11);
            }
        }
    }

    #[test]
    fn frechet_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for d in [2usize, 4, 8] {
            for _ in 0..6 {
                let h = random_hermitian(d, &mut rng).mapv(|z| z * 2.0);
                let e = random_hermitian(d, &mut rng);
                let got = frechet_exp_i(&h, &e).unwrap();
                let t = 1e-5;
                let plus = exp_i_hermitian(&(&h + &e.mapv(|z| z * t))).unwrap();
                let minus = exp_i_hermitian(&(&h - &e.mapv(|z| z * t))).unwrap();
                let fd = (&plus - &minus).mapv(|z| z / (2.0 * t));
                assert!(max_abs(&(&got - &fd)) < 1e-6);
            }
        }
    }

    #[test]
    fn dephase_fixes_diagonal_matrices() {
        let mut rho: CMat = Array2::zeros((3, 3));
        for (k, p) in [0.5, 0.3, 0.2].into_iter().enumerate() {
            rho[[k, k]] = C64::new(p, 0.0);
        }
        let out = dephase(&rho, &computational_projectors(3)).unwrap();
        assert!(max_abs(&(&out - &rho)) < TOL);
    }

    #[test]
    fn dephase_of_plus_state_is_maximally_mixed() {
        let mut rho: CMat = Array2::zeros((2, 2));
        for i in 0..2 {
            for j in 0..2 {
                rho[[i, j]] = C64::new(0.5, 0.0);
            }
        }
        let out = dephase(&rho, &computational_projectors(2)).unwrap();
        assert!(max_abs(&(&out - &identity(2).mapv(|z| 0.5 * z))) < TOL);
    }

    #[test]
    fn dephase_idempotent_and_purity_nonincreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..40 {
            let psi = random_state(4, &mut rng);
            let mut rho: CMat = Array2::zeros((4, 4));
            for i in 0..4 {
                for j in 0..4 {
                    rho[[i, j]] = psi[i] * psi[j].conj();
                }
            }
            let projs = computational_projectors(4);
            let once = dephase(&rho, &projs).unwrap();
            let twice = dephase(&once, &projs).unwrap();
            assert!(max_abs(&(&twice - &once)) < 1e-12);
            assert!(purity(&once) <= purity(&rho) + 1e-12);
            assert!((trace(&once) - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn dephase_rejects_incomplete_projectors() {
        let rho = identity(2).mapv(|z| 0.5 * z);
        let only_one = vec![computational_projectors(2).remove(0)];
        assert!(matches!(
            dephase(&rho, &only_one),
            Err(Error::BadProjectors { .. })
        ));
    }

    #[test]
    fn projectors_from_rotated_basis_are_accepted() {
        let inv = 1.0 / 2.0_f64.sqrt();
        let plus = Array1::from_vec(vec![C64::new(inv, 0.0), C64::new(inv, 0.0)]);
        let minus = Array1::from_vec(vec![C64::new(inv, 0.0), C64::new(-inv, 0.0)]);
        let projs = projectors_from_vectors(&[plus, minus]).unwrap();
        let rho = identity(2).mapv(|z| 0.5 * z);
        let out = dephase(&rho, &projs).unwrap();
        assert!(max_abs(&(&out - &rho)) < TOL);
    }

    #[test]
    fn pauli_string_rejects_garbage() {
        assert!(pauli_string("").is_err());
        assert!(pauli_string("XQ").is_err());
    }
}
