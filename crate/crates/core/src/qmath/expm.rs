//! General dense matrix exponential (Padé order 13 with scaling and squaring)
//! and the partial-pivot LU solve it relies on.

use ndarray::Array2;

use super::{identity, CMat, CVec, C64};
use crate::error::{Error, Result};

/// Padé 13 numerator/denominator coefficients.
const B: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
/// Largest 1-norm the order-13 approximant handles without scaling.
const THETA_13: f64 = 5.371920351148152;

fn one_norm(a: &CMat) -> f64 {
    let mut best = 0.0_f64;
    for j in 0..a.ncols() {
        let col: f64 = a.column(j).iter().map(|z| z.norm()).sum();
        best = best.max(col);
    }
    best
}

/// exp(A) for a general square complex matrix.
pub fn expm(a: &CMat) -> CMat {
    let d = a.nrows();
    assert_eq!(d, a.ncols(), "expm needs a square matrix");
    let norm = one_norm(a);
    let s = if norm > THETA_13 {
        (norm / THETA_13).log2().ceil() as u32
    } else {
        0
    };
    let a = a.mapv(|z| z / C64::new(2f64.powi(s as i32), 0.0));

    let a2 = a.dot(&a);
    let a4 = a2.dot(&a2);
    let a6 = a2.dot(&a4);
    let id = identity(d);

    let u_inner = a6.mapv(|z| z * B[13]) + a4.mapv(|z| z * B[11]) + a2.mapv(|z| z * B[9]);
    let u_poly = a6.dot(&u_inner)
        + a6.mapv(|z| z * B[7])
        + a4.mapv(|z| z * B[5])
        + a2.mapv(|z| z * B[3])
        + id.mapv(|z| z * B[1]);
    let u = a.dot(&u_poly);

    let v_inner = a6.mapv(|z| z * B[12]) + a4.mapv(|z| z * B[10]) + a2.mapv(|z| z * B[8]);
    let v = a6.dot(&v_inner)
        + a6.mapv(|z| z * B[6])
        + a4.mapv(|z| z * B[4])
        + a2.mapv(|z| z * B[2])
        + id.mapv(|z| z * B[0]);

    // (V - U) X = (V + U); the denominator is nonsingular for norms under theta.
    let mut x = solve_lu(&(&v - &u), &(&v + &u)).expect("Pade denominator is nonsingular");
    for _ in 0..s {
        x = x.dot(&x);
    }
    x
}

/// Solve A X = B by LU with partial pivoting; B holds one column per right-hand side.
pub fn solve_lu(a: &CMat, b: &CMat) -> Result<CMat> {
    let d = super::check_square(a)?;
    if b.nrows() != d {
        return Err(Error::DimMismatch {
            context: format!("LU solve: matrix is {d}x{d}, rhs has {} rows", b.nrows()),
        });
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = one_norm(a).max(1.0);

    for col in 0..d {
        let mut pivot_row = col;
        let mut pivot_mag = lu[[col, col]].norm();
        for r in col + 1..d {
            let mag = lu[[r, col]].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag < 1e-300 * scale {
            return Err(Error::Singular {
                context: format!("LU pivot {col} is numerically zero"),
            });
        }
        if pivot_row != col {
            for j in 0..d {
                lu.swap([col, j], [pivot_row, j]);
            }
            for j in 0..x.ncols() {
                x.swap([col, j], [pivot_row, j]);
            }
        }
        let pivot = lu[[col, col]];
        for r in col + 1..d {
            let factor = lu[[r, col]] / pivot;
            if factor.norm() == 0.0 {
                continue;
            }
            lu[[r, col]] = factor;
            for j in col + 1..d {
                let sub = factor * lu[[col, j]];
                lu[[r, j]] -= sub;
            }
            for j in 0..x.ncols() {
                let sub = factor * x[[col, j]];
                x[[r, j]] -= sub;
            }
        }
    }
    for col in (0..d).rev() {
        let pivot = lu[[col, col]];
        for j in 0..x.ncols() {
            x[[col, j]] /= pivot;
            let xc = x[[col, j]];
            for r in 0..col {
                let sub = lu[[r, col]] * xc;
                x[[r, j]] -= sub;
            }
        }
    }
    Ok(x)
}

/// Single right-hand-side convenience wrapper around [`solve_lu`].
pub fn solve_lu_vec(a: &CMat, b: &CVec) -> Result<CVec> {
    let col = Array2::from_shape_vec((b.len(), 1), b.to_vec()).expect("column shape");
    let x = solve_lu(a, &col)?;
    Ok(x.column(0).to_owned())
}

/// Real-valued counterpart of [`solve_lu`] for the small symmetric systems
/// that show up in metric inversions and Newton steps.
pub fn solve_real(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    let d = a.nrows();
    if d != a.ncols() {
        return Err(Error::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if b.nrows() != d {
        return Err(Error::DimMismatch {
            context: format!("solve: matrix is {d}x{d}, rhs has {} rows", b.nrows()),
        });
    }
    let mut lu = a.clone();
    let mut x = b.clone();
    let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    for col in 0..d {
        let mut pivot_row = col;
        for r in col + 1..d {
            if lu[[r, col]].abs() > lu[[pivot_row, col]].abs() {
                pivot_row = r;
            }
        }
        if lu[[pivot_row, col]].abs() < 1e-300 * scale {
            return Err(Error::Singular {
                context: format!("pivot {col} is numerically zero"),
            });
        }
        if pivot_row != col {
            for j in 0..d {
                lu.swap([col, j], [pivot_row, j]);
            }
            for j in 0..x.ncols() {
                x.swap([col, j], [pivot_row, j]);
            }
        }
        let pivot = lu[[col, col]];
        for r in col + 1..d {
            let factor = lu[[r, col]] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col + 1..d {
                lu[[r, j]] -= factor * lu[[col, j]];
            }
            for j in 0..x.ncols() {
                x[[r, j]] -= factor * x[[col, j]];
            }
        }
    }
    for col in (0..d).rev() {
        for j in 0..x.ncols() {
            x[[col, j]] /= lu[[col, col]];
            let xc = x[[col, j]];
            for r in 0..col {
                x[[r, j]] -= lu[[r, col]] * xc;
            }
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::super::dagger;
    use super::*;
    use ndarray::Array2;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn max_abs(a: &CMat) -> f64 {
        a.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    fn random_complex(d: usize, rng: &mut impl Rng) -> CMat {
        let mut a: CMat = Array2::zeros((d, d));
        for i in 0..d {
            for j in 0..d {
                a[[i, j]] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        a
    }

    fn exp_series(a: &CMat) -> CMat {
        let d = a.nrows();
        let mut term = identity(d);
        let mut sum = identity(d);
        for k in 1..80 {
            term = term.dot(a).mapv(|z| z / k as f64);
            sum += &term;
        }
        sum
    }

    #[test]
    fn exp_of_zero() {
        let z: CMat = Array2::zeros((4, 4));
        assert!(max_abs(&(&expm(&z) - &identity(4))) < 1e-15);
    }

    #[test]
    fn exp_of_diagonal_is_entrywise() {
        let mut a: CMat = Array2::zeros((3, 3));
        a[[0, 0]] = C64::new(1.0, 2.0);
        a[[1, 1]] = C64::new(-0.5, 0.0);
        a[[2, 2]] = C64::new(0.0, -7.0);
        let e = expm(&a);
        for i in 0..3 {
            assert!((e[[i, i]] - a[[i, i]].exp()).norm() < 1e-14);
        }
        assert!(e[[0, 1]].norm() < 1e-14);
    }

    #[test]
    fn exp_matches_power_series_at_moderate_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for d in [2usize, 4, 6] {
            for _ in 0..8 {
                let a = random_complex(d, &mut rng);
                assert!(max_abs(&(&expm(&a) - &exp_series(&a))) < 1e-12);
            }
        }
    }

    #[test]
    fn exp_of_negation_inverts() {
        // Kept at moderate norm: the residual of exp(A) exp(-A) grows like
        // e^(spread of Re spectrum), so wild scalings are not a fair check.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..10 {
            let a = random_complex(5, &mut rng);
            let prod = expm(&a).dot(&expm(&a.mapv(|z| -z)));
            assert!(max_abs(&(&prod - &identity(5))) < 1e-11);
        }
    }

    #[test]
    fn large_norm_matches_similarity_oracle() {
        // A = S D S^-1 with diagonal D makes exp(A) = S exp(D) S^-1 exact.
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..5 {
            let d = 4;
            let mut diag: CMat = Array2::zeros((d, d));
            let mut ediag: CMat = Array2::zeros((d, d));
            for i in 0..d {
                let z = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-30.0..30.0));
                diag[[i, i]] = z;
                ediag[[i, i]] = z.exp();
            }
            let s = identity(d) + random_complex(d, &mut rng).mapv(|z| z * 0.1);
            let s_inv = solve_lu(&s, &identity(d)).unwrap();
            let a = s.dot(&diag).dot(&s_inv);
            let want = s.dot(&ediag).dot(&s_inv);
            assert!(max_abs(&(&expm(&a) - &want)) < 1e-9);
        }
    }

    #[test]
    fn lu_solves_random_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for d in [1usize, 2, 5, 9] {
            let a = random_complex(d, &mut rng) + identity(d).mapv(|z| z * 3.0);
            let b = random_complex(d, &mut rng);
            let x = solve_lu(&a, &b).unwrap();
            assert!(max_abs(&(&a.dot(&x) - &b)) < 1e-11);
            let v: CVec = b.column(0).to_owned();
            let xv = solve_lu_vec(&a, &v).unwrap();
            assert!((&a.dot(&xv) - &v).iter().map(|z| z.norm()).fold(0.0, f64::max) < 1e-11);
        }
    }

    #[test]
    fn real_solver_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for d in [1usize, 2, 3, 6] {
            let mut a = Array2::<f64>::zeros((d, d));
            for i in 0..d {
                for j in 0..d {
                    a[[i, j]] = rng.gen_range(-1.0..1.0);
                }
                a[[i, i]] += 3.0;
            }
            let mut b = Array2::<f64>::zeros((d, 2));
            for v in b.iter_mut() {
                *v = rng.gen_range(-1.0..1.0);
            }
            let x = solve_real(&a, &b).unwrap();
            let res = (&a.dot(&x) - &b)
                .iter()
                .fold(0.0_f64, |m, v| m.max(v.abs()));
            assert!(res < 1e-12);
        }
        let singular = Array2::<f64>::zeros((2, 2));
        assert!(solve_real(&singular, &Array2::zeros((2, 1))).is_err());
    }

    #[test]
    fn lu_rejects_singular_input() {
        let mut a: CMat = Array2::zeros((2, 2));
        a[[0, 0]] = C64::new(1.0, 0.0);
        a[[0, 1]] = C64::new(2.0, 0.0);
        a[[1, 0]] = C64::new(2.0, 0.0);
        a[[1, 1]] = C64::new(4.0, 0.0);
        assert!(matches!(
            solve_lu(&a, &identity(2)),
            Err(Error::Singular { .. })
        ));
    }

    #[test]
    fn exp_of_skew_hermitian_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..10 {
            let h = random_complex(4, &mut rng);
            let herm = (&h + &dagger(&h)).mapv(|z| 0.5 * z * C64::new(0.0, 1.0));
            let u = expm(&herm);
            assert!(max_abs(&(&u.dot(&dagger(&u)) - &identity(4))) < 1e-12);
        }
    }
}
