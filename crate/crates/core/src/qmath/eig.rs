//! Cyclic Jacobi eigendecomposition for complex Hermitian matrices.

use ndarray::{Array1, Array2};

use super::{herm_deviation, require_hermitian, CMat, C64};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;
const OFF_TOL: f64 = 1e-14;

/// Eigenvalues (ascending) and a unitary matrix of eigenvectors (columns),
/// satisfying A V = V diag(vals).
///
/// Cyclic Jacobi: each sweep visits every upper-triangle pair (p, q) and applies
/// the unitary rotation that zeroes A[p, q]. The complex pivot a_pq = r e^{i arg}
/// is first reduced to the real case by absorbing its phase into the rotation.
pub fn hermitian_eig(a: &CMat) -> Result<(Array1<f64>, CMat)> {
    let mut a = require_hermitian(a)?;
    let d = a.nrows();
    let mut v = super::identity(d);
    if d == 1 {
        return Ok((Array1::from_vec(vec![a[[0, 0]].re]), v));
    }

    let scale = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off = off_norm(&a);
        if off <= OFF_TOL * scale {
            converged = true;
            break;
        }
        for p in 0..d - 1 {
            for q in p + 1..d {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_norm(&a) > 1e-10 * scale {
        return Err(Error::Invalid {
            context: format!(
                "Jacobi eigensolver stalled with off-diagonal norm {:.3e}",
                off_norm(&a)
            ),
        });
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| a[[i, i]].re.partial_cmp(&a[[j, j]].re).unwrap());
    let vals = Array1::from_iter(order.iter().map(|&i| a[[i, i]].re));
    let mut vecs = Array2::zeros((d, d));
    for (col, &src) in order.iter().enumerate() {
        for row in 0..d {
            vecs[[row, col]] = v[[row, src]];
        }
    }
    Ok((vals, vecs))
}

fn off_norm(a: &CMat) -> f64 {
    let d = a.nrows();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            if i != j {
                s += a[[i, j]].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Zero the (p, q) entry with the unitary
/// G = [[c, s], [-s u*, c u*]] acting on rows/columns p and q,
/// where a_pq = r u with r = |a_pq|.
fn rotate(a: &mut CMat, v: &mut CMat, p: usize, q: usize) {
    let apq = a[[p, q]];
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let u = apq / r;
    let tau = (a[[q, q]].re - a[[p, p]].re) / (2.0 * r);
    let t = if tau == 0.0 {
        1.0
    } else {
        tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    let gpp = C64::new(c, 0.0);
    let gpq = C64::new(s, 0.0);
    let gqp = -C64::new(s, 0.0) * u.conj();
    let gqq = C64::new(c, 0.0) * u.conj();

    let d = a.nrows();
    // A <- G^dag A G, touching only rows/columns p and q.
    for k in 0..d {
        let akp = a[[k, p]];
        let akq = a[[k, q]];
        a[[k, p]] = akp * gpp + akq * gqp;
        a[[k, q]] = akp * gpq + akq * gqq;
    }
    for k in 0..d {
        let apk = a[[p, k]];
        let aqk = a[[q, k]];
        a[[p, k]] = gpp.conj() * apk + gqp.conj() * aqk;
        a[[q, k]] = gpq.conj() * apk + gqq.conj() * aqk;
    }
    // Pin the analytically known results to kill roundoff drift.
    a[[p, q]] = C64::new(0.0, 0.0);
    a[[q, p]] = C64::new(0.0, 0.0);
    a[[p, p]] = C64::new(a[[p, p]].re, 0.0);
    a[[q, q]] = C64::new(a[[q, q]].re, 0.0);

    for k in 0..d {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = vkp * gpp + vkq * gqp;
        v[[k, q]] = vkp * gpq + vkq * gqq;
    }
    debug_assert!(herm_deviation(a) < 1e-10);
}
