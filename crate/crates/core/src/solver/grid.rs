//! Uniform grid on [0, 1] with 4th-order difference stencils and composite
//! Simpson weights.

use ndarray::Array2;

use crate::error::{Error, Result};

/// Smallest grid the stencils and Simpson rule support.
pub const MIN_GRID: usize = 8;

/// N+1 uniformly spaced samples s_k = k/N.
#[derive(Debug, Clone, Copy)]
pub struct Grid {
    n: usize,
    h: f64,
}

impl Grid {
    /// `n` must be even (Simpson) and at least [`MIN_GRID`] (stencil width).
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_GRID || !n.is_multiple_of(2) {
            return Err(Error::BadGrid { n, min: MIN_GRID });
        }
        Ok(Self {
            n,
            h: 1.0 / n as f64,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn s(&self, k: usize) -> f64 {
        k as f64 * self.h
    }

    /// Composite Simpson weights h/3 · [1, 4, 2, 4, ..., 2, 4, 1].
    pub fn simpson_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.n + 1];
        let c = self.h / 3.0;
        for (k, wk) in w.iter_mut().enumerate() {
            *wk = if k == 0 || k == self.n {
                c
            } else if k % 2 == 1 {
                4.0 * c
            } else {
                2.0 * c
            };
        }
        w
    }

    /// Composite Simpson integral of node samples.
    pub fn integrate(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.n + 1 {
            return Err(Error::DimMismatch {
                context: format!(
                    "integrand has {} samples, grid has {} nodes",
                    samples.len(),
                    self.n + 1
                ),
            });
        }
        Ok(self
            .simpson_weights()
            .iter()
            .zip(samples)
            .map(|(w, f)| w * f)
            .sum())
    }

    /// First derivative of columns of an (N+1)×m node array: 4th-order central
    /// stencils inside, 4th-order one-sided stencils at the two nodes on each
    /// end.
    pub fn derivative(&self, nodes: &Array2<f64>) -> Result<Array2<f64>> {
        let rows = nodes.nrows();
        if rows != self.n + 1 {
            return Err(Error::DimMismatch {
                context: format!("node array has {rows} rows, grid has {} nodes", self.n + 1),
            });
        }
        let m = nodes.ncols();
        let n = self.n;
        let c = 1.0 / (12.0 * self.h);
        let mut out = Array2::zeros((rows, m));
        for j in 0..m {
            // Forward-skewed rows at the left edge.
            out[[0, j]] = c
                * (-25.0 * nodes[[0, j]] + 48.0 * nodes[[1, j]] - 36.0 * nodes[[2, j]]
                    + 16.0 * nodes[[3, j]]
                    - 3.0 * nodes[[4, j]]);
            out[[1, j]] = c
                * (-3.0 * nodes[[0, j]] - 10.0 * nodes[[1, j]] + 18.0 * nodes[[2, j]]
                    - 6.0 * nodes[[3, j]]
                    + nodes[[4, j]]);
            for k in 2..=n - 2 {
                out[[k, j]] = c
                    * (nodes[[k - 2, j]] - 8.0 * nodes[[k - 1, j]] + 8.0 * nodes[[k + 1, j]]
                        - nodes[[k + 2, j]]);
            }
            // Mirrored rows at the right edge.
            out[[n - 1, j]] = c
                * (-nodes[[n - 4, j]] + 6.0 * nodes[[n - 3, j]] - 18.0 * nodes[[n - 2, j]]
                    + 10.0 * nodes[[n - 1, j]]
                    + 3.0 * nodes[[n, j]]);
            out[[n, j]] = c
                * (3.0 * nodes[[n - 4, j]] - 16.0 * nodes[[n - 3, j]] + 36.0 * nodes[[n - 2, j]]
                    - 48.0 * nodes[[n - 1, j]]
                    + 25.0 * nodes[[n, j]]);
        }
        Ok(out)
    }
}
