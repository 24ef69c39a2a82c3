//! Banded LU factorization with partial pivoting, in LAPACK `gbtrf` storage.
//!
//! All linear systems in this crate (radial tridiagonal-block Jacobians,
//! 5-point-stencil Jacobians on small 2-D boxes, eigenvalue inner solves) are
//! narrow-banded, so one banded solver covers them.

/// Banded matrix with `kl` subdiagonals and `ku` superdiagonals.
///
/// Entry `(i, j)` with `|i - j| <= max(kl, ku)` lives at
/// `data[row_offset(i, j)][j]`; `kl` extra superdiagonal rows absorb pivoting
/// fill-in.
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // (2*kl + ku + 1) x n, row-major bands.
    data: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let rows = 2 * kl + ku + 1;
        Self { n, kl, ku, data: vec![0.0; rows * n] }
    }

    #[inline]
    fn band_index(&self, i: usize, j: usize) -> usize {
        // row in band storage: kl + ku + i - j
        let row = self.kl + self.ku + i - j;
        row * self.n + j
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(i < self.n && j < self.n);
        debug_assert!(j <= i + self.ku && i <= j + self.kl, "entry ({i},{j}) outside band");
        let idx = self.band_index(i, j);
        self.data[idx] = value;
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        if j > i + self.ku + self.kl || i > j + self.kl {
            return 0.0;
        }
        self.data[self.band_index(i, j)]
    }

    /// LU-factor with partial pivoting. Returns `None` on a zero pivot.
    pub fn factor(mut self) -> Option<BandedLU> {
        let n = self.n;
        let kl = self.kl;
        let ku = self.ku;
        let mut pivots = vec![0usize; n];

        for col in 0..n {
            // Partial pivoting within the column's band window.
            let imax = (col + kl).min(n - 1);
            let mut piv = col;
            let mut best = self.get(col, col).abs();
            for i in col + 1..=imax {
                let v = self.get(i, col).abs();
                if v > best {
                    best = v;
                    piv = i;
                }
            }
            if best == 0.0 {
                return None;
            }
            pivots[col] = piv;
            if piv != col {
                // Swap rows col and piv over the affected column window; the
                // kl extra superdiagonal rows absorb the fill-in.
                let jmax = (col + ku + kl).min(n - 1);
                for j in col..=jmax {
                    let a = self.get(col, j);
                    let b2 = self.get(piv, j);
                    let idx1 = self.band_index(col, j);
                    let idx2 = self.band_index(piv, j);
                    self.data[idx1] = b2;
                    self.data[idx2] = a;
                }
            }
            let diag = self.get(col, col);
            for i in col + 1..=imax {
                let factor = self.get(i, col) / diag;
                let idx = self.band_index(i, col);
                self.data[idx] = factor; // store the multiplier in place
                if factor != 0.0 {
                    let jmax = (col + ku + kl).min(n - 1);
                    for j in col + 1..=jmax {
                        let upd = self.get(col, j);
                        if upd != 0.0 {
                            let idx = self.band_index(i, j);
                            self.data[idx] -= factor * upd;
                        }
                    }
                }
            }
        }
        Some(BandedLU { mat: self, pivots })
    }

    /// One-shot factor-and-solve.
    pub fn solve(self, b: &[f64]) -> Option<Vec<f64>> {
        self.factor().map(|lu| lu.solve(b))
    }
}

/// Factored banded matrix; supports repeated solves.
pub struct BandedLU {
    mat: BandedMatrix,
    pivots: Vec<usize>,
}

impl BandedLU {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.mat.n;
        assert_eq!(b.len(), n);
        let kl = self.mat.kl;
        let ku = self.mat.ku;
        let mut x = b.to_vec();
        // Forward: apply pivots and L.
        for col in 0..n {
            let piv = self.pivots[col];
            if piv != col {
                x.swap(col, piv);
            }
            let imax = (col + kl).min(n - 1);
            for i in col + 1..=imax {
                let factor = self.mat.get(i, col);
                if factor != 0.0 {
                    x[i] -= factor * x[col];
                }
            }
        }
        // Back substitution with U.
        for col in (0..n).rev() {
            let jmax = (col + ku + kl).min(n - 1);
            let mut acc = x[col];
            for j in col + 1..=jmax {
                acc -= self.mat.get(col, j) * x[j];
            }
            x[col] = acc / self.mat.get(col, col);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn solves_tridiagonal_poisson() {
        // -u'' = 1 on (0,1), u(0)=u(1)=0, exact u = x(1-x)/2.
        let m = 64;
        let h = 1.0 / m as f64;
        let n = m - 1;
        let mut a = BandedMatrix::zeros(n, 1, 1);
        let mut b = vec![1.0; n];
        for i in 0..n {
            a.set(i, i, 2.0 / (h * h));
            if i > 0 {
                a.set(i, i - 1, -1.0 / (h * h));
            }
            if i + 1 < n {
                a.set(i, i + 1, -1.0 / (h * h));
            }
        }
        let x = a.solve(&mut b).unwrap();
        for (i, xi) in x.iter().enumerate() {
            let t = (i + 1) as f64 * h;
            assert!((xi - t * (1.0 - t) / 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_dense_elimination_on_random_band() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 40;
        let (kl, ku) = (3, 2);
        let mut dense = vec![vec![0.0f64; n]; n];
        let mut banded = BandedMatrix::zeros(n, kl, ku);
        for i in 0..n {
            for j in 0..n {
                if j + kl >= i && i + ku >= j {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    let v = if i == j { v + 4.0 } else { v };
                    dense[i][j] = v;
                    banded.set(i, j, v);
                }
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = banded.solve(&b).unwrap();
        // Residual against the dense matrix.
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += dense[i][j] * x[j];
            }
            assert!((acc - b[i]).abs() < 1e-10, "row {i}: {acc} vs {}", b[i]);
        }
    }

    #[test]
    fn pivoting_handles_zero_diagonal() {
        // [[0, 1], [1, 0]] requires a row swap.
        let mut a = BandedMatrix::zeros(2, 1, 1);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        let x = a.solve(&[2.0, 3.0]).unwrap();
        assert!((x[0] - 3.0).abs() < 1e-15 && (x[1] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn singular_matrix_reports_none() {
        let a = BandedMatrix::zeros(3, 1, 1);
        assert!(a.solve(&[1.0, 1.0, 1.0]).is_none());
    }
}
