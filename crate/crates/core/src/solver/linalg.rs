//! Symmetric positive-definite systems with a banded leading block and a
//! few dense trailing ("border") rows, solved by banded Cholesky plus a
//! Schur complement.

#[derive(Debug, Clone)]
pub struct BorderedBand {
    n: usize,
    nb: usize,
    bw: usize,
    /// Lower band of the leading block: row `i`, offset `i − j` in `0..=bw`.
    band: Vec<f64>,
    /// Trailing rows `nb..n`, each of full length `n` (lower part used).
    border: Vec<f64>,
}

impl BorderedBand {
    pub fn new(n: usize, border_rows: usize, bw: usize) -> Self {
        let nb = n - border_rows;
        Self {
            n,
            nb,
            bw,
            band: vec![0.0; nb * (bw + 1)],
            border: vec![0.0; border_rows * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn clear(&mut self) {
        self.band.fill(0.0);
        self.border.fill(0.0);
    }

    /// Adds `v` to entry `(i, j)`; entries above the diagonal are ignored so
    /// callers can stream full symmetric blocks.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if j > i {
            return;
        }
        if i >= self.nb {
            self.border[(i - self.nb) * self.n + j] += v;
        } else {
            let off = i - j;
            debug_assert!(off <= self.bw, "entry ({i},{j}) outside bandwidth {}", self.bw);
            if off <= self.bw {
                self.band[i * (self.bw + 1) + off] += v;
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i >= self.nb {
            self.border[(i - self.nb) * self.n + j]
        } else if i - j <= self.bw {
            self.band[i * (self.bw + 1) + i - j]
        } else {
            0.0
        }
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i).abs()).fold(0.0, f64::max)
    }

    /// Solves `(M + shift·I) x = rhs`, increasing the shift from zero when the
    /// factorization breaks down. Returns `None` only if no shift works.
    pub fn solve_regularized(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let scale = self.max_diag().max(1e-300);
        let mut shift = 0.0;
        for _ in 0..40 {
            if let Some(x) = self.solve_shifted(rhs, shift) {
                if x.iter().all(|v| v.is_finite()) {
                    return Some(x);
                }
            }
            shift = if shift == 0.0 { 1e-12 * scale } else { shift * 10.0 };
        }
        None
    }

    fn solve_shifted(&self, rhs: &[f64], shift: f64) -> Option<Vec<f64>> {
        let (nb, bw, w) = (self.nb, self.bw, self.bw + 1);
        let k = self.n - nb;
        // banded Cholesky of the leading block
        let mut l = self.band.clone();
        for i in 0..nb {
            l[i * w] += shift;
        }
        for i in 0..nb {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = l[i * w + (i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for t in k0..j {
                    s -= l[i * w + (i - t)] * l[j * w + (j - t)];
                }
                if i == j {
                    if !(s > 0.0) {
                        return None;
                    }
                    l[i * w] = s.sqrt();
                } else {
                    l[i * w + (i - j)] = s / l[j * w];
                }
            }
        }
        let band_solve = |b: &mut [f64]| {
            for i in 0..nb {
                let mut s = b[i];
                for t in i.saturating_sub(bw)..i {
                    s -= l[i * w + (i - t)] * b[t];
                }
                b[i] = s / l[i * w];
            }
            for i in (0..nb).rev() {
                let mut s = b[i];
                for t in (i + 1)..nb.min(i + bw + 1) {
                    s -= l[t * w + (t - i)] * b[t];
                }
                b[i] = s / l[i * w];
            }
        };

        let mut y = rhs[..nb].to_vec();
        band_solve(&mut y);
        if k == 0 {
            return Some(y);
        }
        // X = A⁻¹ Bᵀ, one column per border row
        let mut xcols = Vec::with_capacity(k);
        for r in 0..k {
            let mut col = self.border[r * self.n..r * self.n + nb].to_vec();
            band_solve(&mut col);
            xcols.push(col);
        }
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        let mut s = vec![0.0; k * k];
        for r in 0..k {
            for c in 0..k {
                let cval = self.get(nb + r, nb + c) + if r == c { shift } else { 0.0 };
                s[r * k + c] = cval - dot(&self.border[r * self.n..r * self.n + nb], &xcols[c]);
            }
        }
        let mut z: Vec<f64> = (0..k)
            .map(|r| rhs[nb + r] - dot(&self.border[r * self.n..r * self.n + nb], &y))
            .collect();
        if !dense_cholesky_solve(&mut s, k, &mut z) {
            return None;
        }
        let mut x = y;
        for (c, col) in xcols.iter().enumerate() {
            for i in 0..nb {
                x[i] -= col[i] * z[c];
            }
        }
        x.extend_from_slice(&z);
        Some(x)
    }
}

/// In-place dense Cholesky solve of an `n×n` SPD matrix.
pub fn dense_cholesky_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for t in 0..j {
            d -= a[j * n + t] * a[j * n + t];
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for t in 0..j {
                s -= a[i * n + t] * a[j * n + t];
            }
            a[i * n + j] = s / d;
        }
    }
    for i in 0..n {
        let mut s = b[i];
        for t in 0..i {
            s -= a[i * n + t] * b[t];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for t in (i + 1)..n {
            s -= a[t * n + i] * b[t];
        }
        b[i] = s / a[i * n + i];
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_dense_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for &(n, k, bw) in &[(1, 0, 0), (6, 0, 2), (10, 1, 3), (12, 2, 1), (3, 3, 0)] {
            let nb = n - k;
            // random SPD matrix with the required sparsity
            let mut dense = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..=i {
                    let inside = i >= nb || i - j <= bw;
                    if inside {
                        let v = if i == j { n as f64 * 4.0 } else { rng.gen_range(-1.0..1.0) };
                        dense[i * n + j] = v;
                        dense[j * n + i] = v;
                    }
                }
            }
            let mut m = BorderedBand::new(n, k, bw);
            for i in 0..n {
                for j in 0..n {
                    if dense[i * n + j] != 0.0 {
                        m.add(i, j, dense[i * n + j]);
                    }
                }
            }
            let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = m.solve_regularized(&rhs).unwrap();
            let mut a = dense.clone();
            let mut b = rhs.clone();
            assert!(dense_cholesky_solve(&mut a, n, &mut b));
            for i in 0..n {
                assert!((x[i] - b[i]).abs() < 1e-12, "n={n} k={k}: {} vs {}", x[i], b[i]);
            }
        }
    }

    #[test]
    fn singular_matrix_is_regularized() {
        let mut m = BorderedBand::new(2, 0, 1);
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            m.add(i, j, 1.0);
        }
        let x = m.solve_regularized(&[1.0, 1.0]).unwrap();
        assert!(x.iter().all(|v| v.is_finite()));
    }
}
