//! Finite-difference stencils that stay inside runs of valid nodes.

use crate::scalar::Real;

/// Largest stencil used for first derivatives (sixth order when centred).
pub const MAX_STENCIL: usize = 7;

/// Shorter runs of valid nodes give no derivative (third order at worst).
pub const MIN_STENCIL: usize = 4;

/// Fornberg's recursion: weights `w[d][k]` such that
/// `f^{(d)}(z) ≈ Σ_k w[d][k] f(x_k)` for `d = 0..=order`.
pub fn fornberg_weights<T: Real>(z: T, x: &[T], order: usize) -> Vec<Vec<T>> {
    let n = x.len();
    let mut c = vec![vec![T::zero(); n]; order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = T::one();
    let mut c4 = x[0] - z;
    c[0][0] = T::one();
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = T::one();
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    let kk = T::from_usize_lossy(k);
                    c[k][i] = c1 * (kk * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                let kk = T::from_usize_lossy(k);
                c[k][j] = (c4 * c[k][j] - kk * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Start index and weights of the first-derivative stencil at `idx`.
///
/// The stencil holds up to [`MAX_STENCIL`] consecutive nodes of the valid run
/// containing `idx`, centred where the run allows. `None` when `idx` is
/// invalid or its run is shorter than [`MIN_STENCIL`].
pub fn first_derivative_stencil<T: Real>(valid: &[bool], idx: usize, h: T) -> Option<(usize, Vec<T>)> {
    if !valid.get(idx).copied().unwrap_or(false) {
        return None;
    }
    let mut lo = idx;
    while lo > 0 && valid[lo - 1] {
        lo -= 1;
    }
    let mut hi = idx;
    while hi + 1 < valid.len() && valid[hi + 1] {
        hi += 1;
    }
    let run = hi - lo + 1;
    if run < MIN_STENCIL {
        return None;
    }
    let p = run.min(MAX_STENCIL);
    let start = idx.saturating_sub(p / 2).max(lo).min(hi + 1 - p);
    let nodes: Vec<T> = (start..start + p).map(|k| T::from_usize_lossy(k) - T::from_usize_lossy(idx)).collect();
    let w = fornberg_weights(T::zero(), &nodes, 1).swap_remove(1);
    Some((start, w.into_iter().map(|v| v / h).collect()))
}

/// First derivative of a sampled scalar series at `idx`.
pub fn derivative<T: Real>(values: &[T], valid: &[bool], idx: usize, h: T) -> Option<T> {
    let (start, w) = first_derivative_stencil(valid, idx, h)?;
    Some(w.iter().enumerate().fold(T::zero(), |acc, (k, wk)| acc + *wk * values[start + k]))
}

/// Row-major `(i, j) ↦ i·ny + j` grid used by every node-indexed field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Shape {
    pub nx: usize,
    pub ny: usize,
}

impl Shape {
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k / self.ny, k % self.ny)
    }

    /// Flat indices and weights of the derivative along `x` (`along_x`) or
    /// `y` at node `(i, j)`, using only nodes where `valid` holds.
    pub fn stencil<T: Real>(&self, valid: &[bool], h: T, along_x: bool, i: usize, j: usize) -> Option<Vec<(usize, T)>> {
        let line: Vec<bool> = if along_x {
            (0..self.nx).map(|p| valid[self.idx(p, j)]).collect()
        } else {
            (0..self.ny).map(|q| valid[self.idx(i, q)]).collect()
        };
        let at = if along_x { i } else { j };
        let (start, w) = first_derivative_stencil(&line, at, h)?;
        Some(
            w.into_iter()
                .enumerate()
                .map(|(k, wk)| {
                    let p = start + k;
                    (if along_x { self.idx(p, j) } else { self.idx(i, p) }, wk)
                })
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centred_five_point_weights() {
        let x = [-2.0f64, -1.0, 0.0, 1.0, 2.0];
        let w = fornberg_weights(0.0, &x, 2);
        let d1 = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        let d2 = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for k in 0..5 {
            assert!((w[1][k] - d1[k]).abs() < 1e-14);
            assert!((w[2][k] - d2[k]).abs() < 1e-14);
            assert!((w[0][k] - if k == 2 { 1.0 } else { 0.0 }).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_exact_for_quartics_and_respects_flags() {
        let h = 0.1;
        let f = |x: f64| x.powi(4) - 2.0 * x * x + x;
        let df = |x: f64| 4.0 * x.powi(3) - 4.0 * x + 1.0;
        let vals: Vec<f64> = (0..12).map(|i| f(i as f64 * h)).collect();
        let mut valid = vec![true; 12];
        for i in 0..12 {
            let d = derivative(&vals, &valid, i, h).unwrap();
            assert!((d - df(i as f64 * h)).abs() < 1e-10);
        }
        valid[6] = false;
        assert!(derivative(&vals, &valid, 6, h).is_none());
        let (start, w) = first_derivative_stencil(&valid, 5, h).unwrap();
        assert!(start + w.len() <= 6);
        assert!((derivative(&vals, &valid, 5, h).unwrap() - df(0.5)).abs() < 1e-10);
        valid[3] = false;
        assert!(derivative(&vals, &valid, 5, h).is_none());
    }
}
