//! Lagrange interpolation on uniform grids.

use crate::scalar::Real;

/// Lagrange weights for the nodes `0..p` evaluated at `t` (in node units).
fn lagrange_weights<T: Real>(p: usize, t: T) -> Vec<T> {
    (0..p)
        .map(|j| {
            let xj = T::from_usize_lossy(j);
            (0..p).filter(|&m| m != j).fold(T::one(), |acc, m| {
                let xm = T::from_usize_lossy(m);
                acc * (t - xm) / (xj - xm)
            })
        })
        .collect()
}

/// Values at the half-integer positions `i + 1/2`, `i = 0..n-1`, from a
/// `points`-point Lagrange stencil (as centred as the boundary allows).
pub fn midpoints<T: Real>(samples: &[T], points: usize) -> Vec<T> {
    let n = samples.len();
    if n < 2 {
        return Vec::new();
    }
    let p = points.clamp(2, n);
    (0..n - 1)
        .map(|i| {
            let start = (i + 1).saturating_sub(p / 2).min(n - p);
            let t = T::from_usize_lossy(i - start) + T::lit(0.5);
            lagrange_weights(p, t)
                .iter()
                .zip(&samples[start..start + p])
                .fold(T::zero(), |acc, (w, f)| acc + *w * *f)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_midpoints_reproduce_cubics() {
        let f = |x: f64| 0.3 * x * x * x - x * x + 2.0 * x - 5.0;
        let xs: Vec<f64> = (0..9).map(|i| f(i as f64 * 0.25)).collect();
        let mids = midpoints(&xs, 4);
        for (i, m) in mids.iter().enumerate() {
            assert!((m - f((i as f64 + 0.5) * 0.25)).abs() < 1e-13);
        }
    }

    #[test]
    fn short_series_fall_back_to_linear() {
        let mids = midpoints(&[1.0, 3.0], 4);
        assert_eq!(mids, vec![2.0]);
    }
}
