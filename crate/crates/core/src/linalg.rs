//! Dense complex LU with partial pivoting, sized for the block-Toeplitz
//! systems of the Birkhoff factorization (a few dozen unknowns).

use num_complex::Complex;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> DenseMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex::new(T::zero(), T::zero()); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    /// Largest column sum of moduli.
    pub fn norm_1(&self) -> T {
        (0..self.cols)
            .map(|c| (0..self.rows).fold(T::zero(), |acc, r| acc + self[(r, c)].norm()))
            .fold(T::zero(), T::max)
    }
}

impl<T> std::ops::Index<(usize, usize)> for DenseMatrix<T> {
    type Output = Complex<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: DenseMatrix<T>,
    perm: Vec<usize>,
    norm_1: T,
}

impl<T: Real> Lu<T> {
    /// `None` when a pivot vanishes exactly or is not finite.
    pub fn factor(a: &DenseMatrix<T>) -> Option<Self> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let norm_1 = a.norm_1();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n).max_by(|&i, &j| lu[(i, k)].norm().partial_cmp(&lu[(j, k)].norm()).unwrap())?;
            let pivot = lu[(p, k)];
            if !(pivot.norm() > T::zero()) || !pivot.norm().is_finite() {
                return None;
            }
            if p != k {
                for c in 0..n {
                    let tmp = lu[(k, c)];
                    lu[(k, c)] = lu[(p, c)];
                    lu[(p, c)] = tmp;
                }
                perm.swap(k, p);
            }
            for r in k + 1..n {
                let f = lu[(r, k)] / pivot;
                lu[(r, k)] = f;
                if f.norm() == T::zero() {
                    continue;
                }
                for c in k + 1..n {
                    let v = lu[(k, c)];
                    lu[(r, c)] -= f * v;
                }
            }
        }
        Some(Self { lu, perm, norm_1 })
    }

    pub fn dim(&self) -> usize {
        self.lu.rows
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &DenseMatrix<T>) -> DenseMatrix<T> {
        let n = self.dim();
        assert_eq!(b.rows, n);
        let mut x = DenseMatrix::zeros(n, b.cols);
        for c in 0..b.cols {
            let mut y: Vec<Complex<T>> = (0..n).map(|r| b[(self.perm[r], c)]).collect();
            for r in 0..n {
                for k in 0..r {
                    let v = y[k];
                    y[r] -= self.lu[(r, k)] * v;
                }
            }
            for r in (0..n).rev() {
                for k in r + 1..n {
                    let v = y[k];
                    y[r] -= self.lu[(r, k)] * v;
                }
                y[r] = y[r] / self.lu[(r, r)];
            }
            for r in 0..n {
                x[(r, c)] = y[r];
            }
        }
        x
    }

    /// `‖A‖₁ · ‖A⁻¹‖₁`, with the inverse formed explicitly (systems are small).
    pub fn condition_1(&self) -> T {
        let inv = self.solve(&DenseMatrix::identity(self.dim()));
        self.norm_1 * inv.norm_1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn solves_small_system_with_pivoting() {
        let mut a = DenseMatrix::zeros(3, 3);
        let vals = [[c(0.0, 0.0), c(2.0, 1.0), c(1.0, 0.0)], [c(1.0, -1.0), c(0.0, 0.0), c(3.0, 0.0)], [
            c(0.5, 0.0),
            c(1.0, 0.0),
            c(0.0, 2.0),
        ]];
        for r in 0..3 {
            for k in 0..3 {
                a[(r, k)] = vals[r][k];
            }
        }
        let lu = Lu::factor(&a).unwrap();
        let mut b = DenseMatrix::zeros(3, 1);
        b[(0, 0)] = c(1.0, 0.0);
        b[(1, 0)] = c(0.0, 1.0);
        b[(2, 0)] = c(-2.0, 0.5);
        let x = lu.solve(&b);
        for r in 0..3 {
            let mut s = c(0.0, 0.0);
            for k in 0..3 {
                s += a[(r, k)] * x[(k, 0)];
            }
            assert!((s - b[(r, 0)]).norm() < 1e-14);
        }
        assert!(lu.condition_1() >= 1.0);
    }

    #[test]
    fn singular_matrix_has_no_factorization() {
        let a = DenseMatrix::<f64>::zeros(2, 2);
        assert!(Lu::factor(&a).is_none());
    }

    #[test]
    fn identity_is_perfectly_conditioned() {
        let lu = Lu::factor(&DenseMatrix::<f64>::identity(5)).unwrap();
        assert_eq!(lu.condition_1(), 1.0);
    }
}
