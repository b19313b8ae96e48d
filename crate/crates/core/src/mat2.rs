//! 2×2 complex matrices, the coefficient type of every loop.
//!
//! The su(2) ↔ ℝ³ identification used throughout the crate is
//!
//! ```text
//!   X = (i/2) (x₁σ₁ + x₂σ₂ + x₃σ₃)  ↦  (x₁, x₂, x₃)
//! ```
//!
//! so that `[X, Y]` corresponds to `x × y` and conjugation by SU(2) acts as a
//! rotation.

use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_complex::Complex;

use crate::scalar::Real;

pub type Vec3<T> = [T; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> Default for Mat2<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> Mat2<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        Self::diag(Complex::new(T::one(), T::zero()), Complex::new(T::one(), T::zero()))
    }

    pub fn diag(a: Complex<T>, d: Complex<T>) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(a, z, z, d)
    }

    pub fn offdiag(b: Complex<T>, c: Complex<T>) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(z, b, c, z)
    }

    /// Pauli matrix σ₁, σ₂ or σ₃ (`k` in 1..=3).
    pub fn pauli(k: usize) -> Self {
        let o = T::one();
        let z = T::zero();
        match k {
            1 => Self::offdiag(Complex::new(o, z), Complex::new(o, z)),
            2 => Self::offdiag(Complex::new(z, -o), Complex::new(z, o)),
            3 => Self::diag(Complex::new(o, z), Complex::new(-o, z)),
            _ => panic!("Pauli index must be 1, 2 or 3, got {k}"),
        }
    }

    /// `exp(iθσ₃) = diag(e^{iθ}, e^{−iθ})`.
    pub fn phase_diag(theta: T) -> Self {
        Self::diag(Complex::from_polar(T::one(), theta), Complex::from_polar(T::one(), -theta))
    }

    pub fn get(&self, r: usize, c: usize) -> Complex<T> {
        self.m[r][c]
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let mut out = *self;
        for row in out.m.iter_mut() {
            for e in row.iter_mut() {
                *e = *e * s;
            }
        }
        out
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn adjoint(&self) -> Self {
        Self::new(
            self.m[0][0].conj(),
            self.m[1][0].conj(),
            self.m[0][1].conj(),
            self.m[1][1].conj(),
        )
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    /// Plain inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d.norm() == T::zero() {
            return None;
        }
        let inv = d.inv();
        Some(Self::new(self.m[1][1] * inv, -self.m[0][1] * inv, -self.m[1][0] * inv, self.m[0][0] * inv))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|e| e.re.is_finite() && e.im.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().flatten().all(|e| e.re == T::zero() && e.im == T::zero())
    }

    pub fn max_abs(&self) -> T {
        self.m.iter().flatten().fold(T::zero(), |acc, e| acc.max(e.norm()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        (*self - *other).max_abs()
    }

    /// Maximum absolute row sum of entry moduli.
    pub fn row_sum_norm(&self) -> T {
        let r0 = self.m[0][0].norm() + self.m[0][1].norm();
        let r1 = self.m[1][0].norm() + self.m[1][1].norm();
        r0.max(r1)
    }

    /// Largest entry of `X·X† − I`.
    pub fn unitarity_defect(&self) -> T {
        (*self * self.adjoint()).max_abs_diff(&Self::identity())
    }

    /// `|det − 1|`.
    pub fn det_defect(&self) -> T {
        (self.det() - Complex::new(T::one(), T::zero())).norm()
    }

    /// Largest deviation from anti-Hermitian tracelessness.
    pub fn su2_algebra_defect(&self) -> T {
        (*self + self.adjoint()).max_abs().max(self.trace().norm())
    }

    /// ℝ³ image of an su(2) element under `(i/2)Σ x_k σ_k ↦ x`.
    pub fn to_vec3(&self) -> Vec3<T> {
        let two = T::one() + T::one();
        let lower = self.m[1][0];
        [two * lower.im, -two * lower.re, two * self.m[0][0].im]
    }

    pub fn from_vec3(v: Vec3<T>) -> Self {
        let half = T::lit(0.5);
        let i_half = Complex::new(T::zero(), half);
        (Self::pauli(1).scale_re(v[0]) + Self::pauli(2).scale_re(v[1]) + Self::pauli(3).scale_re(v[2]))
            .scale(i_half)
    }

    /// Exponential of a traceless matrix via `X² = −det(X)·I`.
    pub fn exp_traceless(&self) -> Self {
        let s = (-self.det()).sqrt();
        let one = Complex::new(T::one(), T::zero());
        let (c, sinc) = if s.norm() < T::lit(1e-8) {
            let s2 = s * s;
            (one + s2 / T::lit(2.0), one + s2 / T::lit(6.0))
        } else {
            (s.cosh(), s.sinh() / s)
        };
        Self::identity().scale(c) + self.scale(sinc)
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        out += rhs;
        out
    }
}

impl<T: Real> AddAssign for Mat2<T> {
    fn add_assign(&mut self, rhs: Self) {
        for r in 0..2 {
            for c in 0..2 {
                self.m[r][c] = self.m[r][c] + rhs.m[r][c];
            }
        }
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        out -= rhs;
        out
    }
}

impl<T: Real> SubAssign for Mat2<T> {
    fn sub_assign(&mut self, rhs: Self) {
        for r in 0..2 {
            for c in 0..2 {
                self.m[r][c] = self.m[r][c] - rhs.m[r][c];
            }
        }
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale_re(-T::one())
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let a = &self.m;
        let b = &rhs.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

pub fn dot<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> T {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn norm<T: Real>(a: &Vec3<T>) -> T {
    dot(a, a).sqrt()
}

pub fn sub3<T: Real>(a: &Vec3<T>, b: &Vec3<T>) -> Vec3<T> {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_squares_are_identity() {
        for k in 1..=3 {
            let s = Mat2::<f64>::pauli(k);
            assert!((s * s).max_abs_diff(&Mat2::identity()) < 1e-15);
        }
    }

    #[test]
    fn commutator_is_minus_cross_product() {
        let a = [0.3, -1.2, 0.7];
        let b = [1.1, 0.4, -0.5];
        let (x, y) = (Mat2::<f64>::from_vec3(a), Mat2::from_vec3(b));
        let c = (x * y - y * x).to_vec3();
        let expected = cross(&a, &b);
        for k in 0..3 {
            assert!((c[k] + expected[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn vec3_roundtrip() {
        let v = [0.25, -3.0, 1.5];
        let back = Mat2::<f64>::from_vec3(v).to_vec3();
        assert_eq!(back, v);
    }

    #[test]
    fn exp_of_half_sigma1_is_rotation() {
        let x = Mat2::<f64>::pauli(1).scale(Complex::new(0.0, 0.5));
        let e = x.exp_traceless();
        let expected = Mat2::new(
            Complex::new(0.5f64.cos(), 0.0),
            Complex::new(0.0, 0.5f64.sin()),
            Complex::new(0.0, 0.5f64.sin()),
            Complex::new(0.5f64.cos(), 0.0),
        );
        assert!(e.max_abs_diff(&expected) < 1e-15);
        assert!(e.unitarity_defect() < 1e-15);
    }
}
