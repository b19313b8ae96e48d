//! Truncated twisted Laurent series in λ with 2×2 complex coefficients.
//!
//! A [`TwistedLoop`] stores the coefficients of degrees `-N..=N` densely. The
//! twist condition `X(−λ) = σ₃ X(λ) σ₃` says diagonal entries live in even
//! degrees and off-diagonal entries in odd degrees; it is a checked invariant,
//! not a storage layout.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::scalar::Real;

/// Wiener norm: the largest row sum of the entry-wise `Σ_k |a_k|`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct WienerNorm<T>(pub T);

impl<T: Real> WienerNorm<T> {
    pub fn value(self) -> T {
        self.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistedLoop<T> {
    trunc: usize,
    coeffs: Vec<Mat2<T>>,
    twisted: bool,
}

/// Result of a truncated product together with the norm of what was dropped.
#[derive(Debug, Clone)]
pub struct Truncated<T> {
    pub value: TwistedLoop<T>,
    pub loss: WienerNorm<T>,
}

/// One serialized coefficient: degree and the real/imaginary parts of the
/// entries (0,0), (0,1), (1,0), (1,1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopRecord {
    pub degree: i32,
    pub entries: [f64; 8],
}

impl<T: Real> TwistedLoop<T> {
    pub fn zero(trunc: usize) -> Self {
        Self { trunc, coeffs: vec![Mat2::zero(); 2 * trunc + 1], twisted: true }
    }

    pub fn identity(trunc: usize) -> Self {
        Self::constant(trunc, Mat2::identity())
    }

    pub fn constant(trunc: usize, m: Mat2<T>) -> Self {
        Self::monomial(trunc, 0, m)
    }

    /// `m·λ^degree`; degrees outside the range give the zero loop.
    pub fn monomial(trunc: usize, degree: i32, m: Mat2<T>) -> Self {
        let mut out = Self::zero(trunc);
        if degree.unsigned_abs() as usize <= trunc {
            out.set(degree, m);
        }
        out
    }

    pub fn from_coefficients<I>(trunc: usize, coeffs: I) -> Self
    where
        I: IntoIterator<Item = (i32, Mat2<T>)>,
    {
        let mut out = Self::zero(trunc);
        for (k, m) in coeffs {
            out.set(k, out.coeff(k) + m);
        }
        out
    }

    /// Marks the loop as not asserting the twist condition.
    pub fn untwisted(mut self) -> Self {
        self.twisted = false;
        self
    }

    pub fn is_marked_twisted(&self) -> bool {
        self.twisted
    }

    pub fn truncation(&self) -> usize {
        self.trunc
    }

    fn index(&self, k: i32) -> Option<usize> {
        let idx = k + self.trunc as i32;
        (idx >= 0 && (idx as usize) < self.coeffs.len()).then_some(idx as usize)
    }

    /// Coefficient of `λ^k` (zero outside the stored range).
    pub fn coeff(&self, k: i32) -> Mat2<T> {
        self.index(k).map(|i| self.coeffs[i]).unwrap_or_default()
    }

    /// Panics when `k` is outside `[-N, N]`.
    pub fn set(&mut self, k: i32, m: Mat2<T>) {
        let i = self.index(k).unwrap_or_else(|| panic!("degree {k} outside [-{0}, {0}]", self.trunc));
        self.coeffs[i] = m;
    }

    pub fn degrees(&self) -> impl Iterator<Item = i32> {
        let n = self.trunc as i32;
        -n..=n
    }

    pub fn iter(&self) -> impl Iterator<Item = (i32, &Mat2<T>)> {
        let n = self.trunc as i32;
        self.coeffs.iter().enumerate().map(move |(i, m)| (i as i32 - n, m))
    }

    /// Smallest and largest degree carrying a nonzero coefficient.
    pub fn support(&self) -> Option<(i32, i32)> {
        let mut nz = self.iter().filter(|(_, m)| !m.is_zero()).map(|(k, _)| k);
        let lo = nz.next()?;
        let hi = nz.last().unwrap_or(lo);
        Some((lo, hi))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(Mat2::is_finite)
    }

    /// Same coefficients, re-homed in `[-trunc, trunc]`.
    pub fn with_truncation(&self, trunc: usize) -> Truncated<T> {
        let mut out = Self::zero(trunc);
        out.twisted = self.twisted;
        let mut dropped = Self::zero(self.trunc);
        for (k, m) in self.iter() {
            if k.unsigned_abs() as usize <= trunc {
                out.set(k, *m);
            } else {
                dropped.set(k, *m);
            }
        }
        Truncated { value: out, loss: dropped.wiener_norm() }
    }

    pub fn wiener_norm(&self) -> WienerNorm<T> {
        let mut rows = [T::zero(); 2];
        for m in &self.coeffs {
            for (r, row) in rows.iter_mut().enumerate() {
                *row += m.m[r][0].norm() + m.m[r][1].norm();
            }
        }
        WienerNorm(rows[0].max(rows[1]))
    }

    /// Cauchy product truncated to `max(N_a, N_b)`; the Wiener norm of the
    /// dropped out-of-range terms is reported as `loss`.
    pub fn mul_with_loss(&self, rhs: &Self) -> Truncated<T> {
        let n = self.trunc.max(rhs.trunc) as i32;
        let mut full = vec![Mat2::<T>::zero(); (4 * n + 1) as usize];
        for (i, a) in self.iter().filter(|(_, m)| !m.is_zero()) {
            for (j, b) in rhs.iter().filter(|(_, m)| !m.is_zero()) {
                full[(i + j + 2 * n) as usize] += *a * *b;
            }
        }
        let mut value = Self::zero(n as usize);
        value.twisted = self.twisted && rhs.twisted;
        let mut rows = [T::zero(); 2];
        for (idx, m) in full.into_iter().enumerate() {
            let k = idx as i32 - 2 * n;
            if k.abs() <= n {
                value.set(k, m);
            } else {
                for (r, row) in rows.iter_mut().enumerate() {
                    *row += m.m[r][0].norm() + m.m[r][1].norm();
                }
            }
        }
        Truncated { value, loss: WienerNorm(rows[0].max(rows[1])) }
    }

    pub fn multiply(&self, rhs: &Self) -> Self {
        self.mul_with_loss(rhs).value
    }

    /// `self · (m λ^degree)`, the only product the loop ODE needs.
    pub fn mul_monomial(&self, degree: i32, m: &Mat2<T>) -> Truncated<T> {
        let mut value = Self::zero(self.trunc);
        value.twisted = self.twisted;
        let mut dropped = Self::zero(self.trunc);
        for (k, a) in self.iter().filter(|(_, a)| !a.is_zero()) {
            let target = k + degree;
            if target.unsigned_abs() as usize <= self.trunc {
                value.set(target, *a * *m);
            } else {
                dropped.set(k, *a * *m);
            }
        }
        Truncated { value, loss: dropped.wiener_norm() }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(Mat2<T>, Mat2<T>) -> Mat2<T>) -> Self {
        let n = self.trunc.max(rhs.trunc);
        let mut out = Self::zero(n);
        out.twisted = self.twisted && rhs.twisted;
        for k in out.degrees() {
            out.set(k, f(self.coeff(k), rhs.coeff(k)));
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|m| m.scale_re(s))
    }

    /// Coefficient-wise map that preserves degrees.
    pub fn map(&self, f: impl Fn(&Mat2<T>) -> Mat2<T>) -> Self {
        Self { trunc: self.trunc, coeffs: self.coeffs.iter().map(f).collect(), twisted: self.twisted }
    }

    /// `a + s·b` without allocating an intermediate.
    pub fn axpy(&self, s: T, b: &Self) -> Self {
        self.zip_with(b, |x, y| x + y.scale_re(s))
    }

    /// Evaluation at real `λ₀ ≠ 0` by Horner's scheme in `λ` and `1/λ`.
    pub fn evaluate(&self, lambda0: T) -> Result<Mat2<T>> {
        if lambda0 == T::zero() {
            return Err(Error::ZeroLambda);
        }
        let n = self.trunc as i32;
        let mut pos = Mat2::zero();
        for k in (0..=n).rev() {
            pos = pos.scale_re(lambda0) + self.coeff(k);
        }
        let inv = T::one() / lambda0;
        let mut neg = Mat2::zero();
        for k in (1..=n).rev() {
            neg = (neg + self.coeff(-k)).scale_re(inv);
        }
        Ok(pos + neg)
    }

    /// `d/dt` with `λ = e^t`: coefficient `k` becomes `k·a_k`.
    pub fn lambda_scaled_derivative(&self) -> Self {
        let mut out = self.clone();
        for k in self.degrees() {
            out.set(k, self.coeff(k).scale_re(T::from_i32(k).expect("degree fits")));
        }
        out
    }

    /// Coefficient-wise conjugate transpose. For a loop that is unitary on the
    /// real λ-line this is its inverse.
    pub fn star(&self) -> Self {
        self.map(Mat2::adjoint)
    }

    pub fn transpose(&self) -> Self {
        self.map(Mat2::transpose)
    }

    /// `λ ↦ 1/λ`.
    pub fn reversed(&self) -> Self {
        let mut out = Self::zero(self.trunc);
        out.twisted = self.twisted;
        for (k, m) in self.iter() {
            out.set(-k, *m);
        }
        out
    }

    /// Degrees `≥ 0`.
    pub fn nonnegative_part(&self) -> Self {
        self.filtered(|k| k >= 0)
    }

    /// Degrees `< 0`.
    pub fn negative_part(&self) -> Self {
        self.filtered(|k| k < 0)
    }

    fn filtered(&self, keep: impl Fn(i32) -> bool) -> Self {
        let mut out = Self::zero(self.trunc);
        out.twisted = self.twisted;
        for (k, m) in self.iter() {
            if keep(k) {
                out.set(k, *m);
            }
        }
        out
    }

    /// Largest entry that the twist condition requires to vanish.
    pub fn twist_defect(&self) -> T {
        self.iter().fold(T::zero(), |acc, (k, m)| {
            let bad = if k % 2 == 0 {
                m.m[0][1].norm().max(m.m[1][0].norm())
            } else {
                m.m[0][0].norm().max(m.m[1][1].norm())
            };
            acc.max(bad)
        })
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.sub(other).coeffs.iter().fold(T::zero(), |acc, m| acc.max(m.max_abs()))
    }

    /// Pointwise inverses at the sample points, using `g⁻¹ = g†` on SU(2).
    ///
    /// Determinant drift beyond `warn` is logged; beyond `abort` it is an
    /// error, which usually means the truncation degree is too low.
    pub fn unitary_inverse(&self, samples: &[T], warn: f64, abort: f64) -> Result<Vec<Mat2<T>>> {
        samples
            .iter()
            .map(|&l| {
                let g = self.evaluate(l)?;
                let deviation = g.det_defect().to_f64_lossy().max(g.unitarity_defect().to_f64_lossy());
                if !(deviation <= abort) {
                    return Err(Error::LossOfUnitarity { lambda: l.to_f64_lossy(), deviation });
                }
                if deviation > warn {
                    log::warn!("unitarity drift {deviation:.3e} at lambda = {l}");
                }
                Ok(g.adjoint())
            })
            .collect()
    }

    pub fn to_records(&self) -> Vec<LoopRecord> {
        self.iter()
            .map(|(k, m)| {
                let e = |r: usize, c: usize| m.m[r][c];
                let mut entries = [0.0; 8];
                for (slot, z) in [e(0, 0), e(0, 1), e(1, 0), e(1, 1)].into_iter().enumerate() {
                    entries[2 * slot] = z.re.to_f64_lossy();
                    entries[2 * slot + 1] = z.im.to_f64_lossy();
                }
                LoopRecord { degree: k, entries }
            })
            .collect()
    }

    /// Rebuilds a loop; the truncation is the largest `|degree|` present.
    pub fn from_records(records: &[LoopRecord]) -> Result<Self> {
        let trunc = records.iter().map(|r| r.degree.unsigned_abs() as usize).max().unwrap_or(0);
        let mut out = Self::zero(trunc);
        for r in records {
            let z = |i: usize| Complex::new(T::lit(r.entries[2 * i]), T::lit(r.entries[2 * i + 1]));
            if !out.coeff(r.degree).is_zero() {
                return Err(Error::Serialization(format!("degree {} listed twice", r.degree)));
            }
            out.set(r.degree, Mat2::new(z(0), z(1), z(2), z(3)));
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_records()).expect("records serialize")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let records: Vec<LoopRecord> =
            serde_json::from_str(text).map_err(|e| Error::Serialization(e.to_string()))?;
        Self::from_records(&records)
    }
}

impl<T: Real> std::ops::Mul for &TwistedLoop<T> {
    type Output = TwistedLoop<T>;
    fn mul(self, rhs: Self) -> TwistedLoop<T> {
        self.multiply(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn i_sigma1() -> Mat2<f64> {
        Mat2::pauli(1).scale(Complex::new(0.0, 1.0))
    }

    #[test]
    fn sigma1_product_gives_minus_identity() {
        let a = TwistedLoop::monomial(4, 1, i_sigma1());
        let b = TwistedLoop::monomial(4, -1, i_sigma1());
        let p = a.mul_with_loss(&b);
        assert!(p.value.max_abs_diff(&TwistedLoop::identity(4).scale(-1.0)) < 1e-15);
        assert_eq!(p.loss.value(), 0.0);
    }

    #[test]
    fn evaluate_rejects_zero_and_scales_monomials() {
        let l = TwistedLoop::monomial(3, 1, Mat2::<f64>::pauli(1));
        assert_eq!(l.evaluate(0.0), Err(Error::ZeroLambda));
        let v = l.evaluate(2.0).unwrap();
        assert!(v.max_abs_diff(&Mat2::pauli(1).scale_re(2.0)) < 1e-15);
        let id = TwistedLoop::<f64>::identity(5);
        for lam in [0.3, 1.0, -4.0] {
            assert_eq!(id.evaluate(lam).unwrap(), Mat2::identity());
        }
    }

    #[test]
    fn lambda_derivative_termwise() {
        let c = TwistedLoop::<f64>::identity(3);
        assert!(c.lambda_scaled_derivative().wiener_norm().value() == 0.0);
        let x = Mat2::diag(Complex::new(1.0, 2.0), Complex::new(-0.5, 0.0));
        let l = TwistedLoop::monomial(3, -2, x);
        let d = l.lambda_scaled_derivative();
        assert_eq!(d.coeff(-2), x.scale_re(-2.0));
    }

    #[test]
    fn wiener_norm_of_identity_and_zero() {
        assert_eq!(TwistedLoop::<f64>::identity(6).wiener_norm().value(), 1.0);
        assert_eq!(TwistedLoop::<f64>::zero(6).wiener_norm().value(), 0.0);
    }

    #[test]
    fn truncation_loss_reported() {
        let a = TwistedLoop::monomial(2, 2, Mat2::<f64>::identity());
        let p = a.mul_with_loss(&a);
        assert!(p.value.wiener_norm().value() == 0.0);
        assert_eq!(p.loss.value(), 1.0);
    }

    #[test]
    fn exp_half_sigma1_inverse() {
        let g = Mat2::<f64>::pauli(1).scale(Complex::new(0.0, 0.5)).exp_traceless();
        let expected = Mat2::<f64>::pauli(1).scale(Complex::new(0.0, -0.5)).exp_traceless();
        let l = TwistedLoop::constant(2, g);
        let inv = l.unitary_inverse(&[0.5, 1.0, 2.0], 1e-6, 1e-3).unwrap();
        for m in inv {
            assert!(m.max_abs_diff(&expected) < 1e-15);
        }
    }

    #[test]
    fn unitary_inverse_flags_non_unitary() {
        let l = TwistedLoop::constant(2, Mat2::<f64>::identity().scale_re(1.1));
        assert!(matches!(l.unitary_inverse(&[1.0], 1e-6, 1e-3), Err(Error::LossOfUnitarity { .. })));
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let m = Mat2::new(
            Complex::new(0.1, -0.2),
            Complex::new(1.0 / 3.0, 0.0),
            Complex::new(0.0, 2.5e-17),
            Complex::new(-7.0, 1.0),
        );
        let l = TwistedLoop::from_coefficients(3, [(-3, m), (0, Mat2::identity()), (2, m.adjoint())]).untwisted();
        let back = TwistedLoop::<f64>::from_json(&l.to_json()).unwrap();
        assert_eq!(back.max_abs_diff(&l), 0.0);
    }
}
