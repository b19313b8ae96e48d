//! Birkhoff factorization of truncated loops by coefficient matching.
//!
//! `split` writes `g = P·M⁻¹` with `P` in degrees `≥ 0` and `M = I + Σ_{k<0} m_k λ^k`.
//! The unknown blocks solve the block-Toeplitz system
//!
//! ```text
//!   Σ_{j=-N}^{-1} g_{k-j} m_j = −g_k,    k = −N..−1
//! ```
//!
//! which is exact at truncation order. Exactly singular or badly conditioned
//! systems are reported as [`Error::BigCellViolation`], never solved in a
//! least-squares sense.

use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, Lu};
use crate::loop_algebra::TwistedLoop;
use crate::mat2::Mat2;
use crate::scalar::Real;
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitOrder {
    /// `g = plus · minus⁻¹`, minus normalized.
    PlusMinusInverse,
    /// `g = plus · minus`, plus normalized.
    PlusMinus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BirkhoffSplit<T> {
    pub plus_factor: TwistedLoop<T>,
    pub minus_factor: TwistedLoop<T>,
    pub order: SplitOrder,
    /// Wiener norm of the negative part left in `g·M`, including products
    /// that fell below degree `−N`.
    pub residual: T,
    pub condition_estimate: T,
}

impl<T: Real> BirkhoffSplit<T> {
    /// Multiplies the factors back together.
    pub fn reconstruct(&self) -> TwistedLoop<T> {
        match self.order {
            SplitOrder::PlusMinusInverse => self.plus_factor.multiply(&inverse_normalized(&self.minus_factor)),
            SplitOrder::PlusMinus => self.plus_factor.multiply(&self.minus_factor),
        }
    }
}

/// Thresholds that decide big-cell membership.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BigCellLimits {
    pub condition: f64,
    pub residual: f64,
}

impl Default for BigCellLimits {
    fn default() -> Self {
        Settings::default().into()
    }
}

impl From<Settings> for BigCellLimits {
    fn from(s: Settings) -> Self {
        Self { condition: s.big_cell_condition, residual: s.big_cell_residual }
    }
}

impl From<&Settings> for BigCellLimits {
    fn from(s: &Settings) -> Self {
        Self { condition: s.big_cell_condition, residual: s.big_cell_residual }
    }
}

pub fn split<T: Real>(g: &TwistedLoop<T>) -> Result<BirkhoffSplit<T>> {
    split_with(g, BigCellLimits::default())
}

pub fn split_with<T: Real>(g: &TwistedLoop<T>, limits: BigCellLimits) -> Result<BirkhoffSplit<T>> {
    let n = g.truncation();
    let mut minus = TwistedLoop::identity(n);
    let mut condition = T::one();
    if n > 0 {
        let ni = n as i32;
        let dim = 2 * n;
        let mut a = DenseMatrix::zeros(dim, dim);
        let mut rhs = DenseMatrix::zeros(dim, 2);
        for (bk, k) in (-ni..0).enumerate() {
            let gk = g.coeff(k);
            for r in 0..2 {
                for c in 0..2 {
                    rhs[(2 * bk + r, c)] = -gk.m[r][c];
                }
            }
            for (bj, j) in (-ni..0).enumerate() {
                let block = g.coeff(k - j);
                for r in 0..2 {
                    for c in 0..2 {
                        a[(2 * bk + r, 2 * bj + c)] = block.m[r][c];
                    }
                }
            }
        }
        let violation = || Error::BigCellViolation { residual: f64::INFINITY, condition: f64::INFINITY };
        let lu = Lu::factor(&a).ok_or_else(violation)?;
        condition = lu.condition_1();
        let sol = lu.solve(&rhs);
        for (bj, j) in (-ni..0).enumerate() {
            let e = |r: usize, c: usize| sol[(2 * bj + r, c)];
            minus.set(j, Mat2::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1)));
        }
    }
    let gm = g.mul_with_loss(&minus);
    let residual = gm.value.negative_part().wiener_norm().value() + gm.loss.value();
    let split = BirkhoffSplit {
        plus_factor: gm.value.nonnegative_part(),
        minus_factor: minus,
        order: SplitOrder::PlusMinusInverse,
        residual,
        condition_estimate: condition,
    };
    check_limits(split, limits)
}

fn check_limits<T: Real>(split: BirkhoffSplit<T>, limits: BigCellLimits) -> Result<BirkhoffSplit<T>> {
    let (res, cond) = (split.residual.to_f64_lossy(), split.condition_estimate.to_f64_lossy());
    if !(cond <= limits.condition) || !(res <= limits.residual) {
        return Err(Error::BigCellViolation { residual: res, condition: cond });
    }
    Ok(split)
}

/// `g = g₊*·g₋` with `g₊*(0) = I`.
///
/// Transposing and inverting `λ` turns this into an ordinary [`split`]:
/// `ĝ(λ) = g(1/λ)ᵀ = P·M⁻¹` gives `g₋ = P(1/λ)ᵀ` and `g₊* = (M(1/λ)ᵀ)⁻¹`.
pub fn split_opposite<T: Real>(g: &TwistedLoop<T>) -> Result<BirkhoffSplit<T>> {
    split_opposite_with(g, BigCellLimits::default())
}

pub fn split_opposite_with<T: Real>(g: &TwistedLoop<T>, limits: BigCellLimits) -> Result<BirkhoffSplit<T>> {
    let s = split_with(&g.reversed().transpose(), limits)?;
    let normalized_plus = s.minus_factor.reversed().transpose();
    Ok(BirkhoffSplit {
        plus_factor: inverse_normalized(&normalized_plus),
        minus_factor: s.plus_factor.reversed().transpose(),
        order: SplitOrder::PlusMinus,
        residual: s.residual,
        condition_estimate: s.condition_estimate,
    })
}

/// Inverse of a one-sided loop with constant term `I`.
///
/// When `‖m − I‖ < 1` the truncated Neumann series is summed; otherwise
/// `m·X = I` is solved degree by degree. For strictly one-sided `m − I` both
/// are exact at truncation order. Panics on two-sided input.
pub fn inverse_normalized<T: Real>(m: &TwistedLoop<T>) -> TwistedLoop<T> {
    let delta = m.sub(&TwistedLoop::identity(m.truncation()));
    if delta.wiener_norm().value() < T::one() {
        inverse_neumann(m)
    } else {
        inverse_recursive(m)
    }
}

fn one_sided_direction<T: Real>(m: &TwistedLoop<T>) -> i32 {
    let delta = m.sub(&TwistedLoop::identity(m.truncation()));
    match delta.support() {
        None => 1,
        Some((lo, hi)) if lo > 0 && hi > 0 => 1,
        Some((lo, hi)) if lo < 0 && hi < 0 => -1,
        Some(_) => panic!("inverse_normalized expects I plus a strictly one-sided loop"),
    }
}

/// `Σ_{k=0}^{N} (−Δ)^k`; `Δ^k` has degree at least `k` in modulus, so the
/// sum terminates.
pub fn inverse_neumann<T: Real>(m: &TwistedLoop<T>) -> TwistedLoop<T> {
    one_sided_direction(m);
    let n = m.truncation();
    let neg_delta = TwistedLoop::identity(n).sub(m);
    let mut term = TwistedLoop::identity(n);
    let mut acc = TwistedLoop::identity(n);
    for _ in 0..n {
        term = term.multiply(&neg_delta);
        acc = acc.add(&term);
    }
    acc
}

/// Solves `m·X = I` for `X_{s·k}`, `k = 1..N`, where `s` is the side of `m`.
pub fn inverse_recursive<T: Real>(m: &TwistedLoop<T>) -> TwistedLoop<T> {
    let s = one_sided_direction(m);
    let n = m.truncation() as i32;
    let mut x = TwistedLoop::identity(n as usize);
    for k in 1..=n {
        let mut acc = Mat2::zero();
        for j in 1..=k {
            acc += m.coeff(s * j) * x.coeff(s * (k - j));
        }
        x.set(s * k, -acc);
    }
    x
}
