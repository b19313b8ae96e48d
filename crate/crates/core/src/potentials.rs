//! Initial angle data, the symmetric potentials built from it, and the
//! constant diagonal gauge that turns them into normalized potentials.
//!
//! Conventions (fixed once for the whole crate):
//!
//! ```text
//!   ξˣ(x) = (i/2) [[0, e^{ i(α(x)−α(0))}], [e^{−i(α(x)−α(0))}, 0]]
//!   ξʸ(y) = −(i/2) [[0, e^{−i(β(y)−β(0))}], [e^{ i(β(y)−β(0))}, 0]]
//!   R(θ)  = diag(e^{iθ}, e^{−iθ}),   gauge_conjugate(X, R) = R⁻¹ X R
//! ```
//!
//! With the Lax pair `U_x = U·A`, `U_y = U·B` the normalized potentials are
//! `ηˣ = ξˣ` and `ηʸ = R(φ₀/2)⁻¹ ξʸ R(φ₀/2)`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::interp;
use crate::mat2::Mat2;
use crate::scalar::Real;

/// Number of Lagrange points used for potential values at half steps.
pub const POTENTIAL_INTERPOLATION_POINTS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
}

/// Uniform sampling of `[0, (nx-1)·hx] × [0, (ny-1)·hy]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T> {
    pub nx: usize,
    pub ny: usize,
    pub hx: T,
    pub hy: T,
}

impl<T: Real> GridSpec<T> {
    pub fn new(nx: usize, ny: usize, hx: T, hy: T) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidInput(format!("grid needs at least 2×2 nodes, got {nx}×{ny}")));
        }
        if !(hx > T::zero() && hy > T::zero()) {
            return Err(Error::InvalidInput("grid steps must be positive".into()));
        }
        Ok(Self { nx, ny, hx, hy })
    }

    /// Grid covering `[0, x0] × [0, y0]` with step `h` (rounded to whole cells).
    pub fn from_bounds(x0: T, y0: T, h: T) -> Result<Self> {
        if !(x0 > T::zero() && y0 > T::zero() && h > T::zero()) {
            return Err(Error::InvalidInput("domain bounds and step must be positive".into()));
        }
        let cells = |len: T| (len / h).round().to_usize().unwrap_or(0).max(1);
        let (cx, cy) = (cells(x0), cells(y0));
        Self::new(cx + 1, cy + 1, x0 / T::from_usize_lossy(cx), y0 / T::from_usize_lossy(cy))
    }

    pub fn x(&self, i: usize) -> T {
        T::from_usize_lossy(i) * self.hx
    }

    pub fn y(&self, j: usize) -> T {
        T::from_usize_lossy(j) * self.hy
    }
}

/// Angle values along both characteristic axes.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleData<T> {
    pub alpha: Vec<T>,
    pub beta: Vec<T>,
    pub hx: T,
    pub hy: T,
    pub phi0: T,
}

/// Largest admitted `|α(0) − β(0)|`.
pub const COMPATIBILITY_TOL: f64 = 1e-12;

impl<T: Real> AngleData<T> {
    pub fn new(alpha: Vec<T>, beta: Vec<T>, hx: T, hy: T) -> Result<Self> {
        if alpha.len() < 2 || beta.len() < 2 {
            return Err(Error::InvalidInput("alpha and beta need at least two samples".into()));
        }
        if !(hx > T::zero() && hy > T::zero()) {
            return Err(Error::InvalidInput("sample steps must be positive".into()));
        }
        if alpha.iter().chain(&beta).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite angle sample".into()));
        }
        let (a0, b0) = (alpha[0], beta[0]);
        if (a0 - b0).abs().to_f64_lossy() >= COMPATIBILITY_TOL {
            return Err(Error::Compatibility { alpha0: a0.to_f64_lossy(), beta0: b0.to_f64_lossy() });
        }
        Ok(Self { alpha, beta, hx, hy, phi0: a0 })
    }

    pub fn from_fns(grid: &GridSpec<T>, alpha: impl Fn(T) -> T, beta: impl Fn(T) -> T) -> Result<Self> {
        let a = (0..grid.nx).map(|i| alpha(grid.x(i))).collect();
        let b = (0..grid.ny).map(|j| beta(grid.y(j))).collect();
        Self::new(a, b, grid.hx, grid.hy)
    }

    pub fn grid(&self) -> GridSpec<T> {
        GridSpec { nx: self.alpha.len(), ny: self.beta.len(), hx: self.hx, hy: self.hy }
    }

    pub fn nx(&self) -> usize {
        self.alpha.len()
    }

    pub fn ny(&self) -> usize {
        self.beta.len()
    }

    /// Adds a constant to both initial functions.
    pub fn shifted(&self, c: T) -> Self {
        Self {
            alpha: self.alpha.iter().map(|&a| a + c).collect(),
            beta: self.beta.iter().map(|&b| b + c).collect(),
            hx: self.hx,
            hy: self.hy,
            phi0: self.phi0 + c,
        }
    }
}

/// One-variable su(2)-valued form sampled at grid nodes and half steps.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialForm<T> {
    pub axis: Axis,
    /// Power of λ multiplying the form in the loop ODE (+1 for x, −1 for y).
    pub lambda_power: i32,
    pub step: T,
    pub nodes: Vec<Mat2<T>>,
    pub midpoints: Vec<Mat2<T>>,
}

impl<T: Real> PotentialForm<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest violation of: zero diagonal, off-diagonal moduli 1/2,
    /// anti-Hermitian.
    pub fn structure_defect(&self) -> T {
        let half = T::lit(0.5);
        self.nodes.iter().chain(&self.midpoints).fold(T::zero(), |acc, m| {
            let d = m.m[0][0].norm().max(m.m[1][1].norm());
            let r = (m.m[0][1].norm() - half).abs().max((m.m[1][0].norm() - half).abs());
            acc.max(d).max(r).max(m.su2_algebra_defect())
        })
    }
}

/// `sign·(i/2)·offdiag(e^{iθ}, e^{−iθ})`.
fn phase_offdiag<T: Real>(sign: T, theta: T) -> Mat2<T> {
    let i_half = Complex::new(T::zero(), sign * T::lit(0.5));
    Mat2::offdiag(Complex::from_polar(T::one(), theta), Complex::from_polar(T::one(), -theta)).scale(i_half)
}

fn build<T: Real>(axis: Axis, samples: &[T], step: T, sign: T, phase_sign: T) -> PotentialForm<T> {
    let base = samples[0];
    let phases: Vec<T> = samples.iter().map(|&s| phase_sign * (s - base)).collect();
    let mids = interp::midpoints(&phases, POTENTIAL_INTERPOLATION_POINTS);
    PotentialForm {
        axis,
        lambda_power: if axis == Axis::X { 1 } else { -1 },
        step,
        nodes: phases.iter().map(|&t| phase_offdiag(sign, t)).collect(),
        midpoints: mids.iter().map(|&t| phase_offdiag(sign, t)).collect(),
    }
}

pub fn build_symmetric_x<T: Real>(data: &AngleData<T>) -> PotentialForm<T> {
    build(Axis::X, &data.alpha, data.hx, T::one(), T::one())
}

pub fn build_symmetric_y<T: Real>(data: &AngleData<T>) -> PotentialForm<T> {
    build(Axis::Y, &data.beta, data.hy, -T::one(), -T::one())
}

/// Constant diagonal rotation `diag(e^{iθ}, e^{−iθ})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaugeRotation<T> {
    pub theta: T,
    pub matrix: Mat2<T>,
}

impl<T: Real> GaugeRotation<T> {
    pub fn new(theta: T) -> Self {
        Self { theta, matrix: Mat2::phase_diag(theta) }
    }

    pub fn identity() -> Self {
        Self::new(T::zero())
    }

    /// The rotation that restores the base angle `φ₀` on the y-potential.
    pub fn base(phi0: T) -> Self {
        Self::new(phi0 / (T::one() + T::one()))
    }

    pub fn inverse(&self) -> Self {
        Self::new(-self.theta)
    }

    /// `R⁻¹ X R`.
    pub fn conjugate(&self, x: &Mat2<T>) -> Mat2<T> {
        self.matrix.adjoint() * *x * self.matrix
    }
}

pub fn gauge_conjugate<T: Real>(p: &PotentialForm<T>, r0: &GaugeRotation<T>) -> PotentialForm<T> {
    PotentialForm {
        axis: p.axis,
        lambda_power: p.lambda_power,
        step: p.step,
        nodes: p.nodes.iter().map(|m| r0.conjugate(m)).collect(),
        midpoints: p.midpoints.iter().map(|m| r0.conjugate(m)).collect(),
    }
}

/// Normalized potentials `(ηˣ, ηʸ)` of the Lax frame with `U(0,0) = I`.
pub fn normalized_potentials<T: Real>(data: &AngleData<T>) -> (PotentialForm<T>, PotentialForm<T>) {
    let r0 = GaugeRotation::base(data.phi0);
    (build_symmetric_x(data), gauge_conjugate(&build_symmetric_y(data), &r0))
}

/// Closed-form light-cone one-soliton `4·arctan(exp(a·x + y/a + offset))`.
pub fn soliton_angle<T: Real>(a: T, offset: T, x: T, y: T) -> T {
    T::lit(4.0) * (a * x + y / a + offset).exp().atan()
}

/// Offset that keeps `[0, 2]²` clear of the singular level `φ = π` for `a = 1`.
pub const DEFAULT_SOLITON_OFFSET: f64 = -4.5;

#[derive(Debug, Clone, PartialEq)]
pub enum Preset<T> {
    /// `α ≡ β ≡ φ₀`.
    Amsler { phi0: T },
    Soliton { a: T, offset: T },
    Tabulated { alpha: Vec<T>, beta: Vec<T> },
}

impl<T: Real> Preset<T> {
    pub fn sample(&self, grid: &GridSpec<T>) -> Result<AngleData<T>> {
        match self {
            Preset::Amsler { phi0 } => {
                let p = *phi0;
                if !(p > T::zero() && p < T::PI()) {
                    log::warn!("phi0 = {p} is not weakly regular (phi = 0, pi are singular angles)");
                    return Err(Error::InvalidPreset(format!("amsler phi0 = {p} must lie in (0, pi)")));
                }
                AngleData::from_fns(grid, |_| p, |_| p)
            }
            Preset::Soliton { a, offset } => {
                let (a, off) = (*a, *offset);
                if !(a > T::zero()) {
                    return Err(Error::InvalidPreset(format!("soliton parameter a = {a} must be positive")));
                }
                let data = AngleData::from_fns(
                    grid,
                    |x| soliton_angle(a, off, x, T::zero()),
                    |y| soliton_angle(a, off, T::zero(), y),
                )?;
                if data.phi0.sin().abs().to_f64_lossy() < 1e-3 {
                    log::warn!("soliton base angle {} is singular", data.phi0);
                }
                Ok(data)
            }
            Preset::Tabulated { alpha, beta } => AngleData::new(alpha.clone(), beta.clone(), grid.hx, grid.hy),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec<f64> {
        GridSpec::new(21, 21, 0.1, 0.1).unwrap()
    }

    fn i_half_sigma1(sign: f64) -> Mat2<f64> {
        Mat2::pauli(1).scale(Complex::new(0.0, 0.5 * sign))
    }

    #[test]
    fn constant_alpha_gives_i_sigma1_over_two() {
        let d = Preset::Amsler { phi0: 1.1 }.sample(&grid()).unwrap();
        let px = build_symmetric_x(&d);
        let py = build_symmetric_y(&d);
        for m in px.nodes.iter().chain(&px.midpoints) {
            assert!(m.max_abs_diff(&i_half_sigma1(1.0)) < 1e-15);
        }
        for m in py.nodes.iter().chain(&py.midpoints) {
            assert!(m.max_abs_diff(&i_half_sigma1(-1.0)) < 1e-15);
        }
    }

    #[test]
    fn origin_samples_are_fixed() {
        let d = Preset::Soliton { a: 1.3, offset: -1.0 }.sample(&grid()).unwrap();
        assert!(build_symmetric_x(&d).nodes[0].max_abs_diff(&i_half_sigma1(1.0)) < 1e-15);
        assert!(build_symmetric_y(&d).nodes[0].max_abs_diff(&i_half_sigma1(-1.0)) < 1e-15);
    }

    #[test]
    fn phase_pi_flips_sign() {
        let g = GridSpec::new(3, 3, std::f64::consts::PI / 2.0, std::f64::consts::PI / 2.0).unwrap();
        let d = AngleData::from_fns(&g, |x| x, |y| y).unwrap();
        assert!(build_symmetric_x(&d).nodes[2].max_abs_diff(&i_half_sigma1(-1.0)) < 1e-15);
        assert!(build_symmetric_y(&d).nodes[2].max_abs_diff(&i_half_sigma1(1.0)) < 1e-15);
    }

    #[test]
    fn structure_is_exact() {
        let d = AngleData::from_fns(&grid(), |x| 0.7 + x.sin(), |y| 0.7 - 0.3 * y * y).unwrap();
        assert!(build_symmetric_x(&d).structure_defect() < 1e-15);
        assert!(build_symmetric_y(&d).structure_defect() < 1e-15);
    }

    #[test]
    fn double_conjugation_is_identity() {
        let d = AngleData::from_fns(&grid(), |x| 0.7 + x.sin(), |y| 0.7 + y).unwrap();
        let p = build_symmetric_x(&d);
        let r = GaugeRotation::new(0.83);
        let back = gauge_conjugate(&gauge_conjugate(&p, &r), &r.inverse());
        for (a, b) in back.nodes.iter().zip(&p.nodes) {
            assert!(a.max_abs_diff(b) < 1e-14);
        }
        let same = gauge_conjugate(&p, &GaugeRotation::identity());
        assert_eq!(same, p);
    }

    #[test]
    fn constant_shift_acts_by_base_rotation() {
        let d = AngleData::from_fns(&grid(), |x| 0.7 + 0.4 * x.sin(), |y| 0.7 + 0.2 * y).unwrap();
        let c = 0.9;
        let (ex, ey) = normalized_potentials(&d);
        let (sx, sy) = normalized_potentials(&d.shifted(c));
        let r = GaugeRotation::new(c / 2.0);
        let gy = gauge_conjugate(&ey, &r);
        for (a, b) in sy.nodes.iter().zip(&gy.nodes).chain(sy.midpoints.iter().zip(&gy.midpoints)) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
        for (a, b) in sx.nodes.iter().zip(&ex.nodes) {
            assert!(a.max_abs_diff(b) < 1e-12);
        }
    }

    #[test]
    fn presets_validate() {
        let g = grid();
        assert!(matches!(Preset::Amsler { phi0: 0.0 }.sample(&g), Err(Error::InvalidPreset(_))));
        assert!(matches!(Preset::Amsler { phi0: 3.2 }.sample(&g), Err(Error::InvalidPreset(_))));
        assert!(matches!(Preset::Soliton { a: -1.0, offset: 0.0 }.sample(&g), Err(Error::InvalidPreset(_))));
        let d = Preset::Amsler { phi0: std::f64::consts::FRAC_PI_2 }.sample(&g).unwrap();
        assert!(d.alpha.iter().chain(&d.beta).all(|&v| v == std::f64::consts::FRAC_PI_2));
        let s = Preset::Soliton { a: 1.0, offset: 0.0 }.sample(&g).unwrap();
        assert!((s.alpha[0] - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn tabulated_compatibility() {
        let g = GridSpec::new(3, 3, 0.5, 0.5).unwrap();
        let ok = Preset::Tabulated { alpha: vec![1.0; 3], beta: vec![1.0; 3] }.sample(&g);
        assert!(ok.is_ok());
        let bad = Preset::Tabulated { alpha: vec![1.0, 1.1, 1.2], beta: vec![1.5, 1.1, 1.2] }.sample(&g);
        assert!(matches!(bad, Err(Error::Compatibility { .. })));
    }
}
