//! Reference computations that do not use loops: a Goursat solver for
//! `u_xy = sin u`, direct integration of the Lax system at a fixed `λ₀`
//! (with its `λ`-derivative) and the Amsler radial ODE.

use num_complex::Complex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fd::Shape;
use crate::interp;
use crate::mat2::{sub3, Mat2, Vec3};
use crate::potentials::AngleData;
use crate::scalar::Real;
use crate::surface::{NodeFlag, SurfaceGrid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoursatOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Combine the `h` and `h/2` solutions as `(4u_{h/2} − u_h)/3`.
    pub richardson: bool,
}

impl Default for GoursatOptions {
    fn default() -> Self {
        Self { tolerance: 1e-12, max_iterations: 200, richardson: true }
    }
}

#[derive(Debug, Clone)]
pub struct GoursatField<T> {
    pub shape: Shape,
    pub hx: T,
    pub hy: T,
    pub values: Vec<T>,
    pub iterations: usize,
    pub last_change: f64,
    /// Max-norm change per Picard sweep (of the coarse solve).
    pub trace: Vec<f64>,
}

impl<T: Real> GoursatField<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.shape.idx(i, j)]
    }

    pub fn max_error(&self, reference: impl Fn(usize, usize) -> T) -> T {
        (0..self.shape.len()).fold(T::zero(), |acc, k| {
            let (i, j) = self.shape.ij(k);
            acc.max((self.values[k] - reference(i, j)).abs())
        })
    }
}

/// Fixed point of the trapezoidal discretization of
/// `u(x,y) = α(x) + β(y) − α(0) + ∫₀ˣ∫₀ʸ sin u`, by Picard iteration.
pub fn solve_goursat<T: Real>(data: &AngleData<T>, opts: &GoursatOptions) -> Result<GoursatField<T>> {
    let coarse = trapezoid_picard(data, opts)?;
    if !opts.richardson {
        return Ok(coarse);
    }
    let refine = |v: &[T]| {
        let mids = interp::midpoints(v, 6);
        let mut out = Vec::with_capacity(2 * v.len() - 1);
        for (k, &x) in v.iter().enumerate() {
            out.push(x);
            if let Some(&m) = mids.get(k) {
                out.push(m);
            }
        }
        out
    };
    let two = T::one() + T::one();
    let fine_data = AngleData::new(refine(&data.alpha), refine(&data.beta), data.hx / two, data.hy / two)?;
    let fine = trapezoid_picard(&fine_data, opts)?;
    let three = T::lit(3.0);
    let values = (0..coarse.shape.len())
        .map(|k| {
            let (i, j) = coarse.shape.ij(k);
            (T::lit(4.0) * fine.get(2 * i, 2 * j) - coarse.values[k]) / three
        })
        .collect();
    Ok(GoursatField {
        values,
        iterations: coarse.iterations + fine.iterations,
        last_change: coarse.last_change.max(fine.last_change),
        ..coarse
    })
}

fn trapezoid_picard<T: Real>(data: &AngleData<T>, opts: &GoursatOptions) -> Result<GoursatField<T>> {
    let shape = Shape { nx: data.nx(), ny: data.ny() };
    let cell = data.hx * data.hy / T::lit(4.0);
    let base: Vec<T> = (0..shape.len())
        .map(|k| {
            let (i, j) = shape.ij(k);
            data.alpha[i] + data.beta[j] - data.phi0
        })
        .collect();
    let mut u = base.clone();
    let mut integral = vec![T::zero(); shape.len()];
    let mut trace = Vec::new();
    for it in 1..=opts.max_iterations {
        let s: Vec<T> = u.iter().map(|v| v.sin()).collect();
        for i in 1..shape.nx {
            for j in 1..shape.ny {
                let k = shape.idx(i, j);
                let (w, so, sw) = (shape.idx(i - 1, j), shape.idx(i, j - 1), shape.idx(i - 1, j - 1));
                integral[k] = integral[w] + integral[so] - integral[sw] + cell * (s[k] + s[w] + s[so] + s[sw]);
            }
        }
        let mut change = T::zero();
        for k in 0..shape.len() {
            let next = base[k] + integral[k];
            change = change.max((next - u[k]).abs());
            u[k] = next;
        }
        let c = change.to_f64_lossy();
        trace.push(c);
        if !c.is_finite() {
            break;
        }
        if c < opts.tolerance {
            return Ok(GoursatField {
                shape,
                hx: data.hx,
                hy: data.hy,
                values: u,
                iterations: it,
                last_change: c,
                trace,
            });
        }
    }
    Err(Error::GoursatNonConvergence {
        iterations: trace.len(),
        last_change: trace.last().copied().unwrap_or(f64::NAN),
        trace,
    })
}

/// Largest cell residual of the trapezoidal scheme:
/// `(u₁₁ − u₁₀ − u₀₁ + u₀₀)/(hx·hy) − mean of sin u over the four corners`.
pub fn discrete_residual<T: Real>(field: &GoursatField<T>) -> T {
    let sh = field.shape;
    let mut worst = T::zero();
    for i in 1..sh.nx {
        for j in 1..sh.ny {
            let c = [field.get(i, j), field.get(i - 1, j), field.get(i, j - 1), field.get(i - 1, j - 1)];
            let mixed = (c[0] - c[1] - c[2] + c[3]) / (field.hx * field.hy);
            let mean = c.iter().fold(T::zero(), |a, v| a + v.sin()) / T::lit(4.0);
            worst = worst.max((mixed - mean).abs());
        }
    }
    worst
}

/// Frame value at fixed `λ₀` and its `λ`-derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointFrame<T> {
    pub matrix: Mat2<T>,
    pub lambda_sensitivity: Mat2<T>,
}

#[derive(Debug, Clone)]
pub struct LaxFrames<T> {
    pub shape: Shape,
    pub hx: T,
    pub hy: T,
    pub lambda0: T,
    pub frames: Vec<PointFrame<T>>,
    /// Max difference between the x-first and y-first integrations.
    pub path_discrepancy: T,
}

/// Threshold on [`LaxFrames::path_discrepancy`] used by [`integrate_lax`].
pub const FLATNESS_TOL: f64 = 1e-6;

fn i_half<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::lit(0.5))
}

/// `𝒜 = (i/2)[[φ_x, −λ], [−λ, −φ_x]]`.
fn lax_a<T: Real>(phi_x: T, lambda: T) -> Mat2<T> {
    let z = |v: T| Complex::new(v, T::zero());
    Mat2::new(z(phi_x), z(-lambda), z(-lambda), z(-phi_x)).scale(i_half())
}

/// `ℬ = (i/2)λ⁻¹·offdiag(e^{−iφ}, e^{iφ})`.
fn lax_b<T: Real>(phi: T, lambda: T) -> Mat2<T> {
    Mat2::offdiag(Complex::from_polar(T::one(), -phi), Complex::from_polar(T::one(), phi))
        .scale(i_half::<T>() / lambda)
}

/// One RK4 step of `U' = U·G`, `S' = S·G + U·G_λ` with generators at the
/// start, midpoint and end of the step.
fn rk4_pair<T: Real>(pf: PointFrame<T>, h: T, gens: [(Mat2<T>, Mat2<T>); 3]) -> PointFrame<T> {
    let f = |u: Mat2<T>, s: Mat2<T>, (g, gl): (Mat2<T>, Mat2<T>)| (u * g, s * g + u * gl);
    let half = h / (T::one() + T::one());
    let (u, s) = (pf.matrix, pf.lambda_sensitivity);
    let (k1u, k1s) = f(u, s, gens[0]);
    let (k2u, k2s) = f(u + k1u.scale_re(half), s + k1s.scale_re(half), gens[1]);
    let (k3u, k3s) = f(u + k2u.scale_re(half), s + k2s.scale_re(half), gens[1]);
    let (k4u, k4s) = f(u + k3u.scale_re(h), s + k3s.scale_re(h), gens[2]);
    let sixth = h / T::lit(6.0);
    let two = T::one() + T::one();
    PointFrame {
        matrix: u + (k1u + k2u.scale_re(two) + k3u.scale_re(two) + k4u).scale_re(sixth),
        lambda_sensitivity: s + (k1s + k2s.scale_re(two) + k3s.scale_re(two) + k4s).scale_re(sixth),
    }
}

/// Integrates a line of generators given at nodes and midpoints.
fn integrate_line<T: Real>(
    start: PointFrame<T>,
    h: T,
    nodes: &[(Mat2<T>, Mat2<T>)],
    mids: &[(Mat2<T>, Mat2<T>)],
) -> Vec<PointFrame<T>> {
    let mut out = Vec::with_capacity(nodes.len());
    out.push(start);
    for n in 1..nodes.len() {
        let prev = out[n - 1];
        out.push(rk4_pair(prev, h, [nodes[n - 1], mids[n - 1], nodes[n]]));
    }
    out
}

/// Direct Lax integration with the default flatness threshold.
pub fn integrate_lax<T: Real>(phi: &GoursatField<T>, lambda0: T) -> Result<LaxFrames<T>> {
    let frames = integrate_lax_unchecked(phi, lambda0)?;
    let d = frames.path_discrepancy.to_f64_lossy();
    if !(d <= FLATNESS_TOL) {
        return Err(Error::FlatnessViolation { discrepancy: d });
    }
    Ok(frames)
}

/// `𝒰_x = 𝒰𝒜`, `𝒰_y = 𝒰ℬ` from `𝒰(0,0) = I`: along `y = 0` first, then up
/// every column. The y-first route is also run and the largest difference
/// is reported, without a threshold.
pub fn integrate_lax_unchecked<T: Real>(phi: &GoursatField<T>, lambda0: T) -> Result<LaxFrames<T>> {
    if !(lambda0 > T::zero()) {
        return Err(Error::InvalidInput("lambda0 must be positive".into()));
    }
    let sh = phi.shape;
    let all = vec![true; sh.len()];
    let phi_x: Vec<T> = (0..sh.len())
        .map(|k| {
            let (i, j) = sh.ij(k);
            let st = sh.stencil(&all, phi.hx, true, i, j).expect("full grid has stencils");
            st.iter().fold(T::zero(), |a, &(q, w)| a + w * phi.values[q])
        })
        .collect();
    let a_lambda = Mat2::pauli(1).scale(-i_half::<T>());
    let a_gen = |px: T| (lax_a(px, lambda0), a_lambda);
    let b_gen = |p: T| {
        let b = lax_b(p, lambda0);
        (b, b.scale_re(-T::one() / lambda0))
    };
    let x_line = |j: usize, start: PointFrame<T>| {
        let vals: Vec<T> = (0..sh.nx).map(|i| phi_x[sh.idx(i, j)]).collect();
        let nodes: Vec<_> = vals.iter().map(|&v| a_gen(v)).collect();
        let mids: Vec<_> = interp::midpoints(&vals, 6).into_iter().map(a_gen).collect();
        integrate_line(start, phi.hx, &nodes, &mids)
    };
    let y_line = |i: usize, start: PointFrame<T>| {
        let vals: Vec<T> = (0..sh.ny).map(|j| phi.get(i, j)).collect();
        let nodes: Vec<_> = vals.iter().map(|&v| b_gen(v)).collect();
        let mids: Vec<_> = interp::midpoints(&vals, 6).into_iter().map(b_gen).collect();
        integrate_line(start, phi.hy, &nodes, &mids)
    };
    let origin = PointFrame { matrix: Mat2::identity(), lambda_sensitivity: Mat2::zero() };

    let row0 = x_line(0, origin);
    let columns: Vec<Vec<PointFrame<T>>> = (0..sh.nx).into_par_iter().map(|i| y_line(i, row0[i])).collect();
    let col0 = y_line(0, origin);
    let rows: Vec<Vec<PointFrame<T>>> = (0..sh.ny).into_par_iter().map(|j| x_line(j, col0[j])).collect();

    let mut frames = Vec::with_capacity(sh.len());
    let mut discrepancy = T::zero();
    for i in 0..sh.nx {
        for j in 0..sh.ny {
            let f = columns[i][j];
            discrepancy = discrepancy.max(f.matrix.max_abs_diff(&rows[j][i].matrix));
            frames.push(f);
        }
    }
    Ok(LaxFrames { shape: sh, hx: phi.hx, hy: phi.hy, lambda0, frames, path_discrepancy: discrepancy })
}

/// `ψ_ref = λ₀·S·𝒰⁻¹` in ℝ³ with the same conventions (basepoint, member
/// coordinates, normal) as [`crate::surface::sym_immersion`].
pub fn reference_immersion<T: Real>(lax: &LaxFrames<T>) -> SurfaceGrid<T> {
    let half_i_sigma3 = Mat2::pauli(3).scale(i_half());
    let mut points: Vec<Vec3<T>> = Vec::with_capacity(lax.frames.len());
    let mut normal = Vec::with_capacity(lax.frames.len());
    for f in &lax.frames {
        let inv = f.matrix.adjoint();
        points.push((f.lambda_sensitivity * inv).scale_re(lax.lambda0).to_vec3());
        normal.push((f.matrix * half_i_sigma3 * inv).to_vec3());
    }
    let base = points[0];
    for p in points.iter_mut() {
        *p = sub3(p, &base);
    }
    let mut s = SurfaceGrid {
        shape: lax.shape,
        hx: lax.hx * lax.lambda0,
        hy: lax.hy / lax.lambda0,
        lambda0: lax.lambda0,
        points,
        tangent_x: Vec::new(),
        tangent_y: Vec::new(),
        normal,
        flags: vec![NodeFlag::Regular; lax.shape.len()],
    };
    s.recompute_tangents();
    s
}

/// Largest pointwise distance between two immersions over nodes regular in both.
pub fn immersion_disagreement<T: Real>(a: &SurfaceGrid<T>, b: &SurfaceGrid<T>) -> T {
    (0..a.shape.len())
        .filter(|&k| a.is_regular(k) && b.is_regular(k))
        .fold(T::zero(), |acc, k| acc.max(crate::mat2::norm(&sub3(&a.points[k], &b.points[k]))))
}

/// Samples of the solution of `t·h″ + h′ = sin h`, `h(0) = φ₀`.
#[derive(Debug, Clone)]
pub struct RadialSolution<T> {
    pub t: Vec<T>,
    pub h: Vec<T>,
    pub dh: Vec<T>,
}

impl<T: Real> RadialSolution<T> {
    /// Cubic Hermite interpolation; `None` outside the sampled range.
    pub fn eval(&self, t: T) -> Option<T> {
        let last = *self.t.last()?;
        if t < T::zero() || t > last {
            return None;
        }
        let k = match self.t.binary_search_by(|p| p.partial_cmp(&t).expect("finite samples")) {
            Ok(k) => return Some(self.h[k]),
            Err(k) => k - 1,
        };
        let (t0, t1) = (self.t[k], self.t[k + 1]);
        let d = t1 - t0;
        let s = (t - t0) / d;
        let (s2, s3) = (s * s, s * s * s);
        let two = T::one() + T::one();
        let three = T::lit(3.0);
        let h00 = two * s3 - three * s2 + T::one();
        let h10 = s3 - two * s2 + s;
        let h01 = three * s2 - two * s3;
        let h11 = s3 - s2;
        Some(h00 * self.h[k] + h10 * d * self.dh[k] + h01 * self.h[k + 1] + h11 * d * self.dh[k + 1])
    }
}

/// Series start `h = φ₀ + a₁t + a₂t² + a₃t³` (from `k²aₖ = [sin h]ₖ₋₁`) at
/// `t = dt`, then RK4 on `(h, h′)` with `h″ = (sin h − h′)/t`.
///
/// The equation is regular where `h` crosses `π`; only non-finite steps are
/// failures.
pub fn solve_amsler_radial<T: Real>(phi0: T, t_max: T, dt: T) -> Result<RadialSolution<T>> {
    if !(phi0 > T::zero() && phi0 < T::PI()) {
        return Err(Error::InvalidInput(format!("phi0 = {phi0} must lie in (0, pi)")));
    }
    if !(t_max > T::zero() && dt > T::zero() && dt < t_max) {
        return Err(Error::InvalidInput("radial range needs 0 < dt < t_max".into()));
    }
    let (s, c) = (phi0.sin(), phi0.cos());
    let a1 = s;
    let a2 = c * a1 / T::lit(4.0);
    let a3 = (c * a2 - s * a1 * a1 / T::lit(2.0)) / T::lit(9.0);
    let two = T::one() + T::one();
    let three = T::lit(3.0);
    let mut out = RadialSolution { t: vec![T::zero()], h: vec![phi0], dh: vec![a1] };
    let mut t = dt;
    let mut y = [phi0 + t * (a1 + t * (a2 + t * a3)), a1 + t * (two * a2 + three * a3 * t)];
    out.t.push(t);
    out.h.push(y[0]);
    out.dh.push(y[1]);
    let f = |t: T, y: [T; 2]| [y[1], (y[0].sin() - y[1]) / t];
    while t < t_max {
        let h = dt.min(t_max - t);
        let half = h / two;
        let k1 = f(t, y);
        let k2 = f(t + half, [y[0] + half * k1[0], y[1] + half * k1[1]]);
        let k3 = f(t + half, [y[0] + half * k2[0], y[1] + half * k2[1]]);
        let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        for c in 0..2 {
            y[c] += h / T::lit(6.0) * (k1[c] + two * k2[c] + two * k3[c] + k4[c]);
        }
        t += h;
        if !(y[0].is_finite() && y[1].is_finite()) {
            return Err(Error::RadialStepFailure { t: t.to_f64_lossy(), h: y[0].to_f64_lossy() });
        }
        out.t.push(t);
        out.h.push(y[0]);
        out.dh.push(y[1]);
        if h < dt {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{soliton_angle, GridSpec, Preset};

    fn grid(n: usize) -> GridSpec<f64> {
        let h = 2.0 / (n - 1) as f64;
        GridSpec::new(n, n, h, h).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_field() {
        let d = AngleData::from_fns(&grid(11), |_| 0.0, |_| 0.0).unwrap();
        let u = solve_goursat(&d, &GoursatOptions::default()).unwrap();
        assert!(u.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn boundary_rows_are_the_data() {
        let d = AngleData::from_fns(&grid(11), |x| 0.5 + x.sin(), |y| 0.5 + 0.3 * y).unwrap();
        let u = solve_goursat(&d, &GoursatOptions::default()).unwrap();
        for i in 0..11 {
            assert!((u.get(i, 0) - d.alpha[i]).abs() < 1e-14);
            assert!((u.get(0, i) - d.beta[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn flat_field_lax_frame_is_commuting_exponential() {
        let d = AngleData::from_fns(&grid(21), |_| 0.0, |_| 0.0).unwrap();
        let u = solve_goursat(&d, &GoursatOptions::default()).unwrap();
        let lax = integrate_lax(&u, 1.0).unwrap();
        for k in 0..lax.shape.len() {
            let (i, j) = lax.shape.ij(k);
            let (x, y) = (0.1 * i as f64, 0.1 * j as f64);
            let exact = Mat2::pauli(1).scale(Complex::new(0.0, 0.5 * (y - x))).exp_traceless();
            assert!(lax.frames[k].matrix.max_abs_diff(&exact) < 1e-7);
            assert!(lax.frames[k].matrix.unitarity_defect() < 1e-8);
        }
        assert_eq!(lax.frames[0].matrix, Mat2::identity());
    }

    #[test]
    fn radial_series_start() {
        let phi0 = 1.2f64;
        let r = solve_amsler_radial(phi0, 2.0, 1e-3).unwrap();
        assert_eq!(r.eval(0.0), Some(phi0));
        assert!((r.dh[0] - phi0.sin()).abs() < 1e-15);
        let t = 0.5;
        let h = r.eval(t).unwrap();
        let k = (t / 1e-3) as usize;
        let dd = (r.dh[k + 1] - r.dh[k - 1]) / 2e-3;
        assert!((t * dd + r.dh[k] - h.sin()).abs() < 1e-6);
        assert!(solve_amsler_radial(0.0, 1.0, 1e-3).is_err());
    }

    #[test]
    fn soliton_field_with_richardson() {
        let g = grid(41);
        let d = Preset::Soliton { a: 1.0, offset: -4.5 }.sample(&g).unwrap();
        let u = solve_goursat(&d, &GoursatOptions::default()).unwrap();
        let err = u.max_error(|i, j| soliton_angle(1.0, -4.5, 0.05 * i as f64, 0.05 * j as f64));
        assert!(err < 1e-6, "{err}");
    }
}
