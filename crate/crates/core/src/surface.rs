//! Extended frame on the grid, Sym immersion, angle recovery and
//! geometric diagnostics.
//!
//! The frame stored at each node is `𝒰 = 𝒰₋·V₊` from the Birkhoff split of
//! `𝒰₋⁻¹𝒰₊`. It agrees with the Lax frame up to a right diagonal factor
//! `R(θ(x))`, `θ = (α(x) − φ₀)/2`, which the Sym formula does not see. The
//! factor is kept per column for connection-based angle recovery.
//!
//! Immersions at `λ₀` are sampled in the member's own Tchebychev coordinates
//! `x* = λ₀x`, `y* = y/λ₀`; there both asymptotic speeds are 1.

use std::collections::VecDeque;

use num_complex::Complex;
use rayon::prelude::*;

use crate::birkhoff::{split_with, BigCellLimits};
use crate::error::{Error, Result};
use crate::fd::Shape;
use crate::loop_algebra::TwistedLoop;
use crate::loop_ode::{integrate_minus, integrate_plus, FrameFactorPath, PathSign};
use crate::mat2::{cross, dot, norm, sub3, Mat2, Vec3};
use crate::potentials::{build_symmetric_x, build_symmetric_y, AngleData, Axis, GaugeRotation};
use crate::scalar::Real;
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeFlag {
    Regular,
    BigCellViolation,
    AngleSingular,
}

impl NodeFlag {
    pub fn is_regular(self) -> bool {
        self == NodeFlag::Regular
    }
}

#[derive(Debug, Clone)]
pub struct FrameGrid<T> {
    pub shape: Shape,
    pub hx: T,
    pub hy: T,
    /// `None` where the split failed.
    pub nodes: Vec<Option<TwistedLoop<T>>>,
    pub flags: Vec<NodeFlag>,
    /// `θᵢ` such that the Lax frame is `𝒰(xᵢ, y)·R(θᵢ)`.
    pub column_gauge: Vec<T>,
    pub lambda_samples: Vec<T>,
    pub max_residual: T,
    pub max_condition: T,
    pub truncation_loss: T,
    pub unitarity_defect: T,
}

impl<T: Real> FrameGrid<T> {
    pub fn node(&self, i: usize, j: usize) -> Option<&TwistedLoop<T>> {
        self.nodes[self.shape.idx(i, j)].as_ref()
    }

    pub fn flag(&self, i: usize, j: usize) -> NodeFlag {
        self.flags[self.shape.idx(i, j)]
    }

    pub fn violation_count(&self) -> usize {
        self.flags.iter().filter(|f| **f == NodeFlag::BigCellViolation).count()
    }

    /// Copies angle-singular flags onto otherwise regular nodes.
    pub fn with_angle_flags(&self, angle: &AngleField<T>) -> Self {
        let mut out = self.clone();
        for (f, a) in out.flags.iter_mut().zip(&angle.flags) {
            if *f == NodeFlag::Regular && *a == NodeFlag::AngleSingular {
                *f = NodeFlag::AngleSingular;
            }
        }
        out
    }

    fn contains_lambda(&self, lambda0: T) -> bool {
        self.lambda_samples.iter().any(|&s| (s - lambda0).abs() <= T::lit(1e-12) * s.abs().max(T::one()))
    }
}

/// `θ` with `R(θ)⁻¹·offdiag(e^{2iθ}, ·)·R(θ)` the untwisted x-generator.
fn gauge_from_generator<T: Real>(g: &Mat2<T>) -> T {
    // upper-right entry is (i/2)·e^{i(α−φ₀)}
    let phase = g.m[0][1] * Complex::new(T::zero(), -(T::one() + T::one()));
    phase.arg() / (T::one() + T::one())
}

/// Builds `𝒰(xᵢ, yⱼ)` at every node from the two axis paths.
///
/// The minus path is de-gauged with `r0` (`R₀⁻¹Û₋R₀`); the plus path is used
/// as is. Big-cell failures are flagged and skipped; a node that loses
/// unitarity beyond the abort level stops the sweep.
pub fn assemble_frame<T: Real>(
    plus: &FrameFactorPath<T>,
    minus: &FrameFactorPath<T>,
    r0: &GaugeRotation<T>,
    settings: &Settings,
) -> Result<FrameGrid<T>> {
    if plus.axis != Axis::X || plus.sign != PathSign::Plus || minus.axis != Axis::Y || minus.sign != PathSign::Minus {
        return Err(Error::InvalidInput("assemble_frame expects an x plus-path and a y minus-path".into()));
    }
    if plus.truncation() != minus.truncation() {
        return Err(Error::InvalidInput("paths have different truncation degrees".into()));
    }
    let shape = Shape { nx: plus.len(), ny: minus.len() };
    let minus = minus.conjugated(r0);
    let minus_star: Vec<TwistedLoop<T>> = minus.values.iter().map(TwistedLoop::star).collect();
    let limits = BigCellLimits::from(settings);
    let samples: Vec<T> = settings.lambda_samples.iter().map(|&l| T::lit(l)).collect();

    type NodeResult<T> = Result<(Option<TwistedLoop<T>>, T, T, T)>;
    let results: Vec<NodeResult<T>> = (0..shape.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = shape.ij(k);
            let g = minus_star[j].multiply(&plus.values[i]);
            match split_with(&g, limits) {
                Ok(s) => {
                    let u = minus.values[j].mul_with_loss(&s.plus_factor);
                    let mut defect = T::zero();
                    for &l in &samples {
                        let m = u.value.evaluate(l)?;
                        defect = defect.max(m.unitarity_defect()).max(m.det_defect());
                    }
                    if !(defect.to_f64_lossy() <= settings.unitarity_abort) {
                        return Err(Error::LossOfUnitarity { lambda: f64::NAN, deviation: defect.to_f64_lossy() });
                    }
                    Ok((Some(u.value), s.residual + u.loss.value(), s.condition_estimate, defect))
                }
                Err(Error::BigCellViolation { residual, condition }) => {
                    log::debug!("big-cell violation at ({i}, {j}): residual {residual:.3e}, condition {condition:.3e}");
                    Ok((None, T::zero(), T::zero(), T::zero()))
                }
                Err(e) => Err(e),
            }
        })
        .collect();

    let mut grid = FrameGrid {
        shape,
        hx: plus.step,
        hy: minus.step,
        nodes: Vec::with_capacity(shape.len()),
        flags: Vec::with_capacity(shape.len()),
        column_gauge: plus.generators.iter().map(gauge_from_generator).collect(),
        lambda_samples: samples,
        max_residual: T::zero(),
        max_condition: T::zero(),
        truncation_loss: plus.truncation_loss + minus.truncation_loss,
        unitarity_defect: plus.unitarity_defect.max(minus.unitarity_defect),
    };
    for r in results {
        let (node, residual, condition, defect) = r?;
        grid.flags.push(if node.is_some() { NodeFlag::Regular } else { NodeFlag::BigCellViolation });
        grid.nodes.push(node);
        grid.max_residual = grid.max_residual.max(residual);
        grid.max_condition = grid.max_condition.max(condition);
        grid.unitarity_defect = grid.unitarity_defect.max(defect);
    }
    if grid.unitarity_defect.to_f64_lossy() > settings.unitarity_warn {
        log::warn!("frame unitarity drift {:.3e}", grid.unitarity_defect.to_f64_lossy());
    }
    let violations = grid.violation_count();
    if violations > 0 {
        log::warn!("{violations} nodes outside the big cell were skipped");
    }
    Ok(grid)
}

/// Potentials, both loop ODEs and the node-wise splitting in one call.
pub fn build_frame<T: Real>(data: &AngleData<T>, settings: &Settings) -> Result<FrameGrid<T>> {
    let (plus, minus) = rayon::join(
        || integrate_plus(&build_symmetric_x(data), settings),
        || integrate_minus(&build_symmetric_y(data), settings),
    );
    assemble_frame(&plus?, &minus?, &GaugeRotation::base(data.phi0), settings)
}

#[derive(Debug, Clone)]
pub struct SurfaceGrid<T> {
    pub shape: Shape,
    /// Steps in the member's Tchebychev coordinates (`λ₀hx`, `hy/λ₀`).
    pub hx: T,
    pub hy: T,
    pub lambda0: T,
    pub points: Vec<Vec3<T>>,
    pub tangent_x: Vec<Vec3<T>>,
    pub tangent_y: Vec<Vec3<T>>,
    pub normal: Vec<Vec3<T>>,
    pub flags: Vec<NodeFlag>,
}

fn nan3<T: Real>() -> Vec3<T> {
    [T::nan(); 3]
}

fn finite3<T: Real>(v: &Vec3<T>) -> bool {
    v.iter().all(|c| c.is_finite())
}

fn weighted_sum<T: Real>(field: &[Vec3<T>], stencil: &[(usize, T)]) -> Vec3<T> {
    stencil.iter().fold([T::zero(); 3], |acc, &(k, w)| {
        [acc[0] + w * field[k][0], acc[1] + w * field[k][1], acc[2] + w * field[k][2]]
    })
}

/// Derivative of a vector field along one axis; NaN where no stencil exists.
fn derivative_field<T: Real>(shape: Shape, field: &[Vec3<T>], valid: &[bool], h: T, along_x: bool) -> Vec<Vec3<T>> {
    (0..shape.len())
        .map(|k| {
            let (i, j) = shape.ij(k);
            shape.stencil(valid, h, along_x, i, j).map(|s| weighted_sum(field, &s)).unwrap_or_else(nan3)
        })
        .collect()
}

impl<T: Real> SurfaceGrid<T> {
    pub fn point(&self, i: usize, j: usize) -> Vec3<T> {
        self.points[self.shape.idx(i, j)]
    }

    pub fn is_regular(&self, k: usize) -> bool {
        self.flags[k].is_regular()
    }

    /// Finite-difference tangents whose stencils stay on regular nodes.
    pub fn recompute_tangents(&mut self) {
        let valid: Vec<bool> = (0..self.shape.len()).map(|k| self.is_regular(k)).collect();
        self.tangent_x = derivative_field(self.shape, &self.points, &valid, self.hx, true);
        self.tangent_y = derivative_field(self.shape, &self.points, &valid, self.hy, false);
    }

    /// Largest `||ψ_x| − 1|`, `||ψ_y| − 1|` over nodes with tangents.
    pub fn unit_speed_error(&self) -> T {
        self.tangent_x.iter().chain(&self.tangent_y).filter(|t| finite3(t)).fold(T::zero(), |acc, t| {
            acc.max((norm(t) - T::one()).abs())
        })
    }

    pub fn regular_count(&self) -> usize {
        self.flags.iter().filter(|f| f.is_regular()).count()
    }
}

/// Sym formula `ψ = λ∂_λ𝒰·𝒰⁻¹` at `λ₀`, mapped to ℝ³, with the frame normal
/// `𝒰(i/2)σ₃𝒰⁻¹` and basepoint `ψ(0,0)` subtracted.
pub fn sym_immersion<T: Real>(frame: &FrameGrid<T>, lambda0: T) -> Result<SurfaceGrid<T>> {
    if !(lambda0 > T::zero()) || !frame.contains_lambda(lambda0) {
        return Err(Error::InvalidInput(format!("lambda0 = {lambda0} is not an evaluation sample")));
    }
    let shape = frame.shape;
    let half_i_sigma3 = Mat2::pauli(3).scale(Complex::new(T::zero(), T::lit(0.5)));
    let evaluated: Vec<Result<(Vec3<T>, Vec3<T>)>> = (0..shape.len())
        .into_par_iter()
        .map(|k| match (&frame.nodes[k], frame.flags[k].is_regular()) {
            (Some(u), true) => {
                let inv = u.evaluate(lambda0)?.adjoint();
                let d = u.lambda_scaled_derivative().evaluate(lambda0)?;
                let uu = u.evaluate(lambda0)?;
                Ok(((d * inv).to_vec3(), (uu * half_i_sigma3 * inv).to_vec3()))
            }
            _ => Ok((nan3(), nan3())),
        })
        .collect();
    let mut points = Vec::with_capacity(shape.len());
    let mut normal = Vec::with_capacity(shape.len());
    for e in evaluated {
        let (p, n) = e?;
        points.push(p);
        normal.push(n);
    }
    let base = points[0];
    if finite3(&base) {
        for p in points.iter_mut() {
            *p = sub3(p, &base);
        }
    }
    let mut s = SurfaceGrid {
        shape,
        hx: frame.hx * lambda0,
        hy: frame.hy / lambda0,
        lambda0,
        points,
        tangent_x: Vec::new(),
        tangent_y: Vec::new(),
        normal,
        flags: frame.flags.clone(),
    };
    s.recompute_tangents();
    Ok(s)
}

pub fn associated_family_sweep<T: Real>(frame: &FrameGrid<T>, lambdas: &[T]) -> Result<Vec<SurfaceGrid<T>>> {
    lambdas.iter().map(|&l| sym_immersion(frame, l)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleSource {
    Geometry,
    Connection,
}

#[derive(Debug, Clone)]
pub struct AngleField<T> {
    pub shape: Shape,
    pub hx: T,
    pub hy: T,
    /// NaN where the angle could not be evaluated.
    pub values: Vec<T>,
    pub flags: Vec<NodeFlag>,
    pub source: AngleSource,
}

impl<T: Real> AngleField<T> {
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[self.shape.idx(i, j)]
    }

    pub fn is_regular(&self, k: usize) -> bool {
        self.flags[k].is_regular() && self.values[k].is_finite()
    }

    pub fn singular_count(&self) -> usize {
        self.flags.iter().filter(|f| **f == NodeFlag::AngleSingular).count()
    }

    /// Largest difference over nodes regular in both fields.
    pub fn max_diff(&self, other: &Self) -> T {
        (0..self.shape.len())
            .filter(|&k| self.is_regular(k) && other.is_regular(k))
            .fold(T::zero(), |acc, k| acc.max((self.values[k] - other.values[k]).abs()))
    }

    /// Largest deviation from a reference function of the grid indices.
    pub fn max_error(&self, reference: impl Fn(usize, usize) -> T) -> T {
        (0..self.shape.len()).filter(|&k| self.is_regular(k)).fold(T::zero(), |acc, k| {
            let (i, j) = self.shape.ij(k);
            acc.max((self.values[k] - reference(i, j)).abs())
        })
    }

    /// Axis restrictions `φ(xᵢ, 0)`, `φ(0, yⱼ)`.
    pub fn axes(&self) -> (Vec<T>, Vec<T>) {
        let a = (0..self.shape.nx).map(|i| self.get(i, 0)).collect();
        let b = (0..self.shape.ny).map(|j| self.get(0, j)).collect();
        (a, b)
    }
}

/// Nearest branch of `raw + 2πk` to `target`.
fn nearest_branch<T: Real>(raw: T, target: T) -> T {
    let two_pi = T::PI() + T::PI();
    raw + ((target - raw) / two_pi).round() * two_pi
}

/// Continuous branch by flood fill from the origin (seeded with `φ₀`);
/// other components are seeded from the nearest axis value.
fn unwrap_angles<T: Real>(shape: Shape, raw: &[T], data: &AngleData<T>) -> Vec<T> {
    let mut out = vec![T::nan(); shape.len()];
    let mut seen = vec![false; shape.len()];
    let seed_value = |i: usize, j: usize| if j <= i { data.alpha[i] } else { data.beta[j] };
    let mut queue = VecDeque::new();
    let mut seeds = std::iter::once(0).chain(0..shape.len());
    loop {
        let Some(s) = seeds.by_ref().find(|&k| !seen[k] && raw[k].is_finite()) else { break };
        let (si, sj) = shape.ij(s);
        let target = if s == 0 { data.phi0 } else { seed_value(si, sj) };
        out[s] = nearest_branch(raw[s], target);
        seen[s] = true;
        queue.push_back(s);
        while let Some(k) = queue.pop_front() {
            let (i, j) = shape.ij(k);
            let mut nbrs = Vec::with_capacity(4);
            if i > 0 {
                nbrs.push(shape.idx(i - 1, j));
            }
            if i + 1 < shape.nx {
                nbrs.push(shape.idx(i + 1, j));
            }
            if j > 0 {
                nbrs.push(shape.idx(i, j - 1));
            }
            if j + 1 < shape.ny {
                nbrs.push(shape.idx(i, j + 1));
            }
            for n in nbrs {
                if !seen[n] && raw[n].is_finite() {
                    seen[n] = true;
                    out[n] = nearest_branch(raw[n], out[k]);
                    queue.push_back(n);
                }
            }
        }
    }
    out
}

fn flag_singular<T: Real>(values: &[T], base: &[NodeFlag], singular_sin: f64) -> Vec<NodeFlag> {
    values
        .iter()
        .zip(base)
        .map(|(v, f)| {
            if *f == NodeFlag::Regular && v.is_finite() && v.sin().abs().to_f64_lossy() < singular_sin {
                NodeFlag::AngleSingular
            } else {
                *f
            }
        })
        .collect()
}

/// Tchebychev angle from the tangents: `cos φ = ψ̂_x·ψ̂_y`,
/// `sin φ = (ψ̂_x × ψ̂_y)·N`. Nodes with `|sin φ| < singular_sin` are flagged.
pub fn recover_angle<T: Real>(surface: &SurfaceGrid<T>, data: &AngleData<T>, settings: &Settings) -> AngleField<T> {
    let raw: Vec<T> = (0..surface.shape.len())
        .map(|k| {
            let (tx, ty, n) = (&surface.tangent_x[k], &surface.tangent_y[k], &surface.normal[k]);
            if !(finite3(tx) && finite3(ty) && finite3(n)) {
                return T::nan();
            }
            let scale = norm(tx) * norm(ty);
            let c = dot(tx, ty) / scale;
            let s = dot(&cross(tx, ty), n) / scale;
            s.atan2(c)
        })
        .collect();
    let values = unwrap_angles(surface.shape, &raw, data);
    let (hx, hy) = (surface.hx / surface.lambda0, surface.hy * surface.lambda0);
    AngleField {
        shape: surface.shape,
        hx,
        hy,
        flags: flag_singular(&values, &surface.flags, settings.singular_sin),
        values,
        source: AngleSource::Geometry,
    }
}

/// Angle read from the connection: the λ⁻¹ coefficient of
/// `𝒰_Lax⁻¹∂_y𝒰_Lax` is `(i/2)·offdiag(e^{−iφ}, e^{iφ})`.
pub fn recover_angle_from_connection<T: Real>(
    frame: &FrameGrid<T>,
    data: &AngleData<T>,
    settings: &Settings,
) -> AngleField<T> {
    let shape = frame.shape;
    let valid: Vec<bool> = (0..shape.len()).map(|k| frame.nodes[k].is_some() && frame.flags[k].is_regular()).collect();
    let minus_two_i = Complex::new(T::zero(), -(T::one() + T::one()));
    let raw: Vec<T> = (0..shape.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = shape.ij(k);
            let Some(st) = shape.stencil(&valid, frame.hy, false, i, j) else { return T::nan() };
            let u = frame.nodes[k].as_ref().expect("valid node");
            let trunc = u.truncation();
            let du = st.iter().fold(TwistedLoop::zero(trunc), |acc, &(q, w)| {
                acc.axpy(w, frame.nodes[q].as_ref().expect("stencil node"))
            });
            let n = trunc as i32;
            let mut c = Mat2::zero();
            for deg in -n..=n {
                c += u.coeff(deg).adjoint() * du.coeff(-1 - deg);
            }
            let c = GaugeRotation::new(frame.column_gauge[i]).conjugate(&c);
            (c.m[1][0] * minus_two_i).arg()
        })
        .collect();
    let values = unwrap_angles(shape, &raw, data);
    AngleField {
        shape,
        hx: frame.hx,
        hy: frame.hy,
        flags: flag_singular(&values, &frame.flags, settings.singular_sin),
        values,
        source: AngleSource::Connection,
    }
}

/// First and second fundamental form coefficients and Gauss curvature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FundamentalForms<T> {
    pub e: T,
    pub f: T,
    pub g: T,
    pub l: T,
    pub m: T,
    pub n: T,
    pub k: T,
}

impl<T: Real> FundamentalForms<T> {
    fn nan() -> Self {
        let x = T::nan();
        Self { e: x, f: x, g: x, l: x, m: x, n: x, k: x }
    }

    pub fn is_finite(&self) -> bool {
        [self.e, self.f, self.g, self.l, self.m, self.n, self.k].iter().all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone)]
pub struct FormsReport<T> {
    pub shape: Shape,
    pub forms: Vec<FundamentalForms<T>>,
    /// Angle used for the `F = cos φ` comparison.
    pub angle: Vec<T>,
    /// Regular nodes at least [`FLAG_MARGIN`] away from any flag.
    pub clear: Vec<bool>,
}

impl<T: Real> FormsReport<T> {
    fn max_over(&self, f: impl Fn(&FundamentalForms<T>, T) -> T) -> T {
        (0..self.forms.len())
            .filter(|&k| self.clear[k] && self.forms[k].is_finite() && self.angle[k].is_finite())
            .fold(T::zero(), |acc, k| acc.max(f(&self.forms[k], self.angle[k])))
    }

    pub fn e_g_error(&self) -> T {
        self.max_over(|p, _| (p.e - T::one()).abs().max((p.g - T::one()).abs()))
    }

    pub fn f_cos_error(&self) -> T {
        self.max_over(|p, phi| (p.f - phi.cos()).abs())
    }

    pub fn curvature_error(&self) -> T {
        self.max_over(|p, _| (p.k + T::one()).abs())
    }

    /// `|L|`, `|N|` (asymptotic lines) and `||M| − sin φ|`.
    pub fn second_form_error(&self) -> T {
        self.max_over(|p, phi| p.l.abs().max(p.n.abs()).max((p.m.abs() - phi.sin().abs()).abs()))
    }

    pub fn evaluated_count(&self) -> usize {
        (0..self.forms.len()).filter(|&k| self.clear[k] && self.forms[k].is_finite()).count()
    }
}

/// Half-width of the derivative stencils; metrics skip nodes this close to a flag.
pub const FLAG_MARGIN: usize = crate::fd::MAX_STENCIL / 2;

/// Regular nodes with no flagged node within [`FLAG_MARGIN`] (Chebyshev distance).
pub fn clear_of_flags(shape: Shape, flags: &[NodeFlag]) -> Vec<bool> {
    let r = FLAG_MARGIN;
    (0..shape.len())
        .map(|k| {
            let (i, j) = shape.ij(k);
            let (i0, i1) = (i.saturating_sub(r), (i + r).min(shape.nx - 1));
            let (j0, j1) = (j.saturating_sub(r), (j + r).min(shape.ny - 1));
            (i0..=i1).all(|p| (j0..=j1).all(|q| flags[shape.idx(p, q)].is_regular()))
        })
        .collect()
}

/// `E, F, G` from the tangents, `L, M, N` from differentiated tangents against
/// the frame normal, `K = (LN − M²)/(EG − F²)`. NaN at flagged nodes.
pub fn fundamental_forms<T: Real>(surface: &SurfaceGrid<T>, angle: &AngleField<T>) -> FormsReport<T> {
    let shape = surface.shape;
    let valid: Vec<bool> = (0..shape.len())
        .map(|k| surface.is_regular(k) && finite3(&surface.tangent_x[k]) && finite3(&surface.tangent_y[k]))
        .collect();
    let xx = derivative_field(shape, &surface.tangent_x, &valid, surface.hx, true);
    let xy = derivative_field(shape, &surface.tangent_x, &valid, surface.hy, false);
    let yx = derivative_field(shape, &surface.tangent_y, &valid, surface.hx, true);
    let yy = derivative_field(shape, &surface.tangent_y, &valid, surface.hy, false);
    let half = T::lit(0.5);
    let forms = (0..shape.len())
        .map(|k| {
            if !valid[k] {
                return FundamentalForms::nan();
            }
            let (tx, ty, nv) = (&surface.tangent_x[k], &surface.tangent_y[k], &surface.normal[k]);
            let (e, f, g) = (dot(tx, tx), dot(tx, ty), dot(ty, ty));
            let (l, n) = (dot(&xx[k], nv), dot(&yy[k], nv));
            let m = (dot(&xy[k], nv) + dot(&yx[k], nv)) * half;
            FundamentalForms { e, f, g, l, m, n, k: (l * n - m * m) / (e * g - f * f) }
        })
        .collect();
    let flags: Vec<NodeFlag> =
        surface.flags.iter().zip(&angle.flags).map(|(a, b)| if a.is_regular() { *b } else { *a }).collect();
    FormsReport { shape, forms, angle: angle.values.clone(), clear: clear_of_flags(shape, &flags) }
}

/// Max of `|φ_xy − sin φ|` over interior nodes clear of flags, with both
/// derivatives taken by the stencils of [`crate::fd`].
pub fn sine_gordon_residual<T: Real>(angle: &AngleField<T>) -> T {
    let shape = angle.shape;
    let valid: Vec<bool> = (0..shape.len()).map(|k| angle.is_regular(k)).collect();
    let phi_x: Vec<T> = (0..shape.len())
        .map(|k| {
            let (i, j) = shape.ij(k);
            shape
                .stencil(&valid, angle.hx, true, i, j)
                .map(|s| s.iter().fold(T::zero(), |acc, &(q, w)| acc + w * angle.values[q]))
                .unwrap_or_else(T::nan)
        })
        .collect();
    // φ_x enters the y-stencil only where it is itself clear of flags
    let clear = clear_of_flags(shape, &angle.flags);
    let valid_x: Vec<bool> = phi_x.iter().zip(&clear).map(|(v, c)| v.is_finite() && *c).collect();
    let interior = |k: usize| {
        let (i, j) = shape.ij(k);
        i > 0 && j > 0 && i + 1 < shape.nx && j + 1 < shape.ny
    };
    (0..shape.len()).filter(|&k| clear[k] && valid_x[k] && interior(k)).fold(T::zero(), |acc, k| {
        let (i, j) = shape.ij(k);
        match shape.stencil(&valid_x, angle.hy, false, i, j) {
            Some(s) => {
                let phi_xy = s.iter().fold(T::zero(), |a, &(q, w)| a + w * phi_x[q]);
                acc.max((phi_xy - angle.values[k].sin()).abs())
            }
            None => acc,
        }
    })
}

/// Largest distance of the finite points from their principal line.
pub fn collinearity_residual<T: Real>(points: &[Vec3<T>]) -> T {
    let pts: Vec<&Vec3<T>> = points.iter().filter(|p| finite3(p)).collect();
    if pts.len() < 3 {
        return T::zero();
    }
    let count = T::from_usize_lossy(pts.len());
    let mut mean = [T::zero(); 3];
    for p in &pts {
        for c in 0..3 {
            mean[c] += p[c] / count;
        }
    }
    let centred: Vec<Vec3<T>> = pts.iter().map(|p| sub3(p, &mean)).collect();
    let mut cov = [[T::zero(); 3]; 3];
    for p in &centred {
        for r in 0..3 {
            for c in 0..3 {
                cov[r][c] += p[r] * p[c];
            }
        }
    }
    // power iteration from the farthest point's direction
    let mut dir = *centred.iter().max_by(|a, b| norm(a).partial_cmp(&norm(b)).unwrap()).expect("nonempty");
    if norm(&dir) == T::zero() {
        return T::zero();
    }
    for _ in 0..200 {
        let next = [dot(&cov[0], &dir), dot(&cov[1], &dir), dot(&cov[2], &dir)];
        let len = norm(&next);
        if len == T::zero() {
            break;
        }
        dir = [next[0] / len, next[1] / len, next[2] / len];
    }
    centred.iter().fold(T::zero(), |acc, p| {
        let along = dot(p, &dir);
        let perp = [p[0] - along * dir[0], p[1] - along * dir[1], p[2] - along * dir[2]];
        acc.max(norm(&perp))
    })
}

/// One associated-family member with its recovered angle and forms.
#[derive(Debug, Clone)]
pub struct Member<T> {
    pub surface: SurfaceGrid<T>,
    pub angle: AngleField<T>,
    pub forms: FormsReport<T>,
}

#[derive(Debug, Clone)]
pub struct Construction<T> {
    /// Frame carrying both big-cell and angle-singular flags.
    pub frame: FrameGrid<T>,
    /// One member per entry of `Settings::lambda_samples`, same order.
    pub members: Vec<Member<T>>,
}

impl<T: Real> Construction<T> {
    pub fn member(&self, lambda0: T) -> Option<&Member<T>> {
        self.members.iter().find(|m| (m.surface.lambda0 - lambda0).abs() <= T::lit(1e-12) * lambda0.abs().max(T::one()))
    }
}

/// Whole pipeline. A first pass at the first λ sample locates angle-singular nodes;
/// every member is then computed with those nodes flagged, so that no
/// stencil crosses them.
pub fn construct<T: Real>(data: &AngleData<T>, settings: &Settings) -> Result<Construction<T>> {
    let Some(&l0) = settings.lambda_samples.first() else {
        return Err(Error::InvalidInput("no lambda samples".into()));
    };
    let first = build_frame(data, settings)?;
    let probe = sym_immersion(&first, T::lit(l0))?;
    let frame = first.with_angle_flags(&recover_angle(&probe, data, settings));
    let members = settings
        .lambda_samples
        .iter()
        .map(|&l| {
            let surface = sym_immersion(&frame, T::lit(l))?;
            let angle = recover_angle(&surface, data, settings);
            let forms = fundamental_forms(&surface, &angle);
            Ok(Member { surface, angle, forms })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Construction { frame, members })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{GridSpec, Preset};

    fn soliton(n: usize) -> AngleData<f64> {
        let g = GridSpec::new(n, n, 2.0 / (n - 1) as f64, 2.0 / (n - 1) as f64).unwrap();
        Preset::Soliton { a: 1.0, offset: crate::potentials::DEFAULT_SOLITON_OFFSET }.sample(&g).unwrap()
    }

    #[test]
    fn origin_is_identity_and_x_axis_is_plus_path() {
        let d = soliton(11);
        let s = Settings::default();
        let plus = integrate_plus(&build_symmetric_x(&d), &s).unwrap();
        let frame = build_frame(&d, &s).unwrap();
        assert!(frame.node(0, 0).unwrap().max_abs_diff(&TwistedLoop::identity(16)) < 1e-14);
        for i in 0..11 {
            assert!(frame.node(i, 0).unwrap().max_abs_diff(&plus.values[i]) < 1e-12);
        }
        assert_eq!(frame.violation_count(), 0);
    }

    #[test]
    fn gauge_angle_read_from_generator() {
        let d = soliton(11);
        let plus = integrate_plus(&build_symmetric_x(&d), &Settings::default()).unwrap();
        for (g, a) in plus.generators.iter().zip(&d.alpha) {
            let theta = gauge_from_generator(g);
            assert!((theta - (a - d.phi0) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn lambda_outside_samples_rejected() {
        let d = soliton(6);
        let frame = build_frame(&d, &Settings::default()).unwrap();
        assert!(sym_immersion(&frame, 3.0).is_err());
        assert!(sym_immersion(&frame, 1.0).is_ok());
    }

    #[test]
    fn unwrap_follows_continuity() {
        let shape = Shape { nx: 4, ny: 1 };
        let g = GridSpec::new(4, 2, 1.0, 1.0).unwrap();
        let d = AngleData::from_fns(&g, |_| 3.0, |_| 3.0).unwrap();
        let raw = [3.0, -3.0, -2.9, 3.1];
        let out = unwrap_angles(shape, &raw, &d);
        let tau = 2.0 * std::f64::consts::PI;
        assert_eq!(out, vec![3.0, tau - 3.0, tau - 2.9, 3.1]);
    }

    #[test]
    fn collinear_points_have_zero_residual() {
        let pts: Vec<Vec3<f64>> = (0..10).map(|k| [k as f64, 2.0 * k as f64, -0.5 * k as f64]).collect();
        assert!(collinearity_residual(&pts) < 1e-12);
        let mut bent = pts.clone();
        bent[5][2] += 0.1;
        assert!(collinearity_residual(&bent) > 0.05);
    }

    #[test]
    fn flags_clear_neighbourhood() {
        let shape = Shape { nx: 4, ny: 4 };
        let mut flags = vec![NodeFlag::Regular; 16];
        flags[shape.idx(1, 1)] = NodeFlag::AngleSingular;
        let clear = clear_of_flags(shape, &flags);
        assert!(!clear[shape.idx(0, 0)] && !clear[shape.idx(3, 3)]);
        let shape = Shape { nx: 6, ny: 6 };
        let mut flags = vec![NodeFlag::Regular; 36];
        flags[shape.idx(1, 1)] = NodeFlag::BigCellViolation;
        let clear = clear_of_flags(shape, &flags);
        assert!(!clear[shape.idx(3, 3)] && !clear[shape.idx(4, 4)] && clear[shape.idx(5, 5)] && clear[shape.idx(0, 5)]);
    }
}
