//! Loop-valued linear initial value problems along the coordinate axes.
//!
//! The plus path solves `Û₊′ = Û₊·(−λ ξˣ)` and the minus path
//! `Û₋′ = Û₋·(−λ⁻¹ ξʸ)`, both starting from the identity loop. Each RK4 step
//! multiplies by a single monomial, so after `m` steps only degrees up to `m`
//! (resp. down to `−m`) can be nonzero.

use crate::error::{Error, Result};
use crate::loop_algebra::TwistedLoop;
use crate::mat2::Mat2;
use crate::potentials::{Axis, GaugeRotation, PotentialForm};
use crate::scalar::Real;
use crate::settings::Settings;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathSign {
    /// Non-negative powers of λ.
    Plus,
    /// Non-positive powers of λ.
    Minus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameFactorPath<T> {
    pub axis: Axis,
    pub sign: PathSign,
    pub step: T,
    pub values: Vec<TwistedLoop<T>>,
    /// Potential samples at the nodes: `U⁻¹U′ = −λ^{±1}·generator`.
    pub generators: Vec<Mat2<T>>,
    /// Wiener norm of every product term dropped by truncation, summed.
    pub truncation_loss: T,
    /// Largest norm seen at the outermost stored degree.
    pub top_coefficient: T,
    /// Largest pointwise unitarity/determinant defect over nodes and λ samples.
    pub unitarity_defect: T,
}

impl<T: Real> FrameFactorPath<T> {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn truncation(&self) -> usize {
        self.values.first().map(TwistedLoop::truncation).unwrap_or(0)
    }

    /// `R⁻¹·U·R` node-wise (and the same on the generators).
    pub fn conjugated(&self, r: &GaugeRotation<T>) -> Self {
        let rm = r.matrix;
        let rinv = rm.adjoint();
        Self {
            values: self.values.iter().map(|u| u.map(|m| rinv * *m * rm)).collect(),
            generators: self.generators.iter().map(|g| r.conjugate(g)).collect(),
            ..self.clone()
        }
    }
}

fn rk4_path<T: Real>(potential: &PotentialForm<T>, settings: &Settings) -> Result<FrameFactorPath<T>> {
    let n = settings.truncation;
    if n == 0 {
        return Err(Error::InvalidInput("truncation degree must be positive".into()));
    }
    if potential.midpoints.len() + 1 != potential.nodes.len() {
        return Err(Error::InvalidInput("potential needs one midpoint per grid cell".into()));
    }
    let deg = potential.lambda_power;
    let h = potential.step;
    let half = h / (T::one() + T::one());
    let sixth = h / T::lit(6.0);
    let samples: Vec<T> = settings.lambda_samples.iter().map(|&l| T::lit(l)).collect();

    let mut u = TwistedLoop::identity(n);
    let mut values = Vec::with_capacity(potential.len());
    let mut loss = T::zero();
    let mut top = T::zero();
    let mut unitarity = T::zero();
    let rhs = |y: &TwistedLoop<T>, p: &Mat2<T>, loss: &mut T| {
        let r = y.mul_monomial(deg, &(-*p));
        *loss += r.loss.value();
        r.value
    };
    let edge = if deg > 0 { n as i32 } else { -(n as i32) };

    for (idx, node) in potential.nodes.iter().enumerate() {
        if idx > 0 {
            let p0 = &potential.nodes[idx - 1];
            let pm = &potential.midpoints[idx - 1];
            let mut step_loss = T::zero();
            let k1 = rhs(&u, p0, &mut step_loss);
            let k2 = rhs(&u.axpy(half, &k1), pm, &mut step_loss);
            let k3 = rhs(&u.axpy(half, &k2), pm, &mut step_loss);
            let k4 = rhs(&u.axpy(h, &k3), node, &mut step_loss);
            let incr = k1.add(&k2.scale(T::lit(2.0))).add(&k3.scale(T::lit(2.0))).add(&k4);
            u = u.axpy(sixth, &incr);
            loss += step_loss * h;
        }
        let top_here = u.coeff(edge).row_sum_norm();
        top = top.max(top_here);
        if top_here.to_f64_lossy() > settings.top_coefficient_limit {
            return Err(Error::TruncationInsufficient {
                degree: edge,
                norm: top_here.to_f64_lossy(),
                limit: settings.top_coefficient_limit,
            });
        }
        for &l in &samples {
            let g = u.evaluate(l)?;
            let d = g.unitarity_defect().max(g.det_defect());
            unitarity = unitarity.max(d);
            let df = d.to_f64_lossy();
            if !(df <= settings.unitarity_abort) {
                return Err(Error::LossOfUnitarity { lambda: l.to_f64_lossy(), deviation: df });
            }
        }
        values.push(u.clone());
    }
    if unitarity.to_f64_lossy() > settings.unitarity_warn {
        log::warn!("{:?}-path unitarity drift {:.3e}", potential.axis, unitarity.to_f64_lossy());
    }
    Ok(FrameFactorPath {
        axis: potential.axis,
        sign: if deg > 0 { PathSign::Plus } else { PathSign::Minus },
        step: h,
        values,
        generators: potential.nodes.clone(),
        truncation_loss: loss,
        top_coefficient: top,
        unitarity_defect: unitarity,
    })
}

/// RK4 solution of `Û₊′ = −λ·Û₊·ξˣ`, `Û₊(0) = I`.
pub fn integrate_plus<T: Real>(xi_x: &PotentialForm<T>, settings: &Settings) -> Result<FrameFactorPath<T>> {
    if xi_x.axis != Axis::X || xi_x.lambda_power != 1 {
        return Err(Error::InvalidInput("integrate_plus expects an x-potential with power +1".into()));
    }
    rk4_path(xi_x, settings)
}

/// RK4 solution of `Û₋′ = −λ⁻¹·Û₋·ξʸ`, `Û₋(0) = I`.
pub fn integrate_minus<T: Real>(xi_y: &PotentialForm<T>, settings: &Settings) -> Result<FrameFactorPath<T>> {
    if xi_y.axis != Axis::Y || xi_y.lambda_power != -1 {
        return Err(Error::InvalidInput("integrate_minus expects a y-potential with power -1".into()));
    }
    rk4_path(xi_y, settings)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potentials::{build_symmetric_x, build_symmetric_y, AngleData, GridSpec, Preset};

    #[test]
    fn paths_start_at_identity() {
        let g = GridSpec::new(11, 11, 0.1, 0.1).unwrap();
        let d = AngleData::from_fns(&g, |x| 1.0 + 0.3 * x, |y| 1.0 - 0.2 * y).unwrap();
        let s = Settings::default();
        let p = integrate_plus(&build_symmetric_x(&d), &s).unwrap();
        let m = integrate_minus(&build_symmetric_y(&d), &s).unwrap();
        assert_eq!(p.values[0], TwistedLoop::identity(16));
        assert_eq!(m.values[0], TwistedLoop::identity(16));
        assert_eq!(p.sign, PathSign::Plus);
        assert_eq!(m.sign, PathSign::Minus);
    }

    #[test]
    fn axis_mismatch_rejected() {
        let g = GridSpec::new(5, 5, 0.1, 0.1).unwrap();
        let d = Preset::Amsler { phi0: 1.0 }.sample(&g).unwrap();
        let s = Settings::default();
        assert!(integrate_plus(&build_symmetric_y(&d), &s).is_err());
        assert!(integrate_minus(&build_symmetric_x(&d), &s).is_err());
    }

    #[test]
    fn low_truncation_is_signalled() {
        let g = GridSpec::new(41, 2, 0.1, 0.1).unwrap();
        let d = Preset::Amsler { phi0: 1.0 }.sample(&g).unwrap();
        let s = Settings::default().with_truncation(4);
        assert!(matches!(
            integrate_plus(&build_symmetric_x(&d), &s),
            Err(Error::TruncationInsufficient { .. })
        ));
    }
}
