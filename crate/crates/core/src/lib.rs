//! Pseudospherical surfaces from Goursat data.
//!
//! Two angle functions `α(x)`, `β(y)` with `α(0) = β(0)` determine a surface of
//! Gauss curvature −1 parametrized by asymptotic lines. This crate builds it
//! the loop-group way (loop ODEs along both axes, a Birkhoff factorization per
//! grid node, the Sym formula) and ships independent oracles for
//! cross-checking: a Goursat solver for `φ_xy = sin φ`, direct Lax integration
//! and the Amsler radial ODE.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix `f64`.

pub mod birkhoff;
pub mod error;
pub mod fd;
pub mod goursat;
pub mod interp;
pub mod linalg;
pub mod loop_algebra;
pub mod loop_ode;
pub mod mat2;
pub mod potentials;
pub mod scalar;
pub mod settings;
pub mod surface;

pub use birkhoff::{split, split_opposite, BirkhoffSplit, SplitOrder};
pub use error::{Error, Result};
pub use goursat::{
    integrate_lax, reference_immersion, solve_amsler_radial, solve_goursat, GoursatField, GoursatOptions, LaxFrames,
    RadialSolution,
};
pub use loop_algebra::{TwistedLoop, WienerNorm};
pub use loop_ode::{integrate_minus, integrate_plus, FrameFactorPath, PathSign};
pub use mat2::{Mat2, Vec3};
pub use potentials::{AngleData, Axis, GaugeRotation, GridSpec, PotentialForm, Preset};
pub use scalar::Real;
pub use settings::Settings;
pub use surface::{construct, AngleField, Construction, FrameGrid, NodeFlag, SurfaceGrid};

pub type Mat2f64 = Mat2<f64>;
pub type TwistedLoop64 = TwistedLoop<f64>;
pub type AngleData64 = AngleData<f64>;
pub type GridSpec64 = GridSpec<f64>;
pub type PotentialForm64 = PotentialForm<f64>;
pub type FrameFactorPath64 = FrameFactorPath<f64>;
pub type BirkhoffSplit64 = BirkhoffSplit<f64>;
pub type FrameGrid64 = FrameGrid<f64>;
pub type SurfaceGrid64 = SurfaceGrid<f64>;
pub type AngleField64 = AngleField<f64>;
pub type GoursatField64 = GoursatField<f64>;
pub type LaxFrames64 = LaxFrames<f64>;
pub type Construction64 = Construction<f64>;
