use thiserror::Error;

/// Failures raised by the construction pipeline and its oracles.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("loop evaluation at lambda = 0 is undefined")]
    ZeroLambda,

    #[error("loss of unitarity: |det - 1| = {deviation:.3e} at lambda = {lambda} (truncation degree too low?)")]
    LossOfUnitarity { lambda: f64, deviation: f64 },

    #[error("truncation insufficient: top coefficient norm {norm:.3e} at degree {degree} exceeds {limit:.1e}")]
    TruncationInsufficient { degree: i32, norm: f64, limit: f64 },

    #[error("outside the big cell: residual {residual:.3e}, condition estimate {condition:.3e}")]
    BigCellViolation { residual: f64, condition: f64 },

    #[error("incompatible initial data: alpha(0) = {alpha0} but beta(0) = {beta0} (they must coincide)")]
    Compatibility { alpha0: f64, beta0: f64 },

    #[error("invalid preset: {0}")]
    InvalidPreset(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("Goursat iteration did not converge after {iterations} sweeps (last change {last_change:.3e})")]
    GoursatNonConvergence {
        iterations: usize,
        last_change: f64,
        trace: Vec<f64>,
    },

    #[error("Lax system is not flat for this angle field: path discrepancy {discrepancy:.3e}")]
    FlatnessViolation { discrepancy: f64 },

    #[error("radial ODE step failed at t = {t}: h = {h}")]
    RadialStepFailure { t: f64, h: f64 },

    #[error("loop serialization: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, Error>;
