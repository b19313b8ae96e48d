//! Global numerical configuration.

use serde::{Deserialize, Serialize};

/// Truncation degree, λ sample set and the thresholds shared by every stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Settings {
    /// Loops keep degrees in `[-truncation, truncation]`.
    pub truncation: usize,
    /// Real spectral values at which loops are evaluated.
    pub lambda_samples: Vec<f64>,
    /// Exact-structure checks (twist, zero diagonal, ...).
    pub structural_tol: f64,
    pub unitarity_warn: f64,
    pub unitarity_abort: f64,
    /// Largest admissible norm of the top-degree coefficient of an ODE path.
    pub top_coefficient_limit: f64,
    pub big_cell_condition: f64,
    pub big_cell_residual: f64,
    /// Nodes with `|sin φ|` below this are angle-singular.
    pub singular_sin: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            truncation: 16,
            lambda_samples: vec![0.5, 1.0, 2.0],
            structural_tol: 1e-12,
            unitarity_warn: 1e-6,
            unitarity_abort: 1e-3,
            top_coefficient_limit: 1e-8,
            big_cell_condition: 1e8,
            big_cell_residual: 1e-6,
            singular_sin: 1e-3,
        }
    }
}

impl Settings {
    pub fn with_truncation(mut self, n: usize) -> Self {
        self.truncation = n;
        self
    }

    pub fn contains_lambda(&self, lambda: f64) -> bool {
        self.lambda_samples.iter().any(|&s| (s - lambda).abs() <= 1e-12 * s.abs().max(1.0))
    }
}
