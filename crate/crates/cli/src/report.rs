//! JSON run report. Field names are part of the output format; the key
//! lists below are checked against the serialized form in tests.

use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use crate::config::RunConfig;
use crate::mesh::EdgeSpeedStats;

pub const REPORT_KEYS: &[&str] = &["config", "family", "frame", "grid", "members", "oracle", "status"];

pub const MEMBER_KEYS: &[&str] = &[
    "angle_singular_nodes",
    "axis_alpha_error",
    "axis_beta_error",
    "curvature_error",
    "e_g_error",
    "edge_speed",
    "evaluated_nodes",
    "f_cos_error",
    "files",
    "lambda0",
    "lax_path_discrepancy",
    "oracle_disagreement",
    "regular_nodes",
    "second_form_error",
    "sine_gordon_residual",
    "straight_line_residual_x",
    "straight_line_residual_y",
    "unit_speed_error",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridReport {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameReport {
    pub big_cell_violations: usize,
    pub angle_singular_nodes: usize,
    pub max_condition: f64,
    pub max_residual: f64,
    pub truncation_loss: f64,
    pub unitarity_defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberFiles {
    pub mesh: String,
    pub angle: String,
    pub flags: String,
}

/// Metrics of one associated-family member, in its own Tchebychev coordinates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberReport {
    pub lambda0: f64,
    pub regular_nodes: usize,
    pub angle_singular_nodes: usize,
    /// Nodes clear of flags where the form metrics are taken.
    pub evaluated_nodes: usize,
    pub unit_speed_error: f64,
    pub e_g_error: f64,
    pub f_cos_error: f64,
    pub curvature_error: f64,
    pub second_form_error: f64,
    pub sine_gordon_residual: f64,
    pub axis_alpha_error: f64,
    pub axis_beta_error: f64,
    pub straight_line_residual_x: f64,
    pub straight_line_residual_y: f64,
    /// Distance to the direct-Lax reference surface; `null` without oracle.
    pub oracle_disagreement: Option<f64>,
    pub lax_path_discrepancy: Option<f64>,
    pub edge_speed: EdgeSpeedStats,
    pub files: MemberFiles,
}

/// Spread of angle and second fundamental form across the members.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyReport {
    pub angle_spread: f64,
    pub second_form_spread: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub goursat_iterations: usize,
    pub goursat_last_change: f64,
    /// Loop-pipeline angle against the Goursat solution.
    pub angle_error: f64,
    /// Geometric against connection-based angle recovery.
    pub connection_angle_difference: f64,
    /// `φ(x, y)` against `h(xy)`; Amsler only.
    pub amsler_radial_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub status: String,
    pub config: RunConfig,
    pub grid: GridReport,
    pub frame: FrameReport,
    pub family: FamilyReport,
    pub oracle: Option<OracleReport>,
    pub members: Vec<MemberReport>,
}

/// Pretty JSON; non-finite numbers become `null`.
pub fn to_json<S: Serialize>(value: &S) -> anyhow::Result<String> {
    Ok(serde_json::to_string_pretty(value)?)
}

pub fn export_report<S: Serialize>(value: &S, path: &Path) -> anyhow::Result<()> {
    let mut text = to_json(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn empty_metrics_are_an_empty_object() {
        assert_eq!(to_json(&BTreeMap::<String, f64>::new()).unwrap(), "{}");
    }

    #[test]
    fn floats_roundtrip_bit_exactly() {
        let vals = [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, 123456.789e10, f64::MIN_POSITIVE];
        let text = to_json(&vals).unwrap();
        let back: Vec<f64> = serde_json::from_str(&text).unwrap();
        assert!(vals.iter().zip(&back).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}
