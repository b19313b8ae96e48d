//! CSV reading and writing for axis data and node fields.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use pseudosphere::surface::AngleField;
use pseudosphere::NodeFlag;

/// Fixed float formatting for every text artifact (17 significant digits).
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else {
        format!("{v:.16e}")
    }
}

/// Samples of one axis function: `(coordinate, value)` rows, header allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSamples {
    pub step: f64,
    pub values: Vec<f64>,
}

pub fn read_axis_csv(path: &Path) -> anyhow::Result<AxisSamples> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_axis_csv(&text).with_context(|| format!("in {}", path.display()))
}

/// Two numeric columns on a uniform grid starting at 0. A first row that does
/// not parse is taken as a header.
pub fn parse_axis_csv(text: &str) -> anyhow::Result<AxisSamples> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        if rec.len() != 2 {
            bail!("row {}: expected 2 columns, found {}", n + 1, rec.len());
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(t), Ok(v)) => rows.push((t, v)),
            _ if n == 0 => continue,
            _ => bail!("row {}: not a number", n + 1),
        }
    }
    if rows.len() < 2 {
        bail!("need at least two samples");
    }
    if rows[0].0.abs() > 1e-12 {
        bail!("samples must start at coordinate 0, got {}", rows[0].0);
    }
    let step = rows[1].0 - rows[0].0;
    if !(step > 0.0) {
        bail!("coordinates must increase");
    }
    for (k, (t, _)) in rows.iter().enumerate() {
        if (t - step * k as f64).abs() > 1e-9 * step.max(1.0) * (k as f64 + 1.0) {
            bail!("coordinates are not uniform at row {}", k + 1);
        }
    }
    Ok(AxisSamples { step, values: rows.into_iter().map(|(_, v)| v).collect() })
}

pub fn format_axis_csv(name: &str, step: f64, values: &[f64]) -> String {
    let mut out = format!("t,{name}\n");
    for (k, v) in values.iter().enumerate() {
        writeln!(out, "{},{}", fmt_f64(step * k as f64), fmt_f64(*v)).unwrap();
    }
    out
}

/// Header row of y values, then one row per x: `x, f(x, y_0), f(x, y_1), ...`.
pub fn format_grid_csv(nx: usize, ny: usize, hx: f64, hy: f64, cell: impl Fn(usize, usize) -> String) -> String {
    let mut out = String::from("x\\y");
    for j in 0..ny {
        write!(out, ",{}", fmt_f64(hy * j as f64)).unwrap();
    }
    out.push('\n');
    for i in 0..nx {
        out.push_str(&fmt_f64(hx * i as f64));
        for j in 0..ny {
            out.push(',');
            out.push_str(&cell(i, j));
        }
        out.push('\n');
    }
    out
}

/// Angle grid; singular and unresolved nodes are written as `nan`.
pub fn format_angle_csv(angle: &AngleField<f64>) -> String {
    let sh = angle.shape;
    format_grid_csv(sh.nx, sh.ny, angle.hx, angle.hy, |i, j| {
        let k = sh.idx(i, j);
        fmt_f64(if angle.is_regular(k) { angle.values[k] } else { f64::NAN })
    })
}

pub fn flag_code(f: NodeFlag) -> u8 {
    match f {
        NodeFlag::Regular => 0,
        NodeFlag::BigCellViolation => 1,
        NodeFlag::AngleSingular => 2,
    }
}

/// Flag grid with codes 0 regular, 1 big-cell violation, 2 angle-singular.
pub fn format_flags_csv(angle: &AngleField<f64>) -> String {
    let sh = angle.shape;
    format_grid_csv(sh.nx, sh.ny, angle.hx, angle.hy, |i, j| flag_code(angle.flags[sh.idx(i, j)]).to_string())
}

/// Reads a grid CSV back into row-major values (`nan` allowed).
pub fn parse_grid_csv(text: &str) -> anyhow::Result<(usize, usize, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let ny = reader.headers()?.len().saturating_sub(1);
    let mut values = Vec::new();
    let mut nx = 0;
    for rec in reader.records() {
        let rec = rec?;
        for cell in rec.iter().skip(1) {
            values.push(cell.parse::<f64>().with_context(|| format!("bad cell {cell:?}"))?);
        }
        nx += 1;
    }
    if values.len() != nx * ny {
        bail!("ragged grid");
    }
    Ok((nx, ny, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_csv_roundtrip() {
        let vals = [1.0, 1.0 + 1.0 / 3.0, -0.25];
        let text = format_axis_csv("alpha", 0.1, &vals);
        let back = parse_axis_csv(&text).unwrap();
        assert_eq!(back.values, vals);
        assert!((back.step - 0.1).abs() < 1e-15);
    }

    #[test]
    fn axis_csv_rejects_bad_grids() {
        assert!(parse_axis_csv("0,1\n0.1,2\n0.3,3\n").is_err());
        assert!(parse_axis_csv("0.5,1\n0.6,2\n").is_err());
        assert!(parse_axis_csv("0,1\n").is_err());
        assert!(parse_axis_csv("0,1,2\n0.1,2,3\n").is_err());
    }

    #[test]
    fn grid_csv_layout() {
        let text = format_grid_csv(2, 3, 0.5, 0.25, |i, j| (10 * i + j).to_string());
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("x\\y,0.0000000000000000e0,2.5"));
        assert!(lines.next().unwrap().ends_with(",0,1,2"));
        let (nx, ny, v) = parse_grid_csv(&text).unwrap();
        assert_eq!((nx, ny), (2, 3));
        assert_eq!(v[4], 11.0);
        assert_eq!(parse_grid_csv("x\\y,0\n0,nan\n").unwrap().2[0].is_nan(), true);
    }
}
