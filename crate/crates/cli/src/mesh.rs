//! Wavefront OBJ export and import of grid surfaces.
//!
//! Only regular nodes become vertices. Each grid cell whose four corners are
//! regular gives two triangles `(a, b, c)` and `(a, c, d)` with
//! `a = (i, j)`, `b = (i+1, j)`, `c = (i+1, j+1)`, `d = (i, j+1)`, so the
//! first edge of the first triangle runs along x and the last edge of the
//! second along y. A comment line records the grid for re-import.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use pseudosphere::mat2::{norm, sub3};
use pseudosphere::{SurfaceGrid, Vec3};
use serde::Serialize;

use crate::io::fmt_f64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridHeader {
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub lambda0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub header: Option<GridHeader>,
    pub vertices: Vec<Vec3<f64>>,
    /// Zero-based vertex indices.
    pub faces: Vec<[usize; 3]>,
}

const HEADER_TAG: &str = "# pseudosphere-grid";

pub fn surface_to_mesh(s: &SurfaceGrid<f64>) -> Mesh {
    let sh = s.shape;
    let mut index = vec![usize::MAX; sh.len()];
    let mut vertices = Vec::with_capacity(s.regular_count());
    for k in 0..sh.len() {
        if s.is_regular(k) {
            index[k] = vertices.len();
            vertices.push(s.points[k]);
        }
    }
    let mut faces = Vec::new();
    for i in 0..sh.nx.saturating_sub(1) {
        for j in 0..sh.ny.saturating_sub(1) {
            let q = [sh.idx(i, j), sh.idx(i + 1, j), sh.idx(i + 1, j + 1), sh.idx(i, j + 1)];
            if q.iter().all(|&k| s.is_regular(k)) {
                let [a, b, c, d] = q.map(|k| index[k]);
                faces.push([a, b, c]);
                faces.push([a, c, d]);
            }
        }
    }
    Mesh {
        header: Some(GridHeader { nx: sh.nx, ny: sh.ny, hx: s.hx, hy: s.hy, lambda0: s.lambda0 }),
        vertices,
        faces,
    }
}

pub fn format_obj(mesh: &Mesh) -> String {
    let mut out = String::new();
    if let Some(h) = mesh.header {
        writeln!(out, "{HEADER_TAG} {} {} {} {} {}", h.nx, h.ny, fmt_f64(h.hx), fmt_f64(h.hy), fmt_f64(h.lambda0))
            .unwrap();
    }
    for v in &mesh.vertices {
        writeln!(out, "v {} {} {}", fmt_f64(v[0]), fmt_f64(v[1]), fmt_f64(v[2])).unwrap();
    }
    for f in &mesh.faces {
        writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1).unwrap();
    }
    out
}

pub fn export_mesh(surface: &SurfaceGrid<f64>, path: &Path) -> anyhow::Result<Mesh> {
    let mesh = surface_to_mesh(surface);
    std::fs::write(path, format_obj(&mesh)).with_context(|| format!("writing {}", path.display()))?;
    Ok(mesh)
}

/// Reads `v` and triangular `f` lines (`f a/b/c` forms allowed); other lines
/// are ignored except the grid header comment.
pub fn parse_obj(text: &str) -> anyhow::Result<Mesh> {
    let mut mesh = Mesh { header: None, vertices: Vec::new(), faces: Vec::new() };
    for (n, line) in text.lines().enumerate() {
        let ctx = || format!("line {}", n + 1);
        if let Some(rest) = line.strip_prefix(HEADER_TAG) {
            let p: Vec<&str> = rest.split_whitespace().collect();
            if p.len() != 5 {
                bail!("{}: malformed grid header", ctx());
            }
            mesh.header = Some(GridHeader {
                nx: p[0].parse().with_context(ctx)?,
                ny: p[1].parse().with_context(ctx)?,
                hx: p[2].parse().with_context(ctx)?,
                hy: p[3].parse().with_context(ctx)?,
                lambda0: p[4].parse().with_context(ctx)?,
            });
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let c: Vec<f64> = parts.take(3).map(str::parse).collect::<Result<_, _>>().with_context(ctx)?;
                if c.len() != 3 {
                    bail!("{}: vertex needs 3 coordinates", ctx());
                }
                mesh.vertices.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = parts
                    .map(|t| t.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<Result<_, _>>()
                    .with_context(ctx)?;
                if idx.len() != 3 || idx.iter().any(|&i| i == 0 || i > mesh.vertices.len()) {
                    bail!("{}: expected a triangle with valid 1-based indices", ctx());
                }
                mesh.faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    Ok(mesh)
}

pub fn import_mesh(path: &Path) -> anyhow::Result<Mesh> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_obj(&text)
}

/// Statistics of `|edge length / step − 1|` over grid edges along x and y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EdgeSpeedStats {
    pub edges: usize,
    pub mean_deviation: f64,
    pub max_deviation: f64,
}

fn stats(devs: impl Iterator<Item = f64>) -> EdgeSpeedStats {
    let (mut n, mut sum, mut max) = (0usize, 0.0, 0.0f64);
    for d in devs {
        n += 1;
        sum += d;
        max = max.max(d);
    }
    EdgeSpeedStats { edges: n, mean_deviation: if n > 0 { sum / n as f64 } else { 0.0 }, max_deviation: max }
}

fn deviation(p: &Vec3<f64>, q: &Vec3<f64>, h: f64) -> f64 {
    (norm(&sub3(q, p)) / h - 1.0).abs()
}

/// From the grid directly, over cells with four regular corners.
pub fn grid_edge_speed(s: &SurfaceGrid<f64>) -> EdgeSpeedStats {
    let sh = s.shape;
    let cells = (0..sh.nx.saturating_sub(1)).flat_map(|i| (0..sh.ny.saturating_sub(1)).map(move |j| (i, j)));
    stats(
        cells
            .filter(|&(i, j)| [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)].iter().all(|&(p, q)| s.is_regular(sh.idx(p, q))))
            .flat_map(|(i, j)| {
                [deviation(&s.point(i, j), &s.point(i + 1, j), s.hx), deviation(&s.point(i, j), &s.point(i, j + 1), s.hy)]
            }),
    )
}

/// From an exported mesh, using the triangle layout of [`surface_to_mesh`].
pub fn mesh_edge_speed(mesh: &Mesh) -> anyhow::Result<EdgeSpeedStats> {
    let Some(h) = mesh.header else { bail!("mesh has no grid header") };
    if mesh.faces.len() % 2 != 0 {
        bail!("faces do not come in cell pairs");
    }
    let v = &mesh.vertices;
    Ok(stats(mesh.faces.chunks(2).flat_map(|pair| {
        let ([a, b, _], [_, _, d]) = (pair[0], pair[1]);
        [deviation(&v[a], &v[b], h.hx), deviation(&v[a], &v[d], h.hy)]
    })))
}

#[cfg(test)]
mod tests {
    use super::*;
    use pseudosphere::fd::Shape;
    use pseudosphere::NodeFlag;

    fn flat(nx: usize, ny: usize) -> SurfaceGrid<f64> {
        let shape = Shape { nx, ny };
        let points = (0..shape.len()).map(|k| {
            let (i, j) = shape.ij(k);
            [i as f64 * 0.5, j as f64 * 0.25, 0.0]
        });
        SurfaceGrid {
            shape,
            hx: 0.5,
            hy: 0.25,
            lambda0: 1.0,
            points: points.collect(),
            tangent_x: Vec::new(),
            tangent_y: Vec::new(),
            normal: vec![[0.0, 0.0, 1.0]; shape.len()],
            flags: vec![NodeFlag::Regular; shape.len()],
        }
    }

    #[test]
    fn two_by_two_grid_is_two_triangles() {
        let m = surface_to_mesh(&flat(2, 2));
        assert_eq!(m.vertices.len(), 4);
        assert_eq!(m.faces, vec![[0, 2, 3], [0, 3, 1]]);
    }

    #[test]
    fn flagged_node_drops_incident_faces() {
        let mut s = flat(3, 3);
        s.flags[s.shape.idx(1, 1)] = NodeFlag::AngleSingular;
        let m = surface_to_mesh(&s);
        assert_eq!(m.vertices.len(), 8);
        assert!(m.faces.is_empty());
        s.flags[s.shape.idx(1, 1)] = NodeFlag::Regular;
        s.flags[s.shape.idx(2, 2)] = NodeFlag::BigCellViolation;
        assert_eq!(surface_to_mesh(&s).faces.len(), 6);
    }

    #[test]
    fn obj_roundtrip_is_exact() {
        let mut s = flat(4, 3);
        s.points[5][2] = 1.0 / 3.0;
        let m = surface_to_mesh(&s);
        let back = parse_obj(&format_obj(&m)).unwrap();
        assert_eq!(back, m);
        assert_eq!(mesh_edge_speed(&back).unwrap(), grid_edge_speed(&s));
        assert_eq!(grid_edge_speed(&flat(4, 3)).max_deviation, 0.0);
    }

    #[test]
    fn rejects_out_of_range_faces() {
        assert!(parse_obj("v 0 0 0\nf 1 2 3\n").is_err());
        assert!(parse_obj("v 0 0\n").is_err());
    }
}
