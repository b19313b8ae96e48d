//! End-to-end run: data, construction, oracles, files, report.

use std::path::Path;

use anyhow::{bail, Context};
use pseudosphere::goursat::{immersion_disagreement, integrate_lax_unchecked, FLATNESS_TOL};
use pseudosphere::surface::{
    clear_of_flags, collinearity_residual, recover_angle_from_connection, sine_gordon_residual, Member,
};
use pseudosphere::{
    construct, reference_immersion, solve_amsler_radial, solve_goursat, AngleData, Construction, GoursatField,
    GoursatOptions, GridSpec, Preset, Settings,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{PresetKind, RunConfig};
use crate::io::{format_angle_csv, format_flags_csv, read_axis_csv};
use crate::mesh::{export_mesh, grid_edge_speed};
use crate::report::{
    export_report, FamilyReport, FrameReport, GridReport, MemberFiles, MemberReport, OracleReport, Report,
};

/// Grid covering `[0, x0] × [0, y0]` with steps close to `hx`, `hy`.
pub fn grid_for(config: &RunConfig) -> anyhow::Result<GridSpec<f64>> {
    let cells = |len: f64, h: f64| ((len / h).round() as usize).max(1);
    let (cx, cy) = (cells(config.x0, config.hx), cells(config.y0, config.hy));
    Ok(GridSpec::new(cx + 1, cy + 1, config.x0 / cx as f64, config.y0 / cy as f64)?)
}

/// `φ₀ + Σₖ aₖ sin(ωₖ t)` on both axes, with `φ₀ ∈ [0.6, 1.2]`.
pub fn random_data(seed: u64, grid: &GridSpec<f64>) -> anyhow::Result<AngleData<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let phi0 = rng.gen_range(0.6..1.2);
    let mut series = || -> Vec<(f64, f64)> {
        (1..=3).map(|k| (rng.gen_range(-0.3..0.3) / k as f64, rng.gen_range(0.5..2.5))).collect()
    };
    let (a, b) = (series(), series());
    let eval = |s: &[(f64, f64)], t: f64| phi0 + s.iter().map(|(c, w)| c * (w * t).sin()).sum::<f64>();
    Ok(AngleData::from_fns(grid, |x| eval(&a, x), |y| eval(&b, y))?)
}

pub fn load_data(config: &RunConfig) -> anyhow::Result<AngleData<f64>> {
    let grid = grid_for(config)?;
    let data = match config.preset {
        PresetKind::Amsler => Preset::Amsler { phi0: config.phi0 }.sample(&grid)?,
        PresetKind::Soliton => Preset::Soliton { a: config.soliton_a, offset: config.soliton_offset }.sample(&grid)?,
        PresetKind::Random => random_data(config.seed, &grid)?,
        PresetKind::Tabulated => {
            let (Some(pa), Some(pb)) = (&config.alpha, &config.beta) else {
                bail!("tabulated data needs both alpha and beta files");
            };
            let (a, b) = (read_axis_csv(pa)?, read_axis_csv(pb)?);
            AngleData::new(a.values, b.values, a.step, b.step)?
        }
    };
    Ok(data)
}

/// Everything a run computes, kept in memory for inspection.
pub struct RunOutcome {
    pub data: AngleData<f64>,
    pub construction: Construction<f64>,
    pub goursat: Option<GoursatField<f64>>,
    pub report: Report,
}

fn axis_errors(m: &Member<f64>, data: &AngleData<f64>) -> (f64, f64) {
    let (a, b) = m.angle.axes();
    let err = |got: &[f64], want: &[f64]| {
        got.iter().zip(want).filter(|(g, _)| g.is_finite()).fold(0.0f64, |acc, (g, w)| acc.max((g - w).abs()))
    };
    (err(&a, &data.alpha), err(&b, &data.beta))
}

fn straight_lines(m: &Member<f64>) -> (f64, f64) {
    let s = &m.surface;
    let xs: Vec<_> = (0..s.shape.nx).map(|i| s.point(i, 0)).collect();
    let ys: Vec<_> = (0..s.shape.ny).map(|j| s.point(0, j)).collect();
    (collinearity_residual(&xs), collinearity_residual(&ys))
}

/// Largest node-wise spread of the angle and of `L, M, N` across members,
/// over nodes clear of flags in every member.
pub fn family_spread(members: &[Member<f64>]) -> FamilyReport {
    let Some(first) = members.first() else {
        return FamilyReport { angle_spread: 0.0, second_form_spread: 0.0 };
    };
    let n = first.surface.shape.len();
    let clear: Vec<bool> = (0..n).map(|k| members.iter().all(|m| m.forms.clear[k])).collect();
    let (mut angle, mut second) = (0.0f64, 0.0f64);
    for m in &members[1..] {
        for k in (0..n).filter(|&k| clear[k]) {
            let (p, q) = (&first.forms.forms[k], &m.forms.forms[k]);
            if p.is_finite() && q.is_finite() {
                second = second.max((p.l - q.l).abs()).max((p.m - q.m).abs()).max((p.n - q.n).abs());
            }
            let d = (first.angle.values[k] - m.angle.values[k]).abs();
            if d.is_finite() {
                angle = angle.max(d);
            }
        }
    }
    FamilyReport { angle_spread: angle, second_form_spread: second }
}

/// File stem suffix for a member, e.g. `lambda_0.5`.
pub fn member_tag(lambda0: f64) -> String {
    format!("lambda_{lambda0}")
}

/// Computes everything and writes the artifacts into `config.out`.
pub fn run_pipeline(config: &RunConfig) -> anyhow::Result<RunOutcome> {
    config.validate()?;
    let settings: Settings = config.settings();
    let data = load_data(config)?;
    let construction = construct(&data, &settings)?;
    let frame = &construction.frame;
    let grid = data.grid();

    let goursat = if config.oracle {
        Some(solve_goursat(&data, &GoursatOptions::default()).context("Goursat oracle")?)
    } else {
        None
    };

    let out: &Path = &config.out;
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;

    let mut members = Vec::with_capacity(construction.members.len());
    for m in &construction.members {
        let l = m.surface.lambda0;
        let tag = member_tag(l);
        let files = MemberFiles {
            mesh: format!("surface_{tag}.obj"),
            angle: format!("angle_{tag}.csv"),
            flags: format!("flags_{tag}.csv"),
        };
        export_mesh(&m.surface, &out.join(&files.mesh))?;
        std::fs::write(out.join(&files.angle), format_angle_csv(&m.angle))?;
        std::fs::write(out.join(&files.flags), format_flags_csv(&m.angle))?;

        let (oracle_disagreement, lax_path_discrepancy) = match &goursat {
            Some(u) => {
                let lax = integrate_lax_unchecked(u, l)?;
                if lax.path_discrepancy > FLATNESS_TOL {
                    log::warn!("direct Lax frames are path dependent at lambda = {l}: {:.3e}", lax.path_discrepancy);
                }
                let reference = reference_immersion(&lax);
                (Some(immersion_disagreement(&m.surface, &reference)), Some(lax.path_discrepancy))
            }
            None => (None, None),
        };
        let (axis_alpha_error, axis_beta_error) = axis_errors(m, &data);
        let (straight_line_residual_x, straight_line_residual_y) = straight_lines(m);
        members.push(MemberReport {
            lambda0: l,
            regular_nodes: m.surface.regular_count(),
            angle_singular_nodes: m.angle.singular_count(),
            evaluated_nodes: m.forms.evaluated_count(),
            unit_speed_error: m.surface.unit_speed_error(),
            e_g_error: m.forms.e_g_error(),
            f_cos_error: m.forms.f_cos_error(),
            curvature_error: m.forms.curvature_error(),
            second_form_error: m.forms.second_form_error(),
            sine_gordon_residual: sine_gordon_residual(&m.angle),
            axis_alpha_error,
            axis_beta_error,
            straight_line_residual_x,
            straight_line_residual_y,
            oracle_disagreement,
            lax_path_discrepancy,
            edge_speed: grid_edge_speed(&m.surface),
            files,
        });
    }

    let oracle = match &goursat {
        Some(u) => {
            let first = &construction.members[0];
            let clear = clear_of_flags(first.angle.shape, &first.angle.flags);
            let angle_error = (0..u.values.len())
                .filter(|&k| clear[k] && first.angle.is_regular(k))
                .fold(0.0f64, |acc, k| acc.max((first.angle.values[k] - u.values[k]).abs()));
            let conn = recover_angle_from_connection(frame, &data, &settings);
            let amsler_radial_error = if config.preset == PresetKind::Amsler {
                let t_max = grid.x(grid.nx - 1) * grid.y(grid.ny - 1);
                let h = solve_amsler_radial(data.phi0, t_max, 1e-3)?;
                Some(first.angle.max_error(|i, j| h.eval(grid.x(i) * grid.y(j)).unwrap_or(f64::NAN)))
            } else {
                None
            };
            Some(OracleReport {
                goursat_iterations: u.iterations,
                goursat_last_change: u.last_change,
                angle_error,
                connection_angle_difference: first.angle.max_diff(&conn),
                amsler_radial_error,
            })
        }
        None => None,
    };

    let report = Report {
        status: "ok".into(),
        config: config.clone(),
        grid: GridReport { nx: grid.nx, ny: grid.ny, hx: grid.hx, hy: grid.hy },
        frame: FrameReport {
            big_cell_violations: frame.violation_count(),
            angle_singular_nodes: construction.members[0].angle.singular_count(),
            max_condition: frame.max_condition,
            max_residual: frame.max_residual,
            truncation_loss: frame.truncation_loss,
            unitarity_defect: frame.unitarity_defect,
        },
        family: family_spread(&construction.members),
        oracle,
        members,
    };
    export_report(&report, &out.join("report.json"))?;
    Ok(RunOutcome { data, construction, goursat, report })
}
