use pseudosphere::goursat::{discrete_residual, immersion_disagreement, integrate_lax};
use pseudosphere::potentials::soliton_angle;
use pseudosphere::surface::{recover_angle_from_connection, sine_gordon_residual};
use pseudosphere::*;

fn grid(n: usize) -> GridSpec<f64> {
    GridSpec::from_bounds(2.0, 2.0, 2.0 / (n - 1) as f64).unwrap()
}

fn soliton(g: &GridSpec<f64>, offset: f64) -> AngleData<f64> {
    Preset::Soliton { a: 1.0, offset }.sample(g).unwrap()
}

#[test]
fn plain_goursat_scheme_is_second_order() {
    let plain = GoursatOptions { richardson: false, ..Default::default() };
    let err = |n: usize| {
        let g = grid(n);
        let u = solve_goursat(&soliton(&g, -4.5), &plain).unwrap();
        u.max_error(|i, j| soliton_angle(1.0, -4.5, g.x(i), g.y(j)))
    };
    let ratio = err(21) / err(41);
    assert!((3.6..4.4).contains(&ratio), "{ratio}");
}

#[test]
fn goursat_fixed_point_for_smooth_data() {
    let g = grid(41);
    let data = AngleData::from_fns(&g, |x| 0.9 + 0.4 * (1.7 * x).sin(), |y| 0.9 - 0.2 * y * y).unwrap();
    let u = solve_goursat(&data, &GoursatOptions { richardson: false, ..Default::default() }).unwrap();
    assert!(discrete_residual(&u) < 1e-6);
    assert!(u.last_change < 1e-12);
}

#[test]
fn loop_pipeline_matches_direct_lax_frames() {
    let g = grid(41);
    let data = soliton(&g, -4.5);
    let built = construct(&data, &Settings::default()).unwrap();
    let u = solve_goursat(&data, &GoursatOptions::default()).unwrap();
    for m in &built.members {
        let lax = integrate_lax(&u, m.surface.lambda0).unwrap();
        let reference = reference_immersion(&lax);
        assert!(immersion_disagreement(&m.surface, &reference) < 5e-3);
        assert!(m.angle.max_error(|i, j| u.get(i, j)) < 5e-3);
    }
}

#[test]
fn two_angle_recoveries_agree() {
    let g = grid(41);
    let data = soliton(&g, -4.5);
    let built = construct(&data, &Settings::default()).unwrap();
    let conn = recover_angle_from_connection(&built.frame, &data, &Settings::default());
    let geo = &built.member(1.0).unwrap().angle;
    assert!(geo.max_diff(&conn) < 1e-2);
    assert!(sine_gordon_residual(&conn) < 1e-2);
}

#[test]
fn amsler_angle_is_radial() {
    let g = grid(41);
    let phi0 = std::f64::consts::FRAC_PI_2;
    let data = Preset::Amsler { phi0 }.sample(&g).unwrap();
    let built = construct(&data, &Settings::default()).unwrap();
    let h = solve_amsler_radial(phi0, 4.0, 1e-3).unwrap();
    let angle = &built.member(1.0).unwrap().angle;
    assert!(angle.max_error(|i, j| h.eval(g.x(i) * g.y(j)).unwrap()) < 1e-3);
}

#[test]
fn crossing_pi_is_flagged_not_fatal() {
    let g = grid(41);
    let built = construct(&soliton(&g, -2.0), &Settings::default()).unwrap();
    let m = built.member(1.0).unwrap();
    assert!(m.angle.singular_count() > 0);
    assert!(m.surface.unit_speed_error() < 1e-3);
    assert!(m.forms.curvature_error() < 2e-2);
}
