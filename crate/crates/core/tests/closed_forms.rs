use num_complex::Complex;
use pseudosphere::potentials::build_symmetric_x;
use pseudosphere::surface::{build_frame, collinearity_residual, sym_immersion};
use pseudosphere::*;

fn amsler_plus_error(h: f64, lambda: f64) -> f64 {
    let n = (1.0 / h).round() as usize + 1;
    let grid = GridSpec::new(n, 2, h, h).unwrap();
    let data = AngleData::from_fns(&grid, |_| 1.1, |_| 1.1).unwrap();
    let settings = Settings { lambda_samples: vec![0.5, 1.0, 2.0, lambda], ..Settings::default() };
    let path = integrate_plus(&build_symmetric_x(&data), &settings).unwrap();
    // Û₊′ = −λÛ₊·(i/2)σ₁ with constant generator
    let exact = Mat2::pauli(1).scale(Complex::new(0.0, -0.5 * lambda)).exp_traceless();
    path.values.last().unwrap().evaluate(lambda).unwrap().max_abs_diff(&exact)
}

#[test]
fn constant_potential_is_a_matrix_exponential() {
    for l in [0.5, 1.0, 2.0] {
        assert!(amsler_plus_error(0.01, l) < 1e-9, "lambda {l}");
    }
}

#[test]
fn loop_rk4_is_fourth_order() {
    let (e1, e2) = (amsler_plus_error(0.25, 4.0), amsler_plus_error(0.125, 4.0));
    let order = (e1 / e2).log2();
    assert!(order >= 3.8, "order {order}");
}

// RK4 error scales with (λh)⁴: at h = 0.05 and λ = 2 it is about 1e-7.
#[test]
fn zero_angle_frame_is_a_commuting_exponential() {
    let grid = GridSpec::new(101, 101, 0.02, 0.02).unwrap();
    let data = AngleData::from_fns(&grid, |_| 0.0, |_| 0.0).unwrap();
    let settings = Settings::default();
    let frame = build_frame(&data, &settings).unwrap();
    assert_eq!(frame.violation_count(), 0);
    let mut worst = 0.0f64;
    for i in 0..101 {
        for j in 0..101 {
            let u = frame.node(i, j).unwrap();
            for &l in &settings.lambda_samples {
                let t = 0.5 * (grid.y(j) / l - l * grid.x(i));
                let exact = Mat2::pauli(1).scale(Complex::new(0.0, t)).exp_traceless();
                worst = worst.max(u.evaluate(l).unwrap().max_abs_diff(&exact));
            }
        }
    }
    assert!(worst < 1e-8, "{worst}");
    for l in [0.5, 1.0, 2.0] {
        let s = sym_immersion(&frame, l).unwrap();
        assert!(collinearity_residual(&s.points) < 1e-8);
    }
}
