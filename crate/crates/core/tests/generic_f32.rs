use pseudosphere::surface::sine_gordon_residual;
use pseudosphere::*;

#[test]
fn single_precision_pipeline_runs() {
    let g = GridSpec::<f32>::new(21, 21, 0.1, 0.1).unwrap();
    let data = Preset::Soliton { a: 1.0f32, offset: -4.5 }.sample(&g).unwrap();
    let settings = Settings { big_cell_residual: 1e-4, top_coefficient_limit: 1e-5, ..Settings::default() };
    let built = construct(&data, &settings).unwrap();
    assert_eq!(built.frame.violation_count(), 0);
    let m = built.member(1.0).unwrap();
    assert!(m.surface.unit_speed_error() < 1e-2);
    assert!(sine_gordon_residual(&m.angle) < 5e-2);
}
