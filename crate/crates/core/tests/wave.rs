use cspat::harness::{Scene, SceneSpec};
use cspat::phantom::gaussian_bump;
use cspat::wave::{
    adjoint_w, forward_w, verify_commutation, PressureField, Sponge, WaveConfig, WaveOperator,
};
use cspat::{relative_l2_error, DetectorGeometry, Grid2D, SensorData, SourceImage, TimeAxis};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scene64() -> Scene {
    SceneSpec::new(64, 100, 301, 8).build().unwrap()
}

fn random_source(scene: &Scene, rng: &mut ChaCha8Rng) -> SourceImage {
    let img = SourceImage::from_fn(scene.grid, |_, _| rng.random_range(-1.0..1.0));
    img.masked_to_disc(scene.geometry.center, scene.support_radius())
}

fn random_data(op: &WaveOperator, rng: &mut ChaCha8Rng) -> SensorData {
    let axis = *op.time_axis();
    let values = Array2::from_shape_simple_fn((op.num_sensors(), axis.num_samples), || {
        rng.random_range(-1.0..1.0)
    });
    SensorData::new(axis, values).unwrap()
}

fn heterogeneous(scene: &Scene) -> Scene {
    let c = SourceImage::from_fn(scene.grid, |x, y| {
        1.0 + 0.1 * (0.15 * x).sin() * (0.1 * y + 0.3).cos()
    });
    scene.clone().with_sound_speed(c).unwrap()
}

#[test]
fn zero_source_gives_zero_data() {
    let s = scene64();
    let d = forward_w(&SourceImage::zeros(s.grid), &s.wave, &s.geometry).unwrap();
    assert_eq!(d.rows(), 100);
    assert_eq!(d.time_axis().num_samples, 301);
    assert!(d.values().iter().all(|v| *v == 0.0));
}

#[test]
fn zero_data_gives_zero_image() {
    let s = scene64();
    let d = SensorData::zeros(100, s.wave.time_axis);
    let img = adjoint_w(&d, &s.wave, &s.geometry).unwrap();
    assert_eq!(img.norm(), 0.0);
}

#[test]
fn forward_is_linear() {
    let s = scene64();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let op = WaveOperator::new(&s.wave, &s.geometry).unwrap();
    let f1 = random_source(&s, &mut rng);
    let f2 = random_source(&s, &mut rng);
    let (a, b) = (0.7, -2.3);
    let lhs = op.forward(&f1.lincomb(a, &f2, b)).unwrap();
    let rhs = op.forward(&f1).unwrap().lincomb(a, &op.forward(&f2).unwrap(), b);
    assert!(lhs.lincomb(1.0, &rhs, -1.0).norm() <= 1e-12 * rhs.norm());
}

#[test]
fn adjoint_is_linear_in_data() {
    let s = scene64();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let op = WaveOperator::new(&s.wave, &s.geometry).unwrap();
    let g1 = random_data(&op, &mut rng);
    let g2 = random_data(&op, &mut rng);
    let lhs = op.adjoint(&g1.lincomb(1.5, &g2, 0.25)).unwrap();
    let rhs = op.adjoint(&g1).unwrap().lincomb(1.5, &op.adjoint(&g2).unwrap(), 0.25);
    assert!(relative_l2_error(&lhs, &rhs).unwrap() <= 1e-12);
}

fn dot_test(scene: &Scene, pairs: usize, seed: u64) -> f64 {
    let op = WaveOperator::new(&scene.wave, &scene.geometry).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        // sources are not restricted here: the adjoint identity holds on the whole grid
        let f = SourceImage::from_fn(scene.grid, |_, _| rng.random_range(-1.0..1.0));
        let g = random_data(&op, &mut rng);
        let lhs = op.forward(&f).unwrap().dot(&g);
        let rhs = f.dot(&op.adjoint(&g).unwrap());
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()));
    }
    worst
}

#[test]
fn adjoint_passes_dot_product_test() {
    let worst = dot_test(&scene64(), 20, 3);
    assert!(worst <= 1e-8, "worst relative mismatch {worst:e}");
}

#[test]
fn adjoint_with_substeps_and_heterogeneous_medium() {
    // 61 samples force several internal steps per output sample
    let s = heterogeneous(&SceneSpec::new(48, 40, 61, 6).build().unwrap());
    assert!(s.wave.cfl_substeps > 1);
    let worst = dot_test(&s, 5, 4);
    assert!(worst <= 1e-8, "worst relative mismatch {worst:e}");
}

#[test]
fn leapfrog_solution_is_even_in_time() {
    let s = SceneSpec::new(48, 40, 101, 0).build().unwrap();
    let cfg = WaveConfig::new(s.wave.sound_speed.clone(), s.wave.time_axis, Sponge::none()).unwrap();
    let op = WaveOperator::new(&cfg, &s.geometry).unwrap();
    let f = gaussian_bump(&s.grid, &s.geometry, [1.0, 2.0], 2.5, 1.0).unwrap();

    let mut forward = PressureField::start(&op, &f).unwrap();
    let mut backward = PressureField::start(&op, &f).unwrap();
    // backward: (p₀, p₁) → (p₋₁, p₀) → ...
    backward.step_back();
    let p0 = backward.current();
    assert_eq!(p0.as_slice(), f.as_slice());
    for s in 1..60 {
        backward.step_back();
        let negative = backward.current(); // p₋ₛ
        let positive = forward.current(); // pₛ
        let err = relative_l2_error(&negative, &positive).unwrap();
        assert!(err <= 1e-13, "step {s}: {err:e}");
        forward.step();
    }
}

#[test]
fn leapfrog_is_reversible() {
    let s = scene64();
    let op = WaveOperator::new(&s.wave, &s.geometry).unwrap();
    let f = gaussian_bump(&s.grid, &s.geometry, [0.0, 0.0], 3.0, 1.0).unwrap();
    let mut field = PressureField::start(&op, &f).unwrap();
    for _ in 0..40 {
        field.step();
    }
    while field.time_index() > 1 {
        field.step_back();
    }
    assert!(relative_l2_error(&field.previous(), &f).unwrap() < 1e-9);
}

/// Sensor on a grid node (bilinear weight 1) at `(ix, iy)`.
fn node_sensor(grid: &Grid2D, ix: usize, iy: usize) -> DetectorGeometry {
    let [x, y] = grid.position(ix, iy);
    let mut g = DetectorGeometry::circle([0.0, 0.0], x.hypot(y), 1).unwrap();
    g.start_angle = y.atan2(x);
    g
}

#[test]
fn signal_is_exactly_zero_outside_stencil_cone() {
    // One internal step spreads the 5-point stencil by one node in Manhattan
    // distance, so a sensor `d` nodes away reads exactly zero before step d.
    let grid = Grid2D::centered(41, 1.0).unwrap();
    let axis = TimeAxis::new(41, 12.0).unwrap();
    let cfg = WaveConfig::homogeneous(grid, 1.0, axis, Sponge::none()).unwrap();
    assert_eq!(cfg.cfl_substeps, 1);
    let geom = node_sensor(&grid, 35, 20);
    let op = WaveOperator::new(&cfg, &geom).unwrap();
    let mut f = SourceImage::zeros(grid);
    f.values_mut()[[20, 20]] = 1.0;
    let d = op.forward(&f).unwrap();
    for s in 0..41 {
        let v = d.values()[[0, s]];
        if s < 15 {
            assert_eq!(v, 0.0, "sample {s}");
        } else {
            assert_ne!(v, 0.0, "sample {s}");
        }
    }
}

/// Literal form of the causality bound `|p| <= 1e-10 ‖f‖` for
/// `t < (dist − 2h)/c`. A second-order stencil has an Airy-type precursor
/// a few cells ahead of the front (measured: ~1e-2 of the peak two cells
/// early and 1e-10 crossed ~8 time units early on this scene), so the bound
/// cannot hold for this discretisation; see the stencil-cone test above for
/// the exact statement that does.
#[test]
#[ignore = "precursor of the discrete fundamental solution exceeds 1e-10 ahead of the front"]
fn signal_is_negligible_before_physical_arrival() {
    let s = scene64();
    let rho = 4.0;
    let f = SourceImage::from_fn(s.grid, |x, y| {
        let r = x.hypot(y);
        if r < rho {
            (0.5 * std::f64::consts::PI * r / rho).cos().powi(2)
        } else {
            0.0
        }
    });
    let d = forward_w(&f, &s.wave, &s.geometry).unwrap();
    let bound = 1e-10 * f.norm();
    let dt = s.wave.time_axis.dt();
    let cutoff = s.geometry.radius - rho - 2.0;
    for row in d.values().rows() {
        for (j, v) in row.iter().enumerate() {
            if (j as f64) * dt < cutoff {
                assert!(v.abs() <= bound, "t = {}: {v:e}", j as f64 * dt);
            }
        }
    }
}

#[test]
fn wavefront_arrives_at_travel_time() {
    for spec in [SceneSpec::new(64, 100, 301, 8), SceneSpec::new(128, 60, 301, 16)] {
        let s = spec.build().unwrap();
        let rho = (s.geometry.radius / 5.0).round();
        let f = SourceImage::from_fn(s.grid, |x, y| if x.hypot(y) <= rho { 1.0 } else { 0.0 });
        let d = forward_w(&f, &s.wave, &s.geometry).unwrap();
        let dt = s.wave.time_axis.dt();
        let expected = s.geometry.radius - rho;
        for row in d.values().rows() {
            let peak = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let first = row.iter().position(|v| v.abs() > 0.1 * peak).unwrap();
            let arrival = first as f64 * dt;
            assert!(
                (arrival - expected).abs() <= 2.0,
                "grid {}: arrival {arrival} vs {expected}",
                spec.grid_size
            );
        }
    }
}

#[test]
fn forward_rejects_source_outside_disc() {
    let s = scene64();
    let mut f = SourceImage::zeros(s.grid);
    f.values_mut()[[1, 1]] = 1.0;
    assert!(forward_w(&f, &s.wave, &s.geometry).is_err());
}

#[test]
fn adjoint_rejects_wrong_shape() {
    let s = scene64();
    let d = SensorData::zeros(7, s.wave.time_axis);
    assert!(adjoint_w(&d, &s.wave, &s.geometry).is_err());
}

#[test]
fn commutation_discrepancy_is_small_and_second_order() {
    let coarse = scene64();
    let f = gaussian_bump(&coarse.grid, &coarse.geometry, [2.0, -1.0], 3.0, 1.0).unwrap();
    let d64 = verify_commutation(&f, &coarse.wave, &coarse.geometry).unwrap();
    assert!(d64 <= 5e-2, "{d64}");

    let grid = Grid2D::centered(127, 0.5).unwrap();
    let axis = TimeAxis::new(601, coarse.wave.time_axis.t_max).unwrap();
    let cfg = WaveConfig::homogeneous(grid, 1.0, axis, Sponge::with_width(16)).unwrap();
    let f_fine = gaussian_bump(&grid, &coarse.geometry, [2.0, -1.0], 3.0, 1.0).unwrap();
    let d128 = verify_commutation(&f_fine, &cfg, &coarse.geometry).unwrap();
    assert!(d128 <= 0.25 * d64 * 1.5, "{d128} vs {d64}");
}

#[test]
fn commutation_holds_in_heterogeneous_medium() {
    let s = heterogeneous(&scene64());
    let f = gaussian_bump(&s.grid, &s.geometry, [2.0, -1.0], 3.0, 1.0).unwrap();
    assert!(verify_commutation(&f, &s.wave, &s.geometry).unwrap() <= 8e-2);
}

#[test]
fn commutation_of_zero_is_zero() {
    let s = scene64();
    assert_eq!(
        verify_commutation(&SourceImage::zeros(s.grid), &s.wave, &s.geometry).unwrap(),
        0.0
    );
}
