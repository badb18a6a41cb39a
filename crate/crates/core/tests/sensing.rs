use cspat::harness::{Scene, SceneSpec};
use cspat::sensing::{adjoint_m, forward_m, CsOperator, MatrixKind, MeasurementMatrix};
use cspat::wave::{adjoint_w, forward_w};
use cspat::{relative_l2_error, SensorData, SourceImage};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scene() -> Scene {
    SceneSpec::new(64, 100, 151, 8).build().unwrap()
}

fn random_source(s: &Scene, rng: &mut ChaCha8Rng) -> SourceImage {
    SourceImage::from_fn(s.grid, |_, _| rng.random_range(-1.0..1.0))
        .masked_to_disc(s.geometry.center, s.support_radius())
}

fn random_data(rows: usize, s: &Scene, rng: &mut ChaCha8Rng) -> SensorData {
    let axis = s.wave.time_axis;
    let v = Array2::from_shape_simple_fn((rows, axis.num_samples), || rng.random_range(-1.0..1.0));
    SensorData::new(axis, v).unwrap()
}

#[test]
fn cs_operator_is_adjoint_for_every_matrix_kind() {
    let s = scene();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for kind in [MatrixKind::Bernoulli, MatrixKind::Gaussian, MatrixKind::Subsample] {
        let a = MeasurementMatrix::generate(kind, 25, 100, 3).unwrap();
        let op = CsOperator::new(a, &s.wave, &s.geometry).unwrap();
        for _ in 0..20 {
            let f = random_source(&s, &mut rng);
            let g = random_data(25, &s, &mut rng);
            let lhs = op.forward(&f).unwrap().dot(&g);
            let rhs = f.dot(&op.adjoint(&g).unwrap());
            assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()), "{kind}: {lhs} vs {rhs}");
        }
    }
}

#[test]
fn full_identity_subsample_reduces_to_wave_operator() {
    let s = scene();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let a = MeasurementMatrix::generate(MatrixKind::Subsample, 100, 100, 0).unwrap();
    let f = random_source(&s, &mut rng);
    let g = random_data(100, &s, &mut rng);
    assert_eq!(
        forward_m(&f, &a, &s.wave, &s.geometry).unwrap(),
        forward_w(&f, &s.wave, &s.geometry).unwrap()
    );
    assert_eq!(
        adjoint_m(&g, &a, &s.wave, &s.geometry).unwrap(),
        adjoint_w(&g, &s.wave, &s.geometry).unwrap()
    );
}

#[test]
fn cs_forward_is_linear() {
    let s = scene();
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let a = MeasurementMatrix::generate(MatrixKind::Bernoulli, 25, 100, 4).unwrap();
    let op = CsOperator::new(a, &s.wave, &s.geometry).unwrap();
    let f = random_source(&s, &mut rng);
    let g = random_source(&s, &mut rng);
    let lhs = op.forward(&f.lincomb(2.5, &g, -0.75)).unwrap();
    let rhs = op.forward(&f).unwrap().lincomb(2.5, &op.forward(&g).unwrap(), -0.75);
    let rel = lhs.lincomb(1.0, &rhs, -1.0).norm() / rhs.norm();
    assert!(rel <= 1e-10, "{rel}");

    let d = random_data(25, &s, &mut rng);
    let e = random_data(25, &s, &mut rng);
    let lhs = op.adjoint(&d.lincomb(-1.5, &e, 0.5)).unwrap();
    let rhs = op.adjoint(&d).unwrap().lincomb(-1.5, &op.adjoint(&e).unwrap(), 0.5);
    assert!(relative_l2_error(&lhs, &rhs).unwrap() <= 1e-10);
}

#[test]
fn operator_rejects_mismatched_matrix() {
    let s = scene();
    let a = MeasurementMatrix::generate(MatrixKind::Gaussian, 25, 99, 1).unwrap();
    assert!(CsOperator::new(a, &s.wave, &s.geometry).is_err());
}
