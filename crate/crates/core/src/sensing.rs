//! Compressive measurements `M = A·W`: matrix generation, application,
//! adjoints and noise.
//!
//! Random matrices come from ChaCha8 seeded with the 64-bit seed, so a
//! `(kind, m, n, seed)` tuple regenerates the same matrix on any platform.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, Zip};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::grid::{DetectorGeometry, TimeAxis};
use crate::image::SourceImage;
use crate::wave::{WaveConfig, WaveOperator};
use crate::{Error, Result};

/// Time series per row (detector or compressive channel).
#[derive(Debug, Clone, PartialEq)]
pub struct SensorData {
    time_axis: TimeAxis,
    values: Array2<f64>,
}

impl SensorData {
    pub fn new(time_axis: TimeAxis, values: Array2<f64>) -> Result<Self> {
        time_axis.validate()?;
        if values.ncols() != time_axis.num_samples {
            return Err(Error::shape(
                format!("{} time samples", time_axis.num_samples),
                format!("{} columns", values.ncols()),
            ));
        }
        if values.nrows() == 0 {
            return Err(Error::Config("sensor data needs at least one row".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("sensor data contains non-finite values".into()));
        }
        Ok(Self { time_axis, values })
    }

    pub fn zeros(rows: usize, time_axis: TimeAxis) -> Self {
        Self {
            time_axis,
            values: Array2::zeros((rows, time_axis.num_samples)),
        }
    }

    pub(crate) fn from_parts(time_axis: TimeAxis, values: Array2<f64>) -> Self {
        Self { time_axis, values }
    }

    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn time_axis(&self) -> &TimeAxis {
        &self.time_axis
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        Zip::from(&self.values)
            .and(&other.values)
            .fold(0.0, |acc, a, b| acc + a * b)
    }

    /// Returns `self * a + other * b`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut out = self.clone();
        Zip::from(&mut out.values)
            .and(&other.values)
            .for_each(|o, &y| *o = a * *o + b * y);
        out
    }

    pub fn same_shape(&self, other: &Self) -> Result<()> {
        if self.values.dim() != other.values.dim() {
            return Err(Error::shape(
                format!("{:?}", self.values.dim()),
                format!("{:?}", other.values.dim()),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixKind {
    /// Entries ±1/√m with equal probability.
    Bernoulli,
    /// I.i.d. N(0, 1/m) entries.
    Gaussian,
    /// Row selector picking `m` equispaced detectors.
    Subsample,
}

impl fmt::Display for MatrixKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MatrixKind::Bernoulli => "bernoulli",
            MatrixKind::Gaussian => "gaussian",
            MatrixKind::Subsample => "subsample",
        })
    }
}

impl FromStr for MatrixKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bernoulli" => Ok(MatrixKind::Bernoulli),
            "gaussian" => Ok(MatrixKind::Gaussian),
            "subsample" => Ok(MatrixKind::Subsample),
            other => Err(Error::Config(format!("unknown matrix kind {other:?}"))),
        }
    }
}

/// Metadata stored next to a matrix dump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixMeta {
    pub kind: MatrixKind,
    pub m: usize,
    pub n: usize,
    pub seed: u64,
}

/// Dense `m x n` measurement matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementMatrix {
    meta: MatrixMeta,
    entries: Array2<f64>,
}

impl MeasurementMatrix {
    pub fn generate(kind: MatrixKind, m: usize, n: usize, seed: u64) -> Result<Self> {
        if m == 0 || m > n {
            return Err(Error::Config(format!(
                "measurement matrix needs 1 <= m <= n, got m = {m}, n = {n}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = 1.0 / (m as f64).sqrt();
        let entries = match kind {
            MatrixKind::Bernoulli => Array2::from_shape_simple_fn((m, n), || {
                if rng.random::<bool>() {
                    scale
                } else {
                    -scale
                }
            }),
            MatrixKind::Gaussian => Array2::from_shape_simple_fn((m, n), || {
                scale * rng.sample::<f64, _>(StandardNormal)
            }),
            MatrixKind::Subsample => {
                let mut a = Array2::zeros((m, n));
                for j in 0..m {
                    a[[j, j * n / m]] = 1.0;
                }
                a
            }
        };
        Ok(Self {
            meta: MatrixMeta { kind, m, n, seed },
            entries,
        })
    }

    /// Rebuilds a matrix from a dump, checking it against its metadata.
    pub fn from_parts(meta: MatrixMeta, entries: Array2<f64>) -> Result<Self> {
        if entries.dim() != (meta.m, meta.n) {
            return Err(Error::shape(
                format!("({}, {})", meta.m, meta.n),
                format!("{:?}", entries.dim()),
            ));
        }
        Ok(Self { meta, entries })
    }

    pub fn meta(&self) -> MatrixMeta {
        self.meta
    }

    pub fn kind(&self) -> MatrixKind {
        self.meta.kind
    }

    pub fn m(&self) -> usize {
        self.meta.m
    }

    pub fn n(&self) -> usize {
        self.meta.n
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.entries
    }

    /// Detector indices selected by a subsampling matrix.
    pub fn selected_rows(&self) -> Option<Vec<usize>> {
        (self.meta.kind == MatrixKind::Subsample).then(|| {
            self.entries
                .rows()
                .into_iter()
                .map(|r| r.iter().position(|v| *v == 1.0).unwrap_or(0))
                .collect()
        })
    }
}

/// `A · data`, one matrix-vector product per time sample.
pub fn apply_a(a: &MeasurementMatrix, data: &SensorData) -> Result<SensorData> {
    if a.n() != data.rows() {
        return Err(Error::shape(
            format!("{} data rows", a.n()),
            format!("{} rows", data.rows()),
        ));
    }
    Ok(SensorData::from_parts(
        data.time_axis,
        a.entries.dot(&data.values),
    ))
}

/// `Aᵀ · data`.
pub fn apply_a_transpose(a: &MeasurementMatrix, data: &SensorData) -> Result<SensorData> {
    if a.m() != data.rows() {
        return Err(Error::shape(
            format!("{} data rows", a.m()),
            format!("{} rows", data.rows()),
        ));
    }
    Ok(SensorData::from_parts(
        data.time_axis,
        a.entries.t().dot(&data.values),
    ))
}

/// `M = A·W` with its adjoint `M* = W*·Aᵀ`, precomputed for repeated use.
#[derive(Debug, Clone)]
pub struct CsOperator {
    wave: WaveOperator,
    matrix: MeasurementMatrix,
}

impl CsOperator {
    pub fn new(matrix: MeasurementMatrix, cfg: &WaveConfig, geom: &DetectorGeometry) -> Result<Self> {
        if matrix.n() != geom.num_sensors {
            return Err(Error::shape(
                format!("{} matrix columns", geom.num_sensors),
                format!("{}", matrix.n()),
            ));
        }
        Ok(Self {
            wave: WaveOperator::new(cfg, geom)?,
            matrix,
        })
    }

    pub fn wave(&self) -> &WaveOperator {
        &self.wave
    }

    pub fn matrix(&self) -> &MeasurementMatrix {
        &self.matrix
    }

    pub fn time_axis(&self) -> &TimeAxis {
        self.wave.time_axis()
    }

    pub fn forward(&self, f: &SourceImage) -> Result<SensorData> {
        apply_a(&self.matrix, &self.wave.forward(f)?)
    }

    pub fn adjoint(&self, data: &SensorData) -> Result<SourceImage> {
        self.wave.adjoint(&apply_a_transpose(&self.matrix, data)?)
    }
}

pub fn forward_m(
    f: &SourceImage,
    a: &MeasurementMatrix,
    cfg: &WaveConfig,
    geom: &DetectorGeometry,
) -> Result<SensorData> {
    CsOperator::new(a.clone(), cfg, geom)?.forward(f)
}

pub fn adjoint_m(
    data: &SensorData,
    a: &MeasurementMatrix,
    cfg: &WaveConfig,
    geom: &DetectorGeometry,
) -> Result<SourceImage> {
    CsOperator::new(a.clone(), cfg, geom)?.adjoint(data)
}

/// Adds seeded Gaussian noise rescaled so that `‖noise‖ = level · ‖data‖`.
pub fn add_noise(data: &SensorData, level: f64, seed: u64) -> Result<SensorData> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(Error::Config(format!("noise level must be >= 0, got {level}")));
    }
    let target = level * data.norm();
    if target == 0.0 {
        return Ok(data.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Array2::from_shape_simple_fn(data.values.dim(), || {
        rng.sample::<f64, _>(StandardNormal)
    });
    let scale = target / noise.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = data.clone();
    Zip::from(&mut out.values)
        .and(&noise)
        .for_each(|o, &e| *o += scale * e);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn axis(t: usize) -> TimeAxis {
        TimeAxis::new(t, 1.0).unwrap()
    }

    fn data_from(rows: usize, t: usize, f: impl Fn(usize, usize) -> f64) -> SensorData {
        SensorData::new(axis(t), Array2::from_shape_fn((rows, t), |(i, j)| f(i, j))).unwrap()
    }

    #[test]
    fn bernoulli_entries_are_plus_minus_half() {
        let a = MeasurementMatrix::generate(MatrixKind::Bernoulli, 4, 8, 11).unwrap();
        assert!(a.entries().iter().all(|v| v.abs() == 0.5));
        assert!(a.entries().iter().any(|v| *v > 0.0));
        assert!(a.entries().iter().any(|v| *v < 0.0));
    }

    #[test]
    fn subsample_selects_equispaced() {
        let a = MeasurementMatrix::generate(MatrixKind::Subsample, 2, 8, 0).unwrap();
        assert_eq!(a.selected_rows().unwrap(), vec![0, 4]);
        for row in a.entries().rows() {
            assert_eq!(row.iter().filter(|v| **v == 1.0).count(), 1);
            assert_eq!(row.iter().filter(|v| **v == 0.0).count(), 7);
        }
    }

    #[test]
    fn gaussian_mean_within_clt_bound() {
        let (m, n) = (100usize, 200usize);
        let a = MeasurementMatrix::generate(MatrixKind::Gaussian, m, n, 3).unwrap();
        let mean = a.entries().mean().unwrap();
        // std of the sample mean of m*n entries with variance 1/m
        let bound = 3.0 / ((m * n * m) as f64).sqrt();
        assert!(mean.abs() < bound, "mean {mean} exceeds {bound}");
        let var = a.entries().mapv(|v| v * v).mean().unwrap();
        assert!((var * m as f64 - 1.0).abs() < 0.05);
    }

    #[test]
    fn regeneration_is_bit_identical() {
        for kind in [MatrixKind::Bernoulli, MatrixKind::Gaussian, MatrixKind::Subsample] {
            let a = MeasurementMatrix::generate(kind, 7, 19, 42).unwrap();
            let b = MeasurementMatrix::generate(kind, 7, 19, 42).unwrap();
            assert_eq!(a, b);
        }
        let a = MeasurementMatrix::generate(MatrixKind::Gaussian, 7, 19, 42).unwrap();
        let c = MeasurementMatrix::generate(MatrixKind::Gaussian, 7, 19, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn wide_matrix_is_rejected() {
        assert!(MeasurementMatrix::generate(MatrixKind::Bernoulli, 9, 8, 0).is_err());
        assert!(MeasurementMatrix::generate(MatrixKind::Bernoulli, 0, 8, 0).is_err());
    }

    #[test]
    fn column_norms_concentrate() {
        for kind in [MatrixKind::Bernoulli, MatrixKind::Gaussian] {
            let a = MeasurementMatrix::generate(kind, 50, 200, 7).unwrap();
            for col in a.entries().columns() {
                let norm = col.dot(&col).sqrt();
                assert!((0.5..=1.5).contains(&norm), "{kind}: column norm {norm}");
            }
        }
    }

    #[test]
    fn apply_identity_subsample_is_noop() {
        let a = MeasurementMatrix::generate(MatrixKind::Subsample, 5, 5, 0).unwrap();
        let d = data_from(5, 4, |i, j| (i * 10 + j) as f64);
        assert_eq!(apply_a(&a, &d).unwrap(), d);
        let zero = SensorData::zeros(5, axis(4));
        assert_eq!(apply_a(&a, &zero).unwrap(), zero);
    }

    #[test]
    fn hand_computed_products() {
        let meta = MatrixMeta {
            kind: MatrixKind::Gaussian,
            m: 2,
            n: 2,
            seed: 0,
        };
        let a = MeasurementMatrix::from_parts(
            meta,
            Array2::from_shape_vec((2, 2), vec![1.0, 2.0, 3.0, -1.0]).unwrap(),
        )
        .unwrap();
        let d = data_from(2, 3, |i, j| [[1.0, 0.0, 2.0], [-1.0, 4.0, 0.5]][i][j]);
        // [1 2; 3 -1] * [1 0 2; -1 4 0.5]
        let ad = apply_a(&a, &d).unwrap();
        assert_eq!(
            ad.values().as_slice().unwrap(),
            &[-1.0, 8.0, 3.0, 4.0, -4.0, 5.5]
        );
        // [1 3; 2 -1] * [1 0 2; -1 4 0.5]
        let atd = apply_a_transpose(&a, &d).unwrap();
        assert_eq!(
            atd.values().as_slice().unwrap(),
            &[-2.0, 12.0, 3.5, 3.0, -4.0, 3.5]
        );
    }

    #[test]
    fn subsample_transpose_scatters() {
        let a = MeasurementMatrix::generate(MatrixKind::Subsample, 2, 6, 0).unwrap();
        let d = data_from(2, 3, |i, j| (i + 1) as f64 * (j + 1) as f64);
        let back = apply_a_transpose(&a, &d).unwrap();
        for (row, vals) in back.values().rows().into_iter().enumerate() {
            match row {
                0 => assert_eq!(vals.to_vec(), vec![1.0, 2.0, 3.0]),
                3 => assert_eq!(vals.to_vec(), vec![2.0, 4.0, 6.0]),
                _ => assert!(vals.iter().all(|v| *v == 0.0)),
            }
        }
    }

    #[test]
    fn shape_mismatch_errors() {
        let a = MeasurementMatrix::generate(MatrixKind::Bernoulli, 2, 4, 0).unwrap();
        let d = SensorData::zeros(3, axis(3));
        assert!(apply_a(&a, &d).is_err());
        assert!(apply_a_transpose(&a, &d).is_err());
    }

    #[test]
    fn noise_is_exactly_renormalised() {
        let d = data_from(4, 50, |i, j| ((i * 50 + j) as f64 * 0.1).sin());
        assert_eq!(add_noise(&d, 0.0, 1).unwrap(), d);
        let n1 = add_noise(&d, 0.15, 1).unwrap();
        let n2 = add_noise(&d, 0.15, 2).unwrap();
        let r1 = n1.lincomb(1.0, &d, -1.0).norm() / d.norm();
        let r2 = n2.lincomb(1.0, &d, -1.0).norm() / d.norm();
        assert!((r1 - 0.15).abs() < 1e-12);
        assert!((r2 - 0.15).abs() < 1e-12);
        assert_ne!(n1, n2);
        assert_eq!(add_noise(&d, 0.15, 1).unwrap(), n1);
        assert!(add_noise(&d, -0.1, 1).is_err());
    }

    proptest! {
        #[test]
        fn transpose_identity(
            kind in prop::sample::select(vec![MatrixKind::Bernoulli, MatrixKind::Gaussian, MatrixKind::Subsample]),
            m in 1usize..6,
            extra in 0usize..6,
            t in 3usize..6,
            seed in any::<u64>(),
        ) {
            let n = m + extra;
            let a = MeasurementMatrix::generate(kind, m, n, seed).unwrap();
            let x = data_from(n, t, |i, j| ((seed % 97) as f64 + i as f64 * 1.7 - j as f64).cos());
            let y = data_from(m, t, |i, j| ((seed % 89) as f64 - i as f64 * 0.3 + j as f64 * 2.1).sin());
            let lhs = apply_a(&a, &x).unwrap().dot(&y);
            let rhs = x.dot(&apply_a_transpose(&a, &y).unwrap());
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
