//! Leapfrog FDTD solver for `∂²p/∂t² + σ ∂p/∂t = c² Δp`, `p(0) = f`,
//! `∂p/∂t(0) = 0`, and its exact discrete adjoint.
//!
//! Fields live in buffers padded by one ghost node on every side; ghosts
//! stay zero, which realises the Dirichlet padding of the stencil. With
//! `Lᵤ` the unscaled 5-point stencil, `κ = c² dt² / h²`,
//! `a = 1/(1 + σ dt/2)` and `b = (1 − σ dt/2)/(1 + σ dt/2)` the scheme is
//!
//! ```text
//! p₁     = p₀ + ½ κ Lᵤ p₀
//! pₛ₊₁   = a (2 pₛ + κ Lᵤ pₛ) − b pₛ₋₁
//! ```
//!
//! and the adjoint runs the transposed recurrence backwards in time.

use ndarray::Array2;

use crate::grid::{DetectorGeometry, Grid2D, TimeAxis};
use crate::image::SourceImage;
use crate::sensing::SensorData;
use crate::wave::WaveConfig;
use crate::{Error, Result};

/// Output samples between full-field finiteness checks.
const FINITE_CHECK_EVERY: usize = 16;

/// Per-node update coefficients on the padded layout.
#[derive(Debug, Clone)]
struct Stepper {
    nx: usize,
    ny: usize,
    pw: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    kappa: Vec<f64>,
}

impl Stepper {
    fn new(cfg: &WaveConfig) -> Self {
        let grid = *cfg.grid();
        let (nx, ny) = (grid.nx, grid.ny);
        let pw = nx + 2;
        let len = pw * (ny + 2);
        let dt = cfg.internal_dt();
        let sigma = cfg.sponge.profile(&grid, cfg.c_max());
        let mut a = vec![0.0; len];
        let mut b = vec![0.0; len];
        let mut kappa = vec![0.0; len];
        let r = dt / grid.spacing;
        for iy in 0..ny {
            for ix in 0..nx {
                let k = (iy + 1) * pw + ix + 1;
                let c = cfg.sound_speed.values()[[iy, ix]];
                let damp = 0.5 * sigma[iy * nx + ix] * dt;
                a[k] = 1.0 / (1.0 + damp);
                b[k] = (1.0 - damp) / (1.0 + damp);
                kappa[k] = c * c * r * r;
            }
        }
        Self {
            nx,
            ny,
            pw,
            a,
            b,
            kappa,
        }
    }

    fn padded_len(&self) -> usize {
        self.pw * (self.ny + 2)
    }

    fn pad(&self, img: &SourceImage) -> Vec<f64> {
        let mut buf = vec![0.0; self.padded_len()];
        for (iy, row) in img.values().rows().into_iter().enumerate() {
            let start = (iy + 1) * self.pw + 1;
            for (dst, src) in buf[start..start + self.nx].iter_mut().zip(row) {
                *dst = *src;
            }
        }
        buf
    }

    fn unpad(&self, buf: &[f64], grid: Grid2D) -> SourceImage {
        let values = Array2::from_shape_fn((self.ny, self.nx), |(iy, ix)| {
            buf[(iy + 1) * self.pw + ix + 1]
        });
        SourceImage::new(grid, values).unwrap_or_else(|_| SourceImage::zeros(grid))
    }

    /// Calls `body(row_start, row_range)` for every interior row.
    #[inline(always)]
    fn for_each_interior(&self, mut body: impl FnMut(usize, std::ops::Range<usize>)) {
        for iy in 1..=self.ny {
            let start = iy * self.pw + 1;
            body(start, start..start + self.nx);
        }
    }

    /// `out = a (2 cur + κ Lᵤ cur) − b out`; `out` holds `pₛ₋₁` on entry.
    fn step(&self, cur: &[f64], out: &mut [f64]) {
        let pw = self.pw;
        self.for_each_interior(|start, range| {
            let n = range.len();
            let c = &cur[range.clone()];
            let left = &cur[start - 1..start - 1 + n];
            let right = &cur[start + 1..start + 1 + n];
            let up = &cur[start - pw..start - pw + n];
            let down = &cur[start + pw..start + pw + n];
            let a = &self.a[range.clone()];
            let b = &self.b[range.clone()];
            let kappa = &self.kappa[range.clone()];
            let o = &mut out[range];
            for i in 0..n {
                let lap = left[i] + right[i] + up[i] + down[i] - 4.0 * c[i];
                o[i] = a[i] * (2.0 * c[i] + kappa[i] * lap) - b[i] * o[i];
            }
        });
    }

    /// Inverse of [`Stepper::step`]: `out = (a (2 cur + κ Lᵤ cur) − out) / b`
    /// where `out` holds `pₛ₊₁` on entry.
    fn step_back(&self, cur: &[f64], out: &mut [f64]) {
        let pw = self.pw;
        self.for_each_interior(|start, range| {
            let n = range.len();
            let c = &cur[range.clone()];
            let left = &cur[start - 1..start - 1 + n];
            let right = &cur[start + 1..start + 1 + n];
            let up = &cur[start - pw..start - pw + n];
            let down = &cur[start + pw..start + pw + n];
            let a = &self.a[range.clone()];
            let b = &self.b[range.clone()];
            let kappa = &self.kappa[range.clone()];
            let o = &mut out[range];
            for i in 0..n {
                let lap = left[i] + right[i] + up[i] + down[i] - 4.0 * c[i];
                o[i] = (a[i] * (2.0 * c[i] + kappa[i] * lap) - o[i]) / b[i];
            }
        });
    }

    /// `out += scale · Lᵤ u` over the interior.
    fn add_laplacian(&self, u: &[f64], scale: f64, out: &mut [f64]) {
        let pw = self.pw;
        self.for_each_interior(|start, range| {
            let n = range.len();
            let c = &u[range.clone()];
            let left = &u[start - 1..start - 1 + n];
            let right = &u[start + 1..start + 1 + n];
            let up = &u[start - pw..start - pw + n];
            let down = &u[start + pw..start + pw + n];
            let o = &mut out[range];
            for i in 0..n {
                o[i] += scale * (left[i] + right[i] + up[i] + down[i] - 4.0 * c[i]);
            }
        });
    }

    /// `p₁ = p₀ + ½ κ Lᵤ p₀`.
    fn first_step(&self, p0: &[f64]) -> Vec<f64> {
        let mut lap = vec![0.0; p0.len()];
        self.add_laplacian(p0, 1.0, &mut lap);
        let mut p1 = p0.to_vec();
        self.for_each_interior(|_, range| {
            for k in range {
                p1[k] += 0.5 * self.kappa[k] * lap[k];
            }
        });
        p1
    }

    /// Adjoint of one recurrence step:
    /// `out = 2 a l1 + Lᵤ(κ a l1) − b out`, `out` holds `λₛ₊₂` on entry.
    fn adjoint_step(&self, l1: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.for_each_interior(|_, range| {
            for k in range {
                scratch[k] = self.kappa[k] * self.a[k] * l1[k];
            }
        });
        let pw = self.pw;
        self.for_each_interior(|start, range| {
            let n = range.len();
            let w = &scratch[range.clone()];
            let left = &scratch[start - 1..start - 1 + n];
            let right = &scratch[start + 1..start + 1 + n];
            let up = &scratch[start - pw..start - pw + n];
            let down = &scratch[start + pw..start + pw + n];
            let l = &l1[range.clone()];
            let a = &self.a[range.clone()];
            let b = &self.b[range.clone()];
            let o = &mut out[range];
            for i in 0..n {
                let lap = left[i] + right[i] + up[i] + down[i] - 4.0 * w[i];
                o[i] = 2.0 * a[i] * l[i] + lap - b[i] * o[i];
            }
        });
    }
}

/// Bilinear interpolation taps from the padded field to each sensor.
#[derive(Debug, Clone)]
pub struct SensorSampler {
    taps: Vec<[(usize, f64); 4]>,
}

impl SensorSampler {
    pub fn new(grid: &Grid2D, geom: &DetectorGeometry) -> Result<Self> {
        geom.check_inside(grid)?;
        let pw = grid.nx + 2;
        let taps = geom
            .sensor_positions()
            .into_iter()
            .map(|p| {
                let [fx, fy] = grid.fractional_index(p);
                let i0 = (fx.floor().max(0.0) as usize).min(grid.nx - 2);
                let j0 = (fy.floor().max(0.0) as usize).min(grid.ny - 2);
                let tx = (fx - i0 as f64).clamp(0.0, 1.0);
                let ty = (fy - j0 as f64).clamp(0.0, 1.0);
                let idx = |i: usize, j: usize| (j + 1) * pw + i + 1;
                [
                    (idx(i0, j0), (1.0 - tx) * (1.0 - ty)),
                    (idx(i0 + 1, j0), tx * (1.0 - ty)),
                    (idx(i0, j0 + 1), (1.0 - tx) * ty),
                    (idx(i0 + 1, j0 + 1), tx * ty),
                ]
            })
            .collect();
        Ok(Self { taps })
    }

    pub fn num_sensors(&self) -> usize {
        self.taps.len()
    }

    fn sample(&self, field: &[f64], out: &mut [f64]) {
        for (o, taps) in out.iter_mut().zip(&self.taps) {
            *o = taps.iter().map(|&(k, w)| w * field[k]).sum();
        }
    }

    fn inject(&self, values: impl Iterator<Item = f64>, field: &mut [f64]) {
        for (v, taps) in values.zip(&self.taps) {
            for &(k, w) in taps {
                field[k] += w * v;
            }
        }
    }
}

/// Snapshot pair `(pₛ₋₁, pₛ)` of a running simulation.
#[derive(Debug, Clone)]
pub struct PressureField<'a> {
    op: &'a WaveOperator,
    prev: Vec<f64>,
    cur: Vec<f64>,
    time_index: isize,
}

impl<'a> PressureField<'a> {
    /// State `(p₀, p₁)` of the initial value problem started from `f`.
    pub fn start(op: &'a WaveOperator, f: &SourceImage) -> Result<Self> {
        op.check_image(f)?;
        let p0 = op.stepper.pad(f);
        let p1 = op.stepper.first_step(&p0);
        Ok(Self {
            op,
            prev: p0,
            cur: p1,
            time_index: 1,
        })
    }

    /// Internal step index of the newest level.
    pub fn time_index(&self) -> isize {
        self.time_index
    }

    pub fn step(&mut self) {
        self.op.stepper.step(&self.cur, &mut self.prev);
        std::mem::swap(&mut self.prev, &mut self.cur);
        self.time_index += 1;
    }

    /// Runs the recurrence backwards by one step: `(pₛ₋₁, pₛ) → (pₛ₋₂, pₛ₋₁)`.
    pub fn step_back(&mut self) {
        self.op.stepper.step_back(&self.prev, &mut self.cur);
        std::mem::swap(&mut self.prev, &mut self.cur);
        self.time_index -= 1;
    }

    pub fn current(&self) -> SourceImage {
        self.op.stepper.unpad(&self.cur, self.op.grid)
    }

    pub fn previous(&self) -> SourceImage {
        self.op.stepper.unpad(&self.prev, self.op.grid)
    }

    pub fn is_finite(&self) -> bool {
        self.cur.iter().all(|v| v.is_finite())
    }
}

/// Precomputed `W` for one medium, time axis and detector geometry.
#[derive(Debug, Clone)]
pub struct WaveOperator {
    grid: Grid2D,
    time_axis: TimeAxis,
    substeps: usize,
    stepper: Stepper,
    sampler: SensorSampler,
}

impl WaveOperator {
    pub fn new(cfg: &WaveConfig, geom: &DetectorGeometry) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            grid: *cfg.grid(),
            time_axis: cfg.time_axis,
            substeps: cfg.cfl_substeps,
            stepper: Stepper::new(cfg),
            sampler: SensorSampler::new(cfg.grid(), geom)?,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn time_axis(&self) -> &TimeAxis {
        &self.time_axis
    }

    pub fn num_sensors(&self) -> usize {
        self.sampler.num_sensors()
    }

    fn total_steps(&self) -> usize {
        (self.time_axis.num_samples - 1) * self.substeps
    }

    fn check_image(&self, f: &SourceImage) -> Result<()> {
        if f.grid().shape() != self.grid.shape() {
            return Err(Error::shape(
                format!("{:?} image", self.grid.shape()),
                format!("{:?}", f.grid().shape()),
            ));
        }
        Ok(())
    }

    /// Pressure traces at every sensor, shape `(num_sensors, num_samples)`.
    ///
    /// Accepts sources with arbitrary support; see [`forward_w`] for the
    /// checked entry point.
    pub fn forward(&self, f: &SourceImage) -> Result<SensorData> {
        let t = self.time_axis.num_samples;
        let n = self.num_sensors();
        let mut out = Array2::zeros((n, t));
        let mut column = vec![0.0; n];
        let mut record = |field: &[f64], idx: usize, out: &mut Array2<f64>| -> Result<()> {
            self.sampler.sample(field, &mut column);
            if column.iter().any(|v| !v.is_finite())
                || (idx % FINITE_CHECK_EVERY == 0 && field.iter().any(|v| !v.is_finite()))
            {
                return Err(Error::Unstable { time_index: idx });
            }
            for (i, v) in column.iter().enumerate() {
                out[[i, idx]] = *v;
            }
            Ok(())
        };

        let mut field = PressureField::start(self, f)?;
        record(&field.prev, 0, &mut out)?;
        if self.substeps == 1 {
            record(&field.cur, 1, &mut out)?;
        }
        for s in 1..self.total_steps() {
            field.step();
            if (s + 1) % self.substeps == 0 {
                record(&field.cur, (s + 1) / self.substeps, &mut out)?;
            }
        }
        Ok(SensorData::from_parts(self.time_axis, out))
    }

    /// Exact transpose of [`WaveOperator::forward`].
    pub fn adjoint(&self, data: &SensorData) -> Result<SourceImage> {
        if data.rows() != self.num_sensors() || data.time_axis().num_samples != self.time_axis.num_samples
        {
            return Err(Error::shape(
                format!("({}, {})", self.num_sensors(), self.time_axis.num_samples),
                format!("{:?}", data.values().dim()),
            ));
        }
        let st = &self.stepper;
        let g = data.values();
        let k = self.substeps;
        let total = self.total_steps();
        let inject = |s: usize, buf: &mut [f64]| {
            if s % k == 0 {
                self.sampler.inject(g.column(s / k).iter().copied(), buf);
            }
        };

        let len = st.padded_len();
        // l1 = λₛ₊₁, l2 = λₛ₊₂
        let mut l1 = vec![0.0; len];
        let mut l2 = vec![0.0; len];
        let mut scratch = vec![0.0; len];
        inject(total, &mut l1);
        for s in (1..total).rev() {
            st.adjoint_step(&l1, &mut scratch, &mut l2);
            inject(s, &mut l2);
            std::mem::swap(&mut l1, &mut l2);
            if s % (k * FINITE_CHECK_EVERY) == 0 && l1.iter().any(|v| !v.is_finite()) {
                return Err(Error::Unstable { time_index: s / k });
            }
        }
        // l1 = λ₁, l2 = λ₂; fold in p₀'s direct use and p₁ = B p₀.
        let mut out = vec![0.0; len];
        inject(0, &mut out);
        st.for_each_interior(|_, range| {
            for i in range {
                out[i] += l1[i] - st.b[i] * l2[i];
                scratch[i] = st.kappa[i] * l1[i];
            }
        });
        st.add_laplacian(&scratch, 0.5, &mut out);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::Unstable { time_index: 0 });
        }
        Ok(st.unpad(&out, self.grid))
    }
}

/// `W f`: traces at each detector. Requires `f` supported inside the
/// detection disc.
pub fn forward_w(f: &SourceImage, cfg: &WaveConfig, geom: &DetectorGeometry) -> Result<SensorData> {
    f.check_support(geom)?;
    WaveOperator::new(cfg, geom)?.forward(f)
}

/// `W* g`: time-reversed injection of the traces into the same scheme.
pub fn adjoint_w(data: &SensorData, cfg: &WaveConfig, geom: &DetectorGeometry) -> Result<SourceImage> {
    WaveOperator::new(cfg, geom)?.adjoint(data)
}
