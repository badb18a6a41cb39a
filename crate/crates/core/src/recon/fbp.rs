//! Filtered backprojection for a circular detector in 2-D.
//!
//! The traces `p(y, τ)` of `p_tt = c₀²Δp`, `p(0) = f`, `p_t(0) = 0`
//! (with `τ = c₀t`) are first turned into circular means of `f` by the
//! Abel inversion
//!
//! `M(y, r) = (2/π) ∫₀^r p(y, τ) / √(r² − τ²) dτ`,
//!
//! and `f` is then recovered for supports inside the disc of radius `R` by
//!
//! `f(x) = 1/(2πR) Δ ∮ ∫₀^{2R} M(y, r) r log|r² − |x − y|²| dr dS(y)`.
//!
//! The inner integral depends on `x` only through `d = |x − y|`, so it is
//! tabulated per sensor and interpolated; the outer Laplacian is the
//! 5-point stencil. Both singular kernels are integrated exactly against
//! piecewise polynomial data.

use std::f64::consts::PI;

use ndarray::Array2;

use crate::grid::DetectorGeometry;
use crate::image::{discrete_laplacian, SourceImage};
use crate::sensing::SensorData;
use crate::wave::WaveConfig;
use crate::{Error, Result};

/// Table points per time sample.
const TABLE_OVERSAMPLING: usize = 4;

/// Abel inversion on a uniform grid `τ_j = j·dτ`, exact for piecewise
/// linear traces.
fn abel_matrix(n: usize, dtau: f64) -> Array2<f64> {
    let mut b = Array2::zeros((n, n));
    for i in 1..n {
        let r = i as f64 * dtau;
        for j in 0..i {
            let (lo, hi) = (j as f64 * dtau, (j + 1) as f64 * dtau);
            let i0 = (hi / r).min(1.0).asin() - (lo / r).asin();
            let i1 = (r * r - lo * lo).max(0.0).sqrt() - (r * r - hi * hi).max(0.0).sqrt();
            b[[i, j]] += (hi * i0 - i1) / dtau;
            b[[i, j + 1]] += (i1 - lo * i0) / dtau;
        }
    }
    b * (2.0 / PI)
}

/// Reconstructs `f` from full (uncompressed) sensor traces.
///
/// Uses the maximum of the sound-speed map as `c₀`. Pixels outside the
/// detection disc are set to zero.
pub fn fbp_reconstruct(
    data: &SensorData,
    cfg: &WaveConfig,
    geom: &DetectorGeometry,
) -> Result<SourceImage> {
    geom.validate()?;
    if data.rows() != geom.num_sensors {
        return Err(Error::shape(
            format!("{} sensor rows", geom.num_sensors),
            format!("{}", data.rows()),
        ));
    }
    if data.time_axis() != &cfg.time_axis {
        return Err(Error::shape(
            format!("{:?}", cfg.time_axis),
            format!("{:?}", data.time_axis()),
        ));
    }
    let c0 = cfg.c_max();
    let nt = data.time_axis().num_samples;
    let dtau = c0 * data.time_axis().dt();
    let tau_end = (nt - 1) as f64 * dtau;
    let r = geom.radius;

    let grid = *cfg.grid();
    let sensors = geom.sensor_positions();
    let (lo_pt, hi_pt) = (grid.position(0, 0), grid.position(grid.nx - 1, grid.ny - 1));
    let d_max = sensors
        .iter()
        .flat_map(|p| {
            [
                [lo_pt[0], lo_pt[1]],
                [lo_pt[0], hi_pt[1]],
                [hi_pt[0], lo_pt[1]],
                [hi_pt[0], hi_pt[1]],
            ]
            .map(|c| (c[0] - p[0]).hypot(c[1] - p[1]))
        })
        .fold(0.0, f64::max);
    let dd = dtau / TABLE_OVERSAMPLING as f64;
    let nd = (d_max / dd).ceil() as usize + 2;
    let r_end = tau_end.min(2.0 * r);
    let kernel = Array2::from_shape_fn((nd, nt), |(k, j)| {
        let d = k as f64 * dd;
        let lo = ((j as f64 - 0.5) * dtau).clamp(0.0, r_end);
        let hi = ((j as f64 + 0.5) * dtau).clamp(0.0, r_end);
        weighted_log_antiderivative(hi, d) - weighted_log_antiderivative(lo, d)
    });
    let means = abel_matrix(nt, dtau).dot(&data.values().t());
    let table = kernel.dot(&means);

    let weight = geom.arc_weight() / (2.0 * PI * r);
    let mut smooth = SourceImage::zeros(grid);
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let [x, y] = grid.position(ix, iy);
            let mut acc = 0.0;
            for (s, pos) in sensors.iter().enumerate() {
                let u = (x - pos[0]).hypot(y - pos[1]) / dd;
                let k = (u.floor() as usize).min(nd - 2);
                let w = u - k as f64;
                acc += (1.0 - w) * table[[k, s]] + w * table[[k + 1, s]];
            }
            smooth.values_mut()[[iy, ix]] = weight * acc;
        }
    }
    Ok(discrete_laplacian(&smooth).masked_to_disc(geom.center, r))
}

/// `∫ r log|r² − d²| dr`.
fn weighted_log_antiderivative(r: f64, d: f64) -> f64 {
    let u = r * r - d * d;
    if u == 0.0 {
        0.0
    } else {
        0.5 * (u * u.abs().ln() - u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weighted_log_antiderivative_matches_quadrature() {
        let d = 1.3;
        for (a, b) in [(0.2, 0.9), (0.9, 2.4), (1.0, 1.3)] {
            let n = 200_000;
            let h = (b - a) / n as f64;
            let mid: f64 = (0..n)
                .map(|i| {
                    let t = a + (i as f64 + 0.5) * h;
                    t * (t * t - d * d).abs().ln()
                })
                .sum::<f64>()
                * h;
            let exact = weighted_log_antiderivative(b, d) - weighted_log_antiderivative(a, d);
            assert!((mid - exact).abs() < 1e-6, "{mid} vs {exact}");
        }
    }

    #[test]
    fn abel_of_constant_trace_is_constant() {
        // p ≡ 1 gives M(r) = (2/π) ∫₀^r dτ/√(r² − τ²) = 1.
        let n = 40;
        let m = abel_matrix(n, 0.5).dot(&ndarray::Array1::from_elem(n, 1.0));
        for (i, v) in m.iter().enumerate().skip(1) {
            assert!((v - 1.0).abs() < 1e-12, "{i}: {v}");
        }
    }

    #[test]
    fn abel_is_exact_for_linear_traces() {
        // p(τ) = τ gives (2/π) ∫₀^r τ/√(r² − τ²) dτ = 2r/π.
        let n = 30;
        let dtau = 0.3;
        let p = ndarray::Array1::from_shape_fn(n, |j| j as f64 * dtau);
        let m = abel_matrix(n, dtau).dot(&p);
        for (i, v) in m.iter().enumerate() {
            let r = i as f64 * dtau;
            assert!((v - 2.0 * r / PI).abs() < 1e-12, "{i}: {v}");
        }
    }
}
