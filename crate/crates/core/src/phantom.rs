//! Synthetic and file-based source phantoms.

use std::path::Path;

use crate::grid::{DetectorGeometry, Grid2D};
use crate::image::SourceImage;
use crate::io::read_pgm;
use crate::{Error, Result};

/// Fraction of the detection radius that phantoms may occupy.
pub const SUPPORT_FRACTION: f64 = 0.9;

const ARM_HALF_LENGTH: f64 = 0.55;
const ARM_HALF_WIDTH: f64 = 0.15;
const ARM_LEVEL: f64 = 0.5;
const BUMP_CENTER: f64 = 0.45;
const BUMP_RADIUS: f64 = 0.22;
const BUMP_PEAK: f64 = 0.3;

/// Cross made of two overlapping axis-aligned bars plus a smooth bump.
///
/// Each bar has level 0.5, so the arms read 0.5 and the overlap 1.0. A
/// `cos²` bump of peak 0.3 sits in the upper-right quadrant, away from the
/// arms. All lengths scale with the detection radius.
pub fn make_cross_phantom(grid: &Grid2D, geom: &DetectorGeometry) -> Result<SourceImage> {
    grid.validate()?;
    geom.check_disc_inside(grid)?;
    let r = geom.radius;
    let [cx, cy] = geom.center;
    let support = SUPPORT_FRACTION * r;
    let img = SourceImage::from_fn(*grid, |x, y| {
        let (u, v) = ((x - cx) / r, (y - cy) / r);
        if (x - cx).hypot(y - cy) >= support {
            return 0.0;
        }
        let horizontal = u.abs() <= ARM_HALF_LENGTH && v.abs() <= ARM_HALF_WIDTH;
        let vertical = u.abs() <= ARM_HALF_WIDTH && v.abs() <= ARM_HALF_LENGTH;
        let mut value = ARM_LEVEL * (horizontal as u8 + vertical as u8) as f64;
        let d = (u - BUMP_CENTER).hypot(v - BUMP_CENTER);
        if d < BUMP_RADIUS {
            let c = (0.5 * std::f64::consts::PI * d / BUMP_RADIUS).cos();
            value += BUMP_PEAK * c * c;
        }
        value
    });
    Ok(img)
}

/// Isotropic Gaussian `amplitude * exp(-|r - center|² / (2 width²))`,
/// truncated to the phantom support disc.
pub fn gaussian_bump(
    grid: &Grid2D,
    geom: &DetectorGeometry,
    center: [f64; 2],
    width: f64,
    amplitude: f64,
) -> Result<SourceImage> {
    geom.check_disc_inside(grid)?;
    if !(width > 0.0) {
        return Err(Error::Config(format!("bump width must be positive, got {width}")));
    }
    let img = SourceImage::from_fn(*grid, |x, y| {
        let d2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
        amplitude * (-d2 / (2.0 * width * width)).exp()
    });
    Ok(img.masked_to_disc(geom.center, SUPPORT_FRACTION * geom.radius))
}

/// Nonnegative point sources at grid nodes `(ix, iy)`.
///
/// Each isolated spike contributes five nonzeros to the discrete Laplacian.
pub fn point_sources(grid: &Grid2D, spikes: &[((usize, usize), f64)]) -> Result<SourceImage> {
    let mut img = SourceImage::zeros(*grid);
    for &((ix, iy), amp) in spikes {
        if ix >= grid.nx || iy >= grid.ny {
            return Err(Error::Config(format!("spike ({ix}, {iy}) outside the grid")));
        }
        img.values_mut()[[iy, ix]] += amp;
    }
    Ok(img)
}

/// Bilinear resampling of a row-major `width x height` raster onto `grid`.
///
/// The raster corners are aligned with the physical square `[lo, hi]`;
/// nodes outside the square are clamped to the raster edge.
pub fn resample_bilinear(
    pixels: &[f64],
    width: usize,
    height: usize,
    grid: &Grid2D,
    lo: [f64; 2],
    hi: [f64; 2],
) -> SourceImage {
    assert_eq!(pixels.len(), width * height);
    let sample = |u: f64, v: f64| -> f64 {
        let u = u.clamp(0.0, (width - 1) as f64);
        let v = v.clamp(0.0, (height - 1) as f64);
        let i0 = (u.floor() as usize).min(width.saturating_sub(2));
        let j0 = (v.floor() as usize).min(height.saturating_sub(2));
        let i1 = (i0 + 1).min(width - 1);
        let j1 = (j0 + 1).min(height - 1);
        let (fu, fv) = (u - i0 as f64, v - j0 as f64);
        let p = |i: usize, j: usize| pixels[j * width + i];
        let lerp = |a: f64, b: f64, t: f64| a + t * (b - a);
        lerp(lerp(p(i0, j0), p(i1, j0), fu), lerp(p(i0, j1), p(i1, j1), fu), fv)
    };
    let sx = (width - 1) as f64 / (hi[0] - lo[0]);
    let sy = (height - 1) as f64 / (hi[1] - lo[1]);
    SourceImage::from_fn(*grid, |x, y| sample((x - lo[0]) * sx, (y - lo[1]) * sy))
}

/// Loads an 8-bit binary PGM as a phantom.
///
/// Gray values are divided by the file's maxval, the raster is stretched
/// over the square bounding the support disc and the result is masked to
/// that disc. Raster row 0 maps to the smallest `y`.
pub fn load_image_phantom(
    path: impl AsRef<Path>,
    grid: &Grid2D,
    geom: &DetectorGeometry,
) -> Result<SourceImage> {
    let path = path.as_ref();
    geom.check_disc_inside(grid)?;
    let pgm = read_pgm(path)?;
    if pgm.width < 2 || pgm.height < 2 {
        return Err(Error::input(path, "image must be at least 2x2 pixels"));
    }
    let scale = 1.0 / pgm.maxval as f64;
    let pixels: Vec<f64> = pgm.data.iter().map(|&p| p as f64 * scale).collect();
    let support = SUPPORT_FRACTION * geom.radius;
    let [cx, cy] = geom.center;
    let img = resample_bilinear(
        &pixels,
        pgm.width,
        pgm.height,
        grid,
        [cx - support, cy - support],
        [cx + support, cy + support],
    );
    Ok(img.masked_to_disc(geom.center, support))
}

/// Modified Shepp–Logan head phantom on `[-1, 1]²`, values in `[0, 1]`.
///
/// Used to generate the bundled MRI-style test image.
pub fn shepp_logan(width: usize, height: usize) -> Vec<f64> {
    // (intensity, semi-axis a, semi-axis b, x0, y0, rotation in degrees)
    const ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
        (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
        (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
        (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
        (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
        (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
        (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
        (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
        (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
        (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
        (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
    ];
    let mut out = vec![0.0; width * height];
    for j in 0..height {
        for i in 0..width {
            let x = -1.0 + 2.0 * i as f64 / (width - 1) as f64;
            let y = 1.0 - 2.0 * j as f64 / (height - 1) as f64;
            let mut v = 0.0;
            for &(rho, a, b, x0, y0, deg) in &ELLIPSES {
                let (s, c) = deg.to_radians().sin_cos();
                let (dx, dy) = (x - x0, y - y0);
                let xr = dx * c + dy * s;
                let yr = -dx * s + dy * c;
                if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
                    v += rho;
                }
            }
            out[j * width + i] = v.clamp(0.0, 1.0);
        }
    }
    out
}
