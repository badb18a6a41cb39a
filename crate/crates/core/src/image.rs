//! Scalar images on a [`Grid2D`] and the discrete Laplacian.

use ndarray::{Array2, Zip};

use crate::grid::{DetectorGeometry, Grid2D};
use crate::{Error, Result};

/// Real scalar per grid node. Used for the source `f`, the modified source
/// `h` and the sound-speed map `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceImage {
    grid: Grid2D,
    values: Array2<f64>,
}

impl SourceImage {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            values: Array2::zeros(grid.shape()),
        }
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        Self {
            grid,
            values: Array2::from_elem(grid.shape(), value),
        }
    }

    pub fn new(grid: Grid2D, values: Array2<f64>) -> Result<Self> {
        grid.validate()?;
        if values.dim() != grid.shape() {
            return Err(Error::shape(
                format!("{:?}", grid.shape()),
                format!("{:?}", values.dim()),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("image contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    /// Samples `f(x, y)` at every node position.
    pub fn from_fn(grid: Grid2D, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn(grid.shape(), |(iy, ix)| {
            let [x, y] = grid.position(ix, iy);
            f(x, y)
        });
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
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

    /// Contiguous row-major view of the pixel values.
    pub fn as_slice(&self) -> &[f64] {
        self.values
            .as_slice()
            .expect("image storage is always standard layout")
    }

    pub fn as_slice_mut(&mut self) -> &mut [f64] {
        self.values
            .as_slice_mut()
            .expect("image storage is always standard layout")
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Self) -> f64 {
        self.as_slice()
            .iter()
            .zip(other.as_slice())
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Returns `self * a + other * b`.
    pub fn lincomb(&self, a: f64, other: &Self, b: f64) -> Self {
        let mut out = self.clone();
        Zip::from(&mut out.values)
            .and(&other.values)
            .for_each(|o, &y| *o = a * *o + b * y);
        out
    }

    pub fn scaled(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            values: &self.values * a,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.mapv(f),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
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

    /// Checks the support lies strictly inside the detection disc.
    pub fn check_support(&self, geom: &DetectorGeometry) -> Result<()> {
        let r2 = geom.radius * geom.radius;
        for ((iy, ix), v) in self.values.indexed_iter() {
            if *v != 0.0 {
                let [x, y] = self.grid.position(ix, iy);
                let dx = x - geom.center[0];
                let dy = y - geom.center[1];
                if dx * dx + dy * dy >= r2 {
                    return Err(Error::Config(format!(
                        "source has support at node ({ix}, {iy}) outside the detection disc"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Zeroes every pixel at distance `>= radius` from `center`.
    pub fn masked_to_disc(&self, center: [f64; 2], radius: f64) -> Self {
        let mut out = self.clone();
        let r2 = radius * radius;
        for ((iy, ix), v) in out.values.indexed_iter_mut() {
            let [x, y] = self.grid.position(ix, iy);
            let (dx, dy) = (x - center[0], y - center[1]);
            if dx * dx + dy * dy >= r2 {
                *v = 0.0;
            }
        }
        out
    }
}

/// 5-point Laplacian with zero padding on raw row-major buffers.
///
/// `out[i] = (sum of 4 neighbours - 4 u[i]) * inv_h2`.
pub(crate) fn laplacian_into(u: &[f64], nx: usize, ny: usize, inv_h2: f64, out: &mut [f64]) {
    debug_assert_eq!(u.len(), nx * ny);
    debug_assert_eq!(out.len(), nx * ny);
    for iy in 0..ny {
        let row = iy * nx;
        for ix in 0..nx {
            let k = row + ix;
            let mut s = -4.0 * u[k];
            if ix > 0 {
                s += u[k - 1];
            }
            if ix + 1 < nx {
                s += u[k + 1];
            }
            if iy > 0 {
                s += u[k - nx];
            }
            if iy + 1 < ny {
                s += u[k + nx];
            }
            out[k] = s * inv_h2;
        }
    }
}

/// Five-point finite-difference Laplacian with Dirichlet (zero) padding.
pub fn discrete_laplacian(img: &SourceImage) -> SourceImage {
    let grid = *img.grid();
    let mut out = SourceImage::zeros(grid);
    let inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    laplacian_into(img.as_slice(), grid.nx, grid.ny, inv_h2, out.as_slice_mut());
    out
}

/// `‖a − b‖₂ / ‖b‖₂`, or `‖a‖₂` when `b` is zero.
pub fn relative_l2_error(a: &SourceImage, b: &SourceImage) -> Result<f64> {
    a.same_shape(b)?;
    let diff: f64 = a
        .as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt();
    let nb = b.norm();
    if nb == 0.0 {
        Ok(a.norm())
    } else {
        Ok(diff / nb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize, h: f64) -> Grid2D {
        Grid2D::centered(n, h).unwrap()
    }

    #[test]
    fn laplacian_of_constant_vanishes_inside() {
        let g = grid(9, 0.5);
        let lap = discrete_laplacian(&SourceImage::constant(g, 3.0));
        for iy in 1..8 {
            for ix in 1..8 {
                assert_eq!(lap.values()[[iy, ix]], 0.0);
            }
        }
    }

    #[test]
    fn laplacian_of_quadratic_is_four() {
        let g = grid(17, 0.125);
        let img = SourceImage::from_fn(g, |x, y| x * x + y * y);
        let lap = discrete_laplacian(&img);
        for iy in 1..16 {
            for ix in 1..16 {
                assert!((lap.values()[[iy, ix]] - 4.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn laplacian_of_spike_is_stencil() {
        let g = grid(5, 1.0);
        let mut img = SourceImage::zeros(g);
        img.values_mut()[[2, 2]] = 1.0;
        let lap = discrete_laplacian(&img);
        let v = lap.values();
        assert_eq!(v[[2, 2]], -4.0);
        assert_eq!(v[[1, 2]], 1.0);
        assert_eq!(v[[3, 2]], 1.0);
        assert_eq!(v[[2, 1]], 1.0);
        assert_eq!(v[[2, 3]], 1.0);
        assert_eq!(v.iter().filter(|x| **x != 0.0).count(), 5);
    }

    #[test]
    fn relative_error_cases() {
        let g = grid(4, 1.0);
        let x = SourceImage::from_fn(g, |a, b| a + 2.0 * b + 0.3);
        assert_eq!(relative_l2_error(&x, &x).unwrap(), 0.0);
        assert!((relative_l2_error(&x.scaled(2.0), &x).unwrap() - 1.0).abs() < 1e-15);

        let mut five = SourceImage::zeros(g);
        five.values_mut()[[0, 0]] = 3.0;
        five.values_mut()[[1, 1]] = 4.0;
        let zero = SourceImage::zeros(g);
        assert!((relative_l2_error(&zero, &five).unwrap() - 1.0).abs() < 1e-15);
        assert!((relative_l2_error(&five, &zero).unwrap() - 5.0).abs() < 1e-15);

        let other = SourceImage::zeros(grid(5, 1.0));
        assert!(relative_l2_error(&x, &other).is_err());
    }

    #[test]
    fn new_rejects_nan_and_bad_shape() {
        let g = grid(4, 1.0);
        assert!(SourceImage::new(g, Array2::zeros((3, 4))).is_err());
        let mut v = Array2::zeros((4, 4));
        v[[1, 1]] = f64::NAN;
        assert!(SourceImage::new(g, v).is_err());
    }

    fn random_image(g: Grid2D, seed: Vec<f64>) -> SourceImage {
        SourceImage::new(g, Array2::from_shape_vec(g.shape(), seed).unwrap()).unwrap()
    }

    proptest! {
        #[test]
        fn laplacian_is_linear(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            u in prop::collection::vec(-1.0f64..1.0, 36),
            v in prop::collection::vec(-1.0f64..1.0, 36),
        ) {
            let g = grid(6, 0.7);
            let f = random_image(g, u);
            let h = random_image(g, v);
            let lhs = discrete_laplacian(&f.lincomb(a, &h, b));
            let rhs = discrete_laplacian(&f).lincomb(a, &discrete_laplacian(&h), b);
            let scale = 1.0 + lhs.norm();
            prop_assert!(relative_l2_error(&lhs, &rhs).unwrap() * rhs.norm() <= 1e-12 * scale);
        }

        #[test]
        fn laplacian_is_symmetric(
            u in prop::collection::vec(-1.0f64..1.0, 49),
            v in prop::collection::vec(-1.0f64..1.0, 49),
        ) {
            let g = grid(7, 1.3);
            let f = random_image(g, u);
            let h = random_image(g, v);
            let lhs = discrete_laplacian(&f).dot(&h);
            let rhs = f.dot(&discrete_laplacian(&h));
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }
}
