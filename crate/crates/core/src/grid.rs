//! Spatial grid, time axis and detector geometry.

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform 2-D grid. Node `(ix, iy)` sits at `origin + spacing * (ix, iy)`.
///
/// Images on the grid are stored row-major with shape `(ny, nx)`, so the
/// array index is `[iy, ix]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub nx: usize,
    pub ny: usize,
    pub spacing: f64,
    pub origin: [f64; 2],
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize, spacing: f64, origin: [f64; 2]) -> Result<Self> {
        let grid = Self {
            nx,
            ny,
            spacing,
            origin,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Square `n x n` grid centred on the physical origin.
    pub fn centered(n: usize, spacing: f64) -> Result<Self> {
        let half = 0.5 * (n.saturating_sub(1)) as f64 * spacing;
        Self::new(n, n, spacing, [-half, -half])
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx < 3 || self.ny < 3 {
            return Err(Error::Config(format!(
                "grid must be at least 3x3, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::Config(format!(
                "grid spacing must be positive, got {}",
                self.spacing
            )));
        }
        if !(self.origin[0].is_finite() && self.origin[1].is_finite()) {
            return Err(Error::Config("grid origin must be finite".into()));
        }
        Ok(())
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.ny, self.nx)
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Physical position of node `(ix, iy)`.
    pub fn position(&self, ix: usize, iy: usize) -> [f64; 2] {
        [
            self.origin[0] + ix as f64 * self.spacing,
            self.origin[1] + iy as f64 * self.spacing,
        ]
    }

    /// Lower-left and upper-right corners of the node lattice.
    pub fn extent(&self) -> ([f64; 2], [f64; 2]) {
        let hi = self.position(self.nx - 1, self.ny - 1);
        (self.origin, hi)
    }

    pub fn contains(&self, point: [f64; 2]) -> bool {
        let (lo, hi) = self.extent();
        point[0] >= lo[0] && point[0] <= hi[0] && point[1] >= lo[1] && point[1] <= hi[1]
    }

    /// Fractional grid coordinates `(ix, iy)` of a physical point.
    pub fn fractional_index(&self, point: [f64; 2]) -> [f64; 2] {
        [
            (point[0] - self.origin[0]) / self.spacing,
            (point[1] - self.origin[1]) / self.spacing,
        ]
    }
}

/// Equidistant output samples on `[0, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    pub num_samples: usize,
    pub t_max: f64,
}

impl TimeAxis {
    pub fn new(num_samples: usize, t_max: f64) -> Result<Self> {
        let axis = Self {
            num_samples,
            t_max,
        };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 3 {
            return Err(Error::Config(format!(
                "time axis needs at least 3 samples, got {}",
                self.num_samples
            )));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!(
                "time axis duration must be positive, got {}",
                self.t_max
            )));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_max / (self.num_samples - 1) as f64
    }

    pub fn time(&self, index: usize) -> f64 {
        index as f64 * self.dt()
    }
}

/// Point detectors equispaced on a circular arc.
///
/// With full coverage (`angular_coverage >= 2π`) the sensors sit at
/// `start_angle + 2π i / n`; for a partial arc both arc endpoints carry a
/// sensor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorGeometry {
    pub center: [f64; 2],
    pub radius: f64,
    pub num_sensors: usize,
    pub angular_coverage: f64,
    #[serde(default)]
    pub start_angle: f64,
}

impl DetectorGeometry {
    pub fn new(
        center: [f64; 2],
        radius: f64,
        num_sensors: usize,
        angular_coverage: f64,
    ) -> Result<Self> {
        let geom = Self {
            center,
            radius,
            num_sensors,
            angular_coverage,
            start_angle: 0.0,
        };
        geom.validate()?;
        Ok(geom)
    }

    /// Full circle of `num_sensors` detectors.
    pub fn circle(center: [f64; 2], radius: f64, num_sensors: usize) -> Result<Self> {
        Self::new(center, radius, num_sensors, TAU)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_sensors == 0 {
            return Err(Error::Config("geometry needs at least one sensor".into()));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::Config(format!(
                "detection radius must be positive, got {}",
                self.radius
            )));
        }
        if !(self.angular_coverage > 0.0 && self.angular_coverage.is_finite()) {
            return Err(Error::Config(format!(
                "angular coverage must be positive, got {}",
                self.angular_coverage
            )));
        }
        Ok(())
    }

    pub fn is_full_circle(&self) -> bool {
        self.angular_coverage >= TAU - 1e-12
    }

    /// Angle of every sensor in radians.
    pub fn sensor_angles(&self) -> Vec<f64> {
        let n = self.num_sensors;
        (0..n)
            .map(|i| {
                let frac = if self.is_full_circle() {
                    i as f64 / n as f64
                } else if n == 1 {
                    0.0
                } else {
                    i as f64 / (n - 1) as f64
                };
                self.start_angle + frac * self.angular_coverage.min(TAU)
            })
            .collect()
    }

    pub fn sensor_positions(&self) -> Vec<[f64; 2]> {
        self.sensor_angles()
            .into_iter()
            .map(|a| {
                [
                    self.center[0] + self.radius * a.cos(),
                    self.center[1] + self.radius * a.sin(),
                ]
            })
            .collect()
    }

    /// Arc length represented by each sensor, used as quadrature weight.
    pub fn arc_weight(&self) -> f64 {
        let n = self.num_sensors as f64;
        if self.is_full_circle() {
            TAU * self.radius / n
        } else {
            self.angular_coverage * self.radius / n
        }
    }

    /// Checks that every sensor lies inside the physical extent of `grid`.
    pub fn check_inside(&self, grid: &Grid2D) -> Result<()> {
        self.validate()?;
        for (i, p) in self.sensor_positions().into_iter().enumerate() {
            if !grid.contains(p) {
                return Err(Error::Config(format!(
                    "sensor {i} at ({:.4}, {:.4}) lies outside the grid",
                    p[0], p[1]
                )));
            }
        }
        Ok(())
    }

    /// Checks that the whole detection disc fits in the grid.
    pub fn check_disc_inside(&self, grid: &Grid2D) -> Result<()> {
        let (lo, hi) = grid.extent();
        let [cx, cy] = self.center;
        let r = self.radius;
        if cx - r < lo[0] || cx + r > hi[0] || cy - r < lo[1] || cy + r > hi[1] {
            return Err(Error::Config(format!(
                "detection disc (centre ({cx}, {cy}), radius {r}) does not fit in the grid"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_tiny_and_bad_spacing() {
        assert!(Grid2D::new(2, 5, 1.0, [0.0, 0.0]).is_err());
        assert!(Grid2D::new(5, 5, 0.0, [0.0, 0.0]).is_err());
        assert!(Grid2D::new(5, 5, -1.0, [0.0, 0.0]).is_err());
        assert!(Grid2D::new(3, 3, 1.0, [0.0, 0.0]).is_ok());
    }

    #[test]
    fn centered_grid_is_symmetric() {
        let g = Grid2D::centered(5, 0.5).unwrap();
        assert_eq!(g.origin, [-1.0, -1.0]);
        assert_eq!(g.position(4, 4), [1.0, 1.0]);
        assert_eq!(g.position(2, 2), [0.0, 0.0]);
    }

    #[test]
    fn time_axis_dt() {
        let t = TimeAxis::new(301, 2.0).unwrap();
        assert!((t.dt() - 2.0 / 300.0).abs() < 1e-15);
        assert!(TimeAxis::new(2, 1.0).is_err());
    }

    #[test]
    fn full_circle_sensors_are_equispaced() {
        let g = DetectorGeometry::circle([0.0, 0.0], 2.0, 4).unwrap();
        let p = g.sensor_positions();
        assert!((p[0][0] - 2.0).abs() < 1e-12);
        assert!((p[1][1] - 2.0).abs() < 1e-12);
        assert!((p[2][0] + 2.0).abs() < 1e-12);
        for q in &p {
            assert!((q[0].hypot(q[1]) - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn partial_arc_includes_endpoints() {
        let g = DetectorGeometry::new([0.0, 0.0], 1.0, 3, std::f64::consts::PI).unwrap();
        let a = g.sensor_angles();
        assert_eq!(a.len(), 3);
        assert!((a[2] - std::f64::consts::PI).abs() < 1e-12);
    }

    #[test]
    fn geometry_outside_grid_is_rejected() {
        let grid = Grid2D::centered(11, 1.0).unwrap();
        let inside = DetectorGeometry::circle([0.0, 0.0], 4.0, 16).unwrap();
        let outside = DetectorGeometry::circle([0.0, 0.0], 6.0, 16).unwrap();
        assert!(inside.check_inside(&grid).is_ok());
        assert!(outside.check_inside(&grid).is_err());
        assert!(DetectorGeometry::circle([0.0, 0.0], 1.0, 0).is_err());
    }
}
