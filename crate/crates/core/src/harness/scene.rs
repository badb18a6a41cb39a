use serde::{Deserialize, Serialize};

use crate::grid::{DetectorGeometry, Grid2D, TimeAxis};
use crate::image::SourceImage;
use crate::wave::{Sponge, WaveConfig};
use crate::{Error, Result};

/// Grid, detectors and medium shared by one experiment.
///
/// Lengths are in grid nodes and the reference sound speed is 1, so the
/// time axis `[0, 2R]` lets a wave cross the whole detection disc.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub grid: Grid2D,
    pub geometry: DetectorGeometry,
    pub wave: WaveConfig,
}

/// Serializable description of a [`Scene`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub grid_size: usize,
    pub num_sensors: usize,
    pub time_samples: usize,
    pub sponge_width: usize,
    /// Radians covered by the detector arc.
    #[serde(default = "full_circle")]
    pub angular_coverage: f64,
}

fn full_circle() -> f64 {
    std::f64::consts::TAU
}

impl SceneSpec {
    pub fn new(grid_size: usize, num_sensors: usize, time_samples: usize, sponge_width: usize) -> Self {
        Self {
            grid_size,
            num_sensors,
            time_samples,
            sponge_width,
            angular_coverage: std::f64::consts::TAU,
        }
    }

    /// Detection radius leaving two nodes between the circle and the sponge.
    pub fn detection_radius(&self) -> f64 {
        ((self.grid_size as f64 - 1.0) / 2.0 - self.sponge_width as f64 - 2.0).floor()
    }

    pub fn build(&self) -> Result<Scene> {
        let radius = self.detection_radius();
        if radius < 2.0 {
            return Err(Error::Config(format!(
                "grid of {} nodes is too small for a sponge of {}",
                self.grid_size, self.sponge_width
            )));
        }
        let grid = Grid2D::centered(self.grid_size, 1.0)?;
        let geometry =
            DetectorGeometry::new([0.0, 0.0], radius, self.num_sensors, self.angular_coverage)?;
        geometry.check_inside(&grid)?;
        let axis = TimeAxis::new(self.time_samples, 2.0 * radius)?;
        let wave = WaveConfig::homogeneous(grid, 1.0, axis, Sponge::with_width(self.sponge_width))?;
        Ok(Scene {
            grid,
            geometry,
            wave,
        })
    }
}

impl Scene {
    /// Replaces the homogeneous medium by `sound_speed`.
    pub fn with_sound_speed(mut self, sound_speed: SourceImage) -> Result<Self> {
        self.wave = WaveConfig::new(sound_speed, self.wave.time_axis, self.wave.sponge)?;
        Ok(self)
    }

    pub fn support_radius(&self) -> f64 {
        crate::phantom::SUPPORT_FRACTION * self.geometry.radius
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_scenes() {
        let s = SceneSpec::new(128, 200, 301, 16).build().unwrap();
        assert_eq!(s.geometry.radius, 45.0);
        assert_eq!(s.wave.cfl_substeps, 1);
        assert!((s.wave.time_axis.dt() - 0.3).abs() < 1e-15);
        let small = SceneSpec::new(64, 100, 151, 8).build().unwrap();
        assert_eq!(small.geometry.radius, 21.0);
        assert!(SceneSpec::new(20, 10, 101, 8).build().is_err());
    }
}
