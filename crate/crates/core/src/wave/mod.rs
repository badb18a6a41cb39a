//! Time-domain wave propagation: the detector operator `W`, its adjoint,
//! the second time derivative of traces and the Dirichlet Poisson solver.

mod commutation;
mod derivative;
mod poisson;
mod solver;

pub use commutation::verify_commutation;
pub use derivative::second_time_derivative;
pub use poisson::poisson_solve;
pub use solver::{adjoint_w, forward_w, PressureField, SensorSampler, WaveOperator};

use serde::{Deserialize, Serialize};

use crate::grid::{Grid2D, TimeAxis};
use crate::image::SourceImage;
use crate::{Error, Result};

/// Largest allowed `c_max · dt / spacing` for the internal step.
pub const MAX_CFL: f64 = 0.5;

/// Absorbing layer along the grid edges.
///
/// Damping grows as `σ_max (e^{3s} − 1)/(e³ − 1)` with penetration depth
/// `s ∈ [0, 1]` across `width` nodes, where
/// `σ_max = strength · c_max / (width · spacing)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sponge {
    pub width: usize,
    pub strength: f64,
}

impl Sponge {
    pub const DEFAULT_WIDTH: usize = 16;
    pub const DEFAULT_STRENGTH: f64 = 10.0;

    pub fn none() -> Self {
        Self {
            width: 0,
            strength: 0.0,
        }
    }

    pub fn with_width(width: usize) -> Self {
        Self {
            width,
            strength: Self::DEFAULT_STRENGTH,
        }
    }

    /// Damping coefficient per node, zero outside the layer.
    pub fn profile(&self, grid: &Grid2D, c_max: f64) -> Vec<f64> {
        let mut sigma = vec![0.0; grid.len()];
        if self.width == 0 || self.strength == 0.0 {
            return sigma;
        }
        let w = self.width as f64;
        let sigma_max = self.strength * c_max / (w * grid.spacing);
        let norm = 3f64.exp() - 1.0;
        for iy in 0..grid.ny {
            for ix in 0..grid.nx {
                let edge = ix.min(iy).min(grid.nx - 1 - ix).min(grid.ny - 1 - iy);
                if edge < self.width {
                    let s = (w - edge as f64) / w;
                    sigma[iy * grid.nx + ix] = sigma_max * ((3.0 * s).exp() - 1.0) / norm;
                }
            }
        }
        sigma
    }
}

impl Default for Sponge {
    fn default() -> Self {
        Self::with_width(Self::DEFAULT_WIDTH)
    }
}

/// Medium and sampling parameters of a simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveConfig {
    pub sound_speed: SourceImage,
    pub time_axis: TimeAxis,
    /// Solver steps per output sample.
    pub cfl_substeps: usize,
    pub sponge: Sponge,
}

impl WaveConfig {
    /// Configuration with the number of substeps chosen from the CFL bound.
    pub fn new(sound_speed: SourceImage, time_axis: TimeAxis, sponge: Sponge) -> Result<Self> {
        let c_max = sound_speed.max();
        let spacing = sound_speed.grid().spacing;
        let cfl_substeps = auto_substeps(c_max, time_axis.dt(), spacing);
        let cfg = Self {
            sound_speed,
            time_axis,
            cfl_substeps,
            sponge,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Homogeneous medium with speed `c`.
    pub fn homogeneous(grid: Grid2D, c: f64, time_axis: TimeAxis, sponge: Sponge) -> Result<Self> {
        Self::new(SourceImage::constant(grid, c), time_axis, sponge)
    }

    pub fn grid(&self) -> &Grid2D {
        self.sound_speed.grid()
    }

    pub fn c_max(&self) -> f64 {
        self.sound_speed.max()
    }

    pub fn internal_dt(&self) -> f64 {
        self.time_axis.dt() / self.cfl_substeps as f64
    }

    pub fn validate(&self) -> Result<()> {
        self.grid().validate()?;
        self.time_axis.validate()?;
        if self.sound_speed.values().iter().any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(Error::Config("sound speed must be positive and finite".into()));
        }
        if self.cfl_substeps == 0 {
            return Err(Error::Config("cfl_substeps must be positive".into()));
        }
        if 2 * self.sponge.width >= self.grid().nx.min(self.grid().ny) {
            return Err(Error::Config(format!(
                "sponge width {} leaves no interior on a {}x{} grid",
                self.sponge.width,
                self.grid().nx,
                self.grid().ny
            )));
        }
        let c_max = self.c_max();
        let dt = self.internal_dt();
        let spacing = self.grid().spacing;
        let number = c_max * dt / spacing;
        if number > MAX_CFL {
            return Err(Error::Cfl {
                c_max,
                dt,
                spacing,
                number,
            });
        }
        Ok(())
    }
}

/// `⌈c_max · dt_out / (0.5 · spacing)⌉`, at least one.
pub fn auto_substeps(c_max: f64, dt_out: f64, spacing: f64) -> usize {
    ((c_max * dt_out / (MAX_CFL * spacing)) * (1.0 - 1e-12)).ceil().max(1.0) as usize
}
