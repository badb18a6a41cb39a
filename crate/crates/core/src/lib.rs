//! Compressed-sensing photoacoustic tomography.
//!
//! The crate simulates 2-D acoustic propagation from an initial pressure
//! source, takes compressive combinations of the detector traces, and
//! reconstructs the source jointly with its Laplacian by proximal gradient
//! iterations. Filtered backprojection and a two-stage ℓ1 + Poisson method
//! are provided as baselines.
//!
//! Module map:
//! - [`grid`], [`image`], [`phantom`], [`io`]: grids, images, detector
//!   geometry and file formats.
//! - [`wave`]: leapfrog wave solver `W`, its exact adjoint, the second time
//!   derivative and the Dirichlet Poisson solver.
//! - [`sensing`]: measurement matrices, `M = A·W` and noise.
//! - [`recon`]: joint solver, two-stage solver and FBP.
//! - [`harness`]: experiment manifests, pipelines and figures.

pub mod error;
pub mod grid;
pub mod harness;
pub mod image;
pub mod io;
pub mod phantom;
pub mod recon;
pub mod sensing;
pub mod wave;

pub use error::{Error, Result};
pub use grid::{DetectorGeometry, Grid2D, TimeAxis};
pub use image::{discrete_laplacian, relative_l2_error, SourceImage};
pub use sensing::{MatrixKind, MeasurementMatrix, SensorData};
pub use wave::WaveConfig;
