//! Experiment configuration, end-to-end pipelines and figure output.

mod baseline;
mod figure;
mod grid;
mod manifest;
mod run;
mod scene;

pub use baseline::{
    edge_dice, fbp_full_data_error, freeze_baselines, reference_manifest, reference_results,
    Baselines, CellBaseline, ProfileBaselines, ReferenceBaseline, BASELINE_MARGIN, EDGE_FRACTION,
};
pub use figure::{
    convergence, convergence_svg, montage, recon_pair, FigureKind, MONTAGE_SEPARATOR, SERIES,
};
pub use grid::{
    bundled_head_phantom, grid_cells, run_paper_grid, run_paper_grid_with, GridCell, GridOptions,
    GridReport, GridRow, Profile, GRID_NOISE_LEVEL, SUMMARY_FILE,
};
pub use manifest::{ExperimentManifest, MatrixSpec, NoiseSpec, PhantomSpec, SolverKind};
pub use run::{
    build_phantom, history_csv, parse_history_csv, psnr, read_metrics, run_experiment,
    run_experiment_observed, ExperimentReport, Metrics, Timing, DEFAULT_SEED, HISTORY_FILE,
    MANIFEST_FILE, METRICS_FILE, RECON_PGM, RECON_RAW, TIMING_FILE, TRUTH_PGM, TRUTH_RAW,
};
pub use scene::{Scene, SceneSpec};
