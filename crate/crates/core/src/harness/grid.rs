use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::manifest::{ExperimentManifest, MatrixSpec, NoiseSpec, PhantomSpec, SolverKind};
use super::run::{run_experiment, ExperimentReport};
use super::scene::SceneSpec;
use crate::recon::{ReconConfig, Thresholding};
use crate::sensing::MatrixKind;
use crate::{Error, Result};

/// Noise level of the noisy cells, `‖noise‖ / ‖data‖`.
pub const GRID_NOISE_LEVEL: f64 = 0.15;

/// Problem size of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 64×64 grid, 100 sensors, 151 samples, 2000 iterations.
    Small,
    /// 128×128 grid, 200 sensors, 301 samples, 5000 iterations.
    Paper,
}

impl Profile {
    pub fn scene(self) -> SceneSpec {
        match self {
            Profile::Small => SceneSpec::new(64, 100, 151, 8),
            Profile::Paper => SceneSpec::new(128, 200, 301, 16),
        }
    }

    /// Measurement counts of the three grid columns.
    pub fn measurements(self) -> [usize; 3] {
        match self {
            Profile::Small => [10, 25, 30],
            Profile::Paper => [20, 50, 60],
        }
    }

    pub fn iterations(self) -> usize {
        match self {
            Profile::Small => 2000,
            Profile::Paper => 5000,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Small => "small",
            Profile::Paper => "paper",
        }
    }
}

impl std::fmt::Display for Profile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Profile::Small),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!(
                "unknown profile '{other}' (expected small or paper)"
            ))),
        }
    }
}

/// Path of the bundled head phantom.
pub fn bundled_head_phantom() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join("head.pgm")
}

/// One phantom/measurement/noise combination of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCell {
    pub name: String,
    pub phantom: PhantomSpec,
    pub m: usize,
    pub noise: f64,
}

/// The six cells: cross with few and more measurements, the head image,
/// each without and with noise.
pub fn grid_cells(profile: Profile) -> Vec<GridCell> {
    let [m_low, m_high, m_image] = profile.measurements();
    let cross = PhantomSpec::Cross;
    let head = PhantomSpec::Image {
        path: bundled_head_phantom(),
    };
    let mut cells = Vec::new();
    for noise in [0.0, GRID_NOISE_LEVEL] {
        let suffix = if noise > 0.0 { "_noisy" } else { "" };
        for (phantom, label, m) in [
            (&cross, "cross", m_low),
            (&cross, "cross", m_high),
            (&head, "image", m_image),
        ] {
            cells.push(GridCell {
                name: format!("{label}_m{m}{suffix}"),
                phantom: phantom.clone(),
                m,
                noise,
            });
        }
    }
    cells
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOptions {
    pub profile: Profile,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub thresholding: Thresholding,
    /// Overrides the profile's iteration count.
    pub max_iters: Option<usize>,
}

impl GridOptions {
    pub fn new(profile: Profile, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            profile,
            output_dir: output_dir.into(),
            seed: super::run::DEFAULT_SEED,
            thresholding: Thresholding::Scaled,
            max_iters: None,
        }
    }

    pub fn manifest(&self, cell: &GridCell, solver: SolverKind) -> ExperimentManifest {
        ExperimentManifest {
            phantom: cell.phantom.clone(),
            scene: self.profile.scene(),
            matrix: MatrixSpec {
                kind: MatrixKind::Bernoulli,
                m: cell.m,
                seed: Some(self.seed),
            },
            noise: NoiseSpec {
                level: cell.noise,
                seed: Some(self.seed.wrapping_add(1)),
            },
            solver,
            recon: ReconConfig {
                max_iters: self.max_iters.unwrap_or(self.profile.iterations()),
                thresholding: self.thresholding,
                ..Default::default()
            },
            output_dir: self.output_dir.join(&cell.name).join(solver.to_string()),
        }
    }
}

/// Outcome of one cell for both solvers.
#[derive(Debug, Clone)]
pub struct GridRow {
    pub cell: GridCell,
    pub joint: std::result::Result<ExperimentReport, String>,
    pub fbp: std::result::Result<ExperimentReport, String>,
}

impl GridRow {
    pub fn joint_error(&self) -> Option<f64> {
        self.joint.as_ref().ok().map(|r| r.metrics.relative_l2_error)
    }

    pub fn fbp_error(&self) -> Option<f64> {
        self.fbp.as_ref().ok().map(|r| r.metrics.relative_l2_error)
    }

    pub fn failures(&self) -> Vec<String> {
        [("joint", &self.joint), ("fbp", &self.fbp)]
            .into_iter()
            .filter_map(|(name, r)| r.as_ref().err().map(|e| format!("{name}: {e}")))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GridReport {
    pub profile: Profile,
    pub rows: Vec<GridRow>,
    pub wall_time_s: f64,
}

pub const SUMMARY_FILE: &str = "summary.csv";

impl GridReport {
    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.failures().is_empty())
    }

    pub fn row(&self, name: &str) -> Option<&GridRow> {
        self.rows.iter().find(|r| r.cell.name == name)
    }

    pub fn summary_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let psnr = |r: &std::result::Result<ExperimentReport, String>| {
            opt(r.as_ref().ok().and_then(|r| r.metrics.psnr))
        };
        let mut out = String::from("cell,phantom,m,noise,joint_error,fbp_error,joint_psnr,fbp_psnr,status\n");
        for row in &self.rows {
            let phantom = match row.cell.phantom {
                PhantomSpec::Cross => "cross",
                PhantomSpec::Image { .. } => "image",
            };
            let failures = row.failures();
            let status = if failures.is_empty() {
                "ok".to_string()
            } else {
                format!("failed ({})", failures.join("; ").replace([',', '\n'], " "))
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.cell.name,
                phantom,
                row.cell.m,
                row.cell.noise,
                opt(row.joint_error()),
                opt(row.fbp_error()),
                psnr(&row.joint),
                psnr(&row.fbp),
                status
            );
        }
        out
    }
}

/// Runs every cell with the joint solver and the FBP baseline, continuing
/// past failures, and writes `summary.csv` into the output directory.
pub fn run_paper_grid(opts: &GridOptions) -> Result<GridReport> {
    run_paper_grid_with(opts, |_, _| {})
}

/// As [`run_paper_grid`], calling `progress` after each experiment.
pub fn run_paper_grid_with(
    opts: &GridOptions,
    mut progress: impl FnMut(&GridCell, &std::result::Result<ExperimentReport, String>),
) -> Result<GridReport> {
    let start = Instant::now();
    let mut rows = Vec::new();
    for cell in grid_cells(opts.profile) {
        let mut run = |solver| {
            let r = run_experiment(&opts.manifest(&cell, solver)).map_err(|e| e.to_string());
            progress(&cell, &r);
            r
        };
        let joint = run(SolverKind::Joint);
        let fbp = run(SolverKind::Fbp);
        rows.push(GridRow { cell, joint, fbp });
    }
    let report = GridReport {
        profile: opts.profile,
        rows,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    fs::create_dir_all(&opts.output_dir)?;
    fs::write(opts.output_dir.join(SUMMARY_FILE), report.summary_csv())?;
    Ok(report)
}
