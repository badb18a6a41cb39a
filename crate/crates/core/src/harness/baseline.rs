use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::grid::{run_paper_grid_with, GridCell, GridOptions, GridReport, Profile};
use super::manifest::{ExperimentManifest, MatrixSpec, NoiseSpec, PhantomSpec, SolverKind};
use super::run::{run_experiment, ExperimentReport};
use super::scene::SceneSpec;
use crate::image::{discrete_laplacian, SourceImage};
use crate::recon::ReconConfig;
use crate::sensing::MatrixKind;
use crate::wave::forward_w;
use crate::{Error, Result};

/// Relative slack added to frozen errors to absorb platform rounding.
pub const BASELINE_MARGIN: f64 = 0.02;

/// Fraction of the maximum used to binarize `|Δf|` for edge overlap.
pub const EDGE_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellBaseline {
    pub joint_error: f64,
    pub fbp_error: f64,
    /// Upper bound accepted for the joint error.
    pub joint_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileBaselines {
    pub seed: u64,
    pub iterations: usize,
    pub cells: BTreeMap<String, CellBaseline>,
}

/// Frozen results of the small reference instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBaseline {
    pub joint_error: f64,
    pub joint_threshold: f64,
    pub two_stage_error: f64,
    pub two_stage_edge_dice: f64,
    /// Lower bound accepted for the edge overlap.
    pub two_stage_dice_threshold: f64,
    /// FBP of complete 128×128, 200-sensor data of the cross.
    pub fbp_full_error: f64,
    pub fbp_full_threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub margin: f64,
    pub reference: ReferenceBaseline,
    pub profiles: BTreeMap<Profile, ProfileBaselines>,
}

impl Baselines {
    /// The checked-in baseline file of this crate.
    pub fn default_path() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("baselines.json")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::input(path, e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| Error::input(path, e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

/// Dice overlap of `|Δa| ≥ τ·max|Δa|` and `|Δb| ≥ τ·max|Δb|`.
pub fn edge_dice(a: &SourceImage, b: &SourceImage, fraction: f64) -> Result<f64> {
    a.same_shape(b)?;
    let mask = |img: &SourceImage| -> Vec<bool> {
        let lap = discrete_laplacian(img).map(f64::abs);
        let t = fraction * lap.max();
        lap.as_slice().iter().map(|&v| t > 0.0 && v >= t).collect()
    };
    let (ma, mb) = (mask(a), mask(b));
    let both = ma.iter().zip(&mb).filter(|(x, y)| **x && **y).count();
    let total = ma.iter().filter(|x| **x).count() + mb.iter().filter(|x| **x).count();
    Ok(if total == 0 { 1.0 } else { 2.0 * both as f64 / total as f64 })
}

/// The small reference experiment: cross, 64×64, 100 sensors, 25
/// Bernoulli measurements, noise-free, 2000 iterations.
pub fn reference_manifest(solver: SolverKind, output_dir: impl Into<PathBuf>, seed: u64) -> ExperimentManifest {
    ExperimentManifest {
        phantom: PhantomSpec::Cross,
        scene: Profile::Small.scene(),
        matrix: MatrixSpec {
            kind: MatrixKind::Bernoulli,
            m: 25,
            seed: Some(seed),
        },
        noise: NoiseSpec {
            level: 0.0,
            seed: Some(seed.wrapping_add(1)),
        },
        solver,
        recon: ReconConfig {
            max_iters: 2000,
            ..Default::default()
        },
        output_dir: output_dir.into(),
    }
}

/// Error of FBP on complete 128×128 data of the cross.
pub fn fbp_full_data_error() -> Result<f64> {
    let scene = SceneSpec::new(128, 200, 301, 16).build()?;
    let f = crate::phantom::make_cross_phantom(&scene.grid, &scene.geometry)?;
    let d = forward_w(&f, &scene.wave, &scene.geometry)?;
    let rec = crate::recon::fbp_reconstruct(&d, &scene.wave, &scene.geometry)?;
    crate::image::relative_l2_error(&rec, &f)
}

/// Reference measurements: joint and two-stage runs plus full-data FBP.
pub fn reference_results(out_dir: &Path, seed: u64) -> Result<(ExperimentReport, ExperimentReport, f64)> {
    let joint = run_experiment(&reference_manifest(SolverKind::Joint, out_dir.join("joint"), seed))?;
    let two = run_experiment(&reference_manifest(SolverKind::TwoStage, out_dir.join("two_stage"), seed))?;
    Ok((joint, two, fbp_full_data_error()?))
}

fn grown(v: f64) -> f64 {
    v * (1.0 + BASELINE_MARGIN)
}

/// Runs the reference instance and the experiment grid of every profile
/// and writes the measured values with their margins to `path`.
pub fn freeze_baselines(
    profiles: &[Profile],
    work_dir: &Path,
    seed: u64,
    path: &Path,
    mut progress: impl FnMut(&str),
) -> Result<Baselines> {
    let (joint, two, fbp_full) = reference_results(&work_dir.join("reference"), seed)?;
    let dice = edge_dice(&two.reconstruction, &two.truth, EDGE_FRACTION)?;
    progress(&format!(
        "reference: joint {:.4}, two-stage {:.4} (edge dice {dice:.3}), full-data fbp {fbp_full:.4}",
        joint.metrics.relative_l2_error, two.metrics.relative_l2_error
    ));
    let reference = ReferenceBaseline {
        joint_error: joint.metrics.relative_l2_error,
        joint_threshold: grown(joint.metrics.relative_l2_error),
        two_stage_error: two.metrics.relative_l2_error,
        two_stage_edge_dice: dice,
        two_stage_dice_threshold: dice * (1.0 - BASELINE_MARGIN),
        fbp_full_error: fbp_full,
        fbp_full_threshold: grown(fbp_full),
    };
    let mut out = BTreeMap::new();
    for &profile in profiles {
        let mut opts = GridOptions::new(profile, work_dir.join(profile.name()));
        opts.seed = seed;
        let report = run_paper_grid_with(&opts, |cell: &GridCell, r| match r {
            Ok(r) => progress(&format!(
                "{profile} {} {}: {:.4}",
                cell.name, r.metrics.solver, r.metrics.relative_l2_error
            )),
            Err(e) => progress(&format!("{profile} {}: {e}", cell.name)),
        })?;
        out.insert(profile, profile_baselines(&report, &opts)?);
    }
    let baselines = Baselines {
        margin: BASELINE_MARGIN,
        reference,
        profiles: out,
    };
    baselines.save(path)?;
    Ok(baselines)
}

fn profile_baselines(report: &GridReport, opts: &GridOptions) -> Result<ProfileBaselines> {
    let mut cells = BTreeMap::new();
    for row in &report.rows {
        let failures = row.failures();
        if !failures.is_empty() {
            return Err(Error::Config(format!(
                "cannot freeze {}: {}",
                row.cell.name,
                failures.join("; ")
            )));
        }
        let (j, f) = (row.joint_error().unwrap_or(f64::NAN), row.fbp_error().unwrap_or(f64::NAN));
        cells.insert(
            row.cell.name.clone(),
            CellBaseline {
                joint_error: j,
                fbp_error: f,
                joint_threshold: grown(j),
            },
        );
    }
    Ok(ProfileBaselines {
        seed: opts.seed,
        iterations: opts.max_iters.unwrap_or(opts.profile.iterations()),
        cells,
    })
}
