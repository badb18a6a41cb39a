use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::manifest::{ExperimentManifest, PhantomSpec, SolverKind};
use super::scene::Scene;
use crate::image::{relative_l2_error, SourceImage};
use crate::io::{write_image_pgm, write_raw};
use crate::phantom::{load_image_phantom, make_cross_phantom};
use crate::recon::{
    fbp_reconstruct, solve_l1_then_poisson, HistoryEntry, JointProblem, JointSolver, Termination,
};
use crate::sensing::{add_noise, apply_a_transpose, CsOperator, MeasurementMatrix};
use crate::wave::second_time_derivative;
use crate::{Error, Result};

/// Base seed used when neither the manifest nor the caller provides one.
pub const DEFAULT_SEED: u64 = 20_240_601;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const METRICS_FILE: &str = "metrics.json";
pub const TIMING_FILE: &str = "timing.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const RECON_PGM: &str = "reconstruction.pgm";
pub const RECON_RAW: &str = "reconstruction.raw";
pub const TRUTH_PGM: &str = "truth.pgm";
pub const TRUTH_RAW: &str = "truth.raw";

/// Deterministic quality figures of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub solver: SolverKind,
    pub relative_l2_error: f64,
    /// `10·log10(max(truth)² / MSE)`; absent for an exact reconstruction.
    pub psnr: Option<f64>,
    pub iterations: Option<usize>,
    pub termination: Option<Termination>,
    pub final_objective: Option<f64>,
}

/// Wall-clock time, kept apart from [`Metrics`] so that metrics stay
/// reproducible bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    /// The manifest with all seeds filled in.
    pub manifest: ExperimentManifest,
    pub metrics: Metrics,
    pub timing: Timing,
    pub truth: SourceImage,
    pub reconstruction: SourceImage,
    pub history: Vec<HistoryEntry>,
}

pub fn psnr(reconstruction: &SourceImage, truth: &SourceImage) -> Result<Option<f64>> {
    reconstruction.same_shape(truth)?;
    let n = truth.as_slice().len() as f64;
    let mse = reconstruction
        .as_slice()
        .iter()
        .zip(truth.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n;
    let peak = truth.max();
    Ok((mse > 0.0).then(|| 10.0 * (peak * peak / mse).log10()))
}

pub fn history_csv(history: &[HistoryEntry]) -> String {
    let mut out =
        String::from("iteration,objective,data_f_residual,data_h_residual,coupling_residual,l1_term\n");
    for e in history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            e.iteration,
            e.objective,
            e.data_f_residual,
            e.data_h_residual,
            e.coupling_residual,
            e.l1_term
        );
    }
    out
}

pub fn parse_history_csv(text: &str) -> Result<Vec<HistoryEntry>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || Error::Config(format!("history line {}: cannot parse '{line}'", n + 1));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 6 {
            return Err(bad());
        }
        let num = |i: usize| cols[i].trim().parse::<f64>().map_err(|_| bad());
        out.push(HistoryEntry {
            iteration: cols[0].trim().parse().map_err(|_| bad())?,
            objective: num(1)?,
            data_f_residual: num(2)?,
            data_h_residual: num(3)?,
            coupling_residual: num(4)?,
            l1_term: num(5)?,
        });
    }
    Ok(out)
}

pub fn build_phantom(spec: &PhantomSpec, scene: &Scene) -> Result<SourceImage> {
    match spec {
        PhantomSpec::Cross => make_cross_phantom(&scene.grid, &scene.geometry),
        PhantomSpec::Image { path } => load_image_phantom(path, &scene.grid, &scene.geometry),
    }
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Runs phantom → `M f` → noise → solver and writes all artifacts into
/// the manifest's output directory.
pub fn run_experiment(manifest: &ExperimentManifest) -> Result<ExperimentReport> {
    run_experiment_observed(manifest, |_| {})
}

/// As [`run_experiment`], reporting every recorded history entry.
pub fn run_experiment_observed(
    manifest: &ExperimentManifest,
    mut observer: impl FnMut(&HistoryEntry),
) -> Result<ExperimentReport> {
    let start = Instant::now();
    let manifest = manifest.resolved(DEFAULT_SEED);
    stage("manifest", manifest.validate())?;
    let scene = stage("scene", manifest.scene.build())?;
    let truth = stage("phantom", build_phantom(&manifest.phantom, &scene))?;

    let spec = manifest.matrix;
    let a = stage(
        "measurement",
        MeasurementMatrix::generate(spec.kind, spec.m, scene.geometry.num_sensors, spec.seed.unwrap_or(0)),
    )?;
    let op = stage("measurement", CsOperator::new(a, &scene.wave, &scene.geometry))?;
    let clean = stage("simulate", op.forward(&truth))?;
    let y = stage(
        "noise",
        add_noise(&clean, manifest.noise.level, manifest.noise.seed.unwrap_or(0)),
    )?;

    let rc = manifest.recon;
    let (reconstruction, history, iterations, termination) = match manifest.solver {
        SolverKind::Joint => {
            let y_tt = stage("derivative", second_time_derivative(&y))?;
            let problem = stage(
                "solve",
                JointProblem::new(&op, &y, &y_tt, &scene.wave.sound_speed, rc.alpha, rc.beta),
            )?;
            let state = stage(
                "solve",
                JointSolver::new(problem, rc).and_then(|s| {
                    s.with_mask(rc.support_mask(&scene.geometry, &scene.wave))
                        .with_observer(&mut observer)
                        .run()
                }),
            )?;
            (state.f, state.history, Some(state.iterations), Some(state.termination))
        }
        SolverKind::TwoStage => {
            let r = stage(
                "solve",
                solve_l1_then_poisson(&y, op.matrix(), &scene.wave, &scene.geometry, &rc),
            )?;
            r.history.iter().for_each(&mut observer);
            (r.f, r.history, Some(r.iterations), Some(r.termination))
        }
        SolverKind::Fbp => {
            let back = stage("solve", apply_a_transpose(op.matrix(), &y))?;
            let f = stage("solve", fbp_reconstruct(&back, &scene.wave, &scene.geometry))?;
            (f, Vec::new(), None, None)
        }
    };

    let metrics = Metrics {
        solver: manifest.solver,
        relative_l2_error: stage("metrics", relative_l2_error(&reconstruction, &truth))?,
        psnr: stage("metrics", psnr(&reconstruction, &truth))?,
        iterations,
        termination,
        final_objective: history.last().map(|e| e.objective),
    };
    let timing = Timing {
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    let report = ExperimentReport {
        manifest,
        metrics,
        timing,
        truth,
        reconstruction,
        history,
    };
    stage("output", write_report(&report))?;
    Ok(report)
}

fn write_report(report: &ExperimentReport) -> Result<()> {
    let dir: &Path = &report.manifest.output_dir;
    fs::create_dir_all(dir)?;
    report.manifest.save(dir.join(MANIFEST_FILE))?;
    fs::write(
        dir.join(METRICS_FILE),
        serde_json::to_string_pretty(&report.metrics)? + "\n",
    )?;
    fs::write(
        dir.join(TIMING_FILE),
        serde_json::to_string_pretty(&report.timing)? + "\n",
    )?;
    write_image_pgm(dir.join(RECON_PGM), &report.reconstruction)?;
    write_raw(dir.join(RECON_RAW), report.reconstruction.values())?;
    write_image_pgm(dir.join(TRUTH_PGM), &report.truth)?;
    write_raw(dir.join(TRUTH_RAW), report.truth.values())?;
    if !report.history.is_empty() {
        fs::write(dir.join(HISTORY_FILE), history_csv(&report.history))?;
    }
    Ok(())
}

/// Reads the metrics written by a previous run.
pub fn read_metrics(dir: impl AsRef<Path>) -> Result<Metrics> {
    let path: PathBuf = dir.as_ref().join(METRICS_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::input(&path, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| Error::input(&path, e.to_string()))
}
