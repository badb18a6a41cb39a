use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::{s, Array2};

use super::run::{parse_history_csv, HISTORY_FILE, RECON_RAW};
use crate::io::{read_raw, to_pgm, write_pgm, Pgm};
use crate::recon::HistoryEntry;
use crate::{Error, Result};

/// Blank columns between the two panels of a montage.
pub const MONTAGE_SEPARATOR: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    /// Side-by-side PGM of two reconstructions on a common gray scale.
    ReconPair,
    /// SVG plot of the objective history.
    Convergence,
}

impl std::str::FromStr for FigureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "recon_pair" | "recon-pair" => Ok(FigureKind::ReconPair),
            "convergence" => Ok(FigureKind::Convergence),
            other => Err(Error::Config(format!(
                "unknown figure '{other}' (expected recon_pair or convergence)"
            ))),
        }
    }
}

/// Places `left` and `right` next to each other with a white separator.
pub fn montage(left: &Array2<f64>, right: &Array2<f64>) -> Result<Pgm> {
    if left.dim() != right.dim() {
        return Err(Error::shape(format!("{:?}", left.dim()), format!("{:?}", right.dim())));
    }
    let (h, w) = left.dim();
    let lo = left.iter().chain(right.iter()).copied().fold(f64::INFINITY, f64::min);
    let hi = left.iter().chain(right.iter()).copied().fold(f64::NEG_INFINITY, f64::max);
    let mut canvas = Array2::from_elem((h, 2 * w + MONTAGE_SEPARATOR), hi);
    canvas.slice_mut(s![.., ..w]).assign(left);
    canvas.slice_mut(s![.., w + MONTAGE_SEPARATOR..]).assign(right);
    let (mut pgm, _) = to_pgm(&canvas);
    if hi > lo {
        for iy in 0..h {
            for ix in w..w + MONTAGE_SEPARATOR {
                pgm.data[iy * pgm.width + ix] = 255;
            }
        }
    }
    Ok(pgm)
}

/// Montage of the reconstructions stored in two run directories.
pub fn recon_pair(left_dir: &Path, right_dir: &Path, out: &Path) -> Result<Pgm> {
    let read = |d: &Path| {
        let p = d.join(RECON_RAW);
        if !p.is_file() {
            return Err(Error::input(&p, "reconstruction not found"));
        }
        read_raw(&p)
    };
    let pgm = montage(&read(left_dir)?, &read(right_dir)?)?;
    write_pgm(out, &pgm)?;
    Ok(pgm)
}

pub const SERIES: [&str; 5] = [
    "objective",
    "data_f_residual",
    "data_h_residual",
    "coupling_residual",
    "l1_term",
];

const COLORS: [&str; 5] = ["#000000", "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"];

fn series_value(e: &HistoryEntry, i: usize) -> f64 {
    match i {
        0 => e.objective,
        1 => e.data_f_residual,
        2 => e.data_h_residual,
        3 => e.coupling_residual,
        _ => e.l1_term,
    }
}

/// Line plot of every history series.
///
/// Points are written in data coordinates `(iteration, value)` and mapped
/// to the canvas by a group transform, so they can be read back exactly.
/// Non-finite values are skipped.
pub fn convergence_svg(history: &[HistoryEntry]) -> Result<String> {
    if history.is_empty() {
        return Err(Error::Config("empty objective history".into()));
    }
    let finite = |v: f64| v.is_finite();
    let x_max = history.iter().map(|e| e.iteration).max().unwrap_or(0).max(1) as f64;
    let y_max = history
        .iter()
        .flat_map(|e| (0..SERIES.len()).map(move |i| series_value(e, i)))
        .filter(|v| finite(*v))
        .fold(0.0, f64::max);
    let y_max = if y_max > 0.0 { y_max } else { 1.0 };
    let (width, height, margin) = (640.0, 400.0, 50.0);
    let sx = (width - 2.0 * margin) / x_max;
    let sy = (height - 2.0 * margin) / y_max;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{margin}" y="{margin}" width="{}" height="{}" fill="none" stroke="gray"/>"#,
        width - 2.0 * margin,
        height - 2.0 * margin
    );
    let _ = writeln!(
        svg,
        r#"<text x="{margin}" y="{}" font-size="12">iteration 0 to {x_max}, value 0 to {y_max:e}</text>"#,
        height - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<g transform="translate({margin} {}) scale({sx} {})">"#,
        height - margin,
        -sy
    );
    for (i, name) in SERIES.iter().enumerate() {
        let points: Vec<String> = history
            .iter()
            .filter(|e| finite(series_value(e, i)))
            .map(|e| format!("{},{}", e.iteration, series_value(e, i)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline data-series="{name}" fill="none" stroke="{}" stroke-width="1.5" vector-effect="non-scaling-stroke" points="{}"/>"#,
            COLORS[i],
            points.join(" ")
        );
    }
    svg.push_str("</g>\n");
    for (i, name) in SERIES.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" fill="{}">{name}</text>"#,
            width - margin - 130.0,
            margin + 16.0 * (i as f64 + 1.0),
            COLORS[i]
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Convergence plot of the history stored in a run directory.
pub fn convergence(run_dir: &Path, out: &Path) -> Result<String> {
    let p = run_dir.join(HISTORY_FILE);
    let text = fs::read_to_string(&p).map_err(|e| Error::input(&p, e.to_string()))?;
    let svg = convergence_svg(&parse_history_csv(&text)?)?;
    fs::write(out, &svg)?;
    Ok(svg)
}
