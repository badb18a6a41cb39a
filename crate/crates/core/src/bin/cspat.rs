use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cspat::harness::{
    convergence, freeze_baselines, recon_pair, run_experiment_observed, run_paper_grid_with,
    Baselines, ExperimentManifest, GridOptions, Profile, DEFAULT_SEED, SUMMARY_FILE,
};
use cspat::io::{write_array_pgm, write_image_pgm, write_pgm, write_raw, Pgm};
use cspat::phantom::{load_image_phantom, make_cross_phantom, shepp_logan};
use cspat::recon::Thresholding;
use cspat::sensing::{add_noise, forward_m, MeasurementMatrix};

#[derive(Parser)]
#[command(name = "cspat", version, about = "Compressed-sensing photoacoustic tomography")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Small,
    Paper,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Small => Profile::Small,
            ProfileArg::Paper => Profile::Paper,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PhantomKind {
    /// Cross-shaped test object on the profile's grid.
    Cross,
    /// A PGM image mapped onto the profile's grid.
    Image,
    /// Raw Shepp–Logan raster, usable as an image phantom.
    SheppLogan,
}

#[derive(Subcommand)]
enum Command {
    /// Write a phantom as PGM.
    Phantom {
        kind: PhantomKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "paper")]
        profile: ProfileArg,
        /// Source image for `image`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Raster size for `shepp-logan`.
        #[arg(long, default_value_t = 256)]
        size: usize,
    },
    /// Simulate the (noisy) compressed measurements of a manifest.
    Simulate {
        manifest: PathBuf,
        /// Output file for the m × T data (raw f64 format).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run one experiment manifest.
    Reconstruct {
        manifest: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Threshold h by beta instead of mu * beta.
        #[arg(long)]
        paper_thresholding: bool,
        #[arg(long)]
        quiet: bool,
    },
    /// Run the six-cell experiment grid with the joint solver and FBP.
    Grid {
        #[arg(long, value_enum, default_value = "paper")]
        profile: ProfileArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        paper_thresholding: bool,
        /// Override the profile's iteration count.
        #[arg(long)]
        iters: Option<usize>,
    },
    /// Recompute the regression baselines and write them as JSON.
    FreezeBaselines {
        /// Profiles to include (repeatable).
        #[arg(long, value_enum, default_values = ["small", "paper"])]
        profile: Vec<ProfileArg>,
        /// Scratch directory for the runs.
        #[arg(long)]
        work_dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Render a figure from run directories.
    Figure {
        #[command(subcommand)]
        kind: FigureCommand,
    },
}

#[derive(Subcommand)]
enum FigureCommand {
    /// Side-by-side PGM of two reconstructions.
    ReconPair {
        left: PathBuf,
        right: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// SVG plot of a run's objective history.
    Convergence {
        run: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn load_manifest(path: &PathBuf, seed: u64) -> cspat::Result<ExperimentManifest> {
    Ok(ExperimentManifest::load(path)?.resolved(seed))
}

fn run(cli: Cli) -> cspat::Result<bool> {
    match cli.command {
        Command::Phantom {
            kind,
            out,
            profile,
            input,
            size,
        } => {
            let scene = Profile::from(profile).scene().build()?;
            match kind {
                PhantomKind::Cross => {
                    write_image_pgm(&out, &make_cross_phantom(&scene.grid, &scene.geometry)?)?;
                }
                PhantomKind::Image => {
                    let input = input.ok_or_else(|| {
                        cspat::Error::Config("image phantom needs --input".into())
                    })?;
                    write_image_pgm(&out, &load_image_phantom(input, &scene.grid, &scene.geometry)?)?;
                }
                PhantomKind::SheppLogan => {
                    let data = shepp_logan(size, size)
                        .into_iter()
                        .map(|v| (v * 255.0).round() as u8)
                        .collect();
                    write_pgm(&out, &Pgm::new(size, size, data))?;
                }
            }
            println!("wrote {}", out.display());
        }
        Command::Simulate { manifest, out, seed } => {
            let m = load_manifest(&manifest, seed)?;
            let scene = m.scene.build()?;
            let f = cspat::harness::build_phantom(&m.phantom, &scene)?;
            let a = MeasurementMatrix::generate(
                m.matrix.kind,
                m.matrix.m,
                scene.geometry.num_sensors,
                m.matrix.seed.unwrap_or(seed),
            )?;
            let y = forward_m(&f, &a, &scene.wave, &scene.geometry)?;
            let y = add_noise(&y, m.noise.level, m.noise.seed.unwrap_or(seed))?;
            write_raw(&out, y.values())?;
            write_array_pgm(out.with_extension("pgm"), y.values())?;
            println!("wrote {} ({} x {})", out.display(), y.rows(), y.time_axis().num_samples);
        }
        Command::Reconstruct {
            manifest,
            seed,
            paper_thresholding,
            quiet,
        } => {
            let mut m = load_manifest(&manifest, seed)?;
            if paper_thresholding {
                m.recon.thresholding = Thresholding::Bare;
            }
            let report = run_experiment_observed(&m, |e| {
                if !quiet {
                    eprintln!("iter {:>6}  objective {:.6e}", e.iteration, e.objective);
                }
            })?;
            println!("{}", serde_json::to_string_pretty(&report.metrics)?);
            println!(
                "wall time {:.1} s, output in {}",
                report.timing.wall_time_s,
                m.output_dir.display()
            );
        }
        Command::Grid {
            profile,
            out,
            seed,
            paper_thresholding,
            iters,
        } => {
            let mut opts = GridOptions::new(profile.into(), &out);
            opts.seed = seed;
            opts.max_iters = iters;
            if paper_thresholding {
                opts.thresholding = Thresholding::Bare;
            }
            let report = run_paper_grid_with(&opts, |cell, r| match r {
                Ok(r) => eprintln!(
                    "{:<18} {:<6} error {:.4}  ({:.1} s)",
                    cell.name,
                    r.metrics.solver.to_string(),
                    r.metrics.relative_l2_error,
                    r.timing.wall_time_s
                ),
                Err(e) => eprintln!("{:<18} failed: {e}", cell.name),
            })?;
            print!("{}", report.summary_csv());
            eprintln!(
                "grid finished in {:.1} s; summary in {}",
                report.wall_time_s,
                out.join(SUMMARY_FILE).display()
            );
            return Ok(report.all_succeeded());
        }
        Command::FreezeBaselines {
            profile,
            work_dir,
            out,
            seed,
        } => {
            let out = out.unwrap_or_else(Baselines::default_path);
            let mut profiles: Vec<Profile> = profile.into_iter().map(Profile::from).collect();
            profiles.sort();
            profiles.dedup();
            freeze_baselines(&profiles, &work_dir, seed, &out, |msg| eprintln!("{msg}"))?;
            println!("wrote {}", out.display());
        }
        Command::Figure { kind } => match kind {
            FigureCommand::ReconPair { left, right, out } => {
                recon_pair(&left, &right, &out)?;
                println!("wrote {}", out.display());
            }
            FigureCommand::Convergence { run, out } => {
                convergence(&run, &out)?;
                println!("wrote {}", out.display());
            }
        },
    }
    Ok(true)
}
