use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::scene::SceneSpec;
use crate::recon::ReconConfig;
use crate::sensing::MatrixKind;
use crate::{Error, Result};

/// Test object of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PhantomSpec {
    Cross,
    /// 8-bit binary PGM, stretched over the support disc.
    Image { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Joint,
    TwoStage,
    /// Filtered backprojection of `Aᵀy`.
    Fbp,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Joint => "joint",
            SolverKind::TwoStage => "two_stage",
            SolverKind::Fbp => "fbp",
        })
    }
}

impl std::str::FromStr for SolverKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "joint" => Ok(SolverKind::Joint),
            "two_stage" | "two-stage" => Ok(SolverKind::TwoStage),
            "fbp" => Ok(SolverKind::Fbp),
            other => Err(Error::Config(format!(
                "unknown solver '{other}' (expected joint, two_stage or fbp)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    pub kind: MatrixKind,
    pub m: usize,
    /// Filled from the run's base seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// `‖noise‖ / ‖data‖`.
    pub level: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            level: 0.0,
            seed: None,
        }
    }
}

/// Complete, serializable description of one reconstruction experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub phantom: PhantomSpec,
    pub scene: SceneSpec,
    pub matrix: MatrixSpec,
    #[serde(default)]
    pub noise: NoiseSpec,
    pub solver: SolverKind,
    #[serde(default)]
    pub recon: ReconConfig,
    pub output_dir: PathBuf,
}

impl ExperimentManifest {
    /// Reads and validates a manifest. Relative image paths are taken
    /// relative to the manifest's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::input(path, e.to_string()))?;
        let mut manifest: Self =
            serde_json::from_str(&text).map_err(|e| Error::input(path, e.to_string()))?;
        if let PhantomSpec::Image { path: img } = &mut manifest.phantom {
            if img.is_relative() {
                if let Some(dir) = path.parent() {
                    *img = dir.join(&*img);
                }
            }
        }
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if let PhantomSpec::Image { path } = &self.phantom {
            if !path.is_file() {
                return Err(Error::input(path, "phantom image not found"));
            }
        }
        if self.matrix.m == 0 || self.matrix.m > self.scene.num_sensors {
            return Err(Error::Config(format!(
                "need 1 <= m <= {} measurements, got {}",
                self.scene.num_sensors, self.matrix.m
            )));
        }
        if !(self.noise.level >= 0.0 && self.noise.level.is_finite()) {
            return Err(Error::Config(format!(
                "noise level must be >= 0, got {}",
                self.noise.level
            )));
        }
        self.recon.validate()
    }

    /// Fills absent seeds: the matrix uses `base`, the noise `base + 1`.
    pub fn resolved(&self, base: u64) -> Self {
        let mut out = self.clone();
        out.matrix.seed.get_or_insert(base);
        out.noise.seed.get_or_insert(base.wrapping_add(1));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recon::Thresholding;

    fn sample() -> ExperimentManifest {
        ExperimentManifest {
            phantom: PhantomSpec::Cross,
            scene: SceneSpec::new(64, 100, 151, 8),
            matrix: MatrixSpec {
                kind: MatrixKind::Bernoulli,
                m: 25,
                seed: Some(7),
            },
            noise: NoiseSpec {
                level: 0.15,
                seed: None,
            },
            solver: SolverKind::Joint,
            recon: ReconConfig {
                alpha: 0.1 + 0.2,
                thresholding: Thresholding::Bare,
                ..Default::default()
            },
            output_dir: PathBuf::from("out/x"),
        }
    }

    #[test]
    fn round_trips_exactly() {
        let m = sample();
        let text = m.to_json().unwrap();
        let back = ExperimentManifest::from_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_json().unwrap(), text);
    }

    #[test]
    fn resolves_missing_seeds_only() {
        let r = sample().resolved(100);
        assert_eq!(r.matrix.seed, Some(7));
        assert_eq!(r.noise.seed, Some(101));
        assert_eq!(r.resolved(5), r);
    }

    #[test]
    fn defaults_fill_optional_sections() {
        let text = r#"{"phantom":{"kind":"cross"},
            "scene":{"grid_size":64,"num_sensors":100,"time_samples":151,"sponge_width":8,"angular_coverage":6.283185307179586},
            "matrix":{"kind":"gaussian","m":10},"solver":"fbp","output_dir":"o"}"#;
        let m = ExperimentManifest::from_json(text).unwrap();
        assert_eq!(m.noise.level, 0.0);
        assert_eq!(m.recon, ReconConfig::default());
        m.validate().unwrap();
    }

    #[test]
    fn rejects_missing_image_and_bad_m() {
        let mut m = sample();
        m.phantom = PhantomSpec::Image {
            path: PathBuf::from("/nonexistent/head.pgm"),
        };
        assert!(m.validate().is_err());
        let mut m = sample();
        m.matrix.m = 101;
        assert!(m.validate().is_err());
    }

    #[test]
    fn solver_names_parse() {
        for s in [SolverKind::Joint, SolverKind::TwoStage, SolverKind::Fbp] {
            assert_eq!(s.to_string().parse::<SolverKind>().unwrap(), s);
        }
        assert!("ista".parse::<SolverKind>().is_err());
    }
}
