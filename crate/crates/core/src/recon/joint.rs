use serde::{Deserialize, Serialize};

use super::objective::{JointProblem, ObjectiveTerms, Residuals};
use super::prox::soft_threshold;
use crate::grid::DetectorGeometry;
use crate::image::SourceImage;
use crate::phantom::SUPPORT_FRACTION;
use crate::sensing::{CsOperator, MeasurementMatrix, SensorData};
use crate::wave::{second_time_derivative, WaveConfig};
use crate::{Error, Result};

/// How the l1 threshold relates to the step size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Thresholding {
    /// `τ = μβ`, the proximal map of `μβ‖·‖₁`.
    #[default]
    Scaled,
    /// `τ = β` regardless of the step.
    Bare,
}

/// Parameters of the proximal gradient solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReconConfig {
    pub alpha: f64,
    pub beta: f64,
    pub step_mu: f64,
    pub max_iters: usize,
    /// Record the objective every this many iterations (0 disables).
    pub record_every: usize,
    /// Stop once the relative iterate change stays below this for
    /// [`STOP_WINDOW`] iterations; 0 runs all iterations.
    pub stop_tol: f64,
    pub thresholding: Thresholding,
    /// Halve the step until a sufficient-decrease test holds.
    pub line_search: bool,
    /// Restrict unknowns to a disc of this fraction of the detection radius.
    pub support_fraction: Option<f64>,
}

impl Default for ReconConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            beta: 0.005,
            step_mu: 0.1,
            max_iters: 5000,
            record_every: 10,
            stop_tol: 0.0,
            thresholding: Thresholding::Scaled,
            line_search: false,
            support_fraction: Some(SUPPORT_FRACTION),
        }
    }
}

pub const STOP_WINDOW: usize = 10;
pub const DIVERGENCE_FACTOR: f64 = 1e12;
const MAX_HALVINGS: usize = 40;

impl ReconConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Error::Config(format!("{what} must be >= 0, got {v}"));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(bad("alpha", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(bad("beta", self.beta));
        }
        if !(self.stop_tol >= 0.0) {
            return Err(bad("stop_tol", self.stop_tol));
        }
        if !(self.step_mu > 0.0 && self.step_mu.is_finite()) {
            return Err(Error::Config(format!("step mu must be > 0, got {}", self.step_mu)));
        }
        if let Some(s) = self.support_fraction {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::Config(format!("support fraction must be in (0, 1], got {s}")));
            }
        }
        Ok(())
    }

    pub fn threshold(&self, mu: f64) -> f64 {
        match self.thresholding {
            Thresholding::Scaled => mu * self.beta,
            Thresholding::Bare => self.beta,
        }
    }

    /// 0/1 mask of the support disc, if one is configured.
    pub fn support_mask(&self, geom: &DetectorGeometry, cfg: &WaveConfig) -> Option<SourceImage> {
        self.support_fraction.map(|s| {
            SourceImage::constant(*cfg.grid(), 1.0).masked_to_disc(geom.center, s * geom.radius)
        })
    }
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iteration: usize,
    pub objective: f64,
    pub data_f_residual: f64,
    pub data_h_residual: f64,
    pub coupling_residual: f64,
    pub l1_term: f64,
}

impl HistoryEntry {
    fn new(iteration: usize, t: &ObjectiveTerms) -> Self {
        Self {
            iteration,
            objective: t.objective().as_f64(),
            data_f_residual: t.data_f,
            data_h_residual: t.data_h,
            coupling_residual: t.coupling,
            l1_term: t.l1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    MaxIterations,
    Converged,
}

#[derive(Debug, Clone)]
pub struct JointState {
    pub f: SourceImage,
    pub h: SourceImage,
    pub iterations: usize,
    pub termination: Termination,
    pub history: Vec<HistoryEntry>,
}

/// Proximal gradient iteration on `(f, h)`.
pub struct JointSolver<'a> {
    problem: JointProblem<'a>,
    rc: ReconConfig,
    mask: Option<SourceImage>,
    observer: Option<Box<dyn FnMut(&HistoryEntry) + 'a>>,
}

impl<'a> JointSolver<'a> {
    pub fn new(problem: JointProblem<'a>, rc: ReconConfig) -> Result<Self> {
        rc.validate()?;
        Ok(Self {
            problem,
            rc,
            mask: None,
            observer: None,
        })
    }

    pub fn with_mask(mut self, mask: Option<SourceImage>) -> Self {
        self.mask = mask;
        self
    }

    /// Called with every recorded history entry.
    pub fn with_observer(mut self, observer: impl FnMut(&HistoryEntry) + 'a) -> Self {
        self.observer = Some(Box::new(observer));
        self
    }

    fn apply_mask(&self, img: &mut SourceImage) {
        if let Some(mask) = &self.mask {
            for (v, m) in img.as_slice_mut().iter_mut().zip(mask.as_slice()) {
                *v *= m;
            }
        }
    }

    fn record(&mut self, history: &mut Vec<HistoryEntry>, it: usize, t: &ObjectiveTerms) {
        let entry = HistoryEntry::new(it, t);
        if let Some(obs) = self.observer.as_mut() {
            obs(&entry);
        }
        history.push(entry);
    }

    fn prox_step(
        &self,
        f: &SourceImage,
        h: &SourceImage,
        gf: &SourceImage,
        gh: &SourceImage,
        mu: f64,
    ) -> (SourceImage, SourceImage) {
        let tau = self.rc.threshold(mu);
        let mut fn_ = f.lincomb(1.0, gf, -mu).map(|v| v.max(0.0));
        let mut hn = h.lincomb(1.0, gh, -mu).map(|v| soft_threshold(v, tau));
        self.apply_mask(&mut fn_);
        self.apply_mask(&mut hn);
        (fn_, hn)
    }

    /// Runs from `f = h = 0`.
    pub fn run(self) -> Result<JointState> {
        let grid = *self.problem.inv_c2().grid();
        self.run_from(SourceImage::zeros(grid), SourceImage::zeros(grid))
    }

    pub fn run_from(mut self, f0: SourceImage, h0: SourceImage) -> Result<JointState> {
        let mut f = f0.map(|v| v.max(0.0));
        let mut h = h0;
        self.apply_mask(&mut f);
        self.apply_mask(&mut h);
        let mut r = self.problem.residuals(&f, &h)?;
        let mut terms = self.problem.terms_from(&f, &h, &r);
        let initial = terms.objective().as_f64();
        let mut history = Vec::new();
        let mut small_changes = 0usize;
        let mut termination = Termination::MaxIterations;
        let mut mu = self.rc.step_mu;
        let mut it = 0;
        while it < self.rc.max_iters {
            let value = terms.objective().as_f64();
            if !value.is_finite() || (initial > 0.0 && value > DIVERGENCE_FACTOR * initial) {
                return Err(Error::Divergence {
                    iteration: it,
                    value,
                    initial,
                });
            }
            if self.rc.record_every > 0 && it % self.rc.record_every == 0 {
                self.record(&mut history, it, &terms);
            }
            let (gf, gh) = self.problem.gradient_from(&r)?;
            let (fn_, hn, rn) = if self.rc.line_search {
                self.backtrack(&f, &h, &gf, &gh, &terms, &mut mu)?
            } else {
                let (fn_, hn) = self.prox_step(&f, &h, &gf, &gh, mu);
                let rn = self.problem.residuals(&fn_, &hn)?;
                (fn_, hn, rn)
            };
            let change = relative_change(&f, &h, &fn_, &hn);
            f = fn_;
            h = hn;
            r = rn;
            terms = self.problem.terms_from(&f, &h, &r);
            it += 1;
            if self.rc.stop_tol > 0.0 {
                small_changes = if change < self.rc.stop_tol { small_changes + 1 } else { 0 };
                if small_changes >= STOP_WINDOW {
                    termination = Termination::Converged;
                    break;
                }
            }
        }
        let value = terms.objective().as_f64();
        if !value.is_finite() || (initial > 0.0 && value > DIVERGENCE_FACTOR * initial) {
            return Err(Error::Divergence {
                iteration: it,
                value,
                initial,
            });
        }
        if self.rc.record_every > 0 && history.last().map(|e| e.iteration) != Some(it) {
            self.record(&mut history, it, &terms);
        }
        Ok(JointState {
            f,
            h,
            iterations: it,
            termination,
            history,
        })
    }

    #[allow(clippy::type_complexity)]
    fn backtrack(
        &self,
        f: &SourceImage,
        h: &SourceImage,
        gf: &SourceImage,
        gh: &SourceImage,
        terms: &ObjectiveTerms,
        mu: &mut f64,
    ) -> Result<(SourceImage, SourceImage, Residuals)> {
        for _ in 0..MAX_HALVINGS {
            let (fn_, hn) = self.prox_step(f, h, gf, gh, *mu);
            let rn = self.problem.residuals(&fn_, &hn)?;
            let new = self.problem.terms_from(&fn_, &hn, &rn).smooth();
            let df = fn_.lincomb(1.0, f, -1.0);
            let dh = hn.lincomb(1.0, h, -1.0);
            let model = terms.smooth()
                + gf.dot(&df)
                + gh.dot(&dh)
                + (df.dot(&df) + dh.dot(&dh)) / (2.0 * *mu);
            if new <= model * (1.0 + 1e-12) {
                return Ok((fn_, hn, rn));
            }
            *mu *= 0.5;
        }
        Err(Error::NonConvergence {
            residual: *mu,
            iterations: MAX_HALVINGS,
        })
    }
}

fn relative_change(f: &SourceImage, h: &SourceImage, fn_: &SourceImage, hn: &SourceImage) -> f64 {
    let df = fn_.lincomb(1.0, f, -1.0).norm();
    let dh = hn.lincomb(1.0, h, -1.0).norm();
    let num = (df * df + dh * dh).sqrt();
    let den = (fn_.norm().powi(2) + hn.norm().powi(2)).sqrt();
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Recovers `(f, h)` from compressed data `y = A·W f` by joint proximal
/// gradient descent.
pub fn solve_joint(
    y: &SensorData,
    a: &MeasurementMatrix,
    cfg: &WaveConfig,
    geom: &DetectorGeometry,
    rc: &ReconConfig,
) -> Result<JointState> {
    let op = CsOperator::new(a.clone(), cfg, geom)?;
    let y_tt = second_time_derivative(y)?;
    let problem = JointProblem::new(&op, y, &y_tt, &cfg.sound_speed, rc.alpha, rc.beta)?;
    let state = JointSolver::new(problem, *rc)?
        .with_mask(rc.support_mask(geom, cfg))
        .run()?;
    Ok(state)
}
