use super::joint::{HistoryEntry, ReconConfig, Termination, DIVERGENCE_FACTOR, STOP_WINDOW};
use super::prox::soft_threshold;
use crate::grid::DetectorGeometry;
use crate::image::SourceImage;
use crate::sensing::{CsOperator, MeasurementMatrix, SensorData};
use crate::wave::{poisson_solve, second_time_derivative, WaveConfig};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct TwoStageResult {
    pub f: SourceImage,
    pub h: SourceImage,
    pub iterations: usize,
    pub termination: Termination,
    /// Only `objective`, `data_h_residual` and `l1_term` are populated.
    pub history: Vec<HistoryEntry>,
}

/// Recovers the sparse `h` from `y''` alone by iterative soft thresholding,
/// then solves `Δf = h/c²`.
pub fn solve_l1_then_poisson(
    y: &SensorData,
    a: &MeasurementMatrix,
    cfg: &WaveConfig,
    geom: &DetectorGeometry,
    rc: &ReconConfig,
) -> Result<TwoStageResult> {
    rc.validate()?;
    let op = CsOperator::new(a.clone(), cfg, geom)?;
    let y_tt = second_time_derivative(y)?;
    let mask = rc.support_mask(geom, cfg);
    let apply_mask = |img: &mut SourceImage| {
        if let Some(m) = &mask {
            for (v, w) in img.as_slice_mut().iter_mut().zip(m.as_slice()) {
                *v *= w;
            }
        }
    };
    let terms = |h: &SourceImage, r: &SensorData| {
        let data = 0.5 * r.norm().powi(2);
        let l1 = rc.beta * h.as_slice().iter().map(|v| v.abs()).sum::<f64>();
        (data, l1)
    };
    let entry = |it: usize, (data, l1): (f64, f64)| HistoryEntry {
        iteration: it,
        objective: data + l1,
        data_f_residual: 0.0,
        data_h_residual: data,
        coupling_residual: 0.0,
        l1_term: l1,
    };

    let tau = rc.threshold(rc.step_mu);
    let mut h = SourceImage::zeros(*cfg.grid());
    let mut r = y_tt.lincomb(-1.0, &y_tt, 0.0);
    let initial = 0.5 * r.norm().powi(2);
    let mut history = Vec::new();
    let mut small = 0;
    let mut termination = Termination::MaxIterations;
    let mut it = 0;
    while it < rc.max_iters {
        let t = terms(&h, &r);
        let value = t.0 + t.1;
        if !value.is_finite() || (initial > 0.0 && value > DIVERGENCE_FACTOR * initial) {
            return Err(Error::Divergence {
                iteration: it,
                value,
                initial,
            });
        }
        if rc.record_every > 0 && it % rc.record_every == 0 {
            history.push(entry(it, t));
        }
        let g = op.adjoint(&r)?;
        let mut hn = h.lincomb(1.0, &g, -rc.step_mu).map(|v| soft_threshold(v, tau));
        apply_mask(&mut hn);
        let change = hn.lincomb(1.0, &h, -1.0).norm() / hn.norm().max(f64::MIN_POSITIVE);
        h = hn;
        r = op.forward(&h)?.lincomb(1.0, &y_tt, -1.0);
        it += 1;
        if rc.stop_tol > 0.0 {
            small = if change < rc.stop_tol { small + 1 } else { 0 };
            if small >= STOP_WINDOW {
                termination = Termination::Converged;
                break;
            }
        }
    }
    if rc.record_every > 0 && history.last().map(|e| e.iteration) != Some(it) {
        history.push(entry(it, terms(&h, &r)));
    }

    let floor = super::objective::SOUND_SPEED_FLOOR * cfg.sound_speed.max();
    let mut rhs = h.clone();
    for (v, c) in rhs.as_slice_mut().iter_mut().zip(cfg.sound_speed.as_slice()) {
        let c = c.max(floor);
        *v /= c * c;
    }
    let f = poisson_solve(&rhs)?;
    Ok(TwoStageResult {
        f,
        h,
        iterations: it,
        termination,
        history,
    })
}
