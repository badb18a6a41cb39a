use crate::grid::DetectorGeometry;
use crate::image::{discrete_laplacian, SourceImage};
use crate::wave::{second_time_derivative, WaveConfig, WaveOperator};
use crate::Result;

/// Relative discrepancy `‖∂²ₜ W f − W[c² Δf]‖ / ‖W[c² Δf]‖`.
///
/// Returns 0 when `W[c² Δf]` vanishes.
pub fn verify_commutation(f: &SourceImage, cfg: &WaveConfig, geom: &DetectorGeometry) -> Result<f64> {
    f.check_support(geom)?;
    let op = WaveOperator::new(cfg, geom)?;
    let lhs = second_time_derivative(&op.forward(f)?)?;
    let mut modified = discrete_laplacian(f);
    for (h, c) in modified
        .values_mut()
        .iter_mut()
        .zip(cfg.sound_speed.values().iter())
    {
        *h *= c * c;
    }
    let rhs = op.forward(&modified)?;
    let denom = rhs.norm();
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok(lhs.lincomb(1.0, &rhs, -1.0).norm() / denom)
}
