use crate::image::SourceImage;
use crate::{Error, Result};

/// Projection onto the nonnegative orthant: `max(fᵢ, 0)`.
pub fn prox_nonneg(f: &SourceImage) -> SourceImage {
    f.map(|v| v.max(0.0))
}

/// Soft thresholding: `max(|hᵢ| − τ, 0) · sign(hᵢ)`.
pub fn prox_l1(h: &SourceImage, threshold: f64) -> Result<SourceImage> {
    if !(threshold >= 0.0) {
        return Err(Error::Config(format!(
            "soft threshold must be >= 0, got {threshold}"
        )));
    }
    Ok(h.map(|v| soft_threshold(v, threshold)))
}

#[inline]
pub(crate) fn soft_threshold(v: f64, threshold: f64) -> f64 {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        0.0
    }
}
