use ndarray::Array2;

use crate::sensing::SensorData;
use crate::{Error, Result};

/// Second derivative in time of every row.
///
/// Central differences inside; the second-order one-sided stencil
/// `(2d₀ − 5d₁ + 4d₂ − d₃)/dt²` at both ends when at least four samples
/// exist, otherwise the single central value is copied to the ends.
pub fn second_time_derivative(data: &SensorData) -> Result<SensorData> {
    let t = data.time_axis().num_samples;
    if t < 3 {
        return Err(Error::Config(format!(
            "second time derivative needs at least 3 samples, got {t}"
        )));
    }
    let inv = 1.0 / data.time_axis().dt().powi(2);
    let d = data.values();
    let mut out = Array2::zeros(d.dim());
    for (src, mut dst) in d.rows().into_iter().zip(out.rows_mut()) {
        for j in 1..t - 1 {
            dst[j] = (src[j + 1] - 2.0 * src[j] + src[j - 1]) * inv;
        }
        if t >= 4 {
            dst[0] = (2.0 * src[0] - 5.0 * src[1] + 4.0 * src[2] - src[3]) * inv;
            dst[t - 1] =
                (2.0 * src[t - 1] - 5.0 * src[t - 2] + 4.0 * src[t - 3] - src[t - 4]) * inv;
        } else {
            dst[0] = dst[1];
            dst[t - 1] = dst[1];
        }
    }
    SensorData::new(*data.time_axis(), out)
}
