use crate::error::{Error, Result};
use crate::grid::{Grid, Rgb};

pub const DEFAULT_DELTA_H: f64 = 0.1;

#[inline]
pub fn pseudo_huber(residual: f64, delta_h: f64) -> f64 {
    let q = residual / delta_h;
    delta_h * delta_h * ((1.0 + q * q).sqrt() - 1.0)
}

/// Channel-summed Pseudo-Huber loss of an RGB residual.
#[inline]
pub fn pseudo_huber_rgb(rendered: &Rgb, target: &Rgb, delta_h: f64) -> f64 {
    (0..3).map(|c| pseudo_huber(rendered[c] - target[c], delta_h)).sum()
}

/// Gray map normalized to unit sum; the sum must be positive.
pub fn normalized_gray(map: &Grid<Rgb>) -> Result<Vec<f64>> {
    let gray = map.to_gray();
    let total: f64 = gray.iter().map(|v| v.max(0.0)).sum();
    if !(total > 0.0) || !total.is_finite() {
        return Err(Error::degenerate("radiance map has no positive energy"));
    }
    Ok(gray.iter().map(|v| v.max(0.0) / total).collect())
}

/// `-sum p log q`, with `q` floored so empty bins stay finite.
pub fn cross_entropy(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .filter(|(&a, _)| a > 0.0)
        .map(|(&a, &b)| -a * b.max(1e-300).ln())
        .sum()
}
