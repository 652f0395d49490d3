//! Inverse camera response recovery from an exposure stack (Debevec-style
//! weighted least squares with a second-difference smoothness prior).

use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Anchor pixel value; the solved curve is shifted so that `g(127) = 0`.
pub const GAUGE_Z: usize = 127;
pub const DEFAULT_SMOOTHNESS: f64 = 10.0;

/// Hat weighting `min(z, 255 - z)`, floored at 1.
pub fn hat_weight(z: u8) -> f64 {
    (z.min(255 - z) as f64).max(1.0)
}

/// Per-channel table mapping pixel value `Z` to `ln(L * t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCurve {
    g: [Vec<f64>; 3],
}

impl ResponseCurve {
    pub fn from_tables(g: [Vec<f64>; 3]) -> Result<Self> {
        if g.iter().any(|c| c.len() != 256) {
            return Err(Error::invalid("response tables need 256 entries per channel"));
        }
        if g.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::invalid("response table contains non-finite values"));
        }
        Ok(ResponseCurve { g })
    }

    /// Same table for all channels built from `f(z)`.
    pub fn from_fn(f: impl Fn(f64) -> f64) -> Self {
        let table: Vec<f64> = (0..256).map(|z| f(z as f64)).collect();
        ResponseCurve {
            g: [table.clone(), table.clone(), table],
        }
    }

    /// Linear camera: `g(Z) = ln(Z / 255)` with `Z = 0` treated as half a level.
    pub fn linear() -> Self {
        Self::from_fn(|z| (z.max(0.5) / 255.0).ln())
    }

    /// sRGB-like power-law camera: `g(Z) = gamma * ln(Z / 255)`.
    pub fn gamma(gamma: f64) -> Self {
        Self::from_fn(|z| gamma * (z.max(0.5) / 255.0).ln())
    }

    #[inline]
    pub fn g(&self, channel: usize, z: u8) -> f64 {
        self.g[channel][z as usize]
    }

    pub fn table(&self, channel: usize) -> &[f64] {
        &self.g[channel]
    }

    /// Fractional pixel value whose log exposure is `y`, by monotone table
    /// inversion with linear interpolation. Clamped to `[0, 255]`.
    pub fn inverse(&self, channel: usize, y: f64) -> f64 {
        let t = &self.g[channel];
        if y.is_nan() || y <= t[0] {
            return 0.0;
        }
        let mut prev = t[0];
        for z in 1..256 {
            let cur = t[z].max(prev);
            if y <= cur {
                let span = cur - prev;
                let frac = if span > 0.0 { (y - prev) / span } else { 1.0 };
                return (z - 1) as f64 + frac;
            }
            prev = cur;
        }
        255.0
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut s = String::from("Z,g_R,g_G,g_B\n");
        for z in 0..256 {
            s.push_str(&format!(
                "{z},{:.17e},{:.17e},{:.17e}\n",
                self.g[0][z], self.g[1][z], self.g[2][z]
            ));
        }
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut g = [vec![f64::NAN; 256], vec![f64::NAN; 256], vec![f64::NAN; 256]];
        for (lineno, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            let bad = || Error::format(path, format!("malformed row {}", lineno + 1));
            if cols.len() != 4 {
                return Err(bad());
            }
            let z: usize = cols[0].parse().map_err(|_| bad())?;
            if z > 255 {
                return Err(bad());
            }
            for c in 0..3 {
                g[c][z] = cols[c + 1].parse().map_err(|_| bad())?;
            }
        }
        if g.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::format(path, "response table must list all 256 values"));
        }
        Ok(ResponseCurve { g })
    }
}

/// Recover the response curve.
///
/// `samples[j][i]` is the RGB value of sample `i` in the exposure `exposures[j]`.
pub fn solve_response(
    samples: &[Vec<[u8; 3]>],
    exposures: &[f64],
    smoothness: f64,
    weight: impl Fn(u8) -> f64,
) -> Result<ResponseCurve> {
    if samples.len() < 2 || samples.len() != exposures.len() {
        return Err(Error::invalid(format!(
            "need >= 2 exposures with matching sample sets, got {} sample sets and {} exposures",
            samples.len(),
            exposures.len()
        )));
    }
    if exposures.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("exposure times must be positive"));
    }
    let n = samples[0].len();
    if n == 0 || samples.iter().any(|s| s.len() != n) {
        return Err(Error::invalid("every exposure needs the same non-empty sample set"));
    }
    let mut tables: [Vec<f64>; 3] = Default::default();
    for (c, table) in tables.iter_mut().enumerate() {
        *table = solve_channel(samples, exposures, smoothness, &weight, c)?;
    }
    Ok(ResponseCurve { g: tables })
}

fn solve_channel(
    samples: &[Vec<[u8; 3]>],
    exposures: &[f64],
    smoothness: f64,
    weight: &impl Fn(u8) -> f64,
    c: usize,
) -> Result<Vec<f64>> {
    let n = samples[0].len();
    let mut seen = [false; 256];
    for s in samples.iter().flatten() {
        if (1..255).contains(&s[c]) {
            seen[s[c] as usize] = true;
        }
    }
    if seen.iter().filter(|&&v| v).count() < 2 {
        return Err(Error::Calibration(format!(
            "channel {c}: samples cover fewer than two unsaturated levels; the response system is rank deficient"
        )));
    }

    // Unknowns: g(0..=255) then ln L_i. Accumulate the normal equations directly.
    let dim = 256 + n;
    let mut ata = DMatrix::<f64>::zeros(dim, dim);
    let mut atb = DVector::<f64>::zeros(dim);
    let mut add_row = |entries: &[(usize, f64)], rhs: f64| {
        for &(i, a) in entries {
            atb[i] += a * rhs;
            for &(j, b) in entries {
                ata[(i, j)] += a * b;
            }
        }
    };
    for (j, set) in samples.iter().enumerate() {
        let ln_t = exposures[j].ln();
        for (i, s) in set.iter().enumerate() {
            let z = s[c];
            let w = weight(z);
            add_row(&[(z as usize, w), (256 + i, -w)], w * ln_t);
        }
    }
    add_row(&[(GAUGE_Z, 1.0)], 0.0);
    for z in 1..255u8 {
        let w = smoothness * weight(z);
        let z = z as usize;
        add_row(&[(z - 1, w), (z, -2.0 * w), (z + 1, w)], 0.0);
    }

    let chol = ata.cholesky().ok_or_else(|| {
        Error::Calibration(format!("channel {c}: response system is singular"))
    })?;
    let x = chol.solve(&atb);
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Calibration(format!(
            "channel {c}: response solve produced non-finite values"
        )));
    }
    Ok(x.as_slice()[..256].to_vec())
}
