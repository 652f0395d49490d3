//! Low-dynamic-range previews through the inverse camera response.

use rayon::prelude::*;

use crate::bundle::SvbrdfBundle;
use crate::error::{Error, Result};
use crate::fitting::render_forward;
use crate::geometry::SceneGeometry;
use crate::grid::Grid;
use crate::radiometry::{RadianceMap, ResponseCurve};

/// Pixel value `g^-1(ln(L t))`, rounded and clamped to 8 bits; zero radiance
/// maps to 0.
pub fn radiance_to_ldr(map: &RadianceMap, exposure: f64, curve: &ResponseCurve) -> Result<Grid<[u8; 3]>> {
    if !(exposure > 0.0) {
        return Err(Error::invalid("exposure time must be positive"));
    }
    let data = map
        .as_slice()
        .par_iter()
        .map(|px| {
            let mut out = [0u8; 3];
            for c in 0..3 {
                let l = px[c] * exposure;
                out[c] = if l > 0.0 {
                    curve.inverse(c, l.ln()).round().clamp(0.0, 255.0) as u8
                } else {
                    0
                };
            }
            out
        })
        .collect();
    Grid::from_vec(map.width(), map.height(), data)
}

pub fn render_preview(
    bundle: &SvbrdfBundle,
    geom: &SceneGeometry,
    exposure: f64,
    curve: &ResponseCurve,
) -> Result<Grid<[u8; 3]>> {
    let radiance = render_forward(&bundle.normalized_solution(), geom)?;
    radiance_to_ldr(&radiance, exposure, curve)
}

/// Distinct, stable colors for a label map.
pub fn label_palette(labels: &Grid<u32>) -> Grid<[u8; 3]> {
    labels.map(|&l| {
        // Golden-ratio hue walk keeps neighbouring labels apart.
        let h = (l as f64 * 0.618_033_988_749_895).fract() * 6.0;
        let x = 1.0 - (h % 2.0 - 1.0).abs();
        let (r, g, b) = match h as u32 {
            0 => (1.0, x, 0.0),
            1 => (x, 1.0, 0.0),
            2 => (0.0, 1.0, x),
            3 => (0.0, x, 1.0),
            4 => (x, 0.0, 1.0),
            _ => (1.0, 0.0, x),
        };
        let v = 0.55 + 0.45 * ((l / 6) % 2) as f64;
        [r, g, b].map(|c: f64| (c * v * 255.0).round() as u8)
    })
}
