//! Bump recovery from the ambient photo: a shading image is turned into a
//! multi-scale depth estimate whose gradients give per-pixel normals.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grid::{gaussian_blur, sobel, Grid, Rgb};

/// Lower clamp on shading values before the depth curve and in divisions.
pub const EPS_CLAMP: f64 = 1e-3;

pub const DEFAULT_RADII: [f64; 4] = [1.0, 2.0, 4.0, 8.0];

pub const DEFAULT_SIGMA: f64 = 0.5;

/// Grayscale shading normalized to mean 0.5.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadingImage {
    pub s: Grid<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeightField {
    pub d: Grid<f64>,
    pub sigma: f64,
    pub radii: Vec<f64>,
}

/// Ambient over baseColor in gray, rescaled so its mean is 0.5.
pub fn shading_image(ambient: &Grid<Rgb>, base_color: &Grid<Rgb>) -> Result<ShadingImage> {
    if !ambient.same_dims(base_color) {
        return Err(Error::invalid("ambient and baseColor grids differ in size"));
    }
    if ambient.is_empty() {
        return Err(Error::invalid("empty image"));
    }
    let ga = ambient.to_gray();
    let gb = base_color.to_gray();
    if gb.iter().all(|&v| v <= 0.0) {
        return Err(Error::degenerate("baseColor is black everywhere"));
    }
    let raw: Vec<f64> = ga
        .as_slice()
        .par_iter()
        .zip(gb.as_slice().par_iter())
        .map(|(a, b)| a / b.max(EPS_CLAMP))
        .collect();
    let raw = Grid::from_vec(ambient.width(), ambient.height(), raw)?;
    let mean = raw.mean();
    if !(mean > 0.0) || !mean.is_finite() {
        return Err(Error::degenerate("ambient image is black everywhere"));
    }
    let s = raw.map(|v| (v * 0.5 / mean).max(EPS_CLAMP));
    Ok(ShadingImage { s })
}

/// Maps shading to relative depth; 1 at S = 0.5 and 0 at S = 1.
pub fn depth_curve(s: f64) -> f64 {
    let s = s.clamp(EPS_CLAMP, 1.0);
    if s <= 0.5 {
        (1.0 / s - 1.0).sqrt()
    } else {
        2.0 * (1.0 - s)
    }
}

/// Band-pass levels `l_i = 0.5 S_i / S_{i+1}` (the coarsest level is `S_N`
/// itself), each pushed through the depth curve and accumulated with weight
/// `r_i`.
pub fn multiscale_depth(shading: &ShadingImage, radii: &[f64], sigma: f64) -> Result<HeightField> {
    if radii.is_empty() {
        return Err(Error::invalid("at least one blur radius is required"));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii[0] <= 0.0 {
        return Err(Error::invalid("radii must be positive and ascending"));
    }
    let levels: Vec<Grid<f64>> = radii.iter().map(|&r| gaussian_blur(&shading.s, r)).collect();
    let (w, h) = shading.s.dims();
    let n = radii.len();
    let d: Vec<f64> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for k in 0..n {
                let si = levels[k].as_slice()[i];
                let l = if k + 1 < n {
                    0.5 * si / levels[k + 1].as_slice()[i].max(EPS_CLAMP)
                } else {
                    si
                };
                acc += radii[k] * (depth_curve(l) - 1.0);
            }
            sigma * acc
        })
        .collect();
    Ok(HeightField {
        d: Grid::from_vec(w, h, d)?,
        sigma,
        radii: radii.to_vec(),
    })
}

/// `normalize(dd/dx, dd/dy, 1)` with Sobel derivatives in pixel units. The
/// world y axis points up the image, so `dd/dy = -dd/drow`.
pub fn normals_from_depth(field: &HeightField) -> Grid<Vec3> {
    let (dx, drow) = sobel(&field.d);
    let data: Vec<Vec3> = dx
        .as_slice()
        .par_iter()
        .zip(drow.as_slice().par_iter())
        .map(|(&gx, &gr)| Vec3::new(gx, -gr, 1.0).normalize())
        .collect();
    Grid::from_vec(field.d.width(), field.d.height(), data).expect("same size as the depth grid")
}

/// Shading image, depth and normals in one call.
pub fn normals_from_ambient(
    ambient: &Grid<Rgb>,
    base_color: &Grid<Rgb>,
    radii: &[f64],
    sigma: f64,
) -> Result<(HeightField, Grid<Vec3>)> {
    let s = shading_image(ambient, base_color)?;
    let field = multiscale_depth(&s, radii, sigma)?;
    let normals = normals_from_depth(&field);
    Ok((field, normals))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_values() {
        assert!((depth_curve(0.5) - 1.0).abs() < 1e-12);
        assert_eq!(depth_curve(1.0), 0.0);
        assert!((depth_curve(0.25) - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(depth_curve(0.0), depth_curve(EPS_CLAMP));
    }

    #[test]
    fn two_region_shading() {
        let base = Grid::filled(4, 2, [0.4; 3]);
        let amb = Grid::from_fn(4, 2, |_, c| if c < 2 { [0.8; 3] } else { [0.4; 3] });
        let s = shading_image(&amb, &base).unwrap();
        assert!((s.s.get(0, 0) - 2.0 / 3.0).abs() < 1e-12);
        assert!((s.s.get(1, 3) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn black_base_color_is_degenerate() {
        let amb = Grid::filled(3, 3, [0.5; 3]);
        let base = Grid::filled(3, 3, [0.0; 3]);
        assert!(matches!(shading_image(&amb, &base), Err(Error::Degenerate(_))));
    }

    #[test]
    fn ramp_normals() {
        let d = Grid::from_fn(9, 9, |_, c| 0.3 * c as f64);
        let field = HeightField { d, sigma: 1.0, radii: vec![1.0] };
        let n = normals_from_depth(&field);
        let expect = Vec3::new(0.3, 0.0, 1.0).normalize();
        assert!((n.get(4, 4) - expect).norm() < 1e-12);
    }
}
