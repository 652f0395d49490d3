use rayon::prelude::*;

use crate::brdf::{tangent_from_azimuth, DisneyLobe, ShadingFrame};
use crate::error::Result;
use crate::geometry::{incident_geometry, SceneGeometry, Vec3};
use crate::grid::{Grid, Rgb};
use crate::radiometry::RadianceMap;

use super::solution::MaterialSolution;

/// Material-independent lighting at one pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelLight {
    pub n: Vec3,
    pub wi: Vec3,
    pub wo: Vec3,
    /// `E cos(theta_i) / r^2`, zero when the light is behind the surface.
    pub irradiance: f64,
}

pub fn pixel_lighting(normals: &Grid<Vec3>, geom: &SceneGeometry) -> Result<Grid<PixelLight>> {
    let (w, h) = normals.dims();
    let frame = geom.frame(w, h);
    let data = normals
        .as_slice()
        .par_iter()
        .enumerate()
        .map(|(i, n)| {
            let (row, col) = (i / w, i % w);
            let p = frame.world(row as f64, col as f64);
            let inc = incident_geometry(&p, geom, n)?;
            Ok(PixelLight {
                n: *n,
                wi: inc.wi,
                wo: inc.wo,
                irradiance: geom.light_intensity * inc.cos_theta.max(0.0) / (inc.r * inc.r),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Grid::from_vec(w, h, data)
}

/// Outgoing radiance for a lobe whose tangent azimuth is `(cos_phi, sin_phi)`.
#[inline]
pub fn shade(lobe: &DisneyLobe, px: &PixelLight, cos_phi: f64, sin_phi: f64) -> Rgb {
    if px.irradiance <= 0.0 {
        return [0.0; 3];
    }
    let t = tangent_from_azimuth(&px.n, cos_phi, sin_phi);
    let frame = ShadingFrame::new_unchecked(px.n, t);
    let f = lobe.eval(&frame, &px.wi, &px.wo);
    f.map(|v| v * px.irradiance)
}

/// Point-light rendering of every pixel with its own parameters and frame.
pub fn render_forward(solution: &MaterialSolution, geom: &SceneGeometry) -> Result<RadianceMap> {
    let light = pixel_lighting(&solution.normals, geom)?;
    Ok(render_with_lighting(solution, &light))
}

pub fn render_with_lighting(solution: &MaterialSolution, light: &Grid<PixelLight>) -> RadianceMap {
    let (w, h) = solution.dims();
    let data: Vec<Rgb> = light
        .as_slice()
        .par_iter()
        .enumerate()
        .map(|(i, px)| {
            if px.irradiance <= 0.0 {
                return [0.0; 3];
            }
            let lobe = DisneyLobe::new(&solution.params_at(i));
            let frame = ShadingFrame::new_unchecked(px.n, solution.tangents.as_slice()[i]);
            lobe.eval(&frame, &px.wi, &px.wo).map(|v| v * px.irradiance)
        })
        .collect();
    Grid::from_vec(w, h, data).expect("lighting grid matches the solution")
}
