//! Synthetic ground truth: a tiled piecewise-constant material with smooth
//! procedural bumps, its point-light radiance and a matching ambient image.

use std::f64::consts::TAU;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bundle::SvbrdfBundle;
use crate::error::{Error, Result};
use crate::fitting::{render_forward, ClusterParams, MaterialSolution};
use crate::geometry::{pixel_pitch, CameraSpec, SceneGeometry, Vec3};
use crate::grid::{Grid, Rgb};
use crate::heightfield::{DEFAULT_RADII, DEFAULT_SIGMA};
use crate::radiometry::{RadianceMap, ResponseCurve};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpSpec {
    /// Upper bound on the surface slope (height per pixel).
    pub max_slope: f64,
    /// Period of the dominant undulation in pixels.
    pub period_px: f64,
}

impl BumpSpec {
    pub fn flat() -> Self {
        BumpSpec {
            max_slope: 0.0,
            period_px: 48.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    /// Side of the square tiles carrying one material each.
    pub tile_px: usize,
    pub materials: Vec<ClusterParams>,
    pub roughness: f64,
    pub metallic: bool,
    pub bumps: BumpSpec,
    /// Ambient contrast per unit height; `None` picks the value for which the
    /// default heightfield settings reproduce the dominant bump slope.
    pub shading_gain: Option<f64>,
    pub f35_mm: f64,
    /// Light x, y in the normalized frame.
    pub light_offset: [f64; 2],
    pub light_intensity: f64,
    pub r_perp_m: f64,
    pub seed: u64,
}

/// Four materials, one of them strongly anisotropic.
pub fn default_materials() -> Vec<ClusterParams> {
    vec![
        ClusterParams {
            base_color: [0.70, 0.25, 0.20],
            specular: 0.5,
            specular_tint: 0.2,
            anisotropic: 0.0,
            aniso_axis: 0.0,
        },
        ClusterParams {
            base_color: [0.20, 0.45, 0.70],
            specular: 0.6,
            specular_tint: 0.0,
            anisotropic: 0.6,
            aniso_axis: 0.15,
        },
        ClusterParams {
            base_color: [0.80, 0.72, 0.30],
            specular: 0.4,
            specular_tint: 0.5,
            anisotropic: 0.0,
            aniso_axis: 0.0,
        },
        ClusterParams {
            base_color: [0.30, 0.32, 0.30],
            specular: 0.8,
            specular_tint: 0.0,
            anisotropic: 0.2,
            aniso_axis: 0.3,
        },
    ]
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            width: 256,
            height: 256,
            tile_px: 16,
            materials: default_materials(),
            roughness: 0.3,
            metallic: false,
            bumps: BumpSpec {
                max_slope: 0.06,
                period_px: 48.0,
            },
            shading_gain: None,
            f35_mm: 26.0,
            light_offset: [0.05, 0.0],
            light_intensity: 10.0,
            r_perp_m: 0.2,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 || self.tile_px == 0 {
            return Err(Error::invalid("image and tile sizes must be positive"));
        }
        if self.materials.is_empty() {
            return Err(Error::invalid("at least one material is required"));
        }
        for m in &self.materials {
            m.disney(self.roughness, self.metallic).validate()?;
        }
        if !(self.bumps.max_slope >= 0.0) || !(self.bumps.period_px > 0.0) {
            return Err(Error::invalid("bump slope must be non-negative and period positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthScene {
    pub ambient: Grid<Rgb>,
    pub radiance: RadianceMap,
    /// Ground truth; labels hold the material index of every pixel.
    pub truth: SvbrdfBundle,
    pub geometry: SceneGeometry,
}

/// Heightfield gain of the default settings for a sinusoid of angular
/// frequency `omega` (radians per pixel).
fn heightfield_gain(omega: f64) -> f64 {
    let g: Vec<f64> = DEFAULT_RADII.iter().map(|r| (-0.5 * (omega * r).powi(2)).exp()).collect();
    let n = g.len();
    let mut t = DEFAULT_RADII[n - 1] * g[n - 1];
    for i in 0..n - 1 {
        t += DEFAULT_RADII[i] * (g[i] - g[i + 1]);
    }
    DEFAULT_SIGMA * t
}

struct Bumps {
    amp: f64,
    w1: f64,
    w2: f64,
    dir: (f64, f64),
    phase: [f64; 3],
}

impl Bumps {
    /// Height and its gradient with respect to (col, row).
    fn eval(&self, col: f64, row: f64) -> (f64, f64, f64) {
        let (a, b) = (self.w1 * col + self.phase[0], self.w1 * row + self.phase[1]);
        let u = self.w2 * (self.dir.0 * col + self.dir.1 * row) + self.phase[2];
        let h = a.sin() * b.sin() + 0.5 * u.sin();
        let hc = self.w1 * a.cos() * b.sin() + 0.5 * self.w2 * self.dir.0 * u.cos();
        let hr = self.w1 * a.sin() * b.cos() + 0.5 * self.w2 * self.dir.1 * u.cos();
        (self.amp * h, self.amp * hc, self.amp * hr)
    }
}

pub fn synth_generate(spec: &SynthSpec) -> Result<SynthScene> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Every block of `side x side` tiles holds each material at least once.
    let m = spec.materials.len();
    let side = (m as f64).sqrt().ceil() as usize;
    let tiles_x = w.div_ceil(spec.tile_px);
    let tiles_y = h.div_ceil(spec.tile_px);
    let mut tile_material = Grid::filled(tiles_x, tiles_y, 0u32);
    for by in (0..tiles_y).step_by(side) {
        for bx in (0..tiles_x).step_by(side) {
            let mut ids: Vec<u32> = (0..side * side).map(|i| (i % m) as u32).collect();
            ids.shuffle(&mut rng);
            for (k, id) in ids.into_iter().enumerate() {
                let (ty, tx) = (by + k / side, bx + k % side);
                if ty < tiles_y && tx < tiles_x {
                    tile_material.set(ty, tx, id);
                }
            }
        }
    }
    let labels = Grid::from_fn(w, h, |r, c| *tile_material.get(r / spec.tile_px, c / spec.tile_px));

    let w1 = TAU / spec.bumps.period_px;
    let w2 = w1 / 0.7;
    let theta = rng.random::<f64>() * TAU;
    let bumps = Bumps {
        amp: spec.bumps.max_slope / (w1 + 0.5 * w2),
        w1,
        w2,
        dir: (theta.cos(), theta.sin()),
        phase: [rng.random::<f64>() * TAU, rng.random::<f64>() * TAU, rng.random::<f64>() * TAU],
    };
    let mut height = Grid::filled(w, h, 0.0);
    let mut normals = Grid::filled(w, h, Vec3::z());
    for r in 0..h {
        for c in 0..w {
            let (hv, hc, hr) = bumps.eval(c as f64, r as f64);
            height.set(r, c, hv);
            // World y runs up the image, so dh/dy = -dh/drow.
            normals.set(r, c, Vec3::new(-hc, hr, 1.0).normalize());
        }
    }

    let mut solution = MaterialSolution::uniform(w, h, &spec.materials[0].disney(spec.roughness, spec.metallic));
    for i in 0..w * h {
        let p = spec.materials[labels.as_slice()[i] as usize];
        solution.set_cluster_params(i, &p);
    }
    solution.labels = labels;
    solution.normals = normals;
    solution.height = height.clone();
    solution.update_tangents()?;

    let camera = CameraSpec::new(spec.f35_mm, w, h)?;
    let geometry = SceneGeometry::new(
        Vec3::new(spec.light_offset[0], spec.light_offset[1], 1.0),
        pixel_pitch(&camera)?,
        spec.r_perp_m,
        spec.light_intensity,
    )?;
    let radiance = render_forward(&solution, &geometry)?;

    let gain = spec.shading_gain.unwrap_or_else(|| 1.0 / heightfield_gain(w1));
    let ambient = Grid::from_fn(w, h, |r, c| {
        let s = 1.0 + gain * height.get(r, c);
        solution.base_color.get(r, c).map(|v| v * s)
    });

    Ok(SynthScene {
        ambient,
        radiance,
        truth: SvbrdfBundle::new(solution, &geometry),
        geometry,
    })
}

/// Exposure time at which the brightest channel value lands on pixel `z_max`.
pub fn capture_exposure(radiance: &RadianceMap, curve: &ResponseCurve, z_max: u8) -> Result<f64> {
    let peak = radiance.iter().flatten().fold(0.0f64, |a, &b| a.max(b));
    if !(peak > 0.0) {
        return Err(Error::degenerate("radiance map is black"));
    }
    let g = (0..3).map(|c| curve.g(c, z_max)).fold(f64::INFINITY, f64::min);
    Ok(g.exp() / peak)
}
