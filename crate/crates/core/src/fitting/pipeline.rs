use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::clustering::{cluster_image, ClusterConfig, ClusterModel, PixelFeature};
use crate::error::{Error, Result};
use crate::geometry::SceneGeometry;
use crate::grid::{gaussian_blur, gaussian_blur_rgb, Grid, Rgb};
use crate::heightfield::{normals_from_ambient, DEFAULT_RADII, DEFAULT_SIGMA};
use crate::radiometry::RadianceMap;

use super::cluster::{cluster_mean, ClusterFitOptions, ClusterProblem};
use super::global::fit_global_roughness;
use super::loss::{pseudo_huber_rgb, DEFAULT_DELTA_H};
use super::render::{pixel_lighting, render_with_lighting};
use super::solution::{ClusterParams, MaterialSolution};

/// Blur deviation at 256 pixels for the first iteration; halves every iteration.
const BASE_BLUR_PX: f64 = 16.0;
const BASE_RESOLUTION: f64 = 256.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    pub n_iters: usize,
    pub blur_sigmas: Vec<f64>,
    pub tolerances: Vec<f64>,
    pub cluster: ClusterConfig,
    pub height_sigma: f64,
    pub height_radii: Vec<f64>,
    pub delta_h: f64,
    pub initial_roughness: f64,
    pub multi_start: bool,
    pub max_cluster_pixels: usize,
    /// Keep a copy of the fitted solution after every iteration.
    pub keep_snapshots: bool,
}

/// `16 * 2^(1 - i)` pixels for iteration `i = 1..n`, scaled with resolution.
pub fn blur_schedule(n_iters: usize, width: usize, height: usize) -> Vec<f64> {
    let scale = width.max(height) as f64 / BASE_RESOLUTION;
    (0..n_iters).map(|i| BASE_BLUR_PX * scale / 2f64.powi(i as i32)).collect()
}

/// `1e-2 * 10^-(i - 1)`, floored at 1e-6.
pub fn tolerance_schedule(n_iters: usize) -> Vec<f64> {
    (0..n_iters).map(|i| (1e-2 / 10f64.powi(i as i32)).max(1e-6)).collect()
}

impl FitConfig {
    pub fn for_resolution(width: usize, height: usize, n_iters: usize) -> Self {
        FitConfig {
            n_iters,
            blur_sigmas: blur_schedule(n_iters, width, height),
            tolerances: tolerance_schedule(n_iters),
            cluster: ClusterConfig::default(),
            height_sigma: DEFAULT_SIGMA,
            height_radii: DEFAULT_RADII.to_vec(),
            delta_h: DEFAULT_DELTA_H,
            initial_roughness: 0.5,
            multi_start: true,
            max_cluster_pixels: 50_000,
            keep_snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iters == 0 {
            return Err(Error::invalid("at least one iteration is required"));
        }
        if self.blur_sigmas.len() != self.n_iters || self.tolerances.len() != self.n_iters {
            return Err(Error::invalid("schedules must have one entry per iteration"));
        }
        if self.blur_sigmas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("blur schedule must be strictly decreasing"));
        }
        if self.blur_sigmas.iter().any(|&s| s < 0.0) || self.tolerances.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::invalid("schedules must be positive"));
        }
        if !(self.delta_h > 0.0) {
            return Err(Error::invalid("Pseudo-Huber delta must be positive"));
        }
        if !(self.height_sigma >= 0.0) {
            return Err(Error::invalid("height sigma must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.initial_roughness) {
            return Err(Error::invalid("initial roughness outside [0, 1]"));
        }
        Ok(())
    }

    fn cluster_options(&self, iteration: usize) -> ClusterFitOptions {
        ClusterFitOptions {
            tol: self.tolerances[iteration],
            delta_h: self.delta_h,
            multi_start: self.multi_start,
            max_pixels: self.max_cluster_pixels,
        }
    }
}

/// One progress record emitted by the driver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub iteration: usize,
    pub stage: String,
    pub objective: f64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub solution: MaterialSolution,
    pub clusters: ClusterModel,
    /// Full-image mean residual after the per-cluster stage of each iteration.
    pub residual_history: Vec<f64>,
    pub diagnostics: Vec<Diagnostic>,
    /// Clusters whose optimizer failed in the last iteration.
    pub flagged_clusters: Vec<usize>,
    /// Fitted solution after each iteration when snapshots are enabled.
    pub snapshots: Vec<MaterialSolution>,
}

/// Blurred copy of the spatially varying maps and the per-cluster means of
/// the blurred maps.
#[derive(Debug, Clone)]
pub struct Reseed {
    pub blurred: MaterialSolution,
    pub initial: Vec<ClusterParams>,
}

pub fn blur_and_reseed(solution: &MaterialSolution, sigma: f64, members: &[Vec<usize>]) -> Reseed {
    let mut blurred = solution.clone();
    blurred.base_color = gaussian_blur_rgb(&solution.base_color, sigma);
    blurred.specular = gaussian_blur(&solution.specular, sigma);
    blurred.specular_tint = gaussian_blur(&solution.specular_tint, sigma);
    blurred.anisotropic = gaussian_blur(&solution.anisotropic, sigma);
    blurred.aniso_axis = gaussian_blur(&solution.aniso_axis, sigma);
    let initial = members
        .iter()
        .map(|m| cluster_mean(&blurred, m).clamped())
        .collect();
    Reseed { blurred, initial }
}

fn paint_clusters(solution: &mut MaterialSolution, members: &[Vec<usize>], params: &[ClusterParams]) {
    for (m, p) in members.iter().zip(params) {
        for &i in m {
            solution.set_cluster_params(i, p);
        }
    }
}

fn mean_residual(rendered: &RadianceMap, target: &RadianceMap, delta_h: f64) -> f64 {
    let total: f64 = rendered
        .as_slice()
        .par_iter()
        .zip(target.as_slice().par_iter())
        .map(|(a, b)| pseudo_huber_rgb(a, b, delta_h))
        .sum();
    total / rendered.len() as f64
}

/// A uniform ambient image is one material; anything else goes through
/// k-prototypes.
fn cluster_ambient(ambient: &Grid<Rgb>, cfg: &ClusterConfig) -> Result<ClusterModel> {
    let first = ambient.as_slice().first().ok_or_else(|| Error::invalid("empty ambient image"))?;
    if ambient.iter().any(|p| p != first) {
        return cluster_image(ambient, cfg);
    }
    Ok(ClusterModel {
        centers: vec![PixelFeature {
            numeric: [0.0; 3],
            bits: [0; 3],
        }],
        labels: vec![0; ambient.len()],
        gamma: 0.0,
        k: 1,
        cost_history: vec![0.0],
        iterations: 0,
    })
}

pub fn run_pipeline(
    ambient: &Grid<Rgb>,
    target: &RadianceMap,
    geom: &SceneGeometry,
    config: &FitConfig,
    metallic: bool,
) -> Result<PipelineOutput> {
    run_pipeline_with(ambient, target, geom, config, metallic, &mut |_| {})
}

/// Cluster once, then per iteration: heightfield from the previous baseColor,
/// global roughness, every cluster's parameters, blur and reseed.
pub fn run_pipeline_with(
    ambient: &Grid<Rgb>,
    target: &RadianceMap,
    geom: &SceneGeometry,
    config: &FitConfig,
    metallic: bool,
    on_event: &mut dyn FnMut(&Diagnostic),
) -> Result<PipelineOutput> {
    config.validate()?;
    geom.validate()?;
    if !ambient.same_dims(target) {
        return Err(Error::invalid("ambient image and radiance map differ in size"));
    }
    let start = Instant::now();
    let mut diagnostics = Vec::new();
    let mut emit = |iteration: usize, stage: &str, objective: f64| {
        let d = Diagnostic {
            iteration,
            stage: stage.to_string(),
            objective,
            wall_time_s: start.elapsed().as_secs_f64(),
        };
        on_event(&d);
        diagnostics.push(d);
    };
    let stage_err = |stage: &str, e: Error| match e {
        Error::Fit { .. } => e,
        other => Error::Fit {
            stage: stage.to_string(),
            message: other.to_string(),
        },
    };

    let clusters = cluster_ambient(ambient, &config.cluster).map_err(|e| stage_err("clustering", e))?;
    emit(0, "clustering", *clusters.cost_history.last().unwrap_or(&0.0));
    let members = clusters.members();
    let (w, h) = ambient.dims();

    let mut solution = MaterialSolution::uniform(
        w,
        h,
        &crate::brdf::DisneyParams {
            base_color: [0.0; 3],
            metallic,
            specular: 0.5,
            specular_tint: 0.0,
            roughness: config.initial_roughness,
            anisotropic: 0.0,
            aniso_axis: 0.0,
        },
    );
    solution.base_color = ambient.map(|c| c.map(|v| v.clamp(0.0, 1.0)));
    solution.labels = Grid::from_vec(w, h, clusters.labels.clone())?;
    let mut initial: Vec<ClusterParams> = members.iter().map(|m| cluster_mean(&solution, m)).collect();
    let mut previous_base: Grid<Rgb> = solution.base_color.clone();
    let mut residual_history = Vec::new();
    let mut flagged_clusters = Vec::new();
    let mut fitted = solution.clone();
    let mut previous_fit: Vec<ClusterParams> = Vec::new();
    let mut snapshots = Vec::new();

    for it in 0..config.n_iters {
        let (field, normals) =
            normals_from_ambient(ambient, &previous_base, &config.height_radii, config.height_sigma)
                .map_err(|e| stage_err("heightfield", e))?;
        solution.normals = normals;
        solution.height = field.d;
        solution.update_tangents().map_err(|e| stage_err("heightfield", e))?;
        emit(it + 1, "heightfield", 0.0);

        let global = fit_global_roughness(&solution, target, geom, config.tolerances[it])?;
        solution.roughness = global.roughness;
        emit(it + 1, "global", global.objective);

        let light = pixel_lighting(&solution.normals, geom).map_err(|e| stage_err("cluster", e))?;
        let opts = config.cluster_options(it);
        let fits = members
            .par_iter()
            .enumerate()
            .map(|(j, m)| {
                let problem = ClusterProblem::new(m, &light, target, solution.roughness, metallic, &opts)?;
                let warm: &[ClusterParams] = previous_fit.get(j).map(std::slice::from_ref).unwrap_or(&[]);
                Ok(problem.fit(&initial[j], warm, &opts))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| stage_err("cluster", e))?;
        flagged_clusters = fits.iter().enumerate().filter(|(_, f)| f.flagged).map(|(j, _)| j).collect();
        let params: Vec<ClusterParams> = fits.iter().map(|f| f.params).collect();
        previous_fit = params.clone();

        fitted = solution.clone();
        paint_clusters(&mut fitted, &members, &params);
        fitted.update_tangents().map_err(|e| stage_err("cluster", e))?;
        let residual = mean_residual(&render_with_lighting(&fitted, &light), target, config.delta_h);
        residual_history.push(residual);
        emit(it + 1, "cluster", residual);
        previous_base = fitted.base_color.clone();
        if config.keep_snapshots {
            snapshots.push(fitted.clone());
        }

        if it + 1 < config.n_iters {
            let reseed = blur_and_reseed(&fitted, config.blur_sigmas[it], &members);
            initial = reseed.initial;
            solution = fitted.clone();
            // The unblurred fit stays in place for the next roughness stage.
            emit(it + 1, "reseed", config.blur_sigmas[it]);
        }
    }

    Ok(PipelineOutput {
        solution: fitted,
        clusters,
        residual_history,
        diagnostics,
        flagged_clusters,
        snapshots,
    })
}
