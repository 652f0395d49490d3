use std::f64::consts::TAU;

use crate::brdf::DisneyLobe;
use crate::error::{Error, Result};
use crate::geometry::SceneGeometry;
use crate::grid::{Grid, Rgb};
use crate::optim::{minimize, LbfgsbOptions};
use crate::radiometry::RadianceMap;

use super::loss::pseudo_huber_rgb;
use super::render::{pixel_lighting, shade, PixelLight};
use super::solution::{ClusterParams, MaterialSolution, CLUSTER_PARAMS};

/// Extra anisoAxis offsets tried from a strongly anisotropic start, so the
/// tangent direction is not trapped by the axis-independent isotropic start.
const AXIS_OFFSETS: [f64; 4] = [0.0, 0.125, 0.25, 0.375];
const ANISO_START: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterFitOptions {
    pub tol: f64,
    pub delta_h: f64,
    pub multi_start: bool,
    /// Larger clusters are evaluated on an evenly strided subset.
    pub max_pixels: usize,
}

impl Default for ClusterFitOptions {
    fn default() -> Self {
        ClusterFitOptions {
            tol: 1e-6,
            delta_h: super::loss::DEFAULT_DELTA_H,
            multi_start: true,
            max_pixels: 50_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterFit {
    pub params: ClusterParams,
    pub objective: f64,
    pub initial_objective: f64,
    pub evaluations: usize,
    /// Set when the optimizer failed and the initial values were kept.
    pub flagged: bool,
}

/// Mean Pseudo-Huber residual of one cluster as a function of its shared
/// parameters.
pub struct ClusterProblem {
    pixels: Vec<(PixelLight, Rgb)>,
    roughness: f64,
    metallic: bool,
    delta_h: f64,
}

impl ClusterProblem {
    pub fn new(
        members: &[usize],
        light: &Grid<PixelLight>,
        target: &RadianceMap,
        roughness: f64,
        metallic: bool,
        opts: &ClusterFitOptions,
    ) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("cluster has no pixels"));
        }
        let stride = members.len().div_ceil(opts.max_pixels.max(1));
        let pixels = members
            .iter()
            .step_by(stride)
            .map(|&i| (light.as_slice()[i], target.as_slice()[i]))
            .collect();
        Ok(ClusterProblem {
            pixels,
            roughness,
            metallic,
            delta_h: opts.delta_h,
        })
    }

    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    pub fn objective(&self, p: &ClusterParams) -> f64 {
        let lobe = DisneyLobe::new(&p.disney(self.roughness, self.metallic));
        let phi = p.aniso_axis * TAU;
        let (sin_phi, cos_phi) = phi.sin_cos();
        let total: f64 = self
            .pixels
            .iter()
            .map(|(px, target)| pseudo_huber_rgb(&shade(&lobe, px, cos_phi, sin_phi), target, self.delta_h))
            .sum();
        total / self.pixels.len() as f64
    }

    /// Optimize from `init` and, when enabled, from rotated anisotropic
    /// starts; `extra` adds further caller-supplied starts. The lowest
    /// objective wins.
    pub fn fit(&self, init: &ClusterParams, extra: &[ClusterParams], opts: &ClusterFitOptions) -> ClusterFit {
        let init = init.clamped();
        let initial_objective = self.objective(&init);
        let mut starts = vec![init];
        starts.extend(extra.iter().map(|p| p.clamped()));
        if opts.multi_start {
            for off in AXIS_OFFSETS {
                let mut s = init;
                s.anisotropic = s.anisotropic.max(ANISO_START);
                s.aniso_axis = (init.aniso_axis + off).rem_euclid(1.0);
                starts.push(s);
            }
        }
        let lo = [0.0; CLUSTER_PARAMS];
        let hi = [1.0; CLUSTER_PARAMS];
        let lopts = LbfgsbOptions {
            rel_tol: opts.tol,
            ..LbfgsbOptions::default()
        };
        let mut best: Option<(ClusterParams, f64)> = None;
        let mut evaluations = 0;
        let mut failed = 0;
        for s in &starts {
            match minimize(|x| self.objective(&ClusterParams::from_slice(x)), &s.to_vec(), &lo, &hi, &lopts) {
                Ok(m) => {
                    evaluations += m.evaluations;
                    if best.as_ref().is_none_or(|b| m.f < b.1) {
                        best = Some((ClusterParams::from_slice(&m.x).clamped(), m.f));
                    }
                }
                Err(_) => failed += 1,
            }
        }
        match best {
            Some((params, objective)) if objective <= initial_objective => ClusterFit {
                params,
                objective,
                initial_objective,
                evaluations,
                flagged: false,
            },
            _ => ClusterFit {
                params: init,
                objective: initial_objective,
                initial_objective,
                evaluations,
                flagged: failed == starts.len(),
            },
        }
    }
}

/// Fit one cluster of `solution`, starting from the cluster's mean parameters.
pub fn fit_cluster_params(
    cluster_id: u32,
    solution: &MaterialSolution,
    target: &RadianceMap,
    geom: &SceneGeometry,
    opts: &ClusterFitOptions,
) -> Result<ClusterFit> {
    let members: Vec<usize> = solution
        .labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == cluster_id)
        .map(|(i, _)| i)
        .collect();
    if members.is_empty() {
        return Err(Error::invalid(format!("cluster {cluster_id} has no pixels")));
    }
    let light = pixel_lighting(&solution.normals, geom)?;
    let problem = ClusterProblem::new(&members, &light, target, solution.roughness, solution.metallic, opts)?;
    let init = cluster_mean(solution, &members);
    Ok(problem.fit(&init, &[], opts))
}

/// Mean of every per-cluster map over the given pixels.
pub fn cluster_mean(solution: &MaterialSolution, members: &[usize]) -> ClusterParams {
    let mut acc = [0.0; CLUSTER_PARAMS];
    for &i in members {
        let v = solution.cluster_params_at(i).to_vec();
        for k in 0..CLUSTER_PARAMS {
            acc[k] += v[k];
        }
    }
    let n = members.len().max(1) as f64;
    ClusterParams::from_slice(&acc.map(|v| v / n))
}
