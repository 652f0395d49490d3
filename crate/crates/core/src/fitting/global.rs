use rayon::prelude::*;

use crate::brdf::{DisneyLobe, ShadingFrame};
use crate::error::{Error, Result};
use crate::geometry::SceneGeometry;
use crate::grid::{luma, Grid};
use crate::optim::{minimize, LbfgsbOptions, Minimum};
use crate::radiometry::RadianceMap;

use super::loss::{cross_entropy, normalized_gray};
use super::render::{pixel_lighting, PixelLight};
use super::solution::MaterialSolution;

pub const ROUGHNESS_MIN: f64 = 0.001;
pub const ROUGHNESS_MAX: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalFit {
    pub roughness: f64,
    /// Cross entropy at the optimum.
    pub objective: f64,
    /// Entropy of the normalized target, the lower bound of the objective.
    pub target_entropy: f64,
    pub minimum: Minimum,
}

/// Cross entropy between the normalized gray target and the normalized gray
/// rendering of `solution` with its roughness replaced.
pub struct RoughnessObjective<'a> {
    solution: &'a MaterialSolution,
    light: Grid<PixelLight>,
    target: Vec<f64>,
    entropy: f64,
}

impl<'a> RoughnessObjective<'a> {
    pub fn new(solution: &'a MaterialSolution, target: &RadianceMap, geom: &SceneGeometry) -> Result<Self> {
        if solution.dims() != target.dims() {
            return Err(Error::invalid("target and solution differ in size"));
        }
        let target = normalized_gray(target)?;
        let entropy = cross_entropy(&target, &target);
        Ok(RoughnessObjective {
            solution,
            light: pixel_lighting(&solution.normals, geom)?,
            target,
            entropy,
        })
    }

    pub fn target_entropy(&self) -> f64 {
        self.entropy
    }

    pub fn eval(&self, roughness: f64) -> f64 {
        let s = self.solution;
        let gray: Vec<f64> = self
            .light
            .as_slice()
            .par_iter()
            .enumerate()
            .map(|(i, px)| {
                if px.irradiance <= 0.0 {
                    return 0.0;
                }
                let mut p = s.params_at(i);
                p.roughness = roughness;
                let frame = ShadingFrame::new_unchecked(px.n, s.tangents.as_slice()[i]);
                luma(DisneyLobe::new(&p).eval(&frame, &px.wi, &px.wo)) * px.irradiance
            })
            .collect();
        let total: f64 = gray.iter().sum();
        if !(total > 0.0) {
            return f64::INFINITY;
        }
        let q: Vec<f64> = gray.iter().map(|v| v / total).collect();
        cross_entropy(&self.target, &q)
    }
}

/// Fit the global roughness with every other parameter held fixed.
///
/// The optimizer sees the cross entropy minus the target entropy (the
/// Kullback-Leibler divergence). The minimizer is the same, but the relative
/// stopping tolerance then measures progress toward zero instead of against
/// an offset of order `ln(pixel count)`.
pub fn fit_global_roughness(
    solution: &MaterialSolution,
    target: &RadianceMap,
    geom: &SceneGeometry,
    tol: f64,
) -> Result<GlobalFit> {
    let objective = RoughnessObjective::new(solution, target, geom)?;
    let opts = LbfgsbOptions {
        rel_tol: tol,
        ..LbfgsbOptions::default()
    };
    let x0 = solution.roughness.clamp(ROUGHNESS_MIN, ROUGHNESS_MAX);
    let entropy = objective.target_entropy();
    let minimum = minimize(|x| objective.eval(x[0]) - entropy, &[x0], &[ROUGHNESS_MIN], &[ROUGHNESS_MAX], &opts)
        .map_err(|e| Error::Fit {
            stage: "global roughness".into(),
            message: e.to_string(),
        })?;
    if !minimum.f.is_finite() {
        return Err(Error::Fit {
            stage: "global roughness".into(),
            message: format!("non-finite objective at roughness {}", minimum.x[0]),
        });
    }
    Ok(GlobalFit {
        roughness: minimum.x[0],
        objective: minimum.f + entropy,
        target_entropy: entropy,
        minimum,
    })
}
