//! Inverse rendering: forward point-light renderer, global roughness by cross
//! entropy, per-cluster parameter fits and the iterative blur-and-refit driver.

mod cluster;
mod global;
mod loss;
mod pipeline;
mod render;
mod solution;

pub use cluster::{cluster_mean, fit_cluster_params, ClusterFit, ClusterFitOptions, ClusterProblem};
pub use global::{fit_global_roughness, GlobalFit, RoughnessObjective, ROUGHNESS_MAX, ROUGHNESS_MIN};
pub use loss::{cross_entropy, normalized_gray, pseudo_huber, pseudo_huber_rgb, DEFAULT_DELTA_H};
pub use pipeline::{
    blur_and_reseed, blur_schedule, run_pipeline, run_pipeline_with, tolerance_schedule, Diagnostic,
    FitConfig, PipelineOutput, Reseed,
};
pub use render::{pixel_lighting, render_forward, render_with_lighting, shade, PixelLight};
pub use solution::{ClusterParams, MaterialSolution, CLUSTER_PARAMS};
