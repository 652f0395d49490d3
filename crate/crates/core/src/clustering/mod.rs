//! Pixel clustering of the ambient image over decorrelated color and
//! multi-scale BRIEF structure.

mod brief;
mod kproto;
mod pca;

pub use brief::{
    brief_features, brief_pattern, get_bit, hamming, set_bit, BriefBits, BriefScale, PointPair,
    BRIEF_BITS, BRIEF_SCALES,
};
pub use kproto::{
    default_gamma, kmeanspp_seed, kprototypes_fit, kprototypes_from, mixed_distance, total_cost,
    ClusterModel, KPrototypesConfig, PixelFeature,
};
pub use pca::{color_covariance, pca_channels, PcaBasis};

use crate::error::Result;
use crate::grid::{Grid, Rgb};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub k: usize,
    /// Multiplies the default gamma.
    pub gamma_scale: f64,
    pub seed: u64,
    pub max_iter: usize,
    pub max_fit_samples: usize,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            k: 500,
            gamma_scale: 1.0,
            seed: 0,
            max_iter: 100,
            max_fit_samples: 200_000,
        }
    }
}

/// PCA color channels plus BRIEF bits on the first channel, per pixel.
pub fn pixel_features(image: &Grid<Rgb>, seed: u64) -> Result<Vec<PixelFeature>> {
    let (proj, _) = pca_channels(image)?;
    let bits = brief_features(&proj.map(|p| p[0]), seed);
    Ok(proj
        .iter()
        .zip(bits.iter())
        .map(|(n, b)| PixelFeature {
            numeric: *n,
            bits: *b,
        })
        .collect())
}

/// Cluster the pixels of an ambient image; labels are returned in row-major order.
pub fn cluster_image(image: &Grid<Rgb>, cfg: &ClusterConfig) -> Result<ClusterModel> {
    let features = pixel_features(image, cfg.seed)?;
    let gamma = default_gamma(&features) * cfg.gamma_scale;
    let kcfg = KPrototypesConfig {
        k: cfg.k,
        gamma,
        seed: cfg.seed,
        max_iter: cfg.max_iter,
        max_fit_samples: cfg.max_fit_samples,
    };
    kprototypes_fit(&features, &kcfg)
}
