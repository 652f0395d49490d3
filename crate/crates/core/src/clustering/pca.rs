use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::grid::{Grid, Rgb};

/// Principal axes of an image's RGB distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaBasis {
    pub mean: Rgb,
    /// Unit eigenvectors, one per row, by descending eigenvalue.
    pub components: [[f64; 3]; 3],
    pub eigenvalues: [f64; 3],
}

impl PcaBasis {
    #[inline]
    pub fn project(&self, c: &Rgb) -> [f64; 3] {
        let d = [c[0] - self.mean[0], c[1] - self.mean[1], c[2] - self.mean[2]];
        self.components
            .map(|e| e[0] * d[0] + e[1] * d[1] + e[2] * d[2])
    }
}

pub fn color_covariance(image: &Grid<Rgb>) -> (Rgb, [[f64; 3]; 3]) {
    let n = image.len() as f64;
    let mut mean = [0.0; 3];
    for p in image.iter() {
        for c in 0..3 {
            mean[c] += p[c];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut cov = [[0.0; 3]; 3];
    for p in image.iter() {
        let d = [p[0] - mean[0], p[1] - mean[1], p[2] - mean[2]];
        for i in 0..3 {
            for j in 0..3 {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    cov.iter_mut().flatten().for_each(|v| *v /= n);
    (mean, cov)
}

/// Decorrelate RGB into principal channels (first channel carries the most
/// variance). Each eigenvector's largest component is made positive.
pub fn pca_channels(image: &Grid<Rgb>) -> Result<(Grid<[f64; 3]>, PcaBasis)> {
    let first = image
        .as_slice()
        .first()
        .ok_or_else(|| Error::degenerate("empty image"))?;
    if image.iter().all(|p| p == first) {
        return Err(Error::degenerate("constant image has no color variance"));
    }
    let (mean, cov) = color_covariance(image);
    let m = Matrix3::from_fn(|i, j| cov[i][j]);
    let eig = SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut components = [[0.0; 3]; 3];
    let mut eigenvalues = [0.0; 3];
    for (k, &idx) in order.iter().enumerate() {
        let col = eig.eigenvectors.column(idx);
        let mut v = [col[0], col[1], col[2]];
        let lead = (0..3)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()))
            .unwrap();
        if v[lead] < 0.0 {
            v = v.map(|x| -x);
        }
        components[k] = v;
        eigenvalues[k] = eig.eigenvalues[idx].max(0.0);
    }
    let basis = PcaBasis {
        mean,
        components,
        eigenvalues,
    };
    Ok((image.map(|c| basis.project(c)), basis))
}
