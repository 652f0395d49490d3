//! k-prototypes over mixed numeric + binary features with k-means++ seeding.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::brief::{get_bit, hamming, set_bit, BriefBits, BRIEF_BITS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelFeature {
    /// Decorrelated color channels.
    pub numeric: [f64; 3],
    pub bits: BriefBits,
}

/// Squared Euclidean distance of the numeric parts plus `gamma` times the
/// Hamming distance of the bit parts.
#[inline]
pub fn mixed_distance(a: &PixelFeature, b: &PixelFeature, gamma: f64) -> f64 {
    let d0 = a.numeric[0] - b.numeric[0];
    let d1 = a.numeric[1] - b.numeric[1];
    let d2 = a.numeric[2] - b.numeric[2];
    let num = d0 * d0 + d1 * d1 + d2 * d2;
    if gamma == 0.0 {
        num
    } else {
        num + gamma * hamming(&a.bits, &b.bits) as f64
    }
}

/// Mean population standard deviation of the numeric attributes divided by
/// the descriptor length.
pub fn default_gamma(features: &[PixelFeature]) -> f64 {
    let n = features.len();
    if n < 2 {
        return 0.0;
    }
    // Shifted by the first sample so constant attributes give exactly zero.
    let origin = features[0].numeric;
    let mut sum = [0.0; 3];
    let mut sum_sq = [0.0; 3];
    for f in features {
        for c in 0..3 {
            let d = f.numeric[c] - origin[c];
            sum[c] += d;
            sum_sq[c] += d * d;
        }
    }
    let var: Vec<f64> = (0..3)
        .map(|c| {
            let m = sum[c] / n as f64;
            (sum_sq[c] / n as f64 - m * m).max(0.0)
        })
        .collect();
    let mean_std = var.iter().map(|v| v.sqrt()).sum::<f64>() / 3.0;
    mean_std / BRIEF_BITS as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterModel {
    pub centers: Vec<PixelFeature>,
    /// Cluster index of every input feature.
    pub labels: Vec<u32>,
    pub gamma: f64,
    pub k: usize,
    /// Total cost after every (assign, update) round on the fitting set.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
}

impl ClusterModel {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        self.labels.iter().for_each(|&l| sizes[l as usize] += 1);
        sizes
    }

    /// Member indices per cluster, in ascending order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            m[l as usize].push(i);
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KPrototypesConfig {
    pub k: usize,
    pub gamma: f64,
    pub seed: u64,
    pub max_iter: usize,
    /// Centers are fitted on at most this many randomly chosen features.
    pub max_fit_samples: usize,
}

impl KPrototypesConfig {
    pub fn new(k: usize, gamma: f64, seed: u64) -> Self {
        KPrototypesConfig {
            k,
            gamma,
            seed,
            max_iter: 100,
            max_fit_samples: 200_000,
        }
    }
}

/// k-means++ seeding under `mixed_distance`: each further seed is drawn with
/// probability proportional to its distance to the nearest chosen seed.
pub fn kmeanspp_seed<R: Rng>(
    features: &[PixelFeature],
    k: usize,
    gamma: f64,
    rng: &mut R,
) -> Vec<usize> {
    let n = features.len();
    let mut chosen = Vec::with_capacity(k);
    if n == 0 || k == 0 {
        return chosen;
    }
    chosen.push(rng.random_range(0..n));
    let mut nearest: Vec<f64> = features
        .par_iter()
        .map(|f| mixed_distance(f, &features[chosen[0]], gamma))
        .collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, d) in nearest.iter().enumerate() {
                acc += d;
                if acc > target && *d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            // Every point coincides with a seed; fall back to uniform draws.
            rng.random_range(0..n)
        };
        chosen.push(pick);
        let c = features[pick];
        nearest
            .par_iter_mut()
            .zip(features.par_iter())
            .for_each(|(d, f)| *d = d.min(mixed_distance(f, &c, gamma)));
    }
    chosen
}

/// Nearest center; ties keep `current` when it is among the minimizers.
#[inline]
fn nearest_center(f: &PixelFeature, centers: &[PixelFeature], gamma: f64, current: Option<u32>) -> (u32, f64) {
    let mut best = 0u32;
    let mut best_d = f64::INFINITY;
    for (j, c) in centers.iter().enumerate() {
        let d = mixed_distance(f, c, gamma);
        if d < best_d {
            best_d = d;
            best = j as u32;
        }
    }
    if let Some(cur) = current {
        if mixed_distance(f, &centers[cur as usize], gamma) <= best_d {
            return (cur, best_d);
        }
    }
    (best, best_d)
}

/// Mean of the numeric parts and per-bit majority of the members; bits with
/// an exact tie keep the previous center's value.
fn update_center(members: &[usize], features: &[PixelFeature], previous: &PixelFeature) -> PixelFeature {
    let m = members.len();
    let mut numeric = [0.0; 3];
    let mut counts = [0u32; BRIEF_BITS];
    for &i in members {
        let f = &features[i];
        for c in 0..3 {
            numeric[c] += f.numeric[c];
        }
        for (word, &w) in f.bits.iter().enumerate() {
            let mut w = w;
            while w != 0 {
                let b = w.trailing_zeros() as usize;
                let idx = word * 64 + b;
                if idx < BRIEF_BITS {
                    counts[idx] += 1;
                }
                w &= w - 1;
            }
        }
    }
    numeric.iter_mut().for_each(|v| *v /= m as f64);
    let mut bits = [0u64; 3];
    for (i, &count) in counts.iter().enumerate() {
        let twice = 2 * count as usize;
        let v = if twice > m {
            true
        } else if twice < m {
            false
        } else {
            get_bit(&previous.bits, i)
        };
        set_bit(&mut bits, i, v);
    }
    PixelFeature { numeric, bits }
}

pub fn total_cost(features: &[PixelFeature], labels: &[u32], centers: &[PixelFeature], gamma: f64) -> f64 {
    features
        .iter()
        .zip(labels)
        .map(|(f, &l)| mixed_distance(f, &centers[l as usize], gamma))
        .sum()
}

/// Alternate assignment and center updates from the given initial centers.
pub fn kprototypes_from(
    features: &[PixelFeature],
    initial: Vec<PixelFeature>,
    gamma: f64,
    max_iter: usize,
) -> ClusterModel {
    let k = initial.len();
    let mut centers = initial;
    let mut labels: Vec<Option<u32>> = vec![None; features.len()];
    let mut cost_history = Vec::new();
    let mut iterations = 0;

    for _ in 0..max_iter.max(1) {
        iterations += 1;
        let assigned: Vec<(u32, f64)> = features
            .par_iter()
            .zip(labels.par_iter())
            .map(|(f, cur)| nearest_center(f, &centers, gamma, *cur))
            .collect();
        let mut changed = false;
        for (slot, &(l, _)) in labels.iter_mut().zip(&assigned) {
            if *slot != Some(l) {
                changed = true;
                *slot = Some(l);
            }
        }
        let mut lab: Vec<u32> = labels.iter().map(|l| l.unwrap()).collect();
        let mut dist: Vec<f64> = assigned.iter().map(|a| a.1).collect();

        // Re-seed empty clusters from the currently worst-served point.
        let mut sizes = vec![0usize; k];
        lab.iter().for_each(|&l| sizes[l as usize] += 1);
        for j in 0..k {
            if sizes[j] > 0 {
                continue;
            }
            let far = (0..features.len())
                .filter(|&i| sizes[lab[i] as usize] > 1)
                .max_by(|&a, &b| dist[a].total_cmp(&dist[b]).then(b.cmp(&a)));
            let Some(far) = far else { break };
            sizes[lab[far] as usize] -= 1;
            sizes[j] = 1;
            lab[far] = j as u32;
            dist[far] = 0.0;
            centers[j] = features[far];
            labels[far] = Some(j as u32);
            changed = true;
        }

        let mut members = vec![Vec::new(); k];
        for (i, &l) in lab.iter().enumerate() {
            members[l as usize].push(i);
        }
        centers = centers
            .par_iter()
            .zip(members.par_iter())
            .map(|(c, m)| if m.is_empty() { *c } else { update_center(m, features, c) })
            .collect();
        cost_history.push(total_cost(features, &lab, &centers, gamma));
        if !changed {
            break;
        }
    }

    ClusterModel {
        centers,
        labels: labels.into_iter().map(|l| l.unwrap_or(0)).collect(),
        gamma,
        k,
        cost_history,
        iterations,
    }
}

/// Fit `k` prototypes. When there are more than `max_fit_samples` features,
/// centers are fitted on a seeded random subset and every feature is then
/// assigned to its nearest center.
pub fn kprototypes_fit(features: &[PixelFeature], cfg: &KPrototypesConfig) -> Result<ClusterModel> {
    let n = features.len();
    if cfg.k == 0 || cfg.k > n {
        return Err(Error::invalid(format!(
            "cluster count {} must be in 1..={n}",
            cfg.k
        )));
    }
    if !(cfg.gamma >= 0.0) {
        return Err(Error::invalid("gamma must be non-negative"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let subset: Option<Vec<usize>> = (n > cfg.max_fit_samples.max(cfg.k)).then(|| {
        let mut idx = sample(&mut rng, n, cfg.max_fit_samples.max(cfg.k)).into_vec();
        idx.sort_unstable();
        idx
    });
    let fit_set: Vec<PixelFeature> = match &subset {
        Some(idx) => idx.iter().map(|&i| features[i]).collect(),
        None => features.to_vec(),
    };
    let seeds = kmeanspp_seed(&fit_set, cfg.k, cfg.gamma, &mut rng);
    let initial = seeds.iter().map(|&i| fit_set[i]).collect();
    let mut model = kprototypes_from(&fit_set, initial, cfg.gamma, cfg.max_iter);

    if subset.is_some() {
        let centers = &model.centers;
        model.labels = features
            .par_iter()
            .map(|f| nearest_center(f, centers, cfg.gamma, None).0)
            .collect();
        // Keep every cluster populated after the full assignment.
        let mut sizes = model.cluster_sizes();
        for j in 0..cfg.k {
            if sizes[j] == 0 {
                let far = (0..n)
                    .filter(|&i| sizes[model.labels[i] as usize] > 1)
                    .max_by(|&a, &b| {
                        let da = mixed_distance(&features[a], &centers[model.labels[a] as usize], cfg.gamma);
                        let db = mixed_distance(&features[b], &centers[model.labels[b] as usize], cfg.gamma);
                        da.total_cmp(&db)
                    });
                if let Some(far) = far {
                    sizes[model.labels[far] as usize] -= 1;
                    model.labels[far] = j as u32;
                    sizes[j] = 1;
                }
            }
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn feat(x: f64, bits: u64) -> PixelFeature {
        PixelFeature {
            numeric: [x, 0.0, 0.0],
            bits: [bits, 0, 0],
        }
    }

    #[test]
    fn distance_examples() {
        let a = feat(0.1, 0b111);
        let b = feat(0.0, 0);
        assert_eq!(mixed_distance(&a, &a, 0.7), 0.0);
        assert!((mixed_distance(&a, &b, 0.0) - 0.01).abs() < 1e-15);
        assert!((mixed_distance(&a, &b, 0.5) - 1.51).abs() < 1e-12);
    }

    #[test]
    fn gamma_examples() {
        let constant = vec![feat(0.3, 1); 10];
        assert_eq!(default_gamma(&constant), 0.0);
        let f: Vec<PixelFeature> = (0..50)
            .map(|i| PixelFeature {
                numeric: [(i % 7) as f64, (i % 3) as f64 * 0.5, (i % 5) as f64 * 2.0],
                bits: [0; 3],
            })
            .collect();
        let g = default_gamma(&f);
        let scaled: Vec<PixelFeature> = f
            .iter()
            .map(|p| PixelFeature {
                numeric: p.numeric.map(|v| v * 3.0),
                bits: p.bits,
            })
            .collect();
        assert!((default_gamma(&scaled) - 3.0 * g).abs() < 1e-12);
        // Three attributes with stds 0.1, 0.2, 0.3.
        let two: Vec<PixelFeature> = [-1.0, 1.0]
            .iter()
            .map(|&s| PixelFeature {
                numeric: [0.1 * s, 0.2 * s, 0.3 * s],
                bits: [0; 3],
            })
            .collect();
        assert!((default_gamma(&two) - 0.00125).abs() < 1e-15);
    }

    #[test]
    fn single_cluster_closed_form() {
        let f = vec![feat(1.0, 0b011), feat(2.0, 0b001), feat(4.0, 0b111)];
        let m = kprototypes_fit(&f, &KPrototypesConfig::new(1, 0.3, 0)).unwrap();
        assert!((m.centers[0].numeric[0] - 7.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.centers[0].bits, [0b011, 0, 0]);
        assert!(m.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn too_many_clusters() {
        let f = vec![feat(1.0, 0); 3];
        assert!(matches!(
            kprototypes_fit(&f, &KPrototypesConfig::new(4, 0.1, 0)),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn duplicate_points_keep_clusters_populated() {
        let f = vec![feat(1.0, 0); 6];
        let m = kprototypes_fit(&f, &KPrototypesConfig::new(3, 0.1, 2)).unwrap();
        assert!(m.cluster_sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn subsampled_fit_assigns_everything() {
        let f: Vec<PixelFeature> = (0..400).map(|i| feat((i % 4) as f64 * 10.0, 0)).collect();
        let cfg = KPrototypesConfig {
            max_fit_samples: 50,
            ..KPrototypesConfig::new(4, 0.0, 11)
        };
        let m = kprototypes_fit(&f, &cfg).unwrap();
        assert_eq!(m.labels.len(), 400);
        assert!(m.cluster_sizes().iter().all(|&s| s == 100));
    }
}
