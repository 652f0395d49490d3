//! Dense multi-scale BRIEF descriptors: every pixel gets 160 comparison bits
//! drawn from three window sizes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::grid::{gaussian_blur, Grid};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BriefScale {
    pub bits: usize,
    /// Odd window side length in pixels.
    pub window: usize,
    /// Gaussian pre-smoothing; 0 disables it.
    pub sigma: f64,
}

pub const BRIEF_SCALES: [BriefScale; 3] = [
    BriefScale {
        bits: 48,
        window: 33,
        sigma: 4.0,
    },
    BriefScale {
        bits: 80,
        window: 17,
        sigma: 2.0,
    },
    BriefScale {
        bits: 32,
        window: 5,
        sigma: 0.0,
    },
];

pub const BRIEF_BITS: usize = 160;

/// 160 descriptor bits packed little-endian into three words.
pub type BriefBits = [u64; 3];

#[inline]
pub fn hamming(a: &BriefBits, b: &BriefBits) -> u32 {
    (a[0] ^ b[0]).count_ones() + (a[1] ^ b[1]).count_ones() + (a[2] ^ b[2]).count_ones()
}

#[inline]
pub fn get_bit(bits: &BriefBits, i: usize) -> bool {
    bits[i / 64] >> (i % 64) & 1 == 1
}

#[inline]
pub fn set_bit(bits: &mut BriefBits, i: usize, value: bool) {
    if value {
        bits[i / 64] |= 1 << (i % 64);
    } else {
        bits[i / 64] &= !(1 << (i % 64));
    }
}

pub type PointPair = ((i32, i32), (i32, i32));

/// Comparison pairs for each scale, uniform over the window, fixed by `seed`.
pub fn brief_pattern(seed: u64) -> Vec<Vec<PointPair>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    BRIEF_SCALES
        .iter()
        .map(|s| {
            let half = (s.window / 2) as i32;
            (0..s.bits)
                .map(|_| {
                    let mut p = || (rng.random_range(-half..=half), rng.random_range(-half..=half));
                    (p(), p())
                })
                .collect()
        })
        .collect()
}

/// Per-pixel descriptors with mirrored borders. A bit is set iff the smoothed
/// intensity at the first point is strictly below that at the second.
pub fn brief_features(channel: &Grid<f64>, seed: u64) -> Grid<BriefBits> {
    let pattern = brief_pattern(seed);
    let (w, h) = channel.dims();
    let smoothed: Vec<Grid<f64>> = BRIEF_SCALES
        .iter()
        .map(|s| gaussian_blur(channel, s.sigma))
        .collect();

    let mut out = vec![[0u64; 3]; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(row, line)| {
        for (col, bits) in line.iter_mut().enumerate() {
            let mut bit = 0;
            for (scale, pairs) in pattern.iter().enumerate() {
                let img = &smoothed[scale];
                let at = |(dx, dy): (i32, i32)| {
                    let r = crate::grid::mirror_index(row as isize + dy as isize, h);
                    let c = crate::grid::mirror_index(col as isize + dx as isize, w);
                    *img.get(r, c)
                };
                for &(a, b) in pairs {
                    if at(a) < at(b) {
                        set_bit(bits, bit, true);
                    }
                    bit += 1;
                }
            }
        }
    });
    Grid::from_vec(w, h, out).expect("descriptor grid matches input size")
}
