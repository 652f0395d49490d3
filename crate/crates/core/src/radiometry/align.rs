//! Translation alignment of exposure stacks with median threshold bitmaps.

use crate::error::{Error, Result};
use crate::grid::Grid;

/// Pixels within this many levels of the median are ignored.
pub const EXCLUSION_BAND: u8 = 4;

/// Coarsest pyramid level keeps at least this many pixels on its short side.
const MIN_LEVEL_SIZE: usize = 16;

/// Pairs with a smaller unclipped fraction in common are left unshifted.
const MIN_USABLE_FRACTION: f64 = 0.1;

/// Integer luminance used for thresholding.
pub fn mtb_gray(img: &Grid<[u8; 3]>) -> Grid<u8> {
    img.map(|p| ((54 * p[0] as u32 + 183 * p[1] as u32 + 19 * p[2] as u32) >> 8) as u8)
}

/// Value below which a fraction `p` of the pixels lie.
fn percentile(img: &Grid<u8>, p: f64) -> u8 {
    let mut hist = [0usize; 256];
    img.iter().for_each(|&v| hist[v as usize] += 1);
    let rank = ((img.len() as f64 * p) as usize).min(img.len().saturating_sub(1));
    let mut acc = 0;
    for (v, &count) in hist.iter().enumerate() {
        acc += count;
        if acc > rank {
            return v as u8;
        }
    }
    255
}

/// Fractions of pixels clipped dark and bright.
fn clipped(img: &Grid<u8>) -> (f64, f64) {
    let n = img.len().max(1) as f64;
    let lo = img.iter().filter(|&&v| v <= EXCLUSION_BAND).count() as f64 / n;
    let hi = img.iter().filter(|&&v| v >= 255 - EXCLUSION_BAND).count() as f64 / n;
    (lo, hi)
}

/// Shared threshold percentile for a pair: the middle of the range where
/// neither image is clipped, which is the median when nothing is clipped.
fn pair_percentile(a: &Grid<u8>, b: &Grid<u8>) -> Option<f64> {
    let (lo_a, hi_a) = clipped(a);
    let (lo_b, hi_b) = clipped(b);
    let lo = lo_a.max(lo_b);
    let hi = 1.0 - hi_a.max(hi_b);
    (hi - lo >= MIN_USABLE_FRACTION).then_some(0.5 * (lo + hi))
}

fn halve(img: &Grid<u8>) -> Grid<u8> {
    let (w, h) = (img.width() / 2, img.height() / 2);
    Grid::from_fn(w, h, |r, c| {
        let s = *img.get(2 * r, 2 * c) as u32
            + *img.get(2 * r, 2 * c + 1) as u32
            + *img.get(2 * r + 1, 2 * c) as u32
            + *img.get(2 * r + 1, 2 * c + 1) as u32;
        ((s + 2) / 4) as u8
    })
}

/// Threshold bitmap and exclusion mask of one pyramid level.
#[derive(Debug, Clone)]
pub struct Bitmaps {
    width: usize,
    height: usize,
    threshold: Vec<bool>,
    keep: Vec<bool>,
}

impl Bitmaps {
    /// Median threshold bitmap.
    pub fn new(img: &Grid<u8>) -> Self {
        Self::at_percentile(img, 0.5)
    }

    pub fn at_percentile(img: &Grid<u8>, p: f64) -> Self {
        let m = percentile(img, p);
        Bitmaps {
            width: img.width(),
            height: img.height(),
            threshold: img.iter().map(|&v| v > m).collect(),
            keep: img.iter().map(|&v| v.abs_diff(m) > EXCLUSION_BAND).collect(),
        }
    }

    /// Fraction of disagreeing bits when `other` is translated by `(dx, dy)`.
    pub fn mismatch(&self, other: &Bitmaps, dx: i32, dy: i32) -> f64 {
        let (w, h) = (self.width as i32, self.height as i32);
        let mut errors = 0usize;
        let mut valid = 0usize;
        for y in 0..h {
            let sy = y - dy;
            if sy < 0 || sy >= h {
                continue;
            }
            for x in 0..w {
                let sx = x - dx;
                if sx < 0 || sx >= w {
                    continue;
                }
                let a = (y * w + x) as usize;
                let b = (sy * w + sx) as usize;
                if self.keep[a] && other.keep[b] {
                    valid += 1;
                    if self.threshold[a] != other.threshold[b] {
                        errors += 1;
                    }
                }
            }
        }
        if valid == 0 {
            1.0
        } else {
            errors as f64 / valid as f64
        }
    }
}

fn best_shift(
    reference: &Bitmaps,
    moving: &Bitmaps,
    candidates: impl Iterator<Item = (i32, i32)>,
) -> (i32, i32) {
    let mut best = (0, 0);
    let mut best_cost = f64::INFINITY;
    for (dx, dy) in candidates {
        let cost = reference.mismatch(moving, dx, dy);
        // Strict improvement keeps the earliest (smallest-magnitude) candidate on ties.
        if cost < best_cost {
            best_cost = cost;
            best = (dx, dy);
        }
    }
    best
}

fn by_magnitude(radius: i32) -> Vec<(i32, i32)> {
    let mut v: Vec<(i32, i32)> = (-radius..=radius)
        .flat_map(|dy| (-radius..=radius).map(move |dx| (dx, dy)))
        .collect();
    v.sort_by_key(|&(dx, dy)| (dx.abs() + dy.abs(), dy, dx));
    v
}

/// Translation `(dx, dy)` that aligns `moving` onto `reference`: the aligned
/// image is `moving(x - dx, y - dy)`. Pairs too clipped to compare give `(0, 0)`.
pub fn mtb_shift(reference: &Grid<u8>, moving: &Grid<u8>, max_shift: u32) -> Result<(i32, i32)> {
    if !reference.same_dims(moving) {
        return Err(Error::invalid("exposure stack images differ in size"));
    }
    let Some(p) = pair_percentile(reference, moving) else {
        return Ok((0, 0));
    };
    let max_shift = max_shift as i32;
    let mut levels = 0;
    let mut size = reference.width().min(reference.height());
    while (1 << levels) < max_shift.max(1) && size / 2 >= MIN_LEVEL_SIZE {
        levels += 1;
        size /= 2;
    }
    let mut ref_pyr = vec![reference.clone()];
    let mut mov_pyr = vec![moving.clone()];
    for _ in 0..levels {
        ref_pyr.push(halve(ref_pyr.last().unwrap()));
        mov_pyr.push(halve(mov_pyr.last().unwrap()));
    }

    let coarse_radius = (max_shift + (1 << levels) - 1) >> levels;
    let mut shift = (0, 0);
    for level in (0..=levels).rev() {
        let rb = Bitmaps::at_percentile(&ref_pyr[level], p);
        let mb = Bitmaps::at_percentile(&mov_pyr[level], p);
        let limit = (max_shift + (1 << level) - 1) >> level;
        let radius = if level == levels { coarse_radius } else { 1 };
        let base = shift;
        let candidates = by_magnitude(radius)
            .into_iter()
            .map(move |(dx, dy)| (base.0 + dx, base.1 + dy))
            .filter(move |&(dx, dy)| dx.abs() <= limit && dy.abs() <= limit);
        shift = best_shift(&rb, &mb, candidates);
        if level > 0 {
            shift = (shift.0 * 2, shift.1 * 2);
        }
    }
    Ok((
        shift.0.clamp(-max_shift, max_shift),
        shift.1.clamp(-max_shift, max_shift),
    ))
}

/// Per-image offsets aligning every image of the stack onto the first. Images
/// are chained in order of brightness so that each pair compared has similar
/// exposure.
pub fn mtb_align(images: &[Grid<[u8; 3]>], max_shift: u32) -> Result<Vec<(i32, i32)>> {
    if images.is_empty() {
        return Err(Error::invalid("empty exposure stack"));
    }
    let grays: Vec<Grid<u8>> = images.iter().map(mtb_gray).collect();
    let mut order: Vec<usize> = (0..grays.len()).collect();
    let brightness: Vec<u64> = grays.iter().map(|g| g.iter().map(|&v| v as u64).sum()).collect();
    order.sort_by_key(|&i| (brightness[i], i));
    let mut offsets = vec![(0, 0); grays.len()];
    for pair in order.windows(2) {
        let (prev, cur) = (pair[0], pair[1]);
        let (dx, dy) = mtb_shift(&grays[prev], &grays[cur], max_shift)?;
        offsets[cur] = (offsets[prev].0 + dx, offsets[prev].1 + dy);
    }
    let base = offsets[0];
    Ok(offsets.into_iter().map(|(dx, dy)| (dx - base.0, dy - base.1)).collect())
}

/// Translate an image by `(dx, dy)`, replicating edge pixels into the gap.
pub fn translate<T: Clone>(img: &Grid<T>, dx: i32, dy: i32) -> Grid<T> {
    let (w, h) = (img.width() as i32, img.height() as i32);
    Grid::from_fn(img.width(), img.height(), |r, c| {
        let sr = (r as i32 - dy).clamp(0, h - 1);
        let sc = (c as i32 - dx).clamp(0, w - 1);
        img.get(sr as usize, sc as usize).clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(w: usize, h: usize) -> Grid<u8> {
        Grid::from_fn(w, h, |r, c| {
            let x = c as f64 / 9.0;
            let y = r as f64 / 7.0;
            (127.0 + 60.0 * (x.sin() + (y * 1.3).cos()) + 30.0 * ((x + y) * 0.7).sin()) as u8
        })
    }

    #[test]
    fn identity_shift() {
        let img = pattern(128, 96);
        assert_eq!(mtb_shift(&img, &img, 16).unwrap(), (0, 0));
    }

    #[test]
    fn recovers_constructed_shift() {
        let img = pattern(160, 128);
        let moved = translate(&img, 3, 0);
        assert_eq!(mtb_shift(&img, &moved, 8).unwrap(), (-3, 0));
    }

    #[test]
    fn stack_reference_is_zero() {
        let img = pattern(64, 64);
        let rgb = img.map(|&v| [v, v, v]);
        let moved = translate(&rgb, -2, 1);
        let offs = mtb_align(&[rgb.clone(), moved], 4).unwrap();
        assert_eq!(offs, vec![(0, 0), (2, -1)]);
    }

    #[test]
    fn mostly_saturated_exposure_is_not_shifted() {
        let img = pattern(128, 96);
        let bright = img.map(|&v| (v as u32 * 4).min(255) as u8);
        let dark = img.map(|&v| v / 8);
        assert_eq!(mtb_shift(&dark, &bright, 16).unwrap(), (0, 0));
        let rgb = |g: &Grid<u8>| g.map(|&v| [v, v, v]);
        let offs = mtb_align(&[rgb(&dark), rgb(&img), rgb(&bright)], 16).unwrap();
        assert_eq!(offs, vec![(0, 0); 3]);
    }

    #[test]
    fn stack_chain_recovers_shift_of_bright_image() {
        let img = pattern(160, 128);
        let bright = translate(&img.map(|&v| (v as u32 * 3 / 2).min(255) as u8), 5, -4);
        let rgb = |g: &Grid<u8>| g.map(|&v| [v, v, v]);
        let offs = mtb_align(&[rgb(&img), rgb(&bright)], 16).unwrap();
        assert_eq!(offs, vec![(0, 0), (-5, 4)]);
    }

    #[test]
    fn mismatched_sizes_rejected() {
        assert!(mtb_shift(&pattern(32, 32), &pattern(32, 30), 4).is_err());
    }
}
