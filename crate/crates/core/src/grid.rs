//! Dense row-major 2-D grids and the handful of filters the pipeline needs.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub type Rgb = [f64; 3];

/// Luma weights used whenever an RGB quantity is reduced to grayscale.
pub const LUMA: Rgb = [0.299, 0.587, 0.114];

#[inline]
pub fn luma(c: Rgb) -> f64 {
    LUMA[0] * c[0] + LUMA[1] * c[1] + LUMA[2] * c[2]
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Grid {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::invalid(format!(
                "grid data has {} elements, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        Ok(Grid {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(row, col));
            }
        }
        Grid {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn same_dims<U>(&self, other: &Grid<U>) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> &T {
        &self.data[row * self.width + col]
    }

    #[inline]
    pub fn get_mut(&mut self, row: usize, col: usize) -> &mut T {
        &mut self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: T) {
        self.data[row * self.width + col] = value;
    }

    /// Row and column of a flat index.
    #[inline]
    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.width, index % self.width)
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.data.iter()
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }
}

impl Grid<f64> {
    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn scale(&self, factor: f64) -> Grid<f64> {
        self.map(|v| v * factor)
    }
}

impl Grid<Rgb> {
    pub fn to_gray(&self) -> Grid<f64> {
        self.map(|c| luma(*c))
    }

    pub fn channel(&self, c: usize) -> Grid<f64> {
        self.map(|v| v[c])
    }

    pub fn from_channels(channels: [&Grid<f64>; 3]) -> Grid<Rgb> {
        let [r, g, b] = channels;
        Grid {
            width: r.width,
            height: r.height,
            data: r
                .data
                .iter()
                .zip(&g.data)
                .zip(&b.data)
                .map(|((&r, &g), &b)| [r, g, b])
                .collect(),
        }
    }
}

/// Symmetric border extension: index -1 maps to 0, `len` maps to `len - 1`.
#[inline]
pub fn mirror_index(i: isize, len: usize) -> usize {
    let n = len as isize;
    if n == 1 {
        return 0;
    }
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (4.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|x| (-(x * x) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with mirrored borders. `sigma == 0` is the identity.
pub fn gaussian_blur(src: &Grid<f64>, sigma: f64) -> Grid<f64> {
    if sigma <= 0.0 {
        return src.clone();
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h) = src.dims();

    let mut tmp = vec![0.0; w * h];
    tmp.par_chunks_mut(w).enumerate().for_each(|(row, out)| {
        let line = &src.data[row * w..(row + 1) * w];
        for (col, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let c = mirror_index(col as isize + ki as isize - radius, w);
                acc += kv * line[c];
            }
            *o = acc;
        }
    });

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(row, o)| {
        for (ki, kv) in kernel.iter().enumerate() {
            let r = mirror_index(row as isize + ki as isize - radius, h);
            let line = &tmp[r * w..(r + 1) * w];
            for (dst, v) in o.iter_mut().zip(line) {
                *dst += kv * v;
            }
        }
    });

    Grid {
        width: w,
        height: h,
        data: out,
    }
}

pub fn gaussian_blur_rgb(src: &Grid<Rgb>, sigma: f64) -> Grid<Rgb> {
    if sigma <= 0.0 {
        return src.clone();
    }
    let r = gaussian_blur(&src.channel(0), sigma);
    let g = gaussian_blur(&src.channel(1), sigma);
    let b = gaussian_blur(&src.channel(2), sigma);
    Grid::from_channels([&r, &g, &b])
}

/// Sobel derivatives in pixel units, normalized by 1/8, with mirrored borders.
///
/// Returns `(d/dcol, d/drow)`.
pub fn sobel(src: &Grid<f64>) -> (Grid<f64>, Grid<f64>) {
    let (w, h) = src.dims();
    let at = |r: isize, c: isize| *src.get(mirror_index(r, h), mirror_index(c, w));
    let mut gx = Grid::filled(w, h, 0.0);
    let mut gy = Grid::filled(w, h, 0.0);
    for row in 0..h as isize {
        for col in 0..w as isize {
            let dx = (at(row - 1, col + 1) + 2.0 * at(row, col + 1) + at(row + 1, col + 1))
                - (at(row - 1, col - 1) + 2.0 * at(row, col - 1) + at(row + 1, col - 1));
            let dy = (at(row + 1, col - 1) + 2.0 * at(row + 1, col) + at(row + 1, col + 1))
                - (at(row - 1, col - 1) + 2.0 * at(row - 1, col) + at(row - 1, col + 1));
            gx.set(row as usize, col as usize, dx / 8.0);
            gy.set(row as usize, col as usize, dy / 8.0);
        }
    }
    (gx, gy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mirror_index_reflects() {
        assert_eq!(mirror_index(-1, 5), 0);
        assert_eq!(mirror_index(-2, 5), 1);
        assert_eq!(mirror_index(5, 5), 4);
        assert_eq!(mirror_index(6, 5), 3);
        assert_eq!(mirror_index(12, 5), 2);
        assert_eq!(mirror_index(-7, 1), 0);
    }

    #[test]
    fn blur_preserves_constants() {
        let g = Grid::filled(9, 7, 0.25);
        let b = gaussian_blur(&g, 3.0);
        assert!(b.iter().all(|v| (v - 0.25).abs() < 1e-14));
    }

    #[test]
    fn blur_zero_sigma_is_identity() {
        let g = Grid::from_fn(6, 5, |r, c| (r * 7 + c) as f64);
        assert_eq!(gaussian_blur(&g, 0.0), g);
    }

    #[test]
    fn blur_preserves_mean_with_mirrored_borders() {
        let g = Grid::from_fn(16, 12, |r, c| ((r * 31 + c * 17) % 11) as f64);
        let b = gaussian_blur(&g, 1.5);
        assert!((g.mean() - b.mean()).abs() < 0.05);
    }

    #[test]
    fn sobel_reproduces_linear_slope() {
        let g = Grid::from_fn(8, 8, |r, c| 0.3 * c as f64 - 0.7 * r as f64);
        let (gx, gy) = sobel(&g);
        for r in 1..7 {
            for c in 1..7 {
                assert!((gx.get(r, c) - 0.3).abs() < 1e-12);
                assert!((gy.get(r, c) + 0.7).abs() < 1e-12);
            }
        }
    }
}
