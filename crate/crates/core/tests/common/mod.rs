#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;

pub type V3 = [f64; 3];

pub fn dot(a: V3, b: V3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: V3, b: V3) -> V3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

pub fn unit(a: V3) -> V3 {
    let n = dot(a, a).sqrt();
    [a[0] / n, a[1] / n, a[2] / n]
}

/// Straight transcription of the reflectance formulas, written without the
/// library so that it can serve as a reference.
#[allow(clippy::too_many_arguments)]
pub fn disney_reference(
    base: V3,
    metallic: f64,
    specular: f64,
    specular_tint: f64,
    roughness: f64,
    anisotropic: f64,
    n: V3,
    t: V3,
    l: V3,
    v: V3,
) -> (V3, V3) {
    let b = cross(n, t);
    let h = unit([l[0] + v[0], l[1] + v[1], l[2] + v[2]]);
    let (ln, vn, lh) = (dot(l, n), dot(v, n), dot(l, h));
    let fd90 = 0.5 + 2.0 * lh.powi(2) * roughness;
    let fd = (1.0 + (fd90 - 1.0) * (1.0 - ln).powi(5)) * (1.0 + (fd90 - 1.0) * (1.0 - vn).powi(5));
    let lum = 0.3 * base[0] + 0.6 * base[1] + 0.1 * base[2];
    let ax = f64::max(0.001, roughness.powi(2) / (1.0 - 0.9 * anisotropic).sqrt());
    let ay = f64::max(0.001, roughness.powi(2) * (1.0 - 0.9 * anisotropic).sqrt());
    let ds = 1.0
        / (PI * ax * ay * ((dot(h, t) / ax).powi(2) + (dot(h, b) / ay).powi(2) + dot(h, n).powi(2)).powi(2));
    let gs = 1.0 / (ln + ((ax * dot(l, t)).powi(2) + (ay * dot(l, b)).powi(2) + ln.powi(2)).sqrt())
        / (vn + ((ax * dot(v, t)).powi(2) + (ay * dot(v, b)).powi(2) + vn.powi(2)).sqrt());
    let mut diff = [0.0; 3];
    let mut spec = [0.0; 3];
    for c in 0..3 {
        diff[c] = base[c] * (1.0 - metallic) / PI * fd;
        let tint = base[c] / lum;
        let nonmetal = 0.08 * specular * (tint * specular_tint + (1.0 - specular_tint));
        let cspec = nonmetal * (1.0 - metallic) + base[c] * metallic;
        let fs = (1.0 - (1.0 - lh).powi(5)) * cspec + (1.0 - lh).powi(5);
        spec[c] = ds * fs * gs;
    }
    (diff, spec)
}

/// Uniform direction on the hemisphere around `n`, at least `min_cos` above the horizon.
pub fn hemisphere_dir<R: Rng>(rng: &mut R, n: V3, min_cos: f64) -> V3 {
    loop {
        let d = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let len2 = dot(d, d);
        if !(1e-6..=1.0).contains(&len2) {
            continue;
        }
        let d = unit(d);
        if dot(d, n) > min_cos {
            return d;
        }
    }
}

/// Unit vector orthogonal to `n`.
pub fn any_tangent<R: Rng>(rng: &mut R, n: V3) -> V3 {
    loop {
        let a = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let c = cross(n, a);
        if dot(c, c) > 1e-4 {
            return unit(c);
        }
    }
}

/// Standard normal sample by the Box-Muller transform.
pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Point-light radiance of a Lambertian plane at pixel `(row, col)`, from
/// first principles.
pub fn lambert_radiance(albedo: f64, e: f64, light: V3, pitch: f64, w: usize, h: usize, row: usize, col: usize) -> f64 {
    let x = (col as f64 - (w as f64 - 1.0) / 2.0) * pitch;
    let y = ((h as f64 - 1.0) / 2.0 - row as f64) * pitch;
    let d = [light[0] - x, light[1] - y, light[2]];
    let r2 = dot(d, d);
    let cos = d[2] / r2.sqrt();
    albedo / PI * e * cos / r2
}

/// Smooth random 8-bit texture.
pub fn texture<R: Rng>(rng: &mut R, w: usize, h: usize) -> Vec<u8> {
    let waves: Vec<(f64, f64, f64, f64)> = (0..24)
        .map(|_| {
            (
                rng.random_range(0.1..0.9),
                rng.random_range(0.0..PI),
                rng.random_range(0.0..2.0 * PI),
                rng.random_range(0.5..1.0),
            )
        })
        .collect();
    let norm: f64 = waves.iter().map(|w| w.3).sum();
    (0..w * h)
        .map(|i| {
            let (r, c) = ((i / w) as f64, (i % w) as f64);
            let s: f64 = waves
                .iter()
                .map(|&(f, th, ph, a)| a * (f * (c * th.cos() + r * th.sin()) + ph).sin())
                .sum();
            (127.5 + 120.0 * s / norm).round().clamp(0.0, 255.0) as u8
        })
        .collect()
}
