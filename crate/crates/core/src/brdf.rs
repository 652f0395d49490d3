//! Simplified Disney "principled" reflectance: a retro-reflective diffuse lobe
//! plus an anisotropic GGX specular lobe. Subsurface, clearcoat and sheen are
//! not modelled.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grid::Rgb;

/// Reflectance of an 18% gray card.
pub const GRAY_CARD_ALBEDO: f64 = 0.18;

/// Lower bound on both GGX roughness axes.
pub const ALPHA_FLOOR: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisneyParams {
    pub base_color: Rgb,
    pub metallic: bool,
    pub specular: f64,
    pub specular_tint: f64,
    pub roughness: f64,
    pub anisotropic: f64,
    pub aniso_axis: f64,
}

impl Default for DisneyParams {
    fn default() -> Self {
        DisneyParams {
            base_color: [0.5; 3],
            metallic: false,
            specular: 0.5,
            specular_tint: 0.0,
            roughness: 0.5,
            anisotropic: 0.0,
            aniso_axis: 0.0,
        }
    }
}

impl DisneyParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(format!("{name} = {v} outside [0, 1]")))
            }
        };
        for (i, c) in self.base_color.iter().enumerate() {
            unit(["baseColor.r", "baseColor.g", "baseColor.b"][i], *c)?;
        }
        unit("specular", self.specular)?;
        unit("specularTint", self.specular_tint)?;
        unit("roughness", self.roughness)?;
        unit("anisotropic", self.anisotropic)?;
        unit("anisoAxis", self.aniso_axis)
    }
}

/// Orthonormal shading basis; `b = n x t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShadingFrame {
    pub n: Vec3,
    pub t: Vec3,
    pub b: Vec3,
}

impl ShadingFrame {
    pub fn new(n: Vec3, t: Vec3) -> Result<Self> {
        if (n.norm() - 1.0).abs() > 1e-9 || (t.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::invalid("shading frame vectors must be unit length"));
        }
        if n.dot(&t).abs() > 1e-9 {
            return Err(Error::invalid("tangent is not perpendicular to the normal"));
        }
        Ok(Self::new_unchecked(n, t))
    }

    #[inline]
    pub fn new_unchecked(n: Vec3, t: Vec3) -> Self {
        ShadingFrame { n, t, b: n.cross(&t) }
    }

    /// Frame with the tangent azimuth given by `aniso_axis`.
    pub fn from_axis(n: Vec3, aniso_axis: f64) -> Result<Self> {
        let t = tangent_from_axis(&n, aniso_axis)?;
        Ok(Self::new_unchecked(n, t))
    }
}

/// Tangent perpendicular to `n` whose azimuth is `aniso_axis * 2 pi`.
pub fn tangent_from_axis(n: &Vec3, aniso_axis: f64) -> Result<Vec3> {
    if (n.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("normal must be unit length"));
    }
    if !(n.z > 0.0) {
        return Err(Error::invalid(format!(
            "normal must face the camera (n.z > 0), got n.z = {}",
            n.z
        )));
    }
    let phi = aniso_axis * 2.0 * PI;
    Ok(tangent_from_azimuth(n, phi.cos(), phi.sin()))
}

/// Closed-form tangent for a precomputed azimuth; `n.z` must be positive.
#[inline]
pub fn tangent_from_azimuth(n: &Vec3, cos_phi: f64, sin_phi: f64) -> Vec3 {
    let a = n.x * cos_phi + n.y * sin_phi;
    let q = a.hypot(n.z);
    let sin_t = n.z / q;
    let cos_t = -a / q;
    Vec3::new(sin_t * cos_phi, sin_t * sin_phi, cos_t)
}

pub fn lambertian_reference() -> f64 {
    GRAY_CARD_ALBEDO / PI
}

#[inline]
fn pow5(x: f64) -> f64 {
    let x2 = x * x;
    x2 * x2 * x
}

/// Direction-independent terms of the model, computed once per parameter set.
#[derive(Debug, Clone, Copy)]
pub struct DisneyLobe {
    diffuse: Rgb,
    c_spec: Rgb,
    roughness: f64,
    alpha_x: f64,
    alpha_y: f64,
}

impl DisneyLobe {
    pub fn new(p: &DisneyParams) -> Self {
        let metallic = if p.metallic { 1.0 } else { 0.0 };
        let bc = p.base_color;
        let lum = 0.3 * bc[0] + 0.6 * bc[1] + 0.1 * bc[2];
        let tint = if lum > 1e-6 {
            [bc[0] / lum, bc[1] / lum, bc[2] / lum]
        } else {
            [1.0; 3]
        };
        let mut diffuse = [0.0; 3];
        let mut c_spec = [0.0; 3];
        for c in 0..3 {
            diffuse[c] = bc[c] * (1.0 - metallic) / PI;
            let nonmetal = 0.08 * p.specular * (tint[c] * p.specular_tint + (1.0 - p.specular_tint));
            c_spec[c] = nonmetal * (1.0 - metallic) + bc[c] * metallic;
        }
        let aspect = (1.0 - 0.9 * p.anisotropic).sqrt();
        let r2 = p.roughness * p.roughness;
        DisneyLobe {
            diffuse,
            c_spec,
            roughness: p.roughness,
            alpha_x: (r2 / aspect).max(ALPHA_FLOOR),
            alpha_y: (r2 * aspect).max(ALPHA_FLOOR),
        }
    }

    /// Diffuse and specular reflectance for unit `l`, `v`; zero below the horizon.
    #[inline]
    pub fn eval_parts(&self, frame: &ShadingFrame, l: &Vec3, v: &Vec3) -> (Rgb, Rgb) {
        let n = &frame.n;
        let ln = l.dot(n);
        let vn = v.dot(n);
        if ln <= 0.0 || vn <= 0.0 {
            return ([0.0; 3], [0.0; 3]);
        }
        let h = (l + v).normalize();
        let lh = l.dot(&h);

        let fd90 = 0.5 + 2.0 * lh * lh * self.roughness;
        let fd = (1.0 + (fd90 - 1.0) * pow5(1.0 - ln)) * (1.0 + (fd90 - 1.0) * pow5(1.0 - vn));

        let (ax, ay) = (self.alpha_x, self.alpha_y);
        let ht = h.dot(&frame.t) / ax;
        let hb = h.dot(&frame.b) / ay;
        let hn = h.dot(n);
        let denom = ht * ht + hb * hb + hn * hn;
        let d = 1.0 / (PI * ax * ay * denom * denom);

        let lambda = |w: &Vec3, wn: f64| {
            let wt = ax * w.dot(&frame.t);
            let wb = ay * w.dot(&frame.b);
            wn + (wt * wt + wb * wb + wn * wn).sqrt()
        };
        let g = 1.0 / (lambda(l, ln) * lambda(v, vn));

        let schlick = pow5(1.0 - lh);
        let mut diff = [0.0; 3];
        let mut spec = [0.0; 3];
        for c in 0..3 {
            diff[c] = self.diffuse[c] * fd;
            let f = (1.0 - schlick) * self.c_spec[c] + schlick;
            spec[c] = d * f * g;
        }
        (diff, spec)
    }

    #[inline]
    pub fn eval(&self, frame: &ShadingFrame, l: &Vec3, v: &Vec3) -> Rgb {
        let (d, s) = self.eval_parts(frame, l, v);
        [d[0] + s[0], d[1] + s[1], d[2] + s[2]]
    }
}

/// Reflectance in sr^-1 for light direction `l` and view direction `v`.
pub fn eval_disney(params: &DisneyParams, frame: &ShadingFrame, l: &Vec3, v: &Vec3) -> Rgb {
    DisneyLobe::new(params).eval(frame, l, v)
}
