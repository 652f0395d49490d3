//! Normalized capture frame: the sample lies in the z = 0 plane, the camera
//! sits at (0, 0, 1) and one pixel step is `pixel_pitch` units along x or y.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid;

pub type Vec3 = Vector3<f64>;

/// Diagonal of 135-format film in millimetres.
pub const D35_MM: f64 = 43.3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraSpec {
    /// 35 mm-equivalent focal length in millimetres.
    pub f35_mm: f64,
    pub image_width: usize,
    pub image_height: usize,
}

impl CameraSpec {
    pub fn new(f35_mm: f64, image_width: usize, image_height: usize) -> Result<Self> {
        let cam = CameraSpec {
            f35_mm,
            image_width,
            image_height,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f35_mm > 0.0) || !self.f35_mm.is_finite() {
            return Err(Error::invalid(format!(
                "f35 must be positive, got {}",
                self.f35_mm
            )));
        }
        if self.image_width < 2 || self.image_height < 2 {
            return Err(Error::invalid(format!(
                "image must be at least 2x2, got {}x{}",
                self.image_width, self.image_height
            )));
        }
        Ok(())
    }

    pub fn diagonal_px(&self) -> f64 {
        (self.image_width as f64).hypot(self.image_height as f64)
    }
}

/// Diagonal half angle of view in radians.
pub fn half_aov(camera: &CameraSpec) -> Result<f64> {
    if !(camera.f35_mm > 0.0) {
        return Err(Error::invalid(format!(
            "f35 must be positive, got {}",
            camera.f35_mm
        )));
    }
    Ok((D35_MM / (2.0 * camera.f35_mm)).atan())
}

/// Normalized-frame displacement of one pixel step at unit camera height.
pub fn pixel_pitch(camera: &CameraSpec) -> Result<f64> {
    camera.validate()?;
    Ok(D35_MM / (camera.f35_mm * camera.diagonal_px()))
}

/// Maps pixel indices to points on the z = 0 plane and back.
///
/// Pixel centers sit at half-integer offsets around the image center; +col is
/// +x and +row is -y so that images render upright.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelFrame {
    pub width: usize,
    pub height: usize,
    pub pitch: f64,
}

impl PixelFrame {
    pub fn new(width: usize, height: usize, pitch: f64) -> Self {
        PixelFrame {
            width,
            height,
            pitch,
        }
    }

    #[inline]
    pub fn world(&self, row: f64, col: f64) -> Vec3 {
        let cx = (self.width as f64 - 1.0) / 2.0;
        let cy = (self.height as f64 - 1.0) / 2.0;
        Vec3::new((col - cx) * self.pitch, (cy - row) * self.pitch, 0.0)
    }

    /// Fractional `(row, col)` of a point on the plane.
    #[inline]
    pub fn pixel(&self, p: &Vec3) -> (f64, f64) {
        let cx = (self.width as f64 - 1.0) / 2.0;
        let cy = (self.height as f64 - 1.0) / 2.0;
        (cy - p.y / self.pitch, p.x / self.pitch + cx)
    }
}

pub fn pixel_to_world(pixel: (usize, usize), camera: &CameraSpec, pitch: f64) -> Result<Vec3> {
    let (row, col) = pixel;
    if row >= camera.image_height || col >= camera.image_width {
        return Err(Error::invalid(format!(
            "pixel ({row}, {col}) outside {}x{} image",
            camera.image_width, camera.image_height
        )));
    }
    if !(pitch > 0.0) {
        return Err(Error::invalid("pixel pitch must be positive"));
    }
    Ok(PixelFrame::new(camera.image_width, camera.image_height, pitch).world(row as f64, col as f64))
}

/// Fraction of pixels (by count) whose weighted centroid locates the light.
pub const LIGHT_PIXEL_FRACTION: f64 = 0.10;

/// Light position from a point-lit image: intensity-weighted centroid of the
/// brightest 10% of pixels, lifted to z = 1.
pub fn estimate_light_position(image: &Grid<f64>, pitch: f64) -> Result<Vec3> {
    let n = image.len();
    if n == 0 {
        return Err(Error::degenerate("empty image"));
    }
    let first = image.as_slice()[0];
    if image.iter().all(|&v| v == first) {
        return Err(Error::degenerate(
            "constant image has no highlight to locate the light",
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| image.as_slice()[b].total_cmp(&image.as_slice()[a]));
    let take = ((n as f64 * LIGHT_PIXEL_FRACTION).ceil() as usize).clamp(1, n);

    let frame = PixelFrame::new(image.width(), image.height(), pitch);
    let mut sum_w = 0.0;
    let mut acc = Vec3::zeros();
    for &idx in &order[..take] {
        let w = image.as_slice()[idx].max(0.0);
        let (row, col) = image.coords(idx);
        acc += frame.world(row as f64, col as f64) * w;
        sum_w += w;
    }
    if !(sum_w > 0.0) {
        return Err(Error::degenerate("no positive intensity in brightest pixels"));
    }
    let c = acc / sum_w;
    Ok(Vec3::new(c.x, c.y, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneGeometry {
    pub camera_pos: Vec3,
    pub light_pos: Vec3,
    pub pixel_pitch: f64,
    /// Physical camera-to-plane distance in metres.
    pub r_perp: f64,
    /// Point light intensity in the normalized frame.
    pub light_intensity: f64,
}

impl SceneGeometry {
    pub fn new(light_pos: Vec3, pixel_pitch: f64, r_perp: f64, light_intensity: f64) -> Result<Self> {
        let g = SceneGeometry {
            camera_pos: Vec3::new(0.0, 0.0, 1.0),
            light_pos,
            pixel_pitch,
            r_perp,
            light_intensity,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pixel_pitch > 0.0) {
            return Err(Error::invalid("pixel pitch must be positive"));
        }
        if (self.light_pos.z - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "light must sit at z = 1, got z = {}",
                self.light_pos.z
            )));
        }
        if !(self.r_perp > 0.0) {
            return Err(Error::invalid("r_perp must be positive"));
        }
        if !(self.light_intensity >= 0.0) {
            return Err(Error::invalid("light intensity must be non-negative"));
        }
        Ok(())
    }

    pub fn with_intensity(&self, light_intensity: f64) -> Self {
        SceneGeometry {
            light_intensity,
            ..*self
        }
    }

    pub fn frame(&self, width: usize, height: usize) -> PixelFrame {
        PixelFrame::new(width, height, self.pixel_pitch)
    }
}

/// Per-point lighting and viewing quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Incident {
    /// Unit vector toward the light.
    pub wi: Vec3,
    /// Unit vector toward the camera.
    pub wo: Vec3,
    /// Distance to the light.
    pub r: f64,
    /// `n . wi`, unclamped.
    pub cos_theta: f64,
}

pub fn incident_geometry(p: &Vec3, geom: &SceneGeometry, n: &Vec3) -> Result<Incident> {
    let to_light = geom.light_pos - p;
    let r = to_light.norm();
    if !(r > 1e-12) {
        return Err(Error::degenerate("surface point coincides with the light"));
    }
    let to_cam = geom.camera_pos - p;
    let rc = to_cam.norm();
    if !(rc > 1e-12) {
        return Err(Error::degenerate("surface point coincides with the camera"));
    }
    let wi = to_light / r;
    Ok(Incident {
        wi,
        wo: to_cam / rc,
        r,
        cos_theta: n.dot(&wi),
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;

    fn cam(f35: f64, w: usize, h: usize) -> CameraSpec {
        CameraSpec::new(f35, w, h).unwrap()
    }

    #[test]
    fn half_aov_values() {
        assert!((half_aov(&cam(43.3, 100, 100)).unwrap() - 0.5f64.atan()).abs() < 1e-12);
        assert!((half_aov(&cam(21.65, 100, 100)).unwrap() - FRAC_PI_4).abs() < 1e-12);
        assert!((half_aov(&cam(26.0, 100, 100)).unwrap() - 0.694_359_846_7).abs() < 1e-9);
    }

    #[test]
    fn half_aov_rejects_bad_focal_length() {
        let bad = CameraSpec {
            f35_mm: 0.0,
            image_width: 10,
            image_height: 10,
        };
        assert!(matches!(half_aov(&bad), Err(Error::InvalidInput(_))));
        assert!(CameraSpec::new(-3.0, 10, 10).is_err());
        assert!(CameraSpec::new(30.0, 1, 10).is_err());
    }

    #[test]
    fn pitch_values() {
        let d = pixel_pitch(&cam(43.3, 1000, 1000)).unwrap();
        assert!((d - 1.0 / (1000.0 * 2f64.sqrt())).abs() < 1e-12);
        let d2 = pixel_pitch(&cam(86.6, 1000, 1000)).unwrap();
        assert!((d2 - d / 2.0).abs() < 1e-15);
    }

    #[test]
    fn pixel_to_world_convention() {
        let c = cam(30.0, 800, 600);
        let p = pixel_to_world((0, 0), &c, 1e-3).unwrap();
        assert!((p.x + 0.3995).abs() < 1e-12 && (p.y - 0.2995).abs() < 1e-12 && p.z == 0.0);
        let odd = cam(30.0, 7, 5);
        assert_eq!(pixel_to_world((2, 3), &odd, 0.1).unwrap(), Vec3::zeros());
        assert!(pixel_to_world((600, 0), &c, 1e-3).is_err());
        assert!(pixel_to_world((0, 800), &c, 1e-3).is_err());
    }

    #[test]
    fn incident_axis_aligned() {
        let g = SceneGeometry::new(Vec3::new(0.0, 0.0, 1.0), 1e-3, 0.2, 1.0).unwrap();
        let n = Vec3::z();
        let inc = incident_geometry(&Vec3::zeros(), &g, &n).unwrap();
        assert!((inc.wi - Vec3::z()).norm() < 1e-15);
        assert!((inc.r - 1.0).abs() < 1e-15 && (inc.cos_theta - 1.0).abs() < 1e-15);

        let inc = incident_geometry(&Vec3::new(1.0, 0.0, 0.0), &g, &n).unwrap();
        let s = 0.5f64.sqrt();
        assert!((inc.wi - Vec3::new(-s, 0.0, s)).norm() < 1e-12);
        assert!((inc.r - 2f64.sqrt()).abs() < 1e-12);
        assert!((inc.cos_theta - s).abs() < 1e-12);
    }

    #[test]
    fn incident_rejects_light_coincidence() {
        let mut g = SceneGeometry::new(Vec3::new(0.0, 0.0, 1.0), 1e-3, 0.2, 1.0).unwrap();
        g.light_pos = Vec3::new(0.1, 0.0, 0.0);
        assert!(incident_geometry(&Vec3::new(0.1, 0.0, 0.0), &g, &Vec3::z()).is_err());
    }

    #[test]
    fn scene_geometry_validation() {
        assert!(SceneGeometry::new(Vec3::new(0.0, 0.0, 0.5), 1e-3, 0.2, 1.0).is_err());
        assert!(SceneGeometry::new(Vec3::new(0.0, 0.0, 1.0), 0.0, 0.2, 1.0).is_err());
        assert!(SceneGeometry::new(Vec3::new(0.0, 0.0, 1.0), 1e-3, 0.0, 1.0).is_err());
        assert!(SceneGeometry::new(Vec3::new(0.0, 0.0, 1.0), 1e-3, 0.2, -1.0).is_err());
    }

    #[test]
    fn light_from_single_pixel() {
        let mut img = Grid::filled(20, 10, 0.0);
        img.set(3, 15, 1.0);
        let p = estimate_light_position(&img, 0.01).unwrap();
        let expect = PixelFrame::new(20, 10, 0.01).world(3.0, 15.0);
        assert!((p.x - expect.x).abs() < 1e-12 && (p.y - expect.y).abs() < 1e-12);
        assert_eq!(p.z, 1.0);
    }

    #[test]
    fn light_from_symmetric_pair() {
        let mut img = Grid::filled(11, 11, 0.0);
        img.set(2, 3, 5.0);
        img.set(8, 7, 5.0);
        let p = estimate_light_position(&img, 0.01).unwrap();
        assert!(p.x.abs() < 1e-12 && p.y.abs() < 1e-12);
    }

    #[test]
    fn light_rejects_constant_image() {
        let img = Grid::filled(8, 8, 0.3);
        assert!(matches!(
            estimate_light_position(&img, 0.01),
            Err(Error::Degenerate(_))
        ));
    }
}
