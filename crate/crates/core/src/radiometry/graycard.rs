use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::brdf::lambertian_reference;
use crate::error::{Error, Result};
use crate::geometry::{incident_geometry, SceneGeometry, Vec3};
use crate::grid::luma;

use super::merge::RadianceMap;

/// Light intensity from a radiance map of a gray card facing the camera.
///
/// Each pixel of the central 50% crop yields `L r^2 / (f cos)`; the mean is
/// returned.
pub fn gray_card_intensity(gray: &RadianceMap, geom: &SceneGeometry) -> Result<f64> {
    let (w, h) = gray.dims();
    let frame = geom.frame(w, h);
    let f = lambertian_reference();
    let n = Vec3::z();
    let (r0, r1) = (h / 4, h - h / 4);
    let (c0, c1) = (w / 4, w - w / 4);
    let mut sum = 0.0;
    let mut count = 0usize;
    for row in r0..r1 {
        for col in c0..c1 {
            let p = frame.world(row as f64, col as f64);
            let Ok(inc) = incident_geometry(&p, geom, &n) else {
                continue;
            };
            if inc.cos_theta <= 0.0 {
                continue;
            }
            sum += luma(*gray.get(row, col)) * inc.r * inc.r / (f * inc.cos_theta);
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Calibration(
            "no gray-card pixel faces the light".into(),
        ));
    }
    Ok(sum / count as f64)
}

/// Rescale a calibrated intensity to a different camera-to-plane distance.
pub fn scale_intensity(e_gray: f64, r_gray: f64, r_sample: f64) -> Result<f64> {
    if !(r_gray > 0.0) || !(r_sample > 0.0) {
        return Err(Error::invalid(format!(
            "distances must be positive (r_gray = {r_gray}, r_sample = {r_sample})"
        )));
    }
    Ok(e_gray * (r_gray / r_sample).powi(2))
}

/// Capture settings that must match between calibration and sample photos.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CameraTag {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iso: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub white_balance: Option<String>,
}

impl CameraTag {
    /// Fields present on both sides must agree.
    pub fn check_compatible(&self, other: &CameraTag) -> Result<()> {
        if let (Some(a), Some(b)) = (self.iso, other.iso) {
            if a != b {
                return Err(Error::Config(format!(
                    "calibration was captured at ISO {a} but the sample at ISO {b}"
                )));
            }
        }
        if let (Some(a), Some(b)) = (&self.white_balance, &other.white_balance) {
            if a != b {
                return Err(Error::Config(format!(
                    "calibration white balance '{a}' differs from sample white balance '{b}'"
                )));
            }
        }
        Ok(())
    }
}

pub const CALIBRATION_VERSION: u32 = 1;

/// Gray-card calibration result as written to disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub version: u32,
    /// Calibrated light intensity in the normalized frame.
    pub e_gray: f64,
    /// Camera-to-card distance in metres.
    pub r_gray_m: f64,
    /// Exposure times of the gray-card photos in seconds.
    pub exposures_s: Vec<f64>,
    /// Light position estimated from the gray-card photo.
    pub light_pos: [f64; 3],
    #[serde(default)]
    pub camera: CameraTag,
}

impl CalibrationRecord {
    pub fn write(&self, path: &Path) -> Result<()> {
        let s = serde_json::to_string_pretty(self).expect("calibration record serializes");
        std::fs::write(path, s).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let rec: CalibrationRecord =
            serde_json::from_str(&s).map_err(|e| Error::format(path, e))?;
        if rec.version != CALIBRATION_VERSION {
            return Err(Error::format(
                path,
                format!("unsupported calibration version {}", rec.version),
            ));
        }
        Ok(rec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    fn geom() -> SceneGeometry {
        SceneGeometry::new(Vec3::new(0.0, 0.0, 1.0), 2e-3, 0.2, 1.0).unwrap()
    }

    #[test]
    fn center_pixel_identity() {
        // Single pixel at the origin: r = 1 and cos = 1.
        let l = 0.7;
        let map = Grid::filled(1, 1, [l; 3]);
        let e = gray_card_intensity(&map, &geom()).unwrap();
        assert!((e - l * std::f64::consts::PI / 0.18).abs() < 1e-12);
    }

    #[test]
    fn linear_in_radiance() {
        let map = Grid::from_fn(20, 16, |r, c| [0.1 + 0.01 * (r + c) as f64; 3]);
        let e1 = gray_card_intensity(&map, &geom()).unwrap();
        let e2 = gray_card_intensity(&map.map(|p| p.map(|v| 2.0 * v)), &geom()).unwrap();
        assert!((e2 - 2.0 * e1).abs() < 1e-12 * e2);
    }

    #[test]
    fn inverse_square_scaling() {
        assert!((scale_intensity(100.0, 0.2, 0.4).unwrap() - 25.0).abs() < 1e-12);
        assert_eq!(scale_intensity(7.0, 0.3, 0.3).unwrap(), 7.0);
        assert!(scale_intensity(1.0, 0.0, 0.3).is_err());
        assert!(scale_intensity(1.0, 0.2, -1.0).is_err());
    }

    #[test]
    fn camera_tags() {
        let a = CameraTag {
            iso: Some(100),
            white_balance: Some("5000K".into()),
        };
        let b = CameraTag {
            iso: Some(200),
            white_balance: None,
        };
        assert!(a.check_compatible(&b).is_err());
        assert!(a.check_compatible(&CameraTag::default()).is_ok());
    }

    #[test]
    fn record_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("cal.json");
        let rec = CalibrationRecord {
            version: CALIBRATION_VERSION,
            e_gray: 12.5,
            r_gray_m: 0.2,
            exposures_s: vec![0.01, 0.02],
            light_pos: [0.03, -0.01, 1.0],
            camera: CameraTag::default(),
        };
        rec.write(&p).unwrap();
        assert_eq!(CalibrationRecord::read(&p).unwrap(), rec);
    }
}
