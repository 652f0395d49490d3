//! Capture sessions: the JSON configuration, calibration drivers and loading
//! of a sample's photos into a ready-to-fit scene.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::clustering::ClusterConfig;
use crate::error::{Error, Result};
use crate::fitting::FitConfig;
use crate::geometry::{estimate_light_position, pixel_pitch, CameraSpec, SceneGeometry, Vec3};
use crate::grid::{Grid, Rgb};
use crate::imageio::read_rgb8;
use crate::radiometry::{
    downsample_card, gray_card_intensity, hat_weight, merge_radiance, mtb_align, scale_intensity,
    solve_response, translate, CalibrationRecord, CameraTag, ExposureStack, RadianceMap,
    ResponseCurve, CALIBRATION_VERSION, DEFAULT_SMOOTHNESS,
};

pub const CONFIG_VERSION: u32 = 1;

/// Largest stack misalignment searched, in pixels.
pub const MAX_ALIGN_SHIFT: u32 = 32;

/// Exposure stack of photos; times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct StackConfig {
    pub images: Vec<PathBuf>,
    pub exposures_s: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseConfig {
    pub images: Vec<PathBuf>,
    pub exposures_s: Vec<f64>,
    #[serde(default = "default_smoothness")]
    pub smoothness: f64,
}

impl ResponseConfig {
    pub fn stack(&self) -> StackConfig {
        StackConfig {
            images: self.images.clone(),
            exposures_s: self.exposures_s.clone(),
        }
    }
}

impl GrayCardConfig {
    pub fn stack(&self) -> StackConfig {
        StackConfig {
            images: self.images.clone(),
            exposures_s: self.exposures_s.clone(),
        }
    }
}

fn default_smoothness() -> f64 {
    DEFAULT_SMOOTHNESS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrayCardConfig {
    pub images: Vec<PathBuf>,
    pub exposures_s: Vec<f64>,
    /// Camera-to-card distance in metres.
    pub r_perp_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    /// Photo under ambient light.
    pub ambient: PathBuf,
    /// Point-lit photos, one per exposure time.
    pub point_images: Vec<PathBuf>,
    pub exposures_s: Vec<f64>,
    /// Camera-to-sample distance in metres.
    pub r_perp_m: f64,
    #[serde(default)]
    pub metallic: bool,
    /// Light x, y in the normalized frame; estimated from the photo if absent.
    #[serde(default)]
    pub light_xy: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "one")]
    pub gamma_scale: f64,
    #[serde(default = "default_height_sigma")]
    pub height_sigma: f64,
    #[serde(default = "default_iters")]
    pub n_iters: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_k() -> usize {
    500
}
fn one() -> f64 {
    1.0
}
fn default_height_sigma() -> f64 {
    crate::heightfield::DEFAULT_SIGMA
}
fn default_iters() -> usize {
    5
}

impl Default for FitSection {
    fn default() -> Self {
        FitSection {
            k: default_k(),
            gamma_scale: 1.0,
            height_sigma: default_height_sigma(),
            n_iters: default_iters(),
            seed: 0,
        }
    }
}

impl FitSection {
    pub fn fit_config(&self, width: usize, height: usize) -> FitConfig {
        let mut cfg = FitConfig::for_resolution(width, height, self.n_iters.max(1));
        cfg.n_iters = self.n_iters;
        cfg.cluster = ClusterConfig {
            k: self.k,
            gamma_scale: self.gamma_scale,
            seed: self.seed,
            ..ClusterConfig::default()
        };
        cfg.height_sigma = self.height_sigma;
        cfg
    }
}

/// Session configuration. Relative paths are resolved against the directory
/// of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionConfig {
    pub version: u32,
    /// 35 mm equivalent focal length in millimetres.
    pub f35_mm: f64,
    #[serde(default)]
    pub camera: CameraTag,
    /// Color-card exposure stack for response recovery.
    #[serde(default)]
    pub response: Option<ResponseConfig>,
    /// Recovered response curve (CSV).
    #[serde(default)]
    pub response_curve: Option<PathBuf>,
    /// Gray-card exposure stack for light calibration.
    #[serde(default)]
    pub gray_card: Option<GrayCardConfig>,
    /// Gray-card calibration record (JSON).
    #[serde(default)]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub sample: Option<SampleConfig>,
    #[serde(default)]
    pub fit: FitSection,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn check_stack(what: &str, stack: &StackConfig) -> Result<()> {
    if stack.images.is_empty() {
        return Err(Error::invalid(format!("{what}: no images listed")));
    }
    if stack.images.len() != stack.exposures_s.len() {
        return Err(Error::invalid(format!(
            "{what}: {} images but {} exposure times",
            stack.images.len(),
            stack.exposures_s.len()
        )));
    }
    if stack.exposures_s.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid(format!("{what}: exposure times must be positive")));
    }
    Ok(())
}

impl SessionConfig {
    pub fn from_json(text: &str, base_dir: &Path) -> Result<Self> {
        let mut cfg: SessionConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&text, base).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CONFIG_VERSION {
            return Err(Error::Config(format!("unsupported config version {}", self.version)));
        }
        if !(self.f35_mm > 0.0) {
            return Err(Error::invalid("f35_mm must be positive"));
        }
        if let Some(r) = &self.response {
            check_stack("response", &r.stack())?;
            if r.images.len() < 2 {
                return Err(Error::invalid("response: at least two exposures are required"));
            }
        }
        if let Some(g) = &self.gray_card {
            check_stack("gray_card", &g.stack())?;
            if !(g.r_perp_m > 0.0) {
                return Err(Error::invalid("gray_card.r_perp_m must be positive"));
            }
        }
        if let Some(s) = &self.sample {
            check_stack(
                "sample",
                &StackConfig {
                    images: s.point_images.clone(),
                    exposures_s: s.exposures_s.clone(),
                },
            )?;
            if !(s.r_perp_m > 0.0) {
                return Err(Error::invalid("sample.r_perp_m must be positive"));
            }
        }
        let f = &self.fit;
        if f.k == 0 || f.n_iters == 0 {
            return Err(Error::invalid("fit.k and fit.n_iters must be positive"));
        }
        if !(f.gamma_scale >= 0.0) || !(f.height_sigma >= 0.0) {
            return Err(Error::invalid("fit.gamma_scale and fit.height_sigma must be non-negative"));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn require<'a, T>(&self, field: &'a Option<T>, name: &str) -> Result<&'a T> {
        field
            .as_ref()
            .ok_or_else(|| Error::Config(format!("missing field `{name}`")))
    }

    pub fn response_path(&self) -> Result<PathBuf> {
        Ok(self.resolve(self.require(&self.response_curve, "response_curve")?))
    }

    pub fn calibration_path(&self) -> Result<PathBuf> {
        Ok(self.resolve(self.require(&self.calibration, "calibration")?))
    }

    pub fn output_dir(&self) -> PathBuf {
        self.resolve(self.output_dir.as_deref().unwrap_or(Path::new("out")))
    }

    fn load_stack(&self, stack: &StackConfig) -> Result<ExposureStack> {
        let images = stack
            .images
            .iter()
            .map(|p| read_rgb8(&self.resolve(p)))
            .collect::<Result<Vec<_>>>()?;
        ExposureStack::new(images, stack.exposures_s.clone())
    }

    pub fn calibrate_response(&self) -> Result<ResponseCurve> {
        let cfg = self.require(&self.response, "response")?;
        let stack = self.load_stack(&cfg.stack())?;
        calibrate_response(&stack, cfg.smoothness)
    }

    pub fn calibrate_gray(&self, curve: &ResponseCurve) -> Result<CalibrationRecord> {
        let cfg = self.require(&self.gray_card, "gray_card")?;
        let stack = self.load_stack(&cfg.stack())?;
        calibrate_gray_card(&stack, curve, self.f35_mm, cfg.r_perp_m, &self.camera)
    }
}

fn align_stack(stack: &ExposureStack) -> Result<ExposureStack> {
    let offsets = mtb_align(&stack.images, MAX_ALIGN_SHIFT)?;
    let images = stack
        .images
        .iter()
        .zip(&offsets)
        .map(|(im, &(dx, dy))| translate(im, dx, dy))
        .collect();
    ExposureStack::new(images, stack.exposures.clone())
}

/// Align a color-card stack, average it down to the card's tiles and solve
/// for the response curve.
pub fn calibrate_response(stack: &ExposureStack, smoothness: f64) -> Result<ResponseCurve> {
    let aligned = align_stack(stack)?;
    let samples = aligned
        .images
        .iter()
        .map(|im| {
            Ok(downsample_card(im)?
                .iter()
                .map(|c| c.map(|v| v.round().clamp(0.0, 255.0) as u8))
                .collect())
        })
        .collect::<Result<Vec<Vec<[u8; 3]>>>>()?;
    solve_response(&samples, &aligned.exposures, smoothness, hat_weight)
}

/// Light intensity and position from a gray-card exposure stack.
pub fn calibrate_gray_card(
    stack: &ExposureStack,
    curve: &ResponseCurve,
    f35_mm: f64,
    r_perp_m: f64,
    camera: &CameraTag,
) -> Result<CalibrationRecord> {
    let aligned = align_stack(stack)?;
    let radiance = merge_radiance(&aligned, curve)?;
    let (w, h) = radiance.dims();
    let pitch = pixel_pitch(&CameraSpec::new(f35_mm, w, h)?)?;
    let light = estimate_light_position(&radiance.to_gray(), pitch)
        .map_err(|e| Error::Calibration(format!("locating the light on the gray card: {e}")))?;
    let geom = SceneGeometry::new(light, pitch, r_perp_m, 1.0)?;
    let e_gray = gray_card_intensity(&radiance, &geom)?;
    if !(e_gray > 0.0) || !e_gray.is_finite() {
        return Err(Error::Calibration(format!("implausible light intensity {e_gray}")));
    }
    Ok(CalibrationRecord {
        version: CALIBRATION_VERSION,
        e_gray,
        r_gray_m: r_perp_m,
        exposures_s: stack.exposures.clone(),
        light_pos: [light.x, light.y, light.z],
        camera: camera.clone(),
    })
}

/// Everything needed to run the fit on one material sample.
#[derive(Debug, Clone)]
pub struct Session {
    pub config: SessionConfig,
    /// Linearized ambient image, scaled so a white pixel is 1.
    pub ambient: Grid<Rgb>,
    pub radiance: RadianceMap,
    pub geometry: SceneGeometry,
    pub curve: ResponseCurve,
    pub calibration: CalibrationRecord,
    pub metallic: bool,
}

/// Linearize an 8-bit photo through the response curve, normalized so that
/// pixel value 255 maps to 1.
pub fn linearize(img: &Grid<[u8; 3]>, curve: &ResponseCurve) -> Grid<Rgb> {
    img.map(|p| {
        let mut out = [0.0; 3];
        for c in 0..3 {
            out[c] = (curve.g(c, p[c]) - curve.g(c, 255)).exp();
        }
        out
    })
}

pub fn load_session(path: &Path) -> Result<Session> {
    let config = SessionConfig::read(path)?;
    session_from_config(config)
}

pub fn session_from_config(config: SessionConfig) -> Result<Session> {
    let sample = config.require(&config.sample, "sample")?.clone();
    let curve = ResponseCurve::read_csv(&config.response_path()?)?;
    let calibration = CalibrationRecord::read(&config.calibration_path()?)?;
    calibration.camera.check_compatible(&config.camera)?;

    let stack = config.load_stack(&StackConfig {
        images: sample.point_images.clone(),
        exposures_s: sample.exposures_s.clone(),
    })?;
    let radiance = merge_radiance(&align_stack(&stack)?, &curve)?;
    let ambient_raw = read_rgb8(&config.resolve(&sample.ambient))?;
    if !ambient_raw.same_dims(&radiance) {
        return Err(Error::invalid(format!(
            "ambient image is {:?} but point images are {:?}",
            ambient_raw.dims(),
            radiance.dims()
        )));
    }
    let ambient = linearize(&ambient_raw, &curve);

    let (w, h) = radiance.dims();
    let pitch = pixel_pitch(&CameraSpec::new(config.f35_mm, w, h)?)?;
    let light = match sample.light_xy {
        Some([x, y]) => Vec3::new(x, y, 1.0),
        None => estimate_light_position(&radiance.to_gray(), pitch)?,
    };
    let e = scale_intensity(calibration.e_gray, calibration.r_gray_m, sample.r_perp_m)?;
    let geometry = SceneGeometry::new(light, pitch, sample.r_perp_m, e)?;
    Ok(Session {
        config,
        ambient,
        radiance,
        geometry,
        curve,
        calibration,
        metallic: sample.metallic,
    })
}
