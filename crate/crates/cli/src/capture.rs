//! Synthetic capture session: photos, calibration stacks and a session
//! config, all rendered from a known ground truth.

use std::path::Path;

use serde_json::json;
use svbrdf_core::brdf::lambertian_reference;
use svbrdf_core::bundle::export_bundle;
use svbrdf_core::fitting::pixel_lighting;
use svbrdf_core::grid::Grid;
use svbrdf_core::imageio::write_rgb8;
use svbrdf_core::preview::radiance_to_ldr;
use svbrdf_core::radiometry::{generate_color_card, ResponseCurve, CARD_COLS, CARD_ROWS};
use svbrdf_core::synth::{capture_exposure, synth_generate, SynthSpec};
use svbrdf_core::{Error, Result};

const CAMERA_GAMMA: f64 = 2.2;
const CARD_TILE_PX: usize = 8;
const ISO: u32 = 100;

fn save(dir: &Path, name: &str, img: &Grid<[u8; 3]>) -> Result<String> {
    write_rgb8(&dir.join(name), img)?;
    Ok(name.to_string())
}

pub fn synth(out: &Path, seed: u64, size: usize, k: usize) -> Result<()> {
    std::fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_path_buf(),
        source: e,
    })?;
    let spec = SynthSpec {
        width: size,
        height: size,
        seed,
        ..SynthSpec::default()
    };
    let scene = synth_generate(&spec)?;
    let curve = ResponseCurve::gamma(CAMERA_GAMMA);
    curve.write_csv(&out.join("response_true.csv"))?;
    export_bundle(&scene.truth, &out.join("truth"))?;

    // Color card under unit illumination, reflectance = value / 255.
    let card = generate_color_card(CARD_ROWS, CARD_COLS, CARD_TILE_PX, seed);
    let card_radiance = card.map(|p| p.map(|v| v as f64 / 255.0));
    let card_exposures: Vec<f64> = (0..8).map(|i| 2f64.powi(i - 4)).collect();
    let mut card_images = Vec::new();
    for (i, &t) in card_exposures.iter().enumerate() {
        card_images.push(save(out, &format!("card_{i}.png"), &radiance_to_ldr(&card_radiance, t, &curve)?)?);
    }

    // Gray card at the sample distance, lit by the same light.
    let flat = Grid::filled(size, size, svbrdf_core::geometry::Vec3::z());
    let light = pixel_lighting(&flat, &scene.geometry)?;
    let gray_radiance = light.map(|px| [lambertian_reference() * px.irradiance; 3]);
    let t_gray = capture_exposure(&gray_radiance, &curve, 250)?;
    let gray_exposures = [t_gray, 2.0 * t_gray];
    let gray_images = gray_exposures
        .iter()
        .enumerate()
        .map(|(i, &t)| save(out, &format!("gray_{i}.png"), &radiance_to_ldr(&gray_radiance, t, &curve)?))
        .collect::<Result<Vec<_>>>()?;

    // Point-lit sample: one unclipped exposure and one two stops brighter.
    let t_point = capture_exposure(&scene.radiance, &curve, 250)?;
    let point_exposures = [t_point, 4.0 * t_point];
    let point_images = point_exposures
        .iter()
        .enumerate()
        .map(|(i, &t)| save(out, &format!("point_{i}.png"), &radiance_to_ldr(&scene.radiance, t, &curve)?))
        .collect::<Result<Vec<_>>>()?;
    let ambient = save(out, "ambient.png", &radiance_to_ldr(&scene.ambient, 1.0, &curve)?)?;

    let light = scene.geometry.light_pos;
    let config = json!({
        "version": 1,
        "f35_mm": spec.f35_mm,
        "camera": {"iso": ISO, "white_balance": "daylight"},
        "response": {"images": card_images, "exposures_s": card_exposures},
        "response_curve": "response.csv",
        "gray_card": {"images": gray_images, "exposures_s": gray_exposures, "r_perp_m": spec.r_perp_m},
        "calibration": "calibration.json",
        "sample": {
            "ambient": ambient,
            "point_images": point_images,
            "exposures_s": point_exposures,
            "r_perp_m": spec.r_perp_m,
            "metallic": spec.metallic,
            "light_xy": [light.x, light.y]
        },
        "fit": {"k": k, "gamma_scale": 1.0, "height_sigma": 0.5, "n_iters": 5, "seed": seed},
        "output_dir": "fit"
    });
    let path = out.join("session.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).expect("config serializes")).map_err(|e| {
        Error::Io {
            path: path.clone(),
            source: e,
        }
    })?;
    println!("wrote synthetic session {}", path.display());
    Ok(())
}
