use std::path::Path;

use svbrdf_core::bundle::{export_bundle, import_bundle};
use svbrdf_core::fitting::render_forward;
use svbrdf_core::grid::{Grid, Rgb};
use svbrdf_core::imageio::write_rgb8;
use svbrdf_core::preview::{label_palette, radiance_to_ldr, render_preview};
use svbrdf_core::radiometry::{CalibrationRecord, CameraTag, ResponseCurve};
use svbrdf_core::session::load_session;
use svbrdf_core::synth::{capture_exposure, synth_generate, BumpSpec, SynthScene, SynthSpec};
use svbrdf_core::Error;

fn scene(size: usize) -> SynthScene {
    synth_generate(&SynthSpec {
        width: size,
        height: size,
        tile_px: 8,
        ..SynthSpec::default()
    })
    .unwrap()
}

fn gamma_camera(v: f64) -> u8 {
    (255.0 * v.max(0.0).powf(1.0 / 2.2)).round().clamp(0.0, 255.0) as u8
}

fn capture(map: &Grid<Rgb>, t: f64) -> Grid<[u8; 3]> {
    map.map(|p| p.map(|v| gamma_camera(v * t)))
}

#[test]
fn bundle_survives_export_and_import() {
    let scene = scene(40);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("nested").join("bundle");
    export_bundle(&scene.truth, &out).unwrap();
    let back = import_bundle(&out).unwrap();
    let (a, b) = (&scene.truth.solution, &back.solution);

    assert_eq!(back.meta, scene.truth.meta);
    assert_eq!(a.labels, b.labels);
    let step = 0.5 / 65535.0 + 1e-12;
    for (x, y) in a.base_color.iter().flatten().zip(b.base_color.iter().flatten()) {
        assert!((x - y).abs() <= step);
    }
    for (ma, mb) in [
        (&a.specular, &b.specular),
        (&a.specular_tint, &b.specular_tint),
        (&a.anisotropic, &b.anisotropic),
        (&a.aniso_axis, &b.aniso_axis),
    ] {
        assert!(ma.iter().zip(mb.iter()).all(|(x, y)| (x - y).abs() <= step));
    }
    for (na, nb) in a.normals.iter().zip(b.normals.iter()) {
        assert!((na - nb).amax() < 2e-5);
    }
    for (ha, hb) in a.height.iter().zip(b.height.iter()) {
        assert!((ha - hb).abs() <= 1e-6 * ha.abs().max(1e-3));
    }

    let again = dir.path().join("again");
    export_bundle(&back, &again).unwrap();
    for name in ["labels.png", "base_color.png", "normal.png", "specular.png"] {
        assert_eq!(std::fs::read(out.join(name)).unwrap(), std::fs::read(again.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn importing_a_missing_bundle_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(import_bundle(&dir.path().join("absent")), Err(Error::Io { .. })));
}

#[test]
fn ldr_conversion_follows_the_camera() {
    let linear = ResponseCurve::linear();
    let map = Grid::from_fn(32, 8, |r, c| [(c as f64 + 0.5) / 32.0, (r as f64 + 1.0) / 40.0, 0.0]);
    let one = radiance_to_ldr(&map, 0.2, &linear).unwrap();
    let four = radiance_to_ldr(&map, 0.8, &linear).unwrap();
    for ((l, a), b) in map.iter().zip(one.iter()).zip(four.iter()) {
        for c in 0..2 {
            assert!((a[c] as f64 - 255.0 * 0.2 * l[c]).abs() <= 1.0);
            assert!((b[c] as f64 - (255.0 * 0.8 * l[c]).min(255.0)).abs() <= 1.0);
        }
        assert_eq!(a[2], 0);
    }
    assert!(radiance_to_ldr(&map, 0.0, &linear).is_err());
}

#[test]
fn capture_then_preview_reproduces_unsaturated_pixels() {
    let scene = scene(48);
    let curve = ResponseCurve::gamma(2.2);
    let t = capture_exposure(&scene.radiance, &curve, 250).unwrap();
    let photo = capture(&scene.radiance, t);
    let max = photo.iter().flatten().copied().max().unwrap();
    assert!((249..=251).contains(&max), "brightest pixel {max}");

    // Radiance that the camera would have recorded exactly at each pixel value.
    let decoded = photo.map(|p| [0, 1, 2].map(|c| (curve.g(c, p[c])).exp() / t));
    let back = radiance_to_ldr(&decoded, t, &curve).unwrap();
    for (p, q) in photo.iter().zip(back.iter()) {
        for c in 0..3 {
            if p[c] > 0 && p[c] < 255 {
                assert_eq!(p[c], q[c]);
            }
        }
    }

    let preview = render_preview(&scene.truth, &scene.geometry, t, &curve).unwrap();
    let direct = radiance_to_ldr(&scene.radiance, t, &curve).unwrap();
    let worst = preview
        .iter()
        .flatten()
        .zip(direct.iter().flatten())
        .map(|(a, b)| (*a as i32 - *b as i32).abs())
        .max()
        .unwrap();
    assert!(worst <= 1, "preview differs by {worst} levels");
}

#[test]
fn palette_is_a_function_of_the_label() {
    let labels = Grid::from_fn(10, 10, |r, c| ((r * 3 + c) % 7) as u32);
    let colors = label_palette(&labels);
    for (l, c) in labels.iter().zip(colors.iter()) {
        for (m, d) in labels.iter().zip(colors.iter()) {
            assert_eq!(l == m, c == d);
        }
    }
}

#[test]
fn synth_is_deterministic_and_self_consistent() {
    let a = scene(40);
    let b = scene(40);
    assert_eq!(a.truth, b.truth);
    assert_eq!(a.radiance, b.radiance);
    assert_eq!(a.ambient, b.ambient);
    let rendered = render_forward(&a.truth.solution, &a.geometry).unwrap();
    for (x, y) in rendered.iter().flatten().zip(a.radiance.iter().flatten()) {
        assert!((x - y).abs() <= 1e-6 * y.abs().max(1e-9));
    }
    let labels: std::collections::BTreeSet<u32> = a.truth.solution.labels.iter().copied().collect();
    assert_eq!(labels.len(), SynthSpec::default().materials.len());

    let flat = synth_generate(&SynthSpec {
        width: 40,
        height: 40,
        bumps: BumpSpec::flat(),
        ..SynthSpec::default()
    })
    .unwrap();
    assert_eq!(flat.ambient, flat.truth.solution.base_color);
}

fn write_session(dir: &Path, scene: &SynthScene, iso: u32) -> f64 {
    let curve = ResponseCurve::gamma(2.2);
    let t = capture_exposure(&scene.radiance, &curve, 250).unwrap();
    write_rgb8(&dir.join("long.png"), &capture(&scene.radiance, t)).unwrap();
    write_rgb8(&dir.join("short.png"), &capture(&scene.radiance, t / 4.0)).unwrap();
    write_rgb8(&dir.join("ambient.png"), &capture(&scene.ambient, 0.8)).unwrap();
    curve.write_csv(&dir.join("response.csv")).unwrap();
    CalibrationRecord {
        version: 1,
        e_gray: 10.0,
        r_gray_m: 0.3,
        exposures_s: vec![0.01],
        light_pos: [0.05, 0.0, 1.0],
        camera: CameraTag {
            iso: Some(iso),
            white_balance: None,
        },
    }
    .write(&dir.join("calibration.json"))
    .unwrap();
    let config = format!(
        r#"{{
  "version": 1,
  "f35_mm": 26.0,
  "camera": {{"iso": 100}},
  "response_curve": "response.csv",
  "calibration": "calibration.json",
  "sample": {{
    "ambient": "ambient.png",
    "point_images": ["short.png", "long.png"],
    "exposures_s": [{}, {}],
    "r_perp_m": 0.2
  }}
}}"#,
        t / 4.0,
        t
    );
    std::fs::write(dir.join("session.json"), config).unwrap();
    t
}

#[test]
fn minimal_session_loads() {
    let scene = scene(48);
    let dir = tempfile::tempdir().unwrap();
    let t = write_session(dir.path(), &scene, 100);
    let session = load_session(&dir.path().join("session.json")).unwrap();
    assert!((session.geometry.light_intensity - 10.0 * (0.3f64 / 0.2).powi(2)).abs() < 1e-12);
    assert_eq!(session.radiance.dims(), (48, 48));
    assert_eq!(session.ambient.dims(), (48, 48));
    assert!(!session.metallic);
    assert!((session.geometry.light_pos.z - 1.0).abs() < 1e-12);

    let mut checked = 0;
    for (got, want) in session.radiance.iter().zip(scene.radiance.iter()) {
        for c in 0..3 {
            let z = 255.0 * (want[c] * t).powf(1.0 / 2.2);
            if (40.0..=245.0).contains(&z) {
                assert!((got[c] / want[c] - 1.0).abs() < 0.05, "{} vs {}", got[c], want[c]);
                checked += 1;
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn session_rejects_mismatched_camera_settings() {
    let scene = scene(32);
    let dir = tempfile::tempdir().unwrap();
    write_session(dir.path(), &scene, 400);
    let err = load_session(&dir.path().join("session.json")).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");

    write_session(dir.path(), &scene, 100);
    std::fs::remove_file(dir.path().join("long.png")).unwrap();
    let err = load_session(&dir.path().join("session.json")).unwrap_err();
    assert!(err.to_string().contains("long.png"), "{err}");
}
