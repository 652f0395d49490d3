mod common;

use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;

use common::*;
use svbrdf_core::brdf::{eval_disney, lambertian_reference, tangent_from_axis, DisneyParams, ShadingFrame};
use svbrdf_core::geometry::{
    estimate_light_position, half_aov, incident_geometry, pixel_pitch, pixel_to_world, CameraSpec, PixelFrame,
    SceneGeometry, Vec3,
};
use svbrdf_core::grid::Grid;

fn params(base: V3, metallic: bool, spec: f64, tint: f64, rough: f64, aniso: f64) -> DisneyParams {
    DisneyParams {
        base_color: base,
        metallic,
        specular: spec,
        specular_tint: tint,
        roughness: rough,
        anisotropic: aniso,
        aniso_axis: 0.0,
    }
}

fn upper_dir() -> impl Strategy<Value = V3> {
    (0.0..2.0 * PI, 0.05f64..1.0).prop_map(|(phi, cos)| {
        let sin = (1.0 - cos * cos).sqrt();
        [sin * phi.cos(), sin * phi.sin(), cos]
    })
}

proptest! {
    #[test]
    fn matches_reference_transcription(
        base in prop::array::uniform3(0.02f64..1.0),
        metallic in any::<bool>(),
        spec in 0.0f64..1.0,
        tint in 0.0f64..1.0,
        rough in 0.0f64..1.0,
        aniso in 0.0f64..1.0,
        axis in 0.0f64..1.0,
        l in upper_dir(),
        v in upper_dir(),
    ) {
        let n = Vec3::z();
        let frame = ShadingFrame::from_axis(n, axis).unwrap();
        let t = [frame.t.x, frame.t.y, frame.t.z];
        let p = params(base, metallic, spec, tint, rough, aniso);
        let got = eval_disney(&p, &frame, &Vec3::from(l), &Vec3::from(v));
        let (d, s) = disney_reference(base, if metallic { 1.0 } else { 0.0 }, spec, tint, rough, aniso, [0.0, 0.0, 1.0], t, l, v);
        for c in 0..3 {
            let want = d[c] + s[c];
            prop_assert!((got[c] - want).abs() <= 1e-12 * want.abs().max(1.0), "{} vs {}", got[c], want);
            prop_assert!(got[c] >= 0.0);
        }
    }

    #[test]
    fn reciprocal_in_light_and_view(
        base in prop::array::uniform3(0.02f64..1.0),
        rough in 0.05f64..1.0,
        aniso in 0.0f64..1.0,
        axis in 0.0f64..1.0,
        l in upper_dir(),
        v in upper_dir(),
    ) {
        let p = params(base, false, 0.5, 0.3, rough, aniso);
        let frame = ShadingFrame::from_axis(Vec3::z(), axis).unwrap();
        let a = eval_disney(&p, &frame, &Vec3::from(l), &Vec3::from(v));
        let b = eval_disney(&p, &frame, &Vec3::from(v), &Vec3::from(l));
        for c in 0..3 {
            prop_assert!((a[c] - b[c]).abs() <= 1e-12 * a[c].abs().max(1.0));
        }
    }

    #[test]
    fn tangent_is_orthonormal(nx in -0.7f64..0.7, ny in -0.7f64..0.7, axis in 0.0f64..1.0) {
        let n = Vec3::new(nx, ny, 1.0).normalize();
        let t = tangent_from_axis(&n, axis).unwrap();
        prop_assert!(n.dot(&t).abs() < 1e-9);
        prop_assert!((t.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn world_pixel_round_trip(row in 0.0f64..599.0, col in 0.0f64..799.0, pitch in 1e-4f64..1e-2) {
        let frame = PixelFrame::new(800, 600, pitch);
        let p = frame.world(row, col);
        let (r, c) = frame.pixel(&p);
        let back = frame.world(r, c);
        prop_assert!((back - p).norm() < 1e-12);
        prop_assert!((r - row).abs() < 1e-9 && (c - col).abs() < 1e-9);
    }

    #[test]
    fn pitch_forms_agree(f35 in 5.0f64..300.0, w in 16usize..5000, h in 16usize..5000) {
        let cam = CameraSpec::new(f35, w, h).unwrap();
        let diag = ((w * w + h * h) as f64).sqrt();
        let from_angle = 2.0 * half_aov(&cam).unwrap().tan() / diag;
        let direct = 43.3 / (f35 * diag);
        let pitch = pixel_pitch(&cam).unwrap();
        prop_assert!((from_angle - direct).abs() < 1e-12);
        prop_assert!((pitch - direct).abs() < 1e-12);
        let doubled = pixel_pitch(&CameraSpec::new(2.0 * f35, w, h).unwrap()).unwrap();
        prop_assert!((doubled - 0.5 * pitch).abs() < 1e-15);
    }

    #[test]
    fn incident_directions_are_unit(x in -0.5f64..0.5, y in -0.5f64..0.5) {
        let geom = SceneGeometry::new(Vec3::new(0.1, -0.05, 1.0), 1e-3, 0.2, 10.0).unwrap();
        let inc = incident_geometry(&Vec3::new(x, y, 0.0), &geom, &Vec3::z()).unwrap();
        prop_assert!((inc.wi.norm() - 1.0).abs() < 1e-12);
        prop_assert!((inc.wo.norm() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn lambertian_reference_integrates_to_albedo() {
    let f = lambertian_reference();
    let steps = 2000;
    let mut total = 0.0;
    for i in 0..steps {
        let theta = (i as f64 + 0.5) / steps as f64 * PI / 2.0;
        total += f * theta.cos() * theta.sin() * 2.0 * PI * (PI / 2.0 / steps as f64);
    }
    assert_relative_eq!(total, 0.18, epsilon = 1e-6);
}

#[test]
fn incident_off_axis_example() {
    let geom = SceneGeometry::new(Vec3::new(0.0, 0.0, 1.0), 1e-3, 0.2, 1.0).unwrap();
    let inc = incident_geometry(&Vec3::new(1.0, 0.0, 0.0), &geom, &Vec3::z()).unwrap();
    let s = 2f64.sqrt();
    assert!((inc.wi - Vec3::new(-1.0 / s, 0.0, 1.0 / s)).norm() < 1e-12);
    assert_relative_eq!(inc.r, s, epsilon = 1e-12);
    assert_relative_eq!(inc.cos_theta, 1.0 / s, epsilon = 1e-12);
}

#[test]
fn pixel_to_world_corner_example() {
    let cam = CameraSpec::new(26.0, 800, 600).unwrap();
    let p = pixel_to_world((0, 0), &cam, 1e-3).unwrap();
    assert!((p - Vec3::new(-0.3995, 0.2995, 0.0)).norm() < 1e-12);
    let odd = CameraSpec::new(26.0, 801, 601).unwrap();
    assert!(pixel_to_world((300, 400), &odd, 1e-3).unwrap().norm() < 1e-15);
}

#[test]
fn gaussian_highlight_centroid() {
    let (w, h) = (800, 600);
    let pitch = 1e-3;
    let img = Grid::from_fn(w, h, |r, c| {
        let d2 = (r as f64 - 300.0).powi(2) + (c as f64 - 400.0).powi(2);
        (-d2 / (2.0 * 30f64.powi(2))).exp()
    });
    let est = estimate_light_position(&img, pitch).unwrap();
    let frame = PixelFrame::new(w, h, pitch);
    let (r, c) = frame.pixel(&est);

    // Brute-force weighted centroid over all pixels.
    let (mut sr, mut sc, mut sw) = (0.0, 0.0, 0.0);
    for row in 0..h {
        for col in 0..w {
            let v = *img.get(row, col);
            sr += v * row as f64;
            sc += v * col as f64;
            sw += v;
        }
    }
    assert!((sr / sw - 300.0).abs() < 1.0 && (sc / sw - 400.0).abs() < 1.0);
    assert!((r - 300.0).abs() < 1.0 && (c - 400.0).abs() < 1.0, "({r}, {c})");
    assert_eq!(est.z, 1.0);
}
