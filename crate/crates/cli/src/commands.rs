use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::json;
use svbrdf_core::bundle::{export_bundle, import_bundle, SvbrdfBundle};
use svbrdf_core::clustering::cluster_image;
use svbrdf_core::fitting::{render_forward, run_pipeline_with};
use svbrdf_core::geometry::Vec3;
use svbrdf_core::imageio::{read_rgb8, write_exr_rgb, write_gray16, write_rgb8};
use svbrdf_core::preview::{label_palette, radiance_to_ldr, render_preview as preview};
use svbrdf_core::radiometry::ResponseCurve;
use svbrdf_core::session::{linearize, session_from_config, SessionConfig};
use svbrdf_core::{Error, Result};

use crate::FitOverrides;

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("json value serializes");
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn apply_overrides(cfg: &mut SessionConfig, o: &FitOverrides) -> Result<()> {
    if let Some(v) = o.seed {
        cfg.fit.seed = v;
    }
    if let Some(v) = o.k {
        cfg.fit.k = v;
    }
    if let Some(v) = o.gamma_scale {
        cfg.fit.gamma_scale = v;
    }
    if let Some(v) = o.height_sigma {
        cfg.fit.height_sigma = v;
    }
    if let Some(v) = o.iters {
        cfg.fit.n_iters = v;
    }
    cfg.validate()
}

fn out_dir(cfg: &SessionConfig, out: Option<PathBuf>) -> PathBuf {
    out.unwrap_or_else(|| cfg.output_dir())
}

pub fn calibrate_response(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = SessionConfig::read(config)?;
    let curve = cfg.calibrate_response()?;
    let path = match (&out, &cfg.response_curve) {
        (None, Some(p)) => cfg.resolve(p),
        _ => out_dir(&cfg, out).join("response.csv"),
    };
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    curve.write_csv(&path)?;
    println!("wrote {}", path.display());
    Ok(())
}

pub fn calibrate_gray(config: &Path, out: Option<PathBuf>) -> Result<()> {
    let cfg = SessionConfig::read(config)?;
    let curve = ResponseCurve::read_csv(&cfg.response_path()?)?;
    let record = cfg.calibrate_gray(&curve)?;
    let path = match (&out, &cfg.calibration) {
        (None, Some(p)) => cfg.resolve(p),
        _ => out_dir(&cfg, out).join("calibration.json"),
    };
    if let Some(dir) = path.parent() {
        create_dir(dir)?;
    }
    record.write(&path)?;
    println!("E = {:.6} at r = {} m; wrote {}", record.e_gray, record.r_gray_m, path.display());
    Ok(())
}

pub fn fit(config: &Path, out: Option<PathBuf>, overrides: &FitOverrides, debug_dumps: bool) -> Result<()> {
    let mut cfg = SessionConfig::read(config)?;
    apply_overrides(&mut cfg, overrides)?;
    let dir = out_dir(&cfg, out);
    create_dir(&dir)?;
    let session = session_from_config(cfg)?;
    let (w, h) = session.radiance.dims();
    let mut fit_cfg = session.config.fit.fit_config(w, h);
    fit_cfg.keep_snapshots = debug_dumps;

    let diag_path = dir.join("diagnostics.jsonl");
    let mut diag = BufWriter::new(File::create(&diag_path).map_err(|e| Error::Io {
        path: diag_path.clone(),
        source: e,
    })?);
    let mut io_error = None;
    let output = run_pipeline_with(
        &session.ambient,
        &session.radiance,
        &session.geometry,
        &fit_cfg,
        session.metallic,
        &mut |d| {
            let line = serde_json::to_string(d).expect("diagnostic serializes");
            eprintln!("{line}");
            if let Err(e) = writeln!(diag, "{line}") {
                io_error.get_or_insert(e);
            }
        },
    )?;
    diag.flush().map_err(|e| Error::Io {
        path: diag_path.clone(),
        source: e,
    })?;
    if let Some(e) = io_error {
        return Err(Error::Io { path: diag_path, source: e });
    }

    let geom = session.geometry;
    export_bundle(&SvbrdfBundle::new(output.solution.clone(), &geom), &dir)?;
    let rerender = render_forward(&output.solution, &geom)?;
    write_exr_rgb(&dir.join("radiance.exr"), &session.radiance)?;
    write_exr_rgb(&dir.join("rerender.exr"), &rerender)?;
    let exposure = session.config.sample.as_ref().map(|s| s.exposures_s[0]).unwrap_or(1.0);
    write_rgb8(&dir.join("rerender.png"), &radiance_to_ldr(&rerender, exposure, &session.curve)?)?;
    write_rgb8(&dir.join("labels_palette.png"), &label_palette(&output.solution.labels))?;
    if debug_dumps {
        for (i, snap) in output.snapshots.iter().enumerate() {
            export_bundle(&SvbrdfBundle::new(snap.clone(), &geom), &dir.join(format!("debug/iter_{}", i + 1)))?;
        }
    }
    if !output.flagged_clusters.is_empty() {
        eprintln!("warning: optimizer failed on clusters {:?}", output.flagged_clusters);
    }
    println!(
        "roughness {:.4}, final residual {:.6}; wrote {}",
        output.solution.roughness,
        output.residual_history.last().copied().unwrap_or(f64::NAN),
        dir.display()
    );
    Ok(())
}

pub fn render_preview(
    bundle_dir: &Path,
    curve: &Path,
    exposure: f64,
    out: &Path,
    light_x: Option<f64>,
    light_y: Option<f64>,
    intensity: Option<f64>,
) -> Result<()> {
    let bundle = import_bundle(bundle_dir)?;
    let curve = ResponseCurve::read_csv(curve)?;
    let mut geom = bundle.geometry()?;
    geom.light_pos = Vec3::new(
        light_x.unwrap_or(geom.light_pos.x),
        light_y.unwrap_or(geom.light_pos.y),
        1.0,
    );
    if let Some(e) = intensity {
        geom = geom.with_intensity(e);
    }
    geom.validate()?;
    let img = preview(&bundle, &geom, exposure, &curve)?;
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    write_rgb8(out, &img)?;
    println!("wrote {}", out.display());
    Ok(())
}

pub fn cluster_debug(config: &Path, out: Option<PathBuf>, overrides: &FitOverrides) -> Result<()> {
    let mut cfg = SessionConfig::read(config)?;
    apply_overrides(&mut cfg, overrides)?;
    let sample = cfg
        .sample
        .as_ref()
        .ok_or_else(|| Error::Config("missing field `sample`".into()))?;
    let raw = read_rgb8(&cfg.resolve(&sample.ambient))?;
    let ambient = match cfg.response_path().ok().filter(|p| p.exists()) {
        Some(p) => linearize(&raw, &ResponseCurve::read_csv(&p)?),
        None => raw.map(|p| p.map(|v| v as f64 / 255.0)),
    };
    let (w, h) = ambient.dims();
    let fit_cfg = cfg.fit.fit_config(w, h);
    let model = cluster_image(&ambient, &fit_cfg.cluster)?;
    let dir = out_dir(&cfg, out);
    create_dir(&dir)?;
    let labels = svbrdf_core::grid::Grid::from_vec(w, h, model.labels.clone())?;
    if model.k > u16::MAX as usize + 1 {
        return Err(Error::InvalidInput("label map needs more than 16 bits".into()));
    }
    write_gray16(&dir.join("labels.png"), &labels.map(|&l| l as u16))?;
    write_rgb8(&dir.join("labels_palette.png"), &label_palette(&labels))?;
    write_json(
        &dir.join("clusters.json"),
        &json!({
            "k": model.k,
            "gamma": model.gamma,
            "iterations": model.iterations,
            "cost_history": model.cost_history,
            "sizes": model.cluster_sizes(),
        }),
    )?;
    println!("{} clusters after {} iterations; wrote {}", model.k, model.iterations, dir.display());
    Ok(())
}
