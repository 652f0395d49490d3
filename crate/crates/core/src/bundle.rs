//! On-disk svBRDF bundle: 16-bit PNG parameter maps, float EXR height map and
//! a JSON sidecar with the global parameters and capture metadata.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::MaterialSolution;
use crate::geometry::{SceneGeometry, Vec3};
use crate::grid::Grid;
use crate::imageio::{
    decode_signed, decode_unit, encode_signed, encode_unit, read_exr_gray, read_gray16, read_rgb16,
    write_exr_gray, write_gray16, write_rgb16,
};

pub const BUNDLE_VERSION: u32 = 1;

pub const BASE_COLOR_FILE: &str = "base_color.png";
pub const SPECULAR_FILE: &str = "specular.png";
pub const SPECULAR_TINT_FILE: &str = "specular_tint.png";
pub const ANISOTROPIC_FILE: &str = "anisotropic.png";
pub const ANISO_AXIS_FILE: &str = "aniso_axis.png";
pub const NORMAL_FILE: &str = "normal.png";
pub const TANGENT_FILE: &str = "tangent.png";
pub const LABELS_FILE: &str = "labels.png";
pub const HEIGHT_FILE: &str = "height.exr";
pub const META_FILE: &str = "bundle.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BundleMeta {
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub roughness: f64,
    pub metallic: bool,
    /// Light intensity in the normalized frame.
    pub light_intensity: f64,
    /// Camera-to-sample distance in metres.
    pub r_perp_m: f64,
    /// Light position in the normalized frame.
    pub light_pos: [f64; 3],
    pub pixel_pitch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvbrdfBundle {
    pub meta: BundleMeta,
    pub solution: MaterialSolution,
}

impl SvbrdfBundle {
    pub fn new(solution: MaterialSolution, geom: &SceneGeometry) -> Self {
        let (width, height) = solution.dims();
        SvbrdfBundle {
            meta: BundleMeta {
                version: BUNDLE_VERSION,
                width,
                height,
                roughness: solution.roughness,
                metallic: solution.metallic,
                light_intensity: geom.light_intensity,
                r_perp_m: geom.r_perp,
                light_pos: [geom.light_pos.x, geom.light_pos.y, geom.light_pos.z],
                pixel_pitch: geom.pixel_pitch,
            },
            solution,
        }
    }

    /// Capture geometry recorded in the sidecar.
    pub fn geometry(&self) -> Result<SceneGeometry> {
        let m = &self.meta;
        SceneGeometry::new(Vec3::from(m.light_pos), m.pixel_pitch, m.r_perp_m, m.light_intensity)
    }

    /// Copy with unit normals and tangents re-orthogonalized against them,
    /// undoing the drift introduced by 16-bit quantization.
    pub fn normalized_solution(&self) -> MaterialSolution {
        let mut s = self.solution.clone();
        let normals = s.normals.map(|n| n.normalize());
        let tangents: Vec<Vec3> = normals
            .iter()
            .zip(s.tangents.iter())
            .map(|(n, t)| (t - n * n.dot(t)).normalize())
            .collect();
        s.tangents = Grid::from_vec(normals.width(), normals.height(), tangents).expect("same size");
        s.normals = normals;
        s
    }
}

fn scalar_map(g: &Grid<f64>) -> Grid<u16> {
    g.map(|&v| encode_unit(v))
}

fn vector_map(g: &Grid<Vec3>) -> Grid<[u16; 3]> {
    g.map(|v| [encode_signed(v.x), encode_signed(v.y), encode_signed(v.z)])
}

pub fn export_bundle(bundle: &SvbrdfBundle, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let s = &bundle.solution;
    if s.labels.iter().any(|&l| l > u16::MAX as u32) {
        return Err(Error::invalid("label map needs more than 16 bits"));
    }
    write_rgb16(&dir.join(BASE_COLOR_FILE), &s.base_color.map(|c| c.map(encode_unit)))?;
    write_gray16(&dir.join(SPECULAR_FILE), &scalar_map(&s.specular))?;
    write_gray16(&dir.join(SPECULAR_TINT_FILE), &scalar_map(&s.specular_tint))?;
    write_gray16(&dir.join(ANISOTROPIC_FILE), &scalar_map(&s.anisotropic))?;
    write_gray16(&dir.join(ANISO_AXIS_FILE), &scalar_map(&s.aniso_axis))?;
    write_rgb16(&dir.join(NORMAL_FILE), &vector_map(&s.normals))?;
    write_rgb16(&dir.join(TANGENT_FILE), &vector_map(&s.tangents))?;
    write_gray16(&dir.join(LABELS_FILE), &s.labels.map(|&l| l as u16))?;
    write_exr_gray(&dir.join(HEIGHT_FILE), &s.height)?;
    let meta_path = dir.join(META_FILE);
    let json = serde_json::to_string_pretty(&bundle.meta).expect("metadata serializes");
    std::fs::write(&meta_path, json).map_err(|e| Error::io(&meta_path, e))
}

/// Load a bundle. Maps are decoded as stored; see
/// [`SvbrdfBundle::normalized_solution`] for rendering.
pub fn import_bundle(dir: &Path) -> Result<SvbrdfBundle> {
    let meta_path = dir.join(META_FILE);
    let text = std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: BundleMeta = serde_json::from_str(&text).map_err(|e| Error::format(&meta_path, e))?;
    if meta.version != BUNDLE_VERSION {
        return Err(Error::format(&meta_path, format!("unsupported bundle version {}", meta.version)));
    }
    let dims = (meta.width, meta.height);
    let check = |name: &str, d: (usize, usize)| {
        if d != dims {
            Err(Error::format(dir.join(name), format!("size {d:?} differs from {dims:?}")))
        } else {
            Ok(())
        }
    };
    let scalar = |name: &str| -> Result<Grid<f64>> {
        let g = read_gray16(&dir.join(name))?;
        check(name, g.dims())?;
        Ok(g.map(|&q| decode_unit(q)))
    };
    let vector = |name: &str| -> Result<Grid<Vec3>> {
        let g = read_rgb16(&dir.join(name))?;
        check(name, g.dims())?;
        Ok(g.map(|q| Vec3::new(decode_signed(q[0]), decode_signed(q[1]), decode_signed(q[2]))))
    };
    let base = read_rgb16(&dir.join(BASE_COLOR_FILE))?;
    check(BASE_COLOR_FILE, base.dims())?;
    let labels = read_gray16(&dir.join(LABELS_FILE))?;
    check(LABELS_FILE, labels.dims())?;
    let height = read_exr_gray(&dir.join(HEIGHT_FILE))?;
    check(HEIGHT_FILE, height.dims())?;
    let solution = MaterialSolution {
        base_color: base.map(|c| c.map(decode_unit)),
        specular: scalar(SPECULAR_FILE)?,
        specular_tint: scalar(SPECULAR_TINT_FILE)?,
        anisotropic: scalar(ANISOTROPIC_FILE)?,
        aniso_axis: scalar(ANISO_AXIS_FILE)?,
        normals: vector(NORMAL_FILE)?,
        tangents: vector(TANGENT_FILE)?,
        height,
        roughness: meta.roughness,
        metallic: meta.metallic,
        labels: labels.map(|&l| l as u32),
    };
    Ok(SvbrdfBundle { meta, solution })
}
