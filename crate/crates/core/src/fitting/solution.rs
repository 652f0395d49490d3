use crate::brdf::{tangent_from_axis, DisneyParams};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::grid::{Grid, Rgb};

/// Number of per-cluster scalars: baseColor RGB, specular, specularTint,
/// anisotropic, anisoAxis.
pub const CLUSTER_PARAMS: usize = 7;

/// Per-cluster parameter record in optimizer order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    pub base_color: Rgb,
    pub specular: f64,
    pub specular_tint: f64,
    pub anisotropic: f64,
    pub aniso_axis: f64,
}

impl ClusterParams {
    pub fn to_vec(&self) -> [f64; CLUSTER_PARAMS] {
        let b = self.base_color;
        [b[0], b[1], b[2], self.specular, self.specular_tint, self.anisotropic, self.aniso_axis]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        ClusterParams {
            base_color: [x[0], x[1], x[2]],
            specular: x[3],
            specular_tint: x[4],
            anisotropic: x[5],
            aniso_axis: x[6],
        }
    }

    pub fn clamped(&self) -> Self {
        let v = self.to_vec().map(|x| x.clamp(0.0, 1.0));
        Self::from_slice(&v)
    }

    pub fn disney(&self, roughness: f64, metallic: bool) -> DisneyParams {
        DisneyParams {
            base_color: self.base_color,
            metallic,
            specular: self.specular,
            specular_tint: self.specular_tint,
            roughness,
            anisotropic: self.anisotropic,
            aniso_axis: self.aniso_axis,
        }
    }
}

/// Spatially varying maps plus the two global parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MaterialSolution {
    pub base_color: Grid<Rgb>,
    pub specular: Grid<f64>,
    pub specular_tint: Grid<f64>,
    pub anisotropic: Grid<f64>,
    pub aniso_axis: Grid<f64>,
    pub normals: Grid<Vec3>,
    pub tangents: Grid<Vec3>,
    pub height: Grid<f64>,
    pub roughness: f64,
    pub metallic: bool,
    pub labels: Grid<u32>,
}

impl MaterialSolution {
    /// Flat, uniform material of the given size.
    pub fn uniform(width: usize, height: usize, params: &DisneyParams) -> Self {
        let n = Grid::filled(width, height, Vec3::z());
        let mut s = MaterialSolution {
            base_color: Grid::filled(width, height, params.base_color),
            specular: Grid::filled(width, height, params.specular),
            specular_tint: Grid::filled(width, height, params.specular_tint),
            anisotropic: Grid::filled(width, height, params.anisotropic),
            aniso_axis: Grid::filled(width, height, params.aniso_axis),
            tangents: n.clone(),
            normals: n,
            height: Grid::filled(width, height, 0.0),
            roughness: params.roughness,
            metallic: params.metallic,
            labels: Grid::filled(width, height, 0),
        };
        s.update_tangents().expect("flat normals face the camera");
        s
    }

    pub fn dims(&self) -> (usize, usize) {
        self.base_color.dims()
    }

    pub fn params_at(&self, index: usize) -> DisneyParams {
        DisneyParams {
            base_color: self.base_color.as_slice()[index],
            metallic: self.metallic,
            specular: self.specular.as_slice()[index],
            specular_tint: self.specular_tint.as_slice()[index],
            roughness: self.roughness,
            anisotropic: self.anisotropic.as_slice()[index],
            aniso_axis: self.aniso_axis.as_slice()[index],
        }
    }

    pub fn cluster_params_at(&self, index: usize) -> ClusterParams {
        ClusterParams {
            base_color: self.base_color.as_slice()[index],
            specular: self.specular.as_slice()[index],
            specular_tint: self.specular_tint.as_slice()[index],
            anisotropic: self.anisotropic.as_slice()[index],
            aniso_axis: self.aniso_axis.as_slice()[index],
        }
    }

    pub fn set_cluster_params(&mut self, index: usize, p: &ClusterParams) {
        self.base_color.as_mut_slice()[index] = p.base_color;
        self.specular.as_mut_slice()[index] = p.specular;
        self.specular_tint.as_mut_slice()[index] = p.specular_tint;
        self.anisotropic.as_mut_slice()[index] = p.anisotropic;
        self.aniso_axis.as_mut_slice()[index] = p.aniso_axis;
    }

    /// Recompute every tangent from the current normal and anisoAxis maps.
    pub fn update_tangents(&mut self) -> Result<()> {
        let data = self
            .normals
            .iter()
            .zip(self.aniso_axis.iter())
            .map(|(n, &a)| tangent_from_axis(n, a))
            .collect::<Result<Vec<_>>>()?;
        let (w, h) = self.dims();
        self.tangents = Grid::from_vec(w, h, data)?;
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.dims();
        let same = self.specular.dims() == (w, h)
            && self.specular_tint.dims() == (w, h)
            && self.anisotropic.dims() == (w, h)
            && self.aniso_axis.dims() == (w, h)
            && self.normals.dims() == (w, h)
            && self.tangents.dims() == (w, h)
            && self.height.dims() == (w, h)
            && self.labels.dims() == (w, h);
        if !same {
            return Err(Error::invalid("solution maps differ in size"));
        }
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !(self.base_color.iter().all(|c| c.iter().all(|&v| unit(v)))
            && self.specular.iter().all(|&v| unit(v))
            && self.specular_tint.iter().all(|&v| unit(v))
            && self.anisotropic.iter().all(|&v| unit(v))
            && self.aniso_axis.iter().all(|&v| unit(v))
            && unit(self.roughness))
        {
            return Err(Error::invalid("parameter map value outside [0, 1]"));
        }
        for (n, t) in self.normals.iter().zip(self.tangents.iter()) {
            if (n.norm() - 1.0).abs() > 1e-6 || (t.norm() - 1.0).abs() > 1e-6 || n.dot(t).abs() > 1e-6 {
                return Err(Error::invalid("normal/tangent maps are not orthonormal"));
            }
        }
        Ok(())
    }
}
