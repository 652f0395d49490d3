//! Python bindings for the SVBRDF capture and fitting library.

use std::path::PathBuf;

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use svbrdf_core::brdf::{eval_disney as core_eval_disney, DisneyParams, ShadingFrame};
use svbrdf_core::bundle::{export_bundle, import_bundle, SvbrdfBundle};
use svbrdf_core::fitting::{run_pipeline, FitConfig};
use svbrdf_core::geometry::{self, CameraSpec, SceneGeometry, Vec3};
use svbrdf_core::grid::{Grid, Rgb};
use svbrdf_core::radiometry::ResponseCurve;
use svbrdf_core::synth::{synth_generate, SynthSpec};
use svbrdf_core::{heightfield, fitting, preview, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidInput(_) | Error::Degenerate(_) | Error::Config(_) => PyValueError::new_err(e.to_string()),
        Error::Io { .. } | Error::Format { .. } => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn flatten_rgb(g: &Grid<Rgb>) -> Vec<f64> {
    g.iter().flat_map(|c| c.iter().copied()).collect()
}

/// Evaluate the BRDF for unit directions `light` and `view` around `normal`.
#[pyfunction]
#[pyo3(signature = (base_color, specular, specular_tint, roughness, anisotropic, aniso_axis, normal, light, view, metallic=false))]
#[allow(clippy::too_many_arguments)]
fn eval_disney(
    base_color: [f64; 3],
    specular: f64,
    specular_tint: f64,
    roughness: f64,
    anisotropic: f64,
    aniso_axis: f64,
    normal: [f64; 3],
    light: [f64; 3],
    view: [f64; 3],
    metallic: bool,
) -> PyResult<[f64; 3]> {
    let params = DisneyParams {
        base_color,
        metallic,
        specular,
        specular_tint,
        roughness,
        anisotropic,
        aniso_axis,
    };
    params.validate().map_err(to_py)?;
    let n = Vec3::from(normal);
    let frame = ShadingFrame::from_axis(n.normalize(), aniso_axis).map_err(to_py)?;
    let (l, v) = (Vec3::from(light).normalize(), Vec3::from(view).normalize());
    Ok(core_eval_disney(&params, &frame, &l, &v))
}

/// Half of the diagonal angle of view in radians.
#[pyfunction]
fn half_aov(f35_mm: f64, width: usize, height: usize) -> PyResult<f64> {
    let cam = CameraSpec::new(f35_mm, width, height).map_err(to_py)?;
    geometry::half_aov(&cam).map_err(to_py)
}

/// Pixel pitch in the normalized frame where the camera sits at unit height.
#[pyfunction]
fn pixel_pitch(f35_mm: f64, width: usize, height: usize) -> PyResult<f64> {
    let cam = CameraSpec::new(f35_mm, width, height).map_err(to_py)?;
    geometry::pixel_pitch(&cam).map_err(to_py)
}

#[pyfunction]
fn depth_curve(s: f64) -> f64 {
    heightfield::depth_curve(s)
}

#[pyfunction]
#[pyo3(signature = (residual, delta_h=fitting::DEFAULT_DELTA_H))]
fn pseudo_huber(residual: f64, delta_h: f64) -> f64 {
    fitting::pseudo_huber(residual, delta_h)
}

/// Per-channel log inverse camera response.
#[pyclass(name = "ResponseCurve", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyResponseCurve {
    inner: ResponseCurve,
}

#[pymethods]
impl PyResponseCurve {
    #[staticmethod]
    fn linear() -> Self {
        PyResponseCurve { inner: ResponseCurve::linear() }
    }

    #[staticmethod]
    fn gamma(gamma: f64) -> PyResult<Self> {
        if !(gamma > 0.0) {
            return Err(PyValueError::new_err("gamma must be positive"));
        }
        Ok(PyResponseCurve { inner: ResponseCurve::gamma(gamma) })
    }

    #[staticmethod]
    fn read_csv(path: PathBuf) -> PyResult<Self> {
        Ok(PyResponseCurve { inner: ResponseCurve::read_csv(&path).map_err(to_py)? })
    }

    fn write_csv(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write_csv(&path).map_err(to_py)
    }

    fn g(&self, channel: usize, z: u8) -> PyResult<f64> {
        if channel > 2 {
            return Err(PyValueError::new_err("channel must be 0, 1 or 2"));
        }
        Ok(self.inner.g(channel, z))
    }

    fn table(&self, channel: usize) -> PyResult<Vec<f64>> {
        if channel > 2 {
            return Err(PyValueError::new_err("channel must be 0, 1 or 2"));
        }
        Ok(self.inner.table(channel).to_vec())
    }
}

/// Fitted or ground-truth material maps with their capture geometry.
#[pyclass(name = "Bundle", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBundle {
    inner: SvbrdfBundle,
}

#[pymethods]
impl PyBundle {
    #[staticmethod]
    fn load(dir: PathBuf) -> PyResult<Self> {
        Ok(PyBundle { inner: import_bundle(&dir).map_err(to_py)? })
    }

    fn save(&self, dir: PathBuf) -> PyResult<()> {
        export_bundle(&self.inner, &dir).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.meta.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.meta.height
    }

    #[getter]
    fn roughness(&self) -> f64 {
        self.inner.meta.roughness
    }

    #[getter]
    fn metallic(&self) -> bool {
        self.inner.meta.metallic
    }

    /// Row-major RGB values, three per pixel.
    fn base_color(&self) -> Vec<f64> {
        flatten_rgb(&self.inner.solution.base_color)
    }

    fn normals(&self) -> Vec<f64> {
        self.inner.solution.normals.iter().flat_map(|n| [n.x, n.y, n.z]).collect()
    }

    fn labels(&self) -> Vec<u32> {
        self.inner.solution.labels.as_slice().to_vec()
    }

    /// Render under the stored light and map to 8-bit RGB, three bytes per pixel.
    fn render_preview(&self, py: Python<'_>, exposure: f64, curve: &PyResponseCurve) -> PyResult<Vec<u8>> {
        let bundle = &self.inner;
        let curve = &curve.inner;
        py.detach(|| {
            let geom = bundle.geometry()?;
            preview::render_preview(bundle, &geom, exposure, curve)
        })
        .map(|img| img.iter().flat_map(|p| p.iter().copied()).collect())
        .map_err(to_py)
    }
}

/// Synthetic capture with known ground truth.
#[pyclass(name = "SynthScene", frozen)]
struct PySynthScene {
    ambient: Grid<Rgb>,
    radiance: Grid<Rgb>,
    geometry: SceneGeometry,
    truth: SvbrdfBundle,
}

#[pymethods]
impl PySynthScene {
    #[new]
    #[pyo3(signature = (size=256, seed=7))]
    fn new(py: Python<'_>, size: usize, seed: u64) -> PyResult<Self> {
        let spec = SynthSpec {
            width: size,
            height: size,
            seed,
            ..SynthSpec::default()
        };
        let scene = py.detach(|| synth_generate(&spec)).map_err(to_py)?;
        Ok(PySynthScene {
            ambient: scene.ambient,
            radiance: scene.radiance,
            geometry: scene.geometry,
            truth: scene.truth,
        })
    }

    #[getter]
    fn truth(&self) -> PyBundle {
        PyBundle { inner: self.truth.clone() }
    }

    fn radiance(&self) -> Vec<f64> {
        flatten_rgb(&self.radiance)
    }

    fn ambient(&self) -> Vec<f64> {
        flatten_rgb(&self.ambient)
    }

    /// Recover material maps from the scene's ambient and point-lit images.
    #[pyo3(signature = (k=16, n_iters=5, seed=0, metallic=false))]
    fn fit(&self, py: Python<'_>, k: usize, n_iters: usize, seed: u64, metallic: bool) -> PyResult<PyBundle> {
        let (w, h) = self.radiance.dims();
        let mut config = FitConfig::for_resolution(w, h, n_iters);
        config.cluster.k = k;
        config.cluster.seed = seed;
        let out = py
            .detach(|| run_pipeline(&self.ambient, &self.radiance, &self.geometry, &config, metallic))
            .map_err(to_py)?;
        Ok(PyBundle { inner: SvbrdfBundle::new(out.solution, &self.geometry) })
    }
}

#[pymodule]
fn svbrdf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(eval_disney, m)?)?;
    m.add_function(wrap_pyfunction!(half_aov, m)?)?;
    m.add_function(wrap_pyfunction!(pixel_pitch, m)?)?;
    m.add_function(wrap_pyfunction!(depth_curve, m)?)?;
    m.add_function(wrap_pyfunction!(pseudo_huber, m)?)?;
    m.add_class::<PyResponseCurve>()?;
    m.add_class::<PyBundle>()?;
    m.add_class::<PySynthScene>()?;
    Ok(())
}
