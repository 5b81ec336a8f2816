//! Python bindings for the core library. Wrapper classes hold the Rust
//! values; functionals return plain dicts mirroring the CLI report fields,
//! so results serialize with `json.dumps` unchanged.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use pyo3::IntoPyObjectExt;
use serde_json::Value;
use slicelab_core as sl;

fn perr(e: sl::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_mode(mode: &str) -> PyResult<sl::SliceMode> {
    match mode {
        "central" => Ok(sl::SliceMode::Central),
        "affine" => Ok(sl::SliceMode::Affine),
        other => Err(PyValueError::new_err(format!(
            "mode must be central or affine, got `{other}`"
        ))),
    }
}

fn status_str(s: sl::Status) -> &'static str {
    match s {
        sl::Status::Ok => "ok",
        sl::Status::ToleranceNotMet => "tolerance_not_met",
    }
}

fn vwe_dict<'py>(py: Python<'py>, v: &sl::ValueWithError) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("value", v.value)?;
    d.set_item("std_error", v.std_error)?;
    d.set_item("samples", v.samples_used)?;
    d.set_item("status", status_str(v.status))?;
    Ok(d)
}

fn json_to_py(py: Python<'_>, v: &Value) -> PyResult<Py<PyAny>> {
    Ok(match v {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py_any(py)?,
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py_any(py)?
            } else if let Some(u) = n.as_u64() {
                u.into_py_any(py)?
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py_any(py)?
            }
        }
        Value::String(s) => s.into_py_any(py)?,
        Value::Array(a) => {
            let list = PyList::empty(py);
            for item in a {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py_any(py)?
        }
        Value::Object(o) => {
            let d = PyDict::new(py);
            for (k, val) in o {
                d.set_item(k, json_to_py(py, val)?)?;
            }
            d.into_py_any(py)?
        }
    })
}

// ---------------------------------------------------------------------------
// Wrapped types
// ---------------------------------------------------------------------------

/// Symmetric star body defined by its gauge.
#[pyclass(name = "StarBody", frozen, from_py_object)]
#[derive(Clone)]
struct PyStarBody {
    inner: sl::StarBody,
}

#[pymethods]
impl PyStarBody {
    /// Parse a body spec, e.g. {"type":"cube","n":3,"half_side":1.0}.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = sl::body_from_json(text).map_err(perr)?;
        Ok(PyStarBody { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (n, q, scale = 1.0))]
    fn lq_ball(n: usize, q: f64, scale: f64) -> PyResult<Self> {
        Ok(PyStarBody { inner: sl::StarBody::lq_ball(n, q, scale).map_err(perr)? })
    }

    #[staticmethod]
    fn cube(n: usize, half_side: f64) -> PyResult<Self> {
        Ok(PyStarBody { inner: sl::StarBody::cube(n, half_side).map_err(perr)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, scale = 1.0))]
    fn cross_polytope(n: usize, scale: f64) -> PyResult<Self> {
        Ok(PyStarBody { inner: sl::StarBody::cross_polytope(n, scale).map_err(perr)? })
    }

    #[staticmethod]
    fn ellipsoid(axes: Vec<f64>) -> PyResult<Self> {
        Ok(PyStarBody { inner: sl::StarBody::ellipsoid(&axes).map_err(perr)? })
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    /// Minkowski functional at x.
    fn gauge(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.gauge(&x).map_err(perr)
    }

    /// Boundary distance 1/gauge in direction theta.
    fn radial(&self, theta: Vec<f64>) -> PyResult<f64> {
        self.inner.radial(&theta).map_err(perr)
    }

    #[pyo3(signature = (cfg = None))]
    fn volume<'py>(
        &self,
        py: Python<'py>,
        cfg: Option<&PyIntegrationConfig>,
    ) -> PyResult<Bound<'py, PyDict>> {
        vwe_dict(py, &self.inner.volume(&cfg_of(cfg)))
    }

    /// Closed-form volume when one is known for this body family.
    fn exact_volume(&self) -> Option<f64> {
        self.inner.exact_volume()
    }

    fn scaled(&self, factor: f64) -> PyResult<Self> {
        Ok(PyStarBody { inner: self.inner.scaled(factor).map_err(perr)? })
    }

    fn __repr__(&self) -> String {
        format!("StarBody(dim={})", self.inner.dim())
    }
}

/// Nonnegative even weight function on R^n.
#[pyclass(name = "Density", frozen, from_py_object)]
#[derive(Clone)]
struct PyDensity {
    inner: sl::Density,
}

#[pymethods]
impl PyDensity {
    /// Parse a density spec at dimension n, e.g. {"type":"gaussian","sigma":1.0}.
    #[staticmethod]
    fn from_json(text: &str, n: usize) -> PyResult<Self> {
        Ok(PyDensity { inner: sl::density_from_json(text, n).map_err(perr)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, c = 1.0))]
    fn constant(n: usize, c: f64) -> PyResult<Self> {
        Ok(PyDensity { inner: sl::Density::constant(n, c).map_err(perr)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, sigma = 1.0))]
    fn gaussian(n: usize, sigma: f64) -> PyResult<Self> {
        Ok(PyDensity { inner: sl::Density::gaussian(n, sigma).map_err(perr)? })
    }

    #[staticmethod]
    fn radial_power(n: usize, alpha: f64) -> PyResult<Self> {
        Ok(PyDensity { inner: sl::Density::radial_power(n, alpha).map_err(perr)? })
    }

    #[staticmethod]
    #[pyo3(signature = (n, sigma = 1.0))]
    fn exp_l1(n: usize, sigma: f64) -> PyResult<Self> {
        Ok(PyDensity { inner: sl::Density::exp_l1(n, sigma).map_err(perr)? })
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eval(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.eval(&x).map_err(perr)
    }

    fn __repr__(&self) -> String {
        format!("Density(dim={})", self.inner.dim())
    }
}

/// Quadrature parameters shared by every functional.
#[pyclass(name = "IntegrationConfig", from_py_object)]
#[derive(Clone)]
struct PyIntegrationConfig {
    inner: sl::IntegrationConfig,
}

fn cfg_of(cfg: Option<&PyIntegrationConfig>) -> sl::IntegrationConfig {
    cfg.map(|c| c.inner.clone()).unwrap_or_default()
}

fn method_from_str(s: &str) -> PyResult<sl::Method> {
    match s {
        "mc" => Ok(sl::Method::Mc),
        "qmc" => Ok(sl::Method::Qmc),
        "product_polar" => Ok(sl::Method::ProductPolar),
        "grid1d" => Ok(sl::Method::Grid1d),
        other => Err(PyValueError::new_err(format!(
            "method must be one of mc|qmc|product_polar|grid1d, got `{other}`"
        ))),
    }
}

fn method_str(m: sl::Method) -> &'static str {
    match m {
        sl::Method::Mc => "mc",
        sl::Method::Qmc => "qmc",
        sl::Method::ProductPolar => "product_polar",
        sl::Method::Grid1d => "grid1d",
    }
}

#[pymethods]
impl PyIntegrationConfig {
    #[new]
    #[pyo3(signature = (seed = None, method = None, sphere_samples = None, mc_samples = None,
                        radial_nodes = None, batch_size = None, rel_tol_target = None))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        seed: Option<u64>,
        method: Option<&str>,
        sphere_samples: Option<usize>,
        mc_samples: Option<usize>,
        radial_nodes: Option<usize>,
        batch_size: Option<usize>,
        rel_tol_target: Option<f64>,
    ) -> PyResult<Self> {
        let mut inner = sl::IntegrationConfig::default();
        if let Some(v) = seed {
            inner.seed = v;
        }
        if let Some(v) = method {
            inner.method = method_from_str(v)?;
        }
        if let Some(v) = sphere_samples {
            inner.sphere_samples = v;
        }
        if let Some(v) = mc_samples {
            inner.mc_samples = v;
        }
        if let Some(v) = radial_nodes {
            inner.radial_nodes = v;
        }
        if let Some(v) = batch_size {
            inner.batch_size = v;
        }
        if let Some(v) = rel_tol_target {
            inner.rel_tol_target = v;
        }
        Ok(PyIntegrationConfig { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: sl::IntegrationConfig = serde_json::from_str(text)
            .map_err(|e| PyValueError::new_err(format!("integration config: {e}")))?;
        Ok(PyIntegrationConfig { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, v: u64) {
        self.inner.seed = v;
    }

    #[getter]
    fn method(&self) -> &'static str {
        method_str(self.inner.method)
    }

    #[setter]
    fn set_method(&mut self, v: &str) -> PyResult<()> {
        self.inner.method = method_from_str(v)?;
        Ok(())
    }

    #[getter]
    fn sphere_samples(&self) -> usize {
        self.inner.sphere_samples
    }

    #[setter]
    fn set_sphere_samples(&mut self, v: usize) {
        self.inner.sphere_samples = v;
    }

    #[getter]
    fn mc_samples(&self) -> usize {
        self.inner.mc_samples
    }

    #[setter]
    fn set_mc_samples(&mut self, v: usize) {
        self.inner.mc_samples = v;
    }

    #[getter]
    fn radial_nodes(&self) -> usize {
        self.inner.radial_nodes
    }

    #[setter]
    fn set_radial_nodes(&mut self, v: usize) {
        self.inner.radial_nodes = v;
    }

    #[getter]
    fn batch_size(&self) -> usize {
        self.inner.batch_size
    }

    #[setter]
    fn set_batch_size(&mut self, v: usize) {
        self.inner.batch_size = v;
    }

    #[getter]
    fn rel_tol_target(&self) -> f64 {
        self.inner.rel_tol_target
    }

    #[setter]
    fn set_rel_tol_target(&mut self, v: f64) {
        self.inner.rel_tol_target = v;
    }

    fn __repr__(&self) -> String {
        format!(
            "IntegrationConfig(seed={}, method={}, sphere_samples={}, mc_samples={})",
            self.inner.seed,
            method_str(self.inner.method),
            self.inner.sphere_samples,
            self.inner.mc_samples
        )
    }
}

/// A body paired with the direction measure certifying its moment class.
#[pyclass(name = "Witness", frozen, from_py_object)]
#[derive(Clone)]
struct PyWitness {
    inner: sl::Witness,
}

#[pymethods]
impl PyWitness {
    /// lq ball of radius scale, self-certified at exponent p = q.
    #[staticmethod]
    #[pyo3(signature = (n, q, scale = 1.0))]
    fn lq_ball(n: usize, q: f64, scale: f64) -> PyResult<Self> {
        Ok(PyWitness { inner: sl::Witness::lp_ball(n, q, scale).map_err(perr)? })
    }

    /// Euclidean ball; certifies any exponent p >= 1.
    #[staticmethod]
    #[pyo3(signature = (n, p, radius = 1.0))]
    fn euclidean_ball(n: usize, p: f64, radius: f64) -> PyResult<Self> {
        Ok(PyWitness { inner: sl::Witness::euclidean_ball(n, p, radius).map_err(perr)? })
    }

    /// Axis-aligned ellipsoid; certifies any exponent p >= 1.
    #[staticmethod]
    fn ellipsoid(axes: Vec<f64>, p: f64) -> PyResult<Self> {
        Ok(PyWitness { inner: sl::Witness::ellipsoid(&axes, p).map_err(perr)? })
    }

    #[getter]
    fn tag(&self) -> String {
        self.inner.tag.clone()
    }

    /// The exponent this witness certifies.
    #[getter]
    fn p(&self) -> f64 {
        self.inner.p()
    }

    fn __repr__(&self) -> String {
        format!("Witness({})", self.inner.tag)
    }
}

// ---------------------------------------------------------------------------
// Functionals
// ---------------------------------------------------------------------------

/// Directional absolute moment: integral of |<x, xi>|^p f(x) over the body.
#[pyfunction]
#[pyo3(signature = (body, density, p, xi, cfg = None))]
fn moment<'py>(
    py: Python<'py>,
    body: &PyStarBody,
    density: &PyDensity,
    p: f64,
    xi: Vec<f64>,
    cfg: Option<&PyIntegrationConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let v = sl::moment(&body.inner, &density.inner, p, &xi, &cfg_of(cfg)).map_err(perr)?;
    vwe_dict(py, &v)
}

/// Minimum of the directional moment over the sphere (multi-start search).
#[pyfunction]
#[pyo3(signature = (body, density, p, cfg = None))]
fn min_moment<'py>(
    py: Python<'py>,
    body: &PyStarBody,
    density: &PyDensity,
    p: f64,
    cfg: Option<&PyIntegrationConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = sl::min_moment(&body.inner, &density.inner, p, &cfg_of(cfg)).map_err(perr)?;
    let d = PyDict::new(py);
    d.set_item("direction", r.direction)?;
    d.set_item("value", vwe_dict(py, &r.value)?)?;
    d.set_item("p", r.p)?;
    d.set_item("normalized_gamma", r.normalized_gamma)?;
    d.set_item("start_spread", r.start_spread)?;
    Ok(d)
}

/// Normalized min-moment ratio (the gamma constant of the body/density pair).
#[pyfunction]
#[pyo3(signature = (body, density, p, cfg = None))]
fn gamma_ratio(
    body: &PyStarBody,
    density: &PyDensity,
    p: f64,
    cfg: Option<&PyIntegrationConfig>,
) -> PyResult<f64> {
    sl::gamma_ratio(&body.inner, &density.inner, p, &cfg_of(cfg)).map_err(perr)
}

/// Supremum of hyperplane-section integrals of the density.
#[pyfunction]
#[pyo3(signature = (body, density, mode = "central", cfg = None))]
fn max_section<'py>(
    py: Python<'py>,
    body: &PyStarBody,
    density: &PyDensity,
    mode: &str,
    cfg: Option<&PyIntegrationConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = sl::max_section(&body.inner, &density.inner, parse_mode(mode)?, &cfg_of(cfg))
        .map_err(perr)?;
    let d = PyDict::new(py);
    d.set_item("direction", r.direction)?;
    d.set_item("offset", r.offset)?;
    d.set_item("value", vwe_dict(py, &r.value)?)?;
    Ok(d)
}

/// Slicing constant: mass / (max section * |K|^{1/n}).
#[pyfunction]
#[pyo3(signature = (body, density, mode = "central", cfg = None))]
fn slicing_constant<'py>(
    py: Python<'py>,
    body: &PyStarBody,
    density: &PyDensity,
    mode: &str,
    cfg: Option<&PyIntegrationConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = sl::slicing_constant(&body.inner, &density.inner, parse_mode(mode)?, &cfg_of(cfg))
        .map_err(perr)?;
    let d = PyDict::new(py);
    d.set_item("s_hat", r.s_hat)?;
    d.set_item("central_constant", r.central_constant)?;
    d.set_item("affine_constant", r.affine_constant)?;
    d.set_item("maximizing_direction", r.maximizing_direction)?;
    d.set_item("maximizing_offset", r.maximizing_offset)?;
    d.set_item("max_section", vwe_dict(py, &r.max_section)?)?;
    d.set_item("mass", vwe_dict(py, &r.mass)?)?;
    d.set_item("volume", vwe_dict(py, &r.volume)?)?;
    Ok(d)
}

/// Sup-section moment bound along xi: moment <= sup-section scaled mass
/// power term; returns both sides and whether the inequality holds.
#[pyfunction]
#[pyo3(signature = (body, density, p, xi, cfg = None))]
fn section_moment_bound<'py>(
    py: Python<'py>,
    body: &PyStarBody,
    density: &PyDensity,
    p: f64,
    xi: Vec<f64>,
    cfg: Option<&PyIntegrationConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = sl::section_moment_bound(&body.inner, &density.inner, p, &xi, &cfg_of(cfg))
        .map_err(perr)?;
    let d = PyDict::new(py);
    d.set_item("lhs", r.lhs)?;
    d.set_item("rhs", r.rhs)?;
    d.set_item("margin", r.margin)?;
    d.set_item("combined_error", r.combined_error)?;
    d.set_item("holds", r.holds)?;
    d.set_item("sup_section", vwe_dict(py, &r.sup_section)?)?;
    d.set_item("sup_offset", r.sup_offset)?;
    d.set_item("moment", vwe_dict(py, &r.moment)?)?;
    d.set_item("mass", vwe_dict(py, &r.mass)?)?;
    d.set_item("p", r.p)?;
    Ok(d)
}

/// Normalized q-moment functional of a [0,1]-valued profile (JSON spec);
/// non-decreasing in q.
#[pyfunction]
fn moment_functional(profile: &str, q: f64) -> PyResult<f64> {
    let spec = sl::ProfileSpec::from_json(profile).map_err(perr)?;
    let g = spec.build().map_err(perr)?;
    sl::moment_functional(&g, q).map_err(perr)
}

/// Outer-volume-ratio distance upper bound via containment witnesses.
#[pyfunction]
#[pyo3(signature = (body, p, witnesses, cfg = None))]
fn dovr_upper<'py>(
    py: Python<'py>,
    body: &PyStarBody,
    p: f64,
    witnesses: Vec<PyWitness>,
    cfg: Option<&PyIntegrationConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let ws: Vec<sl::Witness> = witnesses.into_iter().map(|w| w.inner).collect();
    let r = sl::dovr_upper(&body.inner, p, &ws, &cfg_of(cfg)).map_err(perr)?;
    let d = PyDict::new(py);
    d.set_item("dovr_upper", r.dovr_upper)?;
    d.set_item("best_witness_tag", r.best_witness_tag)?;
    d.set_item("scaling_used", r.scaling_used)?;
    d.set_item("dbm_upper", r.dbm_upper)?;
    Ok(d)
}

/// Smallest a with D subset M subset aD over homotheties.
#[pyfunction]
#[pyo3(signature = (m, d, cfg = None))]
fn dbm_scaling(m: &PyStarBody, d: &PyStarBody, cfg: Option<&PyIntegrationConfig>) -> PyResult<f64> {
    sl::dbm_scaling(&m.inner, &d.inner, &cfg_of(cfg)).map_err(perr)
}

/// Same bound improved by coordinate-descent over diagonal linear maps;
/// returns (bound, diagonal).
#[pyfunction]
#[pyo3(signature = (m, d, sweeps = 2, cfg = None))]
fn dbm_scaling_refined(
    m: &PyStarBody,
    d: &PyStarBody,
    sweeps: usize,
    cfg: Option<&PyIntegrationConfig>,
) -> PyResult<(f64, Vec<f64>)> {
    sl::dbm_scaling_refined(&m.inner, &d.inner, &cfg_of(cfg), sweeps).map_err(perr)
}

/// Moment-domination mass transfer: grid-checks the directional moment
/// hypothesis, then compares masses after the homothety factor to D.
#[pyfunction]
#[pyo3(signature = (k, m, density, p, d, cfg = None))]
fn moment_domination<'py>(
    py: Python<'py>,
    k: &PyStarBody,
    m: &PyStarBody,
    density: &PyDensity,
    p: f64,
    d: &PyStarBody,
    cfg: Option<&PyIntegrationConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = sl::moment_domination(&k.inner, &m.inner, &density.inner, p, &d.inner, &cfg_of(cfg))
        .map_err(perr)?;
    let out = PyDict::new(py);
    let status = match r.status {
        sl::DominationStatus::Ok => "ok",
        sl::DominationStatus::HypothesisViolated => "hypothesis_violated",
    };
    out.set_item("status", status)?;
    out.set_item("worst_margin", r.worst_margin)?;
    out.set_item("worst_direction", r.worst_direction)?;
    out.set_item("worst_error", r.worst_error)?;
    out.set_item("grid_size", r.grid_size)?;
    out.set_item("scaling", r.scaling)?;
    out.set_item("mass_k", vwe_dict(py, &r.mass_k)?)?;
    out.set_item("mass_m", vwe_dict(py, &r.mass_m)?)?;
    out.set_item("conclusion_lhs", r.conclusion_lhs)?;
    out.set_item("conclusion_rhs", r.conclusion_rhs)?;
    out.set_item("conclusion_error", r.conclusion_error)?;
    out.set_item("conclusion_holds", r.conclusion_holds)?;
    out.set_item("p", r.p)?;
    Ok(out)
}

/// Spherical-mean convexity check for the gauge.
#[pyfunction]
#[pyo3(signature = (body, p, cfg = None))]
fn jensen_check<'py>(
    py: Python<'py>,
    body: &PyStarBody,
    p: f64,
    cfg: Option<&PyIntegrationConfig>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = sl::jensen_check(&body.inner, p, &cfg_of(cfg)).map_err(perr)?;
    let d = PyDict::new(py);
    d.set_item("lhs", r.lhs)?;
    d.set_item("rhs", r.rhs)?;
    d.set_item("lhs_error", r.lhs_error)?;
    d.set_item("rhs_error", r.rhs_error)?;
    d.set_item("holds", r.holds)?;
    d.set_item("p", r.p)?;
    Ok(d)
}

/// Run the bundled verification matrix; returns the summary as a dict.
#[pyfunction]
#[pyo3(signature = (seed = 0, budget = "quick"))]
fn verify_suite(py: Python<'_>, seed: u64, budget: &str) -> PyResult<Py<PyAny>> {
    let profile: sl::BudgetProfile = budget.parse().map_err(PyValueError::new_err)?;
    let summary = py.detach(|| sl::verify_suite(seed, profile));
    json_to_py(py, &summary.to_json_value())
}

#[pymodule]
fn slicelab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStarBody>()?;
    m.add_class::<PyDensity>()?;
    m.add_class::<PyIntegrationConfig>()?;
    m.add_class::<PyWitness>()?;
    m.add_function(wrap_pyfunction!(moment, m)?)?;
    m.add_function(wrap_pyfunction!(min_moment, m)?)?;
    m.add_function(wrap_pyfunction!(gamma_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(max_section, m)?)?;
    m.add_function(wrap_pyfunction!(slicing_constant, m)?)?;
    m.add_function(wrap_pyfunction!(section_moment_bound, m)?)?;
    m.add_function(wrap_pyfunction!(moment_functional, m)?)?;
    m.add_function(wrap_pyfunction!(dovr_upper, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(dbm_scaling_refined, m)?)?;
    m.add_function(wrap_pyfunction!(moment_domination, m)?)?;
    m.add_function(wrap_pyfunction!(jensen_check, m)?)?;
    m.add_function(wrap_pyfunction!(verify_suite, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
