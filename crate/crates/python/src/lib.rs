//! Python bindings for `weakval_core`.
//!
//! Invalid arguments and malformed files raise `ValueError`, I/O failures
//! raise `OSError`, and every other model failure (divergent weak value,
//! vanishing post-selection, failed inversion, ...) raises `weakval.WeakvalError`.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyOSError, PyValueError};
use pyo3::prelude::*;
use weakval_core as wv;
use weakval_core::meter::BEAM_SIGMA;

create_exception!(weakval, WeakvalError, PyException);

fn check<T>(r: wv::Result<T>) -> PyResult<T> {
    r.map_err(|e| match e {
        wv::Error::InvalidArgument(_) | wv::Error::Parse { .. } => PyValueError::new_err(e.to_string()),
        wv::Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => WeakvalError::new_err(e.to_string()),
    })
}

fn perturbative(order: u32) -> PyResult<wv::PerturbativeOrder> {
    check(wv::PerturbativeOrder::try_from(order))
}

fn interval(i: Option<wv::Interval>) -> Option<(f64, f64)> {
    i.map(|i| (i.lo, i.hi))
}

fn axis(name: &str) -> PyResult<wv::Axis> {
    match name {
        "H" | "h" => Ok(wv::Axis::H),
        "V" | "v" => Ok(wv::Axis::V),
        _ => Err(PyValueError::new_err(format!("axis must be 'H' or 'V', got {name:?}"))),
    }
}

#[pyclass(name = "PolarizationState", module = "weakval", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyState(wv::PolarizationState);

#[pymethods]
impl PyState {
    /// `cos(theta)|H> + sin(theta)|V>`.
    #[staticmethod]
    fn linear(theta: f64) -> PyResult<Self> {
        check(wv::PolarizationState::linear(theta)).map(Self)
    }

    /// Normalizes the amplitude pair `(h, v)`.
    #[staticmethod]
    fn normalized(amp_h: Complex64, amp_v: Complex64) -> PyResult<Self> {
        check(wv::PolarizationState::normalized(amp_h, amp_v)).map(Self)
    }

    #[getter]
    fn amp_h(&self) -> Complex64 {
        self.0.amp_h()
    }

    #[getter]
    fn amp_v(&self) -> Complex64 {
        self.0.amp_v()
    }

    /// `<self|other>`.
    fn inner(&self, other: &PyState) -> Complex64 {
        self.0.inner(&other.0)
    }

    fn __repr__(&self) -> String {
        format!("PolarizationState(amp_h={}, amp_v={})", self.0.amp_h(), self.0.amp_v())
    }
}

#[pyclass(name = "CouplingConfig", module = "weakval", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyCoupling(wv::CouplingConfig);

#[pymethods]
impl PyCoupling {
    #[new]
    #[pyo3(signature = (a_x, a_y, sigma = BEAM_SIGMA))]
    fn new(a_x: f64, a_y: f64, sigma: f64) -> PyResult<Self> {
        check(wv::CouplingConfig::new(a_x, a_y, sigma)).map(Self)
    }

    #[staticmethod]
    fn thin() -> Self {
        Self(wv::CouplingConfig::thin())
    }

    #[staticmethod]
    fn thick() -> Self {
        Self(wv::CouplingConfig::thick())
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        wv::CouplingConfig::preset(name)
            .map(Self)
            .ok_or_else(|| PyValueError::new_err(format!("unknown preset {name:?} (expected 'thin' or 'thick')")))
    }

    #[getter]
    fn a_x(&self) -> f64 {
        self.0.a_x()
    }

    #[getter]
    fn a_y(&self) -> f64 {
        self.0.a_y()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.0.sigma()
    }

    #[getter]
    fn g_x(&self) -> f64 {
        self.0.g_x()
    }

    #[getter]
    fn g_y(&self) -> f64 {
        self.0.g_y()
    }

    #[getter]
    fn weak_regime_advisory(&self) -> bool {
        self.0.weak_regime_advisory()
    }

    fn __repr__(&self) -> String {
        format!("CouplingConfig(a_x={}, a_y={}, sigma={})", self.0.a_x(), self.0.a_y(), self.0.sigma())
    }
}

#[pyclass(name = "DetectionConfig", module = "weakval", frozen, skip_from_py_object)]
#[derive(Clone, Copy)]
struct PyDetection(wv::DetectionConfig);

#[pymethods]
impl PyDetection {
    #[new]
    #[pyo3(signature = (
        shots = 1_000_000,
        efficiency = 1.0,
        dark_rate_hz = wv::detector::DEFAULT_DARK_RATE_HZ,
        gate_s = wv::detector::DEFAULT_GATE_S,
        seed = 0,
    ))]
    fn new(shots: u64, efficiency: f64, dark_rate_hz: f64, gate_s: f64, seed: u64) -> PyResult<Self> {
        let det = wv::DetectionConfig { shots, efficiency, dark_rate_hz, gate_s, seed };
        check(det.validate())?;
        Ok(Self(det))
    }

    #[getter]
    fn shots(&self) -> u64 {
        self.0.shots
    }

    #[getter]
    fn efficiency(&self) -> f64 {
        self.0.efficiency
    }

    #[getter]
    fn dark_rate_hz(&self) -> f64 {
        self.0.dark_rate_hz
    }

    #[getter]
    fn gate_s(&self) -> f64 {
        self.0.gate_s
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    fn dark_mean_per_pixel(&self) -> f64 {
        self.0.dark_mean_per_pixel()
    }

    fn __repr__(&self) -> String {
        let d = &self.0;
        format!(
            "DetectionConfig(shots={}, efficiency={}, dark_rate_hz={}, gate_s={}, seed={})",
            d.shots, d.efficiency, d.dark_rate_hz, d.gate_s, d.seed
        )
    }
}

#[pyclass(name = "MeterPrediction", module = "weakval", frozen, get_all)]
struct PyPrediction {
    x_centroid: f64,
    y_centroid: f64,
    postselection_probability: f64,
    order: &'static str,
}

impl From<wv::MeterPrediction> for PyPrediction {
    fn from(p: wv::MeterPrediction) -> Self {
        Self {
            x_centroid: p.x_centroid,
            y_centroid: p.y_centroid,
            postselection_probability: p.postselection_probability,
            order: p.order.as_str(),
        }
    }
}

#[pymethods]
impl PyPrediction {
    fn __repr__(&self) -> String {
        format!(
            "MeterPrediction(x_centroid={}, y_centroid={}, postselection_probability={}, order={:?})",
            self.x_centroid, self.y_centroid, self.postselection_probability, self.order
        )
    }
}

#[pyclass(name = "ProbabilityMap", module = "weakval", frozen, skip_from_py_object)]
struct PyProbabilityMap(wv::ProbabilityMap);

#[pymethods]
impl PyProbabilityMap {
    /// Row-major pixel probabilities, index `j * 32 + i`.
    #[getter]
    fn probabilities(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<f64> {
        in_grid(i, j)?;
        Ok(self.0.get(i, j))
    }

    #[getter]
    fn truncation_mass(&self) -> f64 {
        self.0.truncation_mass
    }

    #[getter]
    fn postselection_probability(&self) -> f64 {
        self.0.postselection_probability
    }

    #[getter]
    fn truncation_correction(&self) -> (f64, f64) {
        self.0.truncation_correction
    }

    #[getter]
    fn beam_center(&self) -> (f64, f64) {
        self.0.grid.beam_center
    }

    fn marginal_x(&self) -> Vec<f64> {
        self.0.marginal_x().to_vec()
    }

    fn marginal_y(&self) -> Vec<f64> {
        self.0.marginal_y().to_vec()
    }

    /// Binned centroid relative to the beam center.
    fn centroid(&self) -> (f64, f64) {
        self.0.centroid()
    }

    fn corrected_centroid(&self) -> (f64, f64) {
        self.0.corrected_centroid()
    }
}

fn in_grid(i: usize, j: usize) -> PyResult<()> {
    if i < wv::detector::GRID_SIZE && j < wv::detector::GRID_SIZE {
        Ok(())
    } else {
        Err(PyValueError::new_err(format!("pixel ({i}, {j}) is outside the 32x32 array")))
    }
}

#[pyclass(name = "CountMap", module = "weakval", frozen, eq)]
#[derive(PartialEq)]
struct PyCountMap(wv::CountMap);

#[pymethods]
impl PyCountMap {
    /// Row-major counts, index `j * 32 + i`.
    #[getter]
    fn counts(&self) -> Vec<u64> {
        self.0.counts.clone()
    }

    fn get(&self, i: usize, j: usize) -> PyResult<u64> {
        in_grid(i, j)?;
        Ok(self.0.get(i, j))
    }

    fn total(&self) -> u64 {
        self.0.total()
    }

    #[getter]
    fn total_signal_expected(&self) -> f64 {
        self.0.total_signal_expected
    }

    #[getter]
    fn detection(&self) -> PyDetection {
        PyDetection(self.0.detection)
    }

    #[getter]
    fn beam_center(&self) -> (f64, f64) {
        self.0.beam_center
    }

    #[getter]
    fn rng(&self) -> String {
        self.0.rng.clone()
    }

    #[getter]
    fn metadata(&self) -> Vec<(String, String)> {
        self.0.metadata.clone()
    }

    fn to_csv(&self) -> String {
        self.0.to_csv()
    }

    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        check(wv::CountMap::from_csv(text)).map(Self)
    }

    fn save(&self, path: std::path::PathBuf) -> PyResult<()> {
        check(self.0.save(path))
    }

    #[staticmethod]
    fn load(path: std::path::PathBuf) -> PyResult<Self> {
        check(wv::CountMap::load(path)).map(Self)
    }
}

#[pyclass(name = "Centroid", module = "weakval", frozen, get_all)]
struct PyCentroid {
    x: f64,
    y: f64,
    stderr_x: f64,
    stderr_y: f64,
    n_used: f64,
}

#[pymethods]
impl PyCentroid {
    fn __repr__(&self) -> String {
        format!(
            "Centroid(x={}, y={}, stderr_x={}, stderr_y={}, n_used={})",
            self.x, self.y, self.stderr_x, self.stderr_y, self.n_used
        )
    }
}

#[pyclass(name = "ShiftCalibration", module = "weakval", frozen, get_all)]
struct PyCalibration {
    a_x: f64,
    a_y: f64,
    a_x_err: f64,
    a_y_err: f64,
}

#[pymethods]
impl PyCalibration {
    fn __repr__(&self) -> String {
        format!(
            "ShiftCalibration(a_x={}, a_y={}, a_x_err={}, a_y_err={})",
            self.a_x, self.a_y, self.a_x_err, self.a_y_err
        )
    }
}

#[pyclass(name = "BiasRow", module = "weakval", frozen, get_all)]
struct PyBiasRow {
    a_true: f64,
    exact: f64,
    order1: f64,
    order3: f64,
    bias1: f64,
    bias3: Option<f64>,
}

#[pyclass(name = "ValidityReport", module = "weakval", frozen, get_all)]
struct PyValidity {
    g: f64,
    epsilon: f64,
    search: (f64, f64),
    region1: (f64, f64),
    order3_hull: (f64, f64),
    region2_lower: Option<(f64, f64)>,
    region2_upper: Option<(f64, f64)>,
    region3_lower: Option<(f64, f64)>,
    region3_upper: Option<(f64, f64)>,
}

#[pyclass(name = "SweepRow", module = "weakval", frozen, get_all)]
struct PySweepRow {
    theta_i: f64,
    theta_f: f64,
    aw_h_true: Option<f64>,
    aw_v_true: Option<f64>,
    x_exact: Option<f64>,
    x_order1: Option<f64>,
    x_order3: Option<f64>,
    y_exact: Option<f64>,
    y_order1: Option<f64>,
    y_order3: Option<f64>,
    x_measured: Option<f64>,
    x_stderr: Option<f64>,
    y_measured: Option<f64>,
    y_stderr: Option<f64>,
    p_postselect: Option<f64>,
    divergent: bool,
}

impl From<&wv::SweepRow> for PySweepRow {
    fn from(r: &wv::SweepRow) -> Self {
        Self {
            theta_i: r.theta_i,
            theta_f: r.theta_f,
            aw_h_true: r.aw_h_true,
            aw_v_true: r.aw_v_true,
            x_exact: r.x_exact,
            x_order1: r.x_order1,
            x_order3: r.x_order3,
            y_exact: r.y_exact,
            y_order1: r.y_order1,
            y_order3: r.y_order3,
            x_measured: r.x_measured,
            x_stderr: r.x_stderr,
            y_measured: r.y_measured,
            y_stderr: r.y_stderr,
            p_postselect: r.p_postselect,
            divergent: r.divergent,
        }
    }
}

/// `<psi_f|Pi_axis|psi_i> / <psi_f|psi_i>`.
#[pyfunction]
#[pyo3(signature = (psi_i, psi_f, axis = "H"))]
fn weak_value(psi_i: &PyState, psi_f: &PyState, axis: &str) -> PyResult<Complex64> {
    let obs = wv::Projector { axis: self::axis(axis)? };
    check(wv::weak_value(obs, &psi_i.0, &psi_f.0)).map(|w| w.value)
}

/// Weak value of the H projector for linear pre- and post-selection angles.
#[pyfunction]
fn weak_value_linear(theta_i: f64, theta_f: f64) -> PyResult<f64> {
    let psi_i = check(wv::PolarizationState::linear(theta_i))?;
    let psi_f = check(wv::PolarizationState::linear(theta_f))?;
    let w = check(wv::weak_value(wv::Projector::H, &psi_i, &psi_f))?;
    check(w.real(wv::polarization::DEFAULT_DIVERGENCE_TOLERANCE))
}

#[pyfunction]
fn postselection_angle_for(target: f64, theta_i: f64) -> PyResult<f64> {
    check(wv::postselection_angle_for(target, theta_i))
}

#[pyfunction]
fn overlap_kappa(shift: f64, sigma: f64) -> PyResult<f64> {
    check(wv::overlap_kappa(shift, sigma))
}

#[pyfunction]
fn shifted_first_moment(shift: f64, sigma: f64) -> PyResult<f64> {
    check(wv::shifted_first_moment(shift, sigma))
}

/// `(zero, shift, cross)` integrals of the two-branch intensity over `[lo, hi]`.
#[pyfunction]
fn bin_integrals(shift: f64, sigma: f64, lo: f64, hi: f64) -> PyResult<(f64, f64, f64)> {
    check(wv::bin_integrals(shift, sigma, lo, hi)).map(|b| (b.zero, b.shift, b.cross))
}

#[pyfunction]
#[pyo3(signature = (weak_value, shift, sigma = BEAM_SIGMA, normalized = true))]
fn exact_meter_single(weak_value: Complex64, shift: f64, sigma: f64, normalized: bool) -> PyResult<f64> {
    let norm = if normalized { wv::Normalization::Normalized } else { wv::Normalization::Unnormalized };
    check(wv::exact_meter_single(weak_value, shift, sigma, norm))
}

#[pyfunction]
#[pyo3(signature = (weak_value, shift, sigma = BEAM_SIGMA, order = 1))]
fn perturbative_meter(weak_value: f64, shift: f64, sigma: f64, order: u32) -> PyResult<f64> {
    check(wv::perturbative_meter(weak_value, shift, sigma, perturbative(order)?))
}

#[pyfunction]
fn saturation_limit(shift: f64) -> f64 {
    wv::saturation_limit(shift)
}

/// Centroids after both crystals; `order` is "exact", 1 or 3.
#[pyfunction]
#[pyo3(signature = (psi_i, psi_f, config, order = None))]
fn sequential_meter(
    psi_i: &PyState,
    psi_f: &PyState,
    config: &PyCoupling,
    order: Option<&Bound<'_, PyAny>>,
) -> PyResult<PyPrediction> {
    let order = match order {
        None => wv::Order::Exact,
        Some(o) if o.extract::<&str>().is_ok_and(|s| s == "exact") => wv::Order::Exact,
        Some(o) => perturbative(o.extract()?)?.into(),
    };
    check(wv::sequential_prediction(&psi_i.0, &psi_f.0, &config.0, order)).map(Into::into)
}

#[pyfunction]
fn sequential_meter_linear(theta_i: f64, theta_f: f64, config: &PyCoupling) -> PyResult<PyPrediction> {
    check(wv::meter::sequential_meter_linear(theta_i, theta_f, &config.0)).map(Into::into)
}

#[pyfunction]
#[pyo3(signature = (centroid, shift, sigma = BEAM_SIGMA, order = 1))]
fn extract_weak_value(centroid: f64, shift: f64, sigma: f64, order: u32) -> PyResult<f64> {
    check(wv::extract_weak_value(centroid, shift, sigma, perturbative(order)?))
}

#[pyfunction]
#[pyo3(signature = (weak_value, shift, sigma = BEAM_SIGMA, order = 1))]
fn normalized_deviation(weak_value: f64, shift: f64, sigma: f64, order: u32) -> PyResult<f64> {
    check(wv::normalized_deviation(weak_value, shift, sigma, perturbative(order)?))
}

#[pyfunction]
fn bias_curve(shift: f64, sigma: f64, grid: Vec<f64>) -> PyResult<Vec<PyBiasRow>> {
    let rows = check(wv::bias_curve(shift, sigma, &grid))?;
    Ok(rows
        .into_iter()
        .map(|r| PyBiasRow {
            a_true: r.a_true,
            exact: r.exact,
            order1: r.order1,
            order3: r.order3,
            bias1: r.bias1,
            bias3: r.bias3,
        })
        .collect())
}

#[pyfunction]
#[pyo3(signature = (
    shift,
    sigma = BEAM_SIGMA,
    epsilon = wv::analysis::DEFAULT_EPSILON,
    search = (wv::analysis::DEFAULT_SEARCH.lo, wv::analysis::DEFAULT_SEARCH.hi),
))]
fn validity_region(shift: f64, sigma: f64, epsilon: f64, search: (f64, f64)) -> PyResult<PyValidity> {
    let search = check(wv::Interval::new(search.0, search.1))?;
    let r = check(wv::validity_region(shift, sigma, epsilon, search))?;
    Ok(PyValidity {
        g: r.g,
        epsilon: r.epsilon,
        search: (r.search.lo, r.search.hi),
        region1: (r.region1.lo, r.region1.hi),
        order3_hull: (r.order3_hull.lo, r.order3_hull.hi),
        region2_lower: interval(r.region2_lower),
        region2_upper: interval(r.region2_upper),
        region3_lower: interval(r.region3_lower),
        region3_upper: interval(r.region3_upper),
    })
}

#[pyfunction]
#[pyo3(signature = (lo, hi, n, theta_i = wv::meter::DIAGONAL_PRESELECTION))]
fn weak_value_grid(lo: f64, hi: f64, n: usize, theta_i: f64) -> PyResult<Vec<f64>> {
    check(wv::weak_value_grid(lo, hi, n, theta_i))
}

fn run_sweep(
    py: Python<'_>,
    theta_i: f64,
    theta_f: Vec<f64>,
    config: &PyCoupling,
    detection: Option<&PyDetection>,
) -> PyResult<Vec<wv::SweepRow>> {
    let config = config.0;
    let mc = detection.map(|d| d.0);
    check(py.detach(|| wv::sweep_postselection(theta_i, &theta_f, &config, mc.as_ref())))
}

/// Evaluates each post-selection angle; with `detection`, also simulates counts.
#[pyfunction]
#[pyo3(signature = (theta_i, theta_f, config, detection = None))]
fn sweep_postselection(
    py: Python<'_>,
    theta_i: f64,
    theta_f: Vec<f64>,
    config: &PyCoupling,
    detection: Option<&PyDetection>,
) -> PyResult<Vec<PySweepRow>> {
    Ok(run_sweep(py, theta_i, theta_f, config, detection)?.iter().map(Into::into).collect())
}

/// Same sweep rendered as CSV, with optional `# key = value` metadata lines.
#[pyfunction]
#[pyo3(signature = (theta_i, theta_f, config, detection = None, metadata = Vec::new()))]
fn sweep_csv(
    py: Python<'_>,
    theta_i: f64,
    theta_f: Vec<f64>,
    config: &PyCoupling,
    detection: Option<&PyDetection>,
    metadata: Vec<(String, String)>,
) -> PyResult<String> {
    let rows = run_sweep(py, theta_i, theta_f, config, detection)?;
    let mut out = Vec::new();
    wv::write_sweep_csv(&mut out, &rows, &metadata).map_err(|e| PyOSError::new_err(e.to_string()))?;
    String::from_utf8(out).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyfunction]
#[pyo3(signature = (psi_i, psi_f, config, beam_center = None))]
fn pixel_probability_map(
    psi_i: &PyState,
    psi_f: &PyState,
    config: &PyCoupling,
    beam_center: Option<(f64, f64)>,
) -> PyResult<PyProbabilityMap> {
    let grid = match beam_center {
        Some((x, y)) => check(wv::PixelGrid::with_center(x, y))?,
        None => wv::PixelGrid::default(),
    };
    check(wv::pixel_probability_map(&psi_i.0, &psi_f.0, &config.0, &grid)).map(PyProbabilityMap)
}

#[pyfunction]
fn simulate_counts(py: Python<'_>, probmap: &PyProbabilityMap, detection: &PyDetection) -> PyResult<PyCountMap> {
    let det = detection.0;
    check(py.detach(|| wv::simulate_counts(&probmap.0, &det))).map(PyCountMap)
}

#[pyfunction]
#[pyo3(signature = (counts, background = None))]
fn centroid_estimate(counts: &PyCountMap, background: Option<f64>) -> PyResult<PyCentroid> {
    let c = check(wv::centroid_estimate(&counts.0, background))?;
    Ok(PyCentroid { x: c.x, y: c.y, stderr_x: c.stderr_x, stderr_y: c.stderr_y, n_used: c.n_used })
}

#[pyfunction]
fn calibrate_shifts(counts_h: &PyCountMap, counts_v: &PyCountMap) -> PyResult<PyCalibration> {
    let c = check(wv::calibrate_shifts(&counts_h.0, &counts_v.0))?;
    Ok(PyCalibration { a_x: c.a_x, a_y: c.a_y, a_x_err: c.a_x_err, a_y_err: c.a_y_err })
}

#[pymodule]
fn weakval(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("WeakvalError", m.py().get_type::<WeakvalError>())?;
    m.add("BEAM_SIGMA", BEAM_SIGMA)?;
    m.add("GRID_SIZE", wv::detector::GRID_SIZE)?;
    m.add("SWEEP_COLUMNS", wv::analysis::SWEEP_COLUMNS.to_vec())?;

    m.add_class::<PyState>()?;
    m.add_class::<PyCoupling>()?;
    m.add_class::<PyDetection>()?;
    m.add_class::<PyPrediction>()?;
    m.add_class::<PyProbabilityMap>()?;
    m.add_class::<PyCountMap>()?;
    m.add_class::<PyCentroid>()?;
    m.add_class::<PyCalibration>()?;
    m.add_class::<PyBiasRow>()?;
    m.add_class::<PyValidity>()?;
    m.add_class::<PySweepRow>()?;

    m.add_function(wrap_pyfunction!(weak_value, m)?)?;
    m.add_function(wrap_pyfunction!(weak_value_linear, m)?)?;
    m.add_function(wrap_pyfunction!(postselection_angle_for, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_kappa, m)?)?;
    m.add_function(wrap_pyfunction!(shifted_first_moment, m)?)?;
    m.add_function(wrap_pyfunction!(bin_integrals, m)?)?;
    m.add_function(wrap_pyfunction!(exact_meter_single, m)?)?;
    m.add_function(wrap_pyfunction!(perturbative_meter, m)?)?;
    m.add_function(wrap_pyfunction!(saturation_limit, m)?)?;
    m.add_function(wrap_pyfunction!(sequential_meter, m)?)?;
    m.add_function(wrap_pyfunction!(sequential_meter_linear, m)?)?;
    m.add_function(wrap_pyfunction!(extract_weak_value, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_deviation, m)?)?;
    m.add_function(wrap_pyfunction!(bias_curve, m)?)?;
    m.add_function(wrap_pyfunction!(validity_region, m)?)?;
    m.add_function(wrap_pyfunction!(weak_value_grid, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_postselection, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    m.add_function(wrap_pyfunction!(pixel_probability_map, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_counts, m)?)?;
    m.add_function(wrap_pyfunction!(centroid_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(calibrate_shifts, m)?)?;
    Ok(())
}
