use numpy::ndarray::Array2;
use numpy::{Complex64, IntoPyArray, PyArray1, PyArray2};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use psdlim_core::harness::{self, Verdict};
use psdlim_core::lattice as lat;
use psdlim_core::metrics as met;
use psdlim_core::phase_space as ps;
use psdlim_core::quantum as qm;
use psdlim_core::semiclassical as sc;
use psdlim_core::Error;

create_exception!(psdlim, PsdlimError, PyException);
create_exception!(psdlim, BoundViolation, PsdlimError);

fn err(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_) | Error::Config(_) | Error::UnknownPreset(_) | Error::UseShannon => {
            PyValueError::new_err(e.to_string())
        }
        Error::BoundViolation { .. } => BoundViolation::new_err(e.to_string()),
        _ => PsdlimError::new_err(e.to_string()),
    }
}

fn which(name: &str) -> PyResult<qm::Which> {
    match name {
        "ground" => Ok(qm::Which::Ground),
        "excited" => Ok(qm::Which::Excited),
        "total" => Ok(qm::Which::Total),
        other => Err(PyValueError::new_err(format!("which must be ground, excited or total, got {other}"))),
    }
}

#[pyclass(name = "MomentumGrid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyMomentumGrid(lat::MomentumGrid);

#[pymethods]
impl PyMomentumGrid {
    #[new]
    fn new(subdivision: usize, extent: usize) -> PyResult<Self> {
        lat::MomentumGrid::new(subdivision, extent).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    #[getter]
    fn dp(&self) -> f64 {
        self.0.dp()
    }

    #[getter]
    fn center(&self) -> usize {
        self.0.center()
    }

    fn points<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.0.points().into_pyarray(py)
    }

    fn __repr__(&self) -> String {
        format!("MomentumGrid(subdivision={}, extent={})", self.0.subdivision(), self.0.extent())
    }
}

#[pyclass(name = "PositionGrid", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyPositionGrid(lat::PositionGrid);

#[pymethods]
impl PyPositionGrid {
    /// One full lattice period, for delocalized states.
    #[staticmethod]
    #[pyo3(signature = (grid, oversample = 2))]
    fn conjugate(grid: &PyMomentumGrid, oversample: usize) -> PyResult<Self> {
        lat::PositionGrid::conjugate(&grid.0, oversample).map(Self).map_err(err)
    }

    /// Window around the origin, for localized states.
    #[staticmethod]
    #[pyo3(signature = (grid, oversample = 8))]
    fn wigner_window(grid: &PyMomentumGrid, oversample: usize) -> PyResult<Self> {
        lat::PositionGrid::wigner_window(&grid.0, oversample).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn points<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.0.points().into_pyarray(py)
    }
}

#[pyclass(name = "PulseSequence", frozen, from_py_object)]
#[derive(Clone)]
struct PyPulseSequence(lat::PulseSequence);

#[pymethods]
impl PyPulseSequence {
    /// `pulses` holds (direction, rabi, detuning, phase, t_start, t_stop)
    /// tuples with direction +1 or -1.
    #[new]
    #[pyo3(signature = (pulses = Vec::new()))]
    fn new(pulses: Vec<(i8, f64, f64, f64, f64, f64)>) -> PyResult<Self> {
        let list = pulses
            .into_iter()
            .map(|(d, rabi, det, phase, t0, t1)| {
                let dir = lat::Direction::try_from(d).map_err(PyValueError::new_err)?;
                lat::LaserPulse::new(dir, rabi, det, phase, t0, t1).map_err(err)
            })
            .collect::<PyResult<Vec<_>>>()?;
        lat::PulseSequence::new(list).map(Self).map_err(err)
    }

    /// Back-to-back π pulses, backward then forward.
    #[staticmethod]
    fn pi_pair(rabi: f64, detuning: f64) -> PyResult<Self> {
        lat::PulseSequence::pi_pair(rabi, detuning).map(Self).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.pulses().len()
    }

    #[getter]
    fn end_time(&self) -> f64 {
        self.0.end_time()
    }
}

#[pyclass(name = "DensityMatrix", frozen)]
struct PyDensityMatrix(qm::DensityMatrix);

#[pymethods]
impl PyDensityMatrix {
    #[staticmethod]
    fn gaussian(grid: &PyMomentumGrid, sigma_r: f64, sigma_p: f64) -> PyResult<Self> {
        qm::gaussian_mixed_state(&grid.0, qm::GaussianStateSpec::new(sigma_r, sigma_p)).map(Self).map_err(err)
    }

    #[staticmethod]
    fn thermal(grid: &PyMomentumGrid, sigma_p: f64) -> PyResult<Self> {
        qm::thermal_diagonal_state(&grid.0, sigma_p).map(Self).map_err(err)
    }

    #[getter]
    fn time(&self) -> f64 {
        self.0.time()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    #[getter]
    fn grid(&self) -> PyMomentumGrid {
        PyMomentumGrid(*self.0.grid())
    }

    fn trace(&self) -> f64 {
        self.0.trace().re
    }

    fn purity(&self) -> f64 {
        self.0.purity()
    }

    fn eigenvalues<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.0.eigenvalues().into_pyarray(py)
    }

    /// The matrix in the Schrödinger picture.
    fn matrix<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<Complex64>> {
        let m = self.0.to_schrodinger().matrix().clone();
        let n = m.nrows();
        Array2::from_shape_fn((n, n), |(i, j)| m[(i, j)]).into_pyarray(py)
    }

    #[pyo3(signature = (which = "total"))]
    fn populations<'py>(&self, py: Python<'py>, which: &str) -> PyResult<Bound<'py, PyArray1<f64>>> {
        Ok(qm::momentum_populations(&self.0, self::which(which)?).into_pyarray(py))
    }

    /// Snapshots at each of `times`.
    #[pyo3(signature = (sequence, times, dt = 1e-3))]
    fn propagate(&self, py: Python<'_>, sequence: &PyPulseSequence, times: Vec<f64>, dt: f64) -> PyResult<Vec<Self>> {
        let snaps = py.detach(|| qm::propagate(&self.0, &sequence.0, dt, &times)).map_err(err)?;
        Ok(snaps.into_iter().map(Self).collect())
    }

    fn von_neumann(&self) -> PyResult<f64> {
        met::von_neumann(&self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("DensityMatrix(dim={}, time={})", self.0.dim(), self.0.time())
    }
}

#[pyclass(name = "PhaseSpaceField", frozen)]
struct PyField(ps::PhaseSpaceField);

#[pymethods]
impl PyField {
    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind.name()
    }

    /// Values indexed [p, r].
    fn values<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        let shape = (self.0.p_axis.len, self.0.r_axis.len);
        Array2::from_shape_vec(shape, self.0.values().to_vec()).expect("field shape").into_pyarray(py)
    }

    fn r<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.0.r_axis.points().into_pyarray(py)
    }

    fn p<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.0.p_axis.points().into_pyarray(py)
    }

    fn max(&self) -> f64 {
        self.0.max()
    }

    fn min(&self) -> f64 {
        self.0.min()
    }

    fn integral(&self) -> f64 {
        self.0.integral()
    }

    fn smooth(&self, s_r: f64, s_p: f64) -> PyResult<Self> {
        ps::weierstrass_smooth(&self.0, s_r, s_p).map(Self).map_err(err)
    }

    /// Position and momentum marginals.
    fn marginals<'py>(&self, py: Python<'py>) -> (Bound<'py, PyArray1<f64>>, Bound<'py, PyArray1<f64>>) {
        let (r, p) = ps::marginals(&self.0);
        (r.into_pyarray(py), p.into_pyarray(py))
    }

    fn wehrl(&self) -> PyResult<f64> {
        met::wehrl(&self.0).map_err(err)
    }
}

#[pyfunction]
#[pyo3(signature = (rho, r_grid, which = "total"))]
fn wigner(rho: &PyDensityMatrix, r_grid: &PyPositionGrid, which: &str) -> PyResult<PyField> {
    ps::wigner(&rho.0.to_schrodinger(), self::which(which)?, &r_grid.0).map(PyField).map_err(err)
}

#[pyfunction]
fn husimi(rho: &PyDensityMatrix, sigma_r: f64, r_grid: &PyPositionGrid) -> PyResult<PyField> {
    let rho_a = qm::partial_trace_internal(&rho.0.to_schrodinger());
    ps::husimi_direct(&rho_a, sigma_r, &r_grid.0).map(PyField).map_err(err)
}

fn report_dict<'py>(py: Python<'py>, r: &met::PsdReport) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in [
        ("time", r.time),
        ("S_VN", r.s_vn),
        ("S_Sh", r.s_sh),
        ("S_VN_A", r.s_vn_a),
        ("S_Sh_A", r.s_sh_a),
        ("S_Sh_g", r.s_sh_g),
        ("max_rho_A", r.max_rho_a),
        ("max_Q", r.max_q),
        ("S_Wehrl", r.s_wehrl),
    ] {
        d.set_item(k, v)?;
    }
    Ok(d)
}

#[pyfunction]
fn psd_report<'py>(
    py: Python<'py>,
    rho: &PyDensityMatrix,
    husimi_sigma_r: f64,
    r_grid: &PyPositionGrid,
) -> PyResult<Bound<'py, PyDict>> {
    let r = met::PsdReport::compute(&rho.0, husimi_sigma_r, &r_grid.0).map_err(err)?;
    report_dict(py, &r)
}

/// Largest gains of a series starting from a diagonal state; raises
/// `BoundViolation` when an inequality fails.
#[pyfunction]
#[pyo3(signature = (snapshots, husimi_sigma_r, r_grid, levels = 2))]
fn bound_check<'py>(
    py: Python<'py>,
    snapshots: Vec<Bound<'py, PyDensityMatrix>>,
    husimi_sigma_r: f64,
    r_grid: &PyPositionGrid,
    levels: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let reports = snapshots
        .iter()
        .map(|s| met::PsdReport::compute(&s.get().0, husimi_sigma_r, &r_grid.0))
        .collect::<Result<Vec<_>, _>>()
        .map_err(err)?;
    let v = met::bound_check(&reports, levels).map_err(err)?;
    gains_dict(py, &v.max_gains)
}

fn gains_dict<'py>(py: Python<'py>, g: &met::Gains) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    for (k, v) in [
        ("D_VN", g.d_vn),
        ("D_Sh", g.d_sh),
        ("D_VN_A", g.d_vn_a),
        ("D_Sh_A", g.d_sh_a),
        ("D_Sh_g", g.d_sh_g),
        ("max_rho_A", g.max_rho_a),
        ("max_Q", g.max_q),
        ("D_W", g.d_wehrl),
    ] {
        d.set_item(k, v)?;
    }
    Ok(d)
}

/// Test-particle ensemble propagated to `t_end`, as columns r, v, sigma_22.
#[pyfunction]
#[pyo3(signature = (particles, sigma_r, sigma_p, sequence, t_end, seed = 0, dt = 1e-3))]
#[allow(clippy::too_many_arguments)]
fn run_ensemble<'py>(
    py: Python<'py>,
    particles: usize,
    sigma_r: f64,
    sigma_p: f64,
    sequence: &PyPulseSequence,
    t_end: f64,
    seed: u64,
    dt: f64,
) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let spec = sc::EnsembleSpec::gaussian(particles, sigma_r, sigma_p, seed);
    let out = py
        .detach(|| {
            let start = sc::sample_ensemble(&spec)?;
            sc::propagate_ensemble(&start, &sequence.0, dt, 0.0, t_end, sc::MotionCoupling::Ehrenfest)
        })
        .map_err(err)?;
    Ok(Array2::from_shape_fn((out.len(), 3), |(i, c)| match c {
        0 => out[i].r,
        1 => out[i].v,
        _ => out[i].s22,
    })
    .into_pyarray(py))
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    harness::PRESETS.to_vec()
}

/// Preset as config-file text.
#[pyfunction]
fn preset(name: &str) -> PyResult<String> {
    harness::preset(name).map(|c| c.to_toml()).map_err(err)
}

/// Runs a config (file text), optionally writing the bundle to `out`.
/// Returns the field gains and the bound-check verdict.
#[pyfunction]
#[pyo3(signature = (config, out = None, threads = 0))]
fn run<'py>(py: Python<'py>, config: &str, out: Option<std::path::PathBuf>, threads: usize) -> PyResult<Bound<'py, PyDict>> {
    let cfg = harness::ExperimentConfig::from_toml(config).map_err(err)?;
    let bundle = py.detach(|| harness::run_with_threads(&cfg, threads)).map_err(err)?;
    if let Some(dir) = out {
        harness::write_bundle(&bundle, &dir).map_err(err)?;
    }
    let d = PyDict::new(py);
    d.set_item("config_hash", &bundle.config_hash)?;
    let gains = PyDict::new(py);
    for g in &bundle.pmd_gains {
        gains.set_item(&g.label, g.gain())?;
    }
    d.set_item("pmd_gains", gains)?;
    let reports = bundle.reports.iter().map(|r| report_dict(py, r)).collect::<PyResult<Vec<_>>>()?;
    d.set_item("reports", reports)?;
    match &bundle.verdict {
        Verdict::Hold(v) => {
            d.set_item("verdict", "hold")?;
            d.set_item("max_gains", gains_dict(py, &v.max_gains)?)?;
        }
        Verdict::Violation(msg) => d.set_item("verdict", msg)?,
        Verdict::NotApplicable => d.set_item("verdict", "not applicable")?,
    }
    Ok(d)
}

#[pymodule]
#[pyo3(name = "psdlim")]
fn init(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add("PsdlimError", py.get_type::<PsdlimError>())?;
    m.add("BoundViolation", py.get_type::<BoundViolation>())?;
    m.add("PLANCK", lat::PLANCK)?;
    m.add_class::<PyMomentumGrid>()?;
    m.add_class::<PyPositionGrid>()?;
    m.add_class::<PyPulseSequence>()?;
    m.add_class::<PyDensityMatrix>()?;
    m.add_class::<PyField>()?;
    m.add_function(wrap_pyfunction!(wigner, m)?)?;
    m.add_function(wrap_pyfunction!(husimi, m)?)?;
    m.add_function(wrap_pyfunction!(psd_report, m)?)?;
    m.add_function(wrap_pyfunction!(bound_check, m)?)?;
    m.add_function(wrap_pyfunction!(run_ensemble, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add_function(wrap_pyfunction!(preset, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}
