//! Python bindings: plans, scenes, sweeps, Monte Carlo and the estimators.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cohradar_core as core;
use cohradar_core::analytic;
use cohradar_core::correlator::{correlate_point_semianalytic, CorrelatorOptions};
use cohradar_core::estimator;

fn to_py(e: core::Error) -> PyErr {
    use core::Error as E;
    match e {
        E::OutsideWindow { .. } | E::Domain(_) | E::EstimationFailed(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "SweepPlan", module = "cohradar", frozen, from_py_object)]
#[derive(Clone)]
struct PySweepPlan {
    inner: core::SweepPlan,
}

#[pymethods]
impl PySweepPlan {
    #[new]
    #[pyo3(signature = (tau0, delta_tau, points, pulses, carrier_hz = core::DEFAULT_CARRIER_HZ, seed = 0))]
    fn new(tau0: f64, delta_tau: f64, points: usize, pulses: usize, carrier_hz: f64, seed: u64) -> PyResult<Self> {
        let inner = core::SweepPlan::new(tau0, delta_tau, points, pulses)
            .and_then(|p| p.with_carrier(carrier_hz))
            .map_err(to_py)?
            .with_seed(seed);
        Ok(PySweepPlan { inner })
    }

    /// Plan over round-trip coherence lengths `[l0, l0 + span]`, meters.
    #[staticmethod]
    #[pyo3(signature = (l0, span, points, pulses, carrier_hz = core::DEFAULT_CARRIER_HZ, seed = 0))]
    fn from_lengths(l0: f64, span: f64, points: usize, pulses: usize, carrier_hz: f64, seed: u64) -> PyResult<Self> {
        let inner = core::SweepPlan::from_lengths(l0, span, points, pulses)
            .and_then(|p| p.with_carrier(carrier_hz))
            .map_err(to_py)?
            .with_seed(seed);
        Ok(PySweepPlan { inner })
    }

    fn with_seed(&self, seed: u64) -> Self {
        PySweepPlan {
            inner: self.inner.clone().with_seed(seed),
        }
    }

    #[getter]
    fn tau0(&self) -> f64 {
        self.inner.tau0()
    }

    #[getter]
    fn delta_tau(&self) -> f64 {
        self.inner.delta_tau()
    }

    #[getter]
    fn points(&self) -> usize {
        self.inner.points()
    }

    #[getter]
    fn pulses(&self) -> usize {
        self.inner.pulses()
    }

    #[getter]
    fn carrier_hz(&self) -> f64 {
        self.inner.carrier_hz()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed()
    }

    fn coherence_time(&self, m: usize) -> PyResult<f64> {
        self.inner.coherence_time(m).map_err(to_py)
    }

    fn coherence_lengths(&self) -> Vec<f64> {
        self.inner.coherence_lengths()
    }

    fn total_sweep_time(&self) -> f64 {
        analytic::total_sweep_time(&self.inner)
    }

    fn max_bandwidth(&self) -> PyResult<f64> {
        analytic::max_bandwidth(self.inner.tau0()).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "SweepPlan(tau0={}, delta_tau={}, points={}, pulses={}, carrier_hz={}, seed={})",
            self.inner.tau0(),
            self.inner.delta_tau(),
            self.inner.points(),
            self.inner.pulses(),
            self.inner.carrier_hz(),
            self.inner.seed()
        )
    }
}

#[pyclass(name = "Target", module = "cohradar", frozen, from_py_object)]
#[derive(Clone)]
struct PyTarget {
    inner: core::Target,
}

#[pymethods]
impl PyTarget {
    /// Point target at round-trip length `roundtrip_length` meters.
    #[new]
    #[pyo3(signature = (roundtrip_length, attenuation = 1.0, velocity = 0.0))]
    fn new(roundtrip_length: f64, attenuation: f64, velocity: f64) -> PyResult<Self> {
        Ok(PyTarget {
            inner: core::Target::new(roundtrip_length, attenuation, velocity).map_err(to_py)?,
        })
    }

    #[getter]
    fn roundtrip_length(&self) -> f64 {
        self.inner.roundtrip_length()
    }

    #[getter]
    fn range(&self) -> f64 {
        self.inner.range()
    }

    #[getter]
    fn attenuation(&self) -> f64 {
        self.inner.attenuation()
    }

    #[getter]
    fn velocity(&self) -> f64 {
        self.inner.radial_velocity()
    }

    fn __repr__(&self) -> String {
        format!(
            "Target(roundtrip_length={}, attenuation={}, velocity={})",
            self.inner.roundtrip_length(),
            self.inner.attenuation(),
            self.inner.radial_velocity()
        )
    }
}

#[pyclass(name = "Scene", module = "cohradar", frozen, from_py_object)]
#[derive(Clone)]
struct PyScene {
    inner: core::Scene,
}

#[pymethods]
impl PyScene {
    /// `snr_db = None` is noiseless.
    #[new]
    #[pyo3(signature = (targets, snr_db = None, noise_seed = 0, dc_bias = 0.0))]
    fn new(targets: Vec<PyTarget>, snr_db: Option<f64>, noise_seed: u64, dc_bias: f64) -> PyResult<Self> {
        let snr = match snr_db {
            Some(db) => core::Snr::from_db(db).map_err(to_py)?,
            None => core::Snr::Noiseless,
        };
        let targets = targets.into_iter().map(|t| t.inner).collect();
        Ok(PyScene {
            inner: core::Scene::new(targets, snr).with_noise_seed(noise_seed).with_dc_bias(dc_bias),
        })
    }

    #[getter]
    fn targets(&self) -> Vec<PyTarget> {
        self.inner.targets.iter().map(|&inner| PyTarget { inner }).collect()
    }

    #[getter]
    fn noise_seed(&self) -> u64 {
        self.inner.noise_seed
    }
}

#[pyclass(module = "cohradar", frozen, get_all)]
struct SweepResult {
    l_m: Vec<f64>,
    c_raw: Vec<f64>,
    c_norm: Vec<f64>,
    theory_mean: Vec<f64>,
    theory_std: Vec<f64>,
}

fn parse_mode(mode: &str, fs: Option<f64>, plan: &core::SweepPlan) -> PyResult<core::Mode> {
    match mode {
        "semianalytic" => Ok(core::Mode::SemiAnalytic),
        "sampled" => Ok(core::Mode::Sampled {
            fs: fs.unwrap_or(8.0 * plan.carrier_hz()),
        }),
        other => Err(PyValueError::new_err(format!(
            "mode must be 'semianalytic' or 'sampled', got {other:?}"
        ))),
    }
}

/// One sweep with its theory curve.
#[pyfunction]
#[pyo3(signature = (plan, scene, mode = "semianalytic", fs = None))]
fn run_sweep(py: Python<'_>, plan: &PySweepPlan, scene: &PyScene, mode: &str, fs: Option<f64>) -> PyResult<SweepResult> {
    let mode = parse_mode(mode, fs, &plan.inner)?;
    let rec = py
        .detach(|| core::run_sweep(&plan.inner, &scene.inner, mode, CorrelatorOptions::default()))
        .map_err(to_py)?;
    let theory = analytic::theory_curve(&plan.inner, &scene.inner);
    Ok(SweepResult {
        l_m: rec.lengths(),
        c_raw: rec.c_raw(),
        c_norm: rec.c_norm(),
        theory_mean: theory.mean,
        theory_std: theory.std,
    })
}

#[pyclass(module = "cohradar", frozen, get_all)]
struct MonteCarloResult {
    trials: usize,
    l_m: Vec<f64>,
    mean: Vec<f64>,
    std: Vec<f64>,
    theory_mean: Vec<f64>,
    theory_std: Vec<f64>,
    max_mean_error_se: f64,
    max_std_error: f64,
    /// Per-trial `c_norm` curves.
    curves: Vec<Vec<f64>>,
}

#[pyfunction]
#[pyo3(signature = (plan, scene, trials, mode = "semianalytic", fs = None))]
fn run_monte_carlo(
    py: Python<'_>,
    plan: &PySweepPlan,
    scene: &PyScene,
    trials: usize,
    mode: &str,
    fs: Option<f64>,
) -> PyResult<MonteCarloResult> {
    let mode = parse_mode(mode, fs, &plan.inner)?;
    let (records, s) = py
        .detach(|| {
            core::montecarlo::run_monte_carlo(&plan.inner, &scene.inner, mode, CorrelatorOptions::default(), trials)
        })
        .map_err(to_py)?;
    Ok(MonteCarloResult {
        trials: s.trials,
        l_m: s.points.iter().map(|p| p.l_m).collect(),
        mean: s.points.iter().map(|p| p.mean).collect(),
        std: s.points.iter().map(|p| p.std).collect(),
        theory_mean: s.points.iter().map(|p| p.theory_mean).collect(),
        theory_std: s.points.iter().map(|p| p.theory_std).collect(),
        max_mean_error_se: s.max_mean_error_se,
        max_std_error: s.max_std_error,
        curves: records.iter().map(|r| r.c_norm()).collect(),
    })
}

#[pyclass(module = "cohradar", frozen, get_all)]
struct BreakpointFit {
    breakpoints: Vec<f64>,
    /// `(slope, intercept)` per segment.
    segments: Vec<(f64, f64)>,
    sse: f64,
}

/// Continuous piecewise-linear fit with `k` breakpoints.
#[pyfunction]
#[pyo3(signature = (xs, ys, k, baseline_slope = true))]
fn fit_breakpoints(xs: Vec<f64>, ys: Vec<f64>, k: usize, baseline_slope: bool) -> PyResult<BreakpointFit> {
    let fit = estimator::fit_k_breakpoints_with(&xs, &ys, k, estimator::FitOptions { baseline_slope }).map_err(to_py)?;
    Ok(BreakpointFit {
        breakpoints: fit.breakpoints,
        segments: fit.segments.iter().map(|s| (s.slope, s.intercept)).collect(),
        sse: fit.sse,
    })
}

#[pyfunction]
#[pyo3(signature = (xs, ys, max_k = 2, threshold = estimator::DEFAULT_F_THRESHOLD))]
fn select_breakpoint_count(xs: Vec<f64>, ys: Vec<f64>, max_k: usize, threshold: f64) -> PyResult<usize> {
    estimator::select_breakpoint_count(&xs, &ys, max_k, threshold).map_err(to_py)
}

#[pyclass(module = "cohradar", frozen, get_all)]
struct RangeReport {
    breakpoints: Vec<f64>,
    ranges: Vec<f64>,
    separations: Vec<f64>,
    accuracy: Vec<f64>,
    trials: usize,
}

/// Ranges from per-trial breakpoint lists (round-trip meters).
#[pyfunction]
#[pyo3(signature = (trial_breakpoints, delay_offset = 0.0))]
fn ranges(trial_breakpoints: Vec<Vec<f64>>, delay_offset: f64) -> PyResult<RangeReport> {
    let fits: Vec<core::BreakpointFit> = trial_breakpoints
        .into_iter()
        .map(|breakpoints| core::BreakpointFit {
            breakpoints,
            segments: vec![],
            split_indices: vec![],
            sse: 0.0,
            candidate_grid: vec![],
        })
        .collect();
    let r = estimator::ranges_from_trials(&fits, delay_offset).map_err(to_py)?;
    Ok(RangeReport {
        breakpoints: r.breakpoints,
        ranges: r.ranges,
        separations: r.separations,
        accuracy: r.accuracy,
        trials: r.trials,
    })
}

#[pyclass(module = "cohradar", frozen, get_all)]
struct VelocityEstimate {
    velocity: f64,
    phase_step: f64,
    max_unambiguous_speed: f64,
    peak_to_noise: f64,
    possibly_aliased: bool,
}

/// Slow-time Doppler estimate at sweep point `m`.
#[pyfunction]
#[pyo3(signature = (plan, scene, m = 0))]
fn estimate_velocity(py: Python<'_>, plan: &PySweepPlan, scene: &PyScene, m: usize) -> PyResult<VelocityEstimate> {
    let opts = CorrelatorOptions {
        keep_slow_time: true,
        ..Default::default()
    };
    let est = py
        .detach(|| {
            let out = correlate_point_semianalytic(&plan.inner, &scene.inner, m, opts)?;
            let tau = plan.inner.coherence_time(m)?;
            estimator::estimate_velocity(&out.slow_time.unwrap_or_default(), tau, plan.inner.carrier_hz())
        })
        .map_err(to_py)?;
    Ok(VelocityEstimate {
        velocity: est.velocity,
        phase_step: est.phase_step,
        max_unambiguous_speed: est.max_unambiguous_speed,
        peak_to_noise: est.peak_to_noise,
        possibly_aliased: est.possibly_aliased,
    })
}

#[pyfunction]
fn sst_mean(l_m: f64, l: f64, attenuation: f64, k: f64) -> f64 {
    analytic::sst_mean(l_m, l, attenuation, k)
}

/// `snr_db = None` is noiseless.
#[pyfunction]
#[pyo3(signature = (l_m, l, attenuation, pulses, snr_db = None))]
fn sst_std(l_m: f64, l: f64, attenuation: f64, pulses: usize, snr_db: Option<f64>) -> PyResult<f64> {
    let snr = match snr_db {
        Some(db) => core::Snr::from_db(db).map_err(to_py)?,
        None => core::Snr::Noiseless,
    };
    Ok(analytic::sst_std(l_m, l, attenuation, pulses, snr))
}

#[pyfunction]
fn baseline_resolution(bandwidth_hz: f64) -> PyResult<f64> {
    analytic::baseline_resolution(bandwidth_hz).map_err(to_py)
}

#[pyfunction]
fn carrier_hop_bandwidth(tau0: f64) -> PyResult<f64> {
    analytic::carrier_hop_bandwidth(tau0).map_err(to_py)
}

#[pymodule]
fn cohradar(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SPEED_OF_LIGHT", core::SPEED_OF_LIGHT)?;
    m.add("DEFAULT_F_THRESHOLD", estimator::DEFAULT_F_THRESHOLD)?;
    m.add_class::<PySweepPlan>()?;
    m.add_class::<PyTarget>()?;
    m.add_class::<PyScene>()?;
    m.add_class::<SweepResult>()?;
    m.add_class::<MonteCarloResult>()?;
    m.add_class::<BreakpointFit>()?;
    m.add_class::<RangeReport>()?;
    m.add_class::<VelocityEstimate>()?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(run_monte_carlo, m)?)?;
    m.add_function(wrap_pyfunction!(fit_breakpoints, m)?)?;
    m.add_function(wrap_pyfunction!(select_breakpoint_count, m)?)?;
    m.add_function(wrap_pyfunction!(ranges, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_velocity, m)?)?;
    m.add_function(wrap_pyfunction!(sst_mean, m)?)?;
    m.add_function(wrap_pyfunction!(sst_std, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_resolution, m)?)?;
    m.add_function(wrap_pyfunction!(carrier_hop_bandwidth, m)?)?;
    Ok(())
}
