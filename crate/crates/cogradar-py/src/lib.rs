//! Python bindings for the cognitive-radar toolkit: steering and beams,
//! disturbance synthesis, snapshot detection, max-min beam design, and
//! scenario-level Monte Carlo simulation.

use cogradar::array::{virtual_channel, ArrayConfig, BeamWeights};
use cogradar::beamformer::{synthesize, BeamProblem};
use cogradar::detector::{decide_snapshot, threshold, DetectorConfig};
use cogradar::disturbance::{ridge_poles, DisturbanceSpec};
use cogradar::error::Error;
use cogradar::scenario;
use cogradar::simulator::run_monte_carlo;
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Unit-spaced steering vector `exp(j·2π·ν·k)` for k = 0..n.
#[pyfunction]
fn steering(nu: f64, n: usize) -> PyResult<Vec<Complex64>> {
    cogradar::array::steering(nu, n).map_err(to_py)
}

/// Detection threshold λ = −2 ln p_fa.
#[pyfunction(name = "threshold")]
fn threshold_py(p_fa: f64) -> PyResult<f64> {
    threshold(p_fa).map_err(to_py)
}

/// First-order Marcum Q function.
#[pyfunction]
fn marcum_q1(a: f64, b: f64) -> PyResult<f64> {
    cogradar::detector::marcum_q1(a, b).map_err(to_py)
}

/// Transmit weights with a fixed power budget.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Beam {
    inner: BeamWeights,
}

#[pymethods]
impl Beam {
    /// Equal-power weights: flat pattern at the power budget.
    #[staticmethod]
    fn omni(n_tx: usize, total_power: f64) -> Self {
        Beam {
            inner: BeamWeights::omni(n_tx, total_power),
        }
    }

    /// Rank-one weights matched to one frequency.
    #[staticmethod]
    fn matched(nu: f64, n_tx: usize, total_power: f64) -> PyResult<Self> {
        Ok(Beam {
            inner: BeamWeights::matched(nu, n_tx, total_power).map_err(to_py)?,
        })
    }

    /// Transmit pattern value at a frequency.
    fn pattern(&self, nu: f64) -> f64 {
        cogradar::array::beampattern(&self.inner, nu)
    }

    /// Virtual transmit-receive channel for an n_tx x n_rx array.
    fn channel(&self, nu: f64, n_rx: usize) -> PyResult<Vec<Complex64>> {
        let cfg = ArrayConfig::new(self.inner.n_tx(), n_rx, ArrayConfig::default_grid())
            .map_err(to_py)?;
        virtual_channel(&self.inner, nu, &cfg).map_err(to_py)
    }

    /// Weight matrix as a nested list, row major.
    fn weights(&self) -> Vec<Vec<Complex64>> {
        self.inner
            .matrix()
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect()
    }

    #[getter]
    fn n_tx(&self) -> usize {
        self.inner.n_tx()
    }

    #[getter]
    fn total_power(&self) -> f64 {
        self.inner.total_power()
    }
}

/// Outcome of max-min beam synthesis.
#[pyclass]
struct BeamSolution {
    #[pyo3(get)]
    min_pattern: f64,
    #[pyo3(get)]
    history: Vec<f64>,
    #[pyo3(get)]
    kkt_residual: f64,
    #[pyo3(get)]
    converged: bool,
    beam: Beam,
}

#[pymethods]
impl BeamSolution {
    #[getter]
    fn beam(&self) -> Beam {
        self.beam.clone()
    }
}

/// Designs transmit weights maximizing the weakest pattern value over the
/// given grid frequencies.
#[pyfunction]
#[pyo3(signature = (targets, n_tx, total_power=1.0, max_iters=100, tol=1e-5))]
fn synthesize_beam(
    targets: Vec<f64>,
    n_tx: usize,
    total_power: f64,
    max_iters: usize,
    tol: f64,
) -> PyResult<BeamSolution> {
    let cfg = ArrayConfig::new(n_tx, 1, ArrayConfig::default_grid()).map_err(to_py)?;
    let problem = BeamProblem::new(targets, total_power, cfg).map_err(to_py)?;
    let w0 = BeamWeights::omni(n_tx, total_power);
    let state = synthesize(&problem, &w0, max_iters, tol).map_err(to_py)?;
    Ok(BeamSolution {
        min_pattern: state.zeta,
        history: state.history,
        kkt_residual: state.kkt_residual,
        converged: state.converged,
        beam: Beam {
            inner: state.w_current,
        },
    })
}

/// Autoregressive heavy-tailed disturbance model.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Disturbance {
    inner: DisturbanceSpec,
}

#[pymethods]
impl Disturbance {
    /// Builds from explicit AR taps.
    #[new]
    fn new(taps: Vec<Complex64>, mu: f64, sigma2: f64) -> PyResult<Self> {
        Ok(Disturbance {
            inner: DisturbanceSpec::new(taps, mu, sigma2).map_err(to_py)?,
        })
    }

    /// The bundled six-pole spectral-ridge model.
    #[staticmethod]
    #[pyo3(signature = (mu=2.0, sigma2=1.0))]
    fn ridge(mu: f64, sigma2: f64) -> PyResult<Self> {
        Ok(Disturbance {
            inner: DisturbanceSpec::from_poles(&ridge_poles(), mu, sigma2).map_err(to_py)?,
        })
    }

    /// Power spectral density at a normalized frequency.
    fn psd(&self, nu: f64) -> f64 {
        self.inner.psd(nu)
    }

    /// Per-sample disturbance power.
    fn variance(&self) -> f64 {
        self.inner.variance()
    }

    /// Draws a length-n stationary sample path.
    #[pyo3(signature = (n, seed, burn_in=1000))]
    fn sample(&self, n: usize, seed: u64, burn_in: usize) -> PyResult<Vec<Complex64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.inner.generate(n, burn_in, &mut rng).map_err(to_py)
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }
}

/// One detection-cell decision.
#[pyclass]
struct Detection {
    #[pyo3(get)]
    statistic: f64,
    #[pyo3(get)]
    flag: bool,
    #[pyo3(get)]
    alpha_hat: Complex64,
    #[pyo3(get)]
    zeta_hat: f64,
    #[pyo3(get)]
    pd_hat: f64,
}

/// Adaptive snapshot detection: estimates the disturbance covariance from
/// the cell's own residual (banded, diagonally loaded) and thresholds the
/// statistic at the rate `p_fa`.
#[pyfunction]
#[pyo3(signature = (h, y, p_fa=1e-2, lag=None, guard_scale=4.0))]
fn detect(
    h: Vec<Complex64>,
    y: Vec<Complex64>,
    p_fa: f64,
    lag: Option<usize>,
    guard_scale: f64,
) -> PyResult<Detection> {
    let lambda = threshold(p_fa).map_err(to_py)?;
    let cfg = DetectorConfig::new(p_fa).map_err(to_py)?;
    let lag = lag.unwrap_or_else(|| cfg.lag_for(h.len()));
    let d = decide_snapshot(&h, &y, lag, guard_scale, lambda).map_err(to_py)?;
    Ok(Detection {
        statistic: d.statistic,
        flag: d.flag,
        alpha_hat: d.alpha_hat,
        zeta_hat: d.zeta_hat,
        pd_hat: d.pd_hat,
    })
}

/// A complete experiment description.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Scenario {
    inner: scenario::Scenario,
}

#[pymethods]
impl Scenario {
    /// Bundled preset by name (scenario1 … scenario6).
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Scenario {
            inner: scenario::preset(name).map_err(to_py)?,
        })
    }

    /// Parses the scenario text format.
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Scenario {
            inner: scenario::parse(text).map_err(to_py)?,
        })
    }

    /// Canonical text form; parsing it reproduces this scenario.
    fn emit(&self) -> String {
        self.inner.emit()
    }

    /// Runs the Monte Carlo simulation and returns per-pulse averages.
    fn run(&self) -> PyResult<Summary> {
        let s = run_monte_carlo(&self.inner).map_err(to_py)?;
        Ok(Summary {
            grid: s.grid,
            pulses: s.pulses,
            mc_runs: s.mc_runs,
            detect_freq: s.detect_freq,
            pd_hat_mean: s.pd_hat_mean,
            reward_mean: s.reward_mean,
            min_pattern_mean: s.min_pattern_mean,
        })
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn pulses(&self) -> usize {
        self.inner.pulses
    }

    #[getter]
    fn mc_runs(&self) -> usize {
        self.inner.mc_runs
    }

    #[setter]
    fn set_mc_runs(&mut self, mc_runs: usize) {
        self.inner.mc_runs = mc_runs;
    }

    #[getter]
    fn policy(&self) -> String {
        self.inner.policy.as_str().to_string()
    }

    #[setter]
    fn set_policy(&mut self, policy: &str) -> PyResult<()> {
        self.inner.policy = scenario::Policy::parse(policy).map_err(to_py)?;
        Ok(())
    }
}

/// Per-pulse Monte Carlo averages.
#[pyclass]
struct Summary {
    #[pyo3(get)]
    grid: Vec<f64>,
    #[pyo3(get)]
    pulses: usize,
    #[pyo3(get)]
    mc_runs: usize,
    #[pyo3(get)]
    detect_freq: Vec<Vec<f64>>,
    #[pyo3(get)]
    pd_hat_mean: Vec<Vec<f64>>,
    #[pyo3(get)]
    reward_mean: Vec<f64>,
    #[pyo3(get)]
    min_pattern_mean: Vec<f64>,
}

#[pymodule]
fn cogradar_py(_py: Python<'_>, m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(steering, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_py, m)?)?;
    m.add_function(wrap_pyfunction!(marcum_q1, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_beam, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_class::<Beam>()?;
    m.add_class::<BeamSolution>()?;
    m.add_class::<Disturbance>()?;
    m.add_class::<Detection>()?;
    m.add_class::<Scenario>()?;
    m.add_class::<Summary>()?;
    Ok(())
}
