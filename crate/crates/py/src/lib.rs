//! Python module `pinned_osb_py`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use pinned_osb::boundary::{self, Boundary, SolverConfig};
use pinned_osb::bridge;
use pinned_osb::inference::{self, CoverageConfig, VolEstimate};
use pinned_osb::market_data;
use pinned_osb::simulation::{self, ExperimentConfig, RuleKind};
use pinned_osb::{PricePath, Side, TimeGrid};

fn err(e: pinned_osb::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_side(side: &str) -> PyResult<Side> {
    side.parse()
        .map_err(|_| PyValueError::new_err(format!("side must be put or call, got {side}")))
}

fn grid(kind: &str, nodes: usize, horizon: f64) -> PyResult<TimeGrid> {
    match kind {
        "log" => TimeGrid::logarithmic(nodes, horizon).map_err(err),
        "uniform" => TimeGrid::uniform(nodes, horizon).map_err(err),
        _ => Err(PyValueError::new_err(format!(
            "grid must be log or uniform, got {kind}"
        ))),
    }
}

/// Brownian bridge pinned at `strike` at `horizon`.
#[pyclass(name = "BridgeSpec", frozen, from_py_object)]
#[derive(Clone, Copy)]
struct PyBridgeSpec {
    inner: bridge::BridgeSpec,
}

#[pymethods]
impl PyBridgeSpec {
    #[new]
    #[pyo3(signature = (strike, horizon, sigma, discount = 0.0))]
    fn new(strike: f64, horizon: f64, sigma: f64, discount: f64) -> PyResult<Self> {
        Ok(Self {
            inner: bridge::BridgeSpec::new(strike, horizon, sigma, discount).map_err(err)?,
        })
    }

    #[getter]
    fn strike(&self) -> f64 {
        self.inner.strike()
    }

    #[getter]
    fn horizon(&self) -> f64 {
        self.inner.horizon()
    }

    #[getter]
    fn sigma(&self) -> f64 {
        self.inner.sigma()
    }

    #[getter]
    fn discount(&self) -> f64 {
        self.inner.discount()
    }

    fn mean(&self, t: f64, x: f64, u: f64) -> PyResult<f64> {
        self.inner.mean(t, x, u).map_err(err)
    }

    fn stddev(&self, t: f64, u: f64) -> PyResult<f64> {
        self.inner.stddev(t, u).map_err(err)
    }

    #[pyo3(signature = (t, q, t0 = 0.0, x0 = None))]
    fn marginal_quantile(&self, t: f64, q: f64, t0: f64, x0: Option<f64>) -> PyResult<f64> {
        let x0 = x0.unwrap_or(self.inner.strike());
        self.inner.marginal_quantile(t, q, t0, x0).map_err(err)
    }

    /// Samples values on `times` starting from `x0` at `times[0]`.
    fn sample_path(&self, x0: f64, times: Vec<f64>, seed: u64) -> PyResult<Vec<f64>> {
        let p = bridge::sample_path(&self.inner, x0, &times, seed).map_err(err)?;
        Ok(p.into_parts().1)
    }

    fn __repr__(&self) -> String {
        format!(
            "BridgeSpec(strike={}, horizon={}, sigma={}, discount={})",
            self.inner.strike(),
            self.inner.horizon(),
            self.inner.sigma(),
            self.inner.discount()
        )
    }
}

/// Exercise boundary sampled on a grid.
#[pyclass(name = "Boundary", frozen)]
struct PyBoundary {
    inner: Boundary,
}

#[pymethods]
impl PyBoundary {
    #[getter]
    fn times(&self) -> Vec<f64> {
        self.inner.times().to_vec()
    }

    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values().to_vec()
    }

    #[getter]
    fn side(&self) -> &'static str {
        match self.inner.side() {
            Side::Put => "put",
            Side::Call => "call",
        }
    }

    #[getter]
    fn spec(&self) -> PyBridgeSpec {
        PyBridgeSpec {
            inner: *self.inner.spec(),
        }
    }

    /// Spline value at `t`.
    fn eval(&self, t: f64) -> f64 {
        self.inner.eval(t)
    }

    fn to_json(&self) -> String {
        self.inner.to_json().to_string()
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let value = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self {
            inner: Boundary::from_json(value).map_err(err)?,
        })
    }

    /// Put value `V(t, x)` by quadrature along this boundary.
    fn value(&self, t: f64, x: f64) -> PyResult<f64> {
        boundary::value_function(t, x, &self.inner, self.inner.spec()).map_err(err)
    }

    /// Monte Carlo estimate `(mean, se)` of the discounted payoff of
    /// stopping at this boundary, started at `(times[0], x0)`.
    fn stopped_payoff(
        &self,
        x0: f64,
        times: Vec<f64>,
        paths: usize,
        seed: u64,
    ) -> PyResult<(f64, f64)> {
        let rule = simulation::StoppingRule::new(self.inner.clone());
        let s = simulation::stopped_payoff_mc(self.inner.spec(), &rule, x0, &times, paths, seed)
            .map_err(err)?;
        Ok((s.mean, s.se))
    }

    fn __len__(&self) -> usize {
        self.inner.values().len()
    }
}

#[pyfunction]
#[pyo3(signature = (spec, nodes = SolverConfig::DEFAULT_NODES, delta = SolverConfig::DEFAULT_DELTA, grid_kind = "log", side = "put", max_iterations = SolverConfig::DEFAULT_MAX_ITERATIONS))]
fn solve_boundary(
    py: Python<'_>,
    spec: PyBridgeSpec,
    nodes: usize,
    delta: f64,
    grid_kind: &str,
    side: &str,
    max_iterations: usize,
) -> PyResult<PyBoundary> {
    let side = parse_side(side)?;
    let cfg = SolverConfig::new(
        grid(grid_kind, nodes, spec.inner.horizon())?,
        delta,
        max_iterations,
    )
    .map_err(err)?;
    let put = py
        .detach(|| boundary::solve_boundary(&spec.inner, &cfg))
        .map_err(err)?;
    let inner = match side {
        Side::Put => put,
        Side::Call => boundary::call_boundary_from_put(&put).map_err(err)?,
    };
    Ok(PyBoundary { inner })
}

/// Zero-discount closed form `S − 0.8399σ√(T − t)` on a log grid.
#[pyfunction]
#[pyo3(signature = (spec, nodes = SolverConfig::DEFAULT_NODES))]
fn closed_form_boundary(spec: PyBridgeSpec, nodes: usize) -> PyResult<PyBoundary> {
    let g = TimeGrid::logarithmic(nodes, spec.inner.horizon()).map_err(err)?;
    Ok(PyBoundary {
        inner: boundary::closed_form_boundary_lambda0(&spec.inner, &g).map_err(err)?,
    })
}

#[pyfunction]
fn kernel(spec: PyBridgeSpec, t: f64, x1: f64, u: f64, x2: f64) -> PyResult<f64> {
    boundary::kernel(&spec.inner, t, x1, u, x2).map_err(err)
}

#[pyfunction]
fn log_grid(nodes: usize, horizon: f64) -> PyResult<Vec<f64>> {
    Ok(TimeGrid::logarithmic(nodes, horizon)
        .map_err(err)?
        .nodes()
        .to_vec())
}

/// MLE of σ: returns `(sigma_hat, n, fisher)`.
#[pyfunction]
#[pyo3(signature = (times, values, strike, horizon, n = None))]
fn mle_sigma(
    times: Vec<f64>,
    values: Vec<f64>,
    strike: f64,
    horizon: f64,
    n: Option<usize>,
) -> PyResult<(f64, usize, f64)> {
    let path = PricePath::new(times, values).map_err(err)?;
    let n = n.unwrap_or(path.last_index());
    let est = inference::mle_sigma(&path, n, strike, horizon).map_err(err)?;
    Ok((est.sigma_hat, est.n, est.fisher))
}

/// Confidence curves: returns `(times, lower, center, upper)`.
#[pyfunction]
#[pyo3(signature = (spec, sigma_hat, n, alpha = 0.05, fd_step = 1e-2, nodes = SolverConfig::DEFAULT_NODES, delta = SolverConfig::DEFAULT_DELTA))]
#[allow(clippy::too_many_arguments, clippy::type_complexity)]
fn confidence_curves(
    py: Python<'_>,
    spec: PyBridgeSpec,
    sigma_hat: f64,
    n: usize,
    alpha: f64,
    fd_step: f64,
    nodes: usize,
    delta: f64,
) -> PyResult<(Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>)> {
    let cfg = SolverConfig::new(
        TimeGrid::logarithmic(nodes, spec.inner.horizon()).map_err(err)?,
        delta,
        SolverConfig::DEFAULT_MAX_ITERATIONS,
    )
    .map_err(err)?;
    let est = VolEstimate::from_sigma(sigma_hat, n);
    let band = py
        .detach(|| inference::confidence_curves(&est, &spec.inner, &cfg, alpha, fd_step))
        .map_err(err)?;
    Ok((
        band.grid.nodes().to_vec(),
        band.lower,
        band.center,
        band.upper,
    ))
}

/// Coverage study from a JSON config; returns `(times, proportions, failures)`.
#[pyfunction]
fn coverage_experiment(py: Python<'_>, config_json: &str) -> PyResult<(Vec<f64>, Vec<f64>, usize)> {
    let cfg: CoverageConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let res = py
        .detach(|| inference::coverage_experiment(&cfg))
        .map_err(err)?;
    Ok((res.times, res.proportions, res.failures))
}

/// Payoff study from a JSON config; returns rows
/// `(t, q, rule, mean, variance, se, count)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn run_payoff_study(
    py: Python<'_>,
    config_json: &str,
) -> PyResult<Vec<(f64, f64, &'static str, f64, f64, f64, usize)>> {
    let cfg: ExperimentConfig =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let table = py
        .detach(|| simulation::run_payoff_study(&cfg))
        .map_err(err)?;
    let mut rows = Vec::new();
    for cell in &table.cells {
        for rule in RuleKind::ALL {
            let s = cell.stats(rule);
            rows.push((
                cell.t,
                cell.q,
                rule.name(),
                s.mean,
                s.variance,
                s.se,
                s.count,
            ));
        }
    }
    Ok(rows)
}

#[pyfunction]
fn pinning_deviance(values: Vec<f64>) -> PyResult<f64> {
    let times = (0..values.len()).map(|i| i as f64).collect();
    market_data::pinning_deviance(&PricePath::new(times, values).map_err(err)?).map_err(err)
}

#[pyfunction]
fn weighted_oi(oi: Vec<f64>) -> PyResult<f64> {
    market_data::weighted_oi(&oi).map_err(err)
}

/// `⌊ρN⌋` for a path with last index `last`.
#[pyfunction]
fn split_index(last: usize, rho: f64) -> PyResult<usize> {
    market_data::split_index(last, rho).map_err(err)
}

#[pymodule]
fn pinned_osb_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBridgeSpec>()?;
    m.add_class::<PyBoundary>()?;
    m.add_function(wrap_pyfunction!(solve_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(closed_form_boundary, m)?)?;
    m.add_function(wrap_pyfunction!(kernel, m)?)?;
    m.add_function(wrap_pyfunction!(log_grid, m)?)?;
    m.add_function(wrap_pyfunction!(mle_sigma, m)?)?;
    m.add_function(wrap_pyfunction!(confidence_curves, m)?)?;
    m.add_function(wrap_pyfunction!(coverage_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(run_payoff_study, m)?)?;
    m.add_function(wrap_pyfunction!(pinning_deviance, m)?)?;
    m.add_function(wrap_pyfunction!(weighted_oi, m)?)?;
    m.add_function(wrap_pyfunction!(split_index, m)?)?;
    Ok(())
}
