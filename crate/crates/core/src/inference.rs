//! Volatility estimation from a discretely observed bridge path and
//! delta-method confidence curves for the boundary.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{solve_boundary, Boundary, Side, SolverConfig};
use crate::bridge::{sample_path_with, stream_rng, BridgeSpec};
use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::normal;
use crate::path::{csv_err, PricePath};

/// Maximum-likelihood volatility estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolEstimate {
    pub sigma_hat: f64,
    /// Number of increments used.
    pub n: usize,
    /// Fisher information per observation at `sigma_hat` (infinite when
    /// the estimate is degenerate).
    pub fisher: f64,
}

impl VolEstimate {
    /// Builds an estimate from a given volatility, e.g. to inject a known value.
    pub fn from_sigma(sigma_hat: f64, n: usize) -> Self {
        Self {
            sigma_hat,
            n,
            fisher: 2.0 / (sigma_hat * sigma_hat),
        }
    }

    /// All standardised residuals were zero.
    pub fn is_degenerate(&self) -> bool {
        self.sigma_hat == 0.0
    }
}

/// `I(σ) = 2/σ²`.
pub fn fisher_information(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be > 0, got {sigma}")));
    }
    Ok(2.0 / (sigma * sigma))
}

/// MLE of σ from the first `n` increments of `path`, for a bridge pinned at
/// `strike` at time `horizon`:
/// `σ̂² = (1/n) Σ ((X_i − μ(t_{i−1}, X_{i−1}, t_i)) / ν₁(t_{i−1}, t_i))²`.
///
/// Observation times need not be equally spaced. Deviations from the
/// conditional mean below a few ulps are treated as zero, so a path lying on
/// the bridge mean yields exactly `σ̂ = 0`.
pub fn mle_sigma(path: &PricePath, n: usize, strike: f64, horizon: f64) -> Result<VolEstimate> {
    if n == 0 {
        return Err(invalid("n", "need at least one increment"));
    }
    if n > path.last_index() {
        return Err(invalid(
            "n",
            format!("{n} increments requested, path has {}", path.last_index()),
        ));
    }
    let unit = BridgeSpec::new(strike, horizon, 1.0, 0.0)?;
    let times = &path.times()[..=n];
    let values = &path.values()[..=n];
    if let Some(&t) = times.iter().find(|&&t| t >= horizon) {
        return Err(Error::TimeOutOfRange {
            time: t,
            lower: f64::NEG_INFINITY,
            upper: horizon,
        });
    }
    let mut sum_sq = 0.0;
    for i in 1..=n {
        let mean = unit.mean(times[i - 1], values[i - 1], times[i])?;
        let sd = unit.stddev(times[i - 1], times[i])?;
        let dev = values[i] - mean;
        // Deviations at rounding level count as exact zeros.
        if dev.abs() <= 8.0 * f64::EPSILON * values[i].abs().max(mean.abs()) {
            continue;
        }
        let r = dev / sd;
        sum_sq += r * r;
    }
    let sigma_hat = (sum_sq / n as f64).sqrt();
    Ok(VolEstimate {
        sigma_hat,
        n,
        fisher: 2.0 / (sigma_hat * sigma_hat),
    })
}

/// Which of the three curves of a band to use as a stopping rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BandCurve {
    Lower,
    Center,
    Upper,
}

/// Pointwise asymptotic confidence curves `b̂ ± z_{1−α/2}/√(n I(σ̂))·|∂b/∂σ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceBand {
    pub grid: TimeGrid,
    pub lower: Vec<f64>,
    pub center: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
    pub fd_step: f64,
    /// Specification at `σ̂` the center curve was solved for.
    pub spec: BridgeSpec,
    pub estimate: VolEstimate,
}

impl ConfidenceBand {
    pub fn curve(&self, which: BandCurve) -> &[f64] {
        match which {
            BandCurve::Lower => &self.lower,
            BandCurve::Center => &self.center,
            BandCurve::Upper => &self.upper,
        }
    }

    /// The selected curve as a put boundary.
    pub fn boundary(&self, which: BandCurve) -> Result<Boundary> {
        Boundary::new(
            self.spec,
            Side::Put,
            self.grid.clone(),
            self.curve(which).to_vec(),
        )
    }

    pub fn half_widths(&self) -> Vec<f64> {
        self.upper
            .iter()
            .zip(&self.center)
            .map(|(u, c)| u - c)
            .collect()
    }

    /// Writes the `t,lower,center,upper` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "lower", "center", "upper"])
            .map_err(csv_err)?;
        for i in 0..self.center.len() {
            w.write_record([
                self.grid.nodes()[i].to_string(),
                self.lower[i].to_string(),
                self.center[i].to_string(),
                self.upper[i].to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_band_args(est: &VolEstimate, alpha: f64, fd_step: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid("alpha", format!("must lie in (0, 1), got {alpha}")));
    }
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(invalid("fd_step", format!("must be > 0, got {fd_step}")));
    }
    if est.is_degenerate() {
        return Err(Error::DegenerateEstimate(
            "sigma_hat = 0: the observed path has no deviation from the bridge mean".into(),
        ));
    }
    if !(est.sigma_hat > 0.0 && est.sigma_hat.is_finite()) || est.n == 0 {
        return Err(invalid(
            "estimate",
            format!("sigma_hat = {}, n = {}", est.sigma_hat, est.n),
        ));
    }
    Ok(())
}

/// Builds the band from the boundary at `σ̂` and at `σ̂ + ε`, which must share
/// a grid. The slope `∂b/∂σ` is the forward difference quotient.
pub fn band_from_boundaries(
    center: &Boundary,
    shifted: &Boundary,
    est: &VolEstimate,
    alpha: f64,
    fd_step: f64,
) -> Result<ConfidenceBand> {
    check_band_args(est, alpha, fd_step)?;
    if center.grid() != shifted.grid() {
        return Err(Error::InvalidGrid(
            "center and shifted boundaries must share a grid".into(),
        ));
    }
    let z = normal::quantile(1.0 - alpha / 2.0);
    let scale = z / (est.n as f64 * fisher_information(est.sigma_hat)?).sqrt();
    let mut lower = Vec::with_capacity(center.values().len());
    let mut upper = Vec::with_capacity(center.values().len());
    for (b, b_eps) in center.values().iter().zip(shifted.values()) {
        let half = scale * ((b_eps - b) / fd_step).abs();
        lower.push(b - half);
        upper.push(b + half);
    }
    Ok(ConfidenceBand {
        grid: center.grid().clone(),
        lower,
        center: center.values().to_vec(),
        upper,
        alpha,
        fd_step,
        spec: *center.spec(),
        estimate: *est,
    })
}

/// Confidence curves for the boundary of `spec` (its σ is replaced by the
/// estimate), from one solve at `σ̂` and one at `σ̂ + ε`.
pub fn confidence_curves(
    est: &VolEstimate,
    spec: &BridgeSpec,
    config: &SolverConfig,
    alpha: f64,
    fd_step: f64,
) -> Result<ConfidenceBand> {
    check_band_args(est, alpha, fd_step)?;
    let center = solve_boundary(&spec.with_sigma(est.sigma_hat)?, config)?;
    let shifted = solve_boundary(&spec.with_sigma(est.sigma_hat + fd_step)?, config)?;
    band_from_boundaries(&center, &shifted, est, alpha, fd_step)
}

/// Setup of the coverage study of the confidence curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageConfig {
    /// True process (its σ is the value being estimated).
    pub spec: BridgeSpec,
    pub x0: f64,
    /// Increments used for estimation.
    pub n: usize,
    /// Intervals of both the equally spaced observation grid and the
    /// logarithmic solver grid.
    pub nodes: usize,
    pub replications: usize,
    pub alpha: f64,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    pub seed: u64,
}

pub(crate) fn default_fd_step() -> f64 {
    1e-2
}

pub(crate) fn default_delta() -> f64 {
    SolverConfig::DEFAULT_DELTA
}

/// Per-node proportion of replications whose band misses the true boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageResult {
    pub times: Vec<f64>,
    pub proportions: Vec<f64>,
    pub misses: Vec<usize>,
    /// Replications that failed (degenerate estimate or solver error).
    pub failures: usize,
    pub replications: usize,
    /// Reference band `α ± z_{0.975}√(α(1−α)/M)`.
    pub reference: (f64, f64),
}

impl CoverageResult {
    /// Writes the `t,proportion,failures` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "proportion", "failures"])
            .map_err(csv_err)?;
        for (t, p) in self.times.iter().zip(&self.proportions) {
            w.write_record([t.to_string(), p.to_string(), self.failures.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Simulates `M` paths, estimates σ from the first `n` steps of each, builds
/// the band and records at every solver node whether the true-σ boundary
/// falls outside `[lower, upper]`.
pub fn coverage_experiment(cfg: &CoverageConfig) -> Result<CoverageResult> {
    if cfg.replications == 0 {
        return Err(invalid("replications", "must be >= 1"));
    }
    if cfg.n == 0 || cfg.n >= cfg.nodes {
        return Err(invalid(
            "n",
            format!("need 1 <= n < nodes = {}, got {}", cfg.nodes, cfg.n),
        ));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(invalid(
            "alpha",
            format!("must lie in (0, 1), got {}", cfg.alpha),
        ));
    }
    let horizon = cfg.spec.horizon();
    let observation = TimeGrid::uniform(cfg.nodes, horizon)?;
    let solver = SolverConfig::new(
        TimeGrid::logarithmic(cfg.nodes, horizon)?,
        cfg.delta,
        SolverConfig::DEFAULT_MAX_ITERATIONS,
    )?;
    let truth = solve_boundary(&cfg.spec, &solver)?;

    let outcomes: Vec<Option<Vec<bool>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| {
            let mut rng = stream_rng(cfg.seed, rep as u64);
            let path = sample_path_with(&cfg.spec, cfg.x0, observation.nodes(), &mut rng).ok()?;
            let est = mle_sigma(&path, cfg.n, cfg.spec.strike(), horizon).ok()?;
            let band = confidence_curves(&est, &cfg.spec, &solver, cfg.alpha, cfg.fd_step).ok()?;
            Some(
                truth
                    .values()
                    .iter()
                    .zip(band.lower.iter().zip(&band.upper))
                    .map(|(b, (lo, hi))| b < lo || b > hi)
                    .collect(),
            )
        })
        .collect();

    let nodes = truth.values().len();
    let mut misses = vec![0usize; nodes];
    let mut failures = 0;
    for outcome in &outcomes {
        match outcome {
            Some(flags) => {
                for (m, &f) in misses.iter_mut().zip(flags) {
                    *m += f as usize;
                }
            }
            None => failures += 1,
        }
    }
    let ok = cfg.replications - failures;
    let proportions = misses
        .iter()
        .map(|&m| {
            if ok > 0 {
                m as f64 / ok as f64
            } else {
                f64::NAN
            }
        })
        .collect();
    let spread =
        normal::quantile(0.975) * (cfg.alpha * (1.0 - cfg.alpha) / cfg.replications as f64).sqrt();
    Ok(CoverageResult {
        times: truth.times().to_vec(),
        proportions,
        misses,
        failures,
        replications: cfg.replications,
        reference: (cfg.alpha - spread, cfg.alpha + spread),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::closed_form_boundary_lambda0;
    use crate::bridge::sample_path_noiseless;

    fn unit() -> BridgeSpec {
        BridgeSpec::new(10.0, 1.0, 1.0, 0.0).unwrap()
    }

    #[test]
    fn fisher_examples() {
        assert_eq!(fisher_information(1.0).unwrap(), 2.0);
        assert_eq!(fisher_information(2.0).unwrap(), 0.5);
        assert!(fisher_information(0.0).is_err());
        assert!(fisher_information(-1.0).is_err());
    }

    #[test]
    fn zero_residual_path_is_degenerate() {
        let s = unit();
        let g = TimeGrid::uniform(20, 1.0).unwrap();
        let p = sample_path_noiseless(&s, 9.0, g.nodes()).unwrap();
        let est = mle_sigma(&p, 10, 10.0, 1.0).unwrap();
        assert_eq!(est.sigma_hat, 0.0);
        assert!(est.is_degenerate());
        let cfg = SolverConfig::log_default(20, 1.0).unwrap();
        assert!(matches!(
            confidence_curves(&est, &s, &cfg, 0.05, 1e-2),
            Err(Error::DegenerateEstimate(_))
        ));
    }

    /// Builds a path whose standardised residuals are all `c`.
    fn constant_residual_path(c: f64, times: &[f64]) -> PricePath {
        let unit = BridgeSpec::new(10.0, 1.0, 1.0, 0.0).unwrap();
        let mut values = vec![9.5];
        for w in times.windows(2) {
            let x = *values.last().unwrap();
            values.push(unit.mean(w[0], x, w[1]).unwrap() + c * unit.stddev(w[0], w[1]).unwrap());
        }
        PricePath::new(times.to_vec(), values).unwrap()
    }

    #[test]
    fn constant_residuals_give_their_magnitude() {
        let times: Vec<f64> = vec![0.0, 0.05, 0.2, 0.21, 0.5, 0.7];
        for c in [0.3, -1.7] {
            let p = constant_residual_path(c, &times);
            let est = mle_sigma(&p, 5, 10.0, 1.0).unwrap();
            assert!((est.sigma_hat - c.abs()).abs() < 1e-12);
            assert!((est.fisher - 2.0 / (c * c)).abs() < 1e-9);
        }
    }

    #[test]
    fn estimator_rejects_bad_inputs() {
        let times: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let p = constant_residual_path(1.0, &times[..10]);
        assert!(mle_sigma(&p, 0, 10.0, 1.0).is_err());
        assert!(mle_sigma(&p, 10, 10.0, 1.0).is_err());
        let full = PricePath::new(times.clone(), vec![10.0; 11]).unwrap();
        assert!(matches!(
            mle_sigma(&full, 10, 10.0, 1.0),
            Err(Error::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn band_is_symmetric_and_pinned() {
        let s = unit();
        let cfg = SolverConfig::log_default(60, 1.0).unwrap();
        let est = VolEstimate::from_sigma(1.1, 50);
        let band = confidence_curves(&est, &s, &cfg, 0.05, 1e-2).unwrap();
        let n = band.center.len() - 1;
        assert_eq!(band.lower[n], 10.0);
        assert_eq!(band.upper[n], 10.0);
        for i in 0..=n {
            assert!(band.lower[i] <= band.center[i] && band.center[i] <= band.upper[i]);
            assert!(((band.lower[i] + band.upper[i]) / 2.0 - band.center[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn band_collapses_as_alpha_tends_to_one() {
        let s = unit();
        let cfg = SolverConfig::log_default(40, 1.0).unwrap();
        let est = VolEstimate::from_sigma(0.9, 30);
        let band = confidence_curves(&est, &s, &cfg, 1.0 - 1e-9, 1e-2).unwrap();
        assert!(band.half_widths().iter().all(|h| *h < 1e-6));
    }

    #[test]
    fn half_width_scales_with_inverse_root_n() {
        let s = unit();
        let g = TimeGrid::logarithmic(40, 1.0).unwrap();
        let c = closed_form_boundary_lambda0(&s.with_sigma(0.8).unwrap(), &g).unwrap();
        let e = closed_form_boundary_lambda0(&s.with_sigma(0.81).unwrap(), &g).unwrap();
        let a =
            band_from_boundaries(&c, &e, &VolEstimate::from_sigma(0.8, 100), 0.05, 1e-2).unwrap();
        let b =
            band_from_boundaries(&c, &e, &VolEstimate::from_sigma(0.8, 200), 0.05, 1e-2).unwrap();
        for (wa, wb) in a.half_widths().iter().zip(b.half_widths()) {
            assert!((wa - wb * 2f64.sqrt()).abs() <= 1e-12 * wa.max(1.0));
        }
    }

    #[test]
    fn closed_form_slope_matches_analytic_derivative() {
        let s = unit();
        let g = TimeGrid::logarithmic(50, 1.0).unwrap();
        let sigma = 1.2;
        let c = closed_form_boundary_lambda0(&s.with_sigma(sigma).unwrap(), &g).unwrap();
        let e = closed_form_boundary_lambda0(&s.with_sigma(sigma + 1e-2).unwrap(), &g).unwrap();
        for i in 0..50 {
            let fd = (e.values()[i] - c.values()[i]) / 1e-2;
            let exact = -crate::boundary::SHEPP_CONSTANT * (1.0 - g.nodes()[i]).sqrt();
            assert!((fd - exact).abs() <= 0.05 * exact.abs());
        }
    }

    #[test]
    fn band_args_are_validated() {
        let s = unit();
        let cfg = SolverConfig::log_default(20, 1.0).unwrap();
        let est = VolEstimate::from_sigma(1.0, 10);
        assert!(confidence_curves(&est, &s, &cfg, 0.0, 1e-2).is_err());
        assert!(confidence_curves(&est, &s, &cfg, 1.0, 1e-2).is_err());
        assert!(confidence_curves(&est, &s, &cfg, 0.05, 0.0).is_err());
    }

    #[test]
    fn very_wide_band_never_misses() {
        let cfg = CoverageConfig {
            spec: unit(),
            x0: 10.0,
            n: 30,
            nodes: 60,
            replications: 1,
            alpha: 1e-12,
            fd_step: 1e-2,
            delta: 1e-3,
            seed: 11,
        };
        let r = coverage_experiment(&cfg).unwrap();
        assert_eq!(r.failures, 0);
        assert!(r.proportions.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn coverage_is_reproducible_and_validated() {
        let cfg = CoverageConfig {
            spec: unit(),
            x0: 10.0,
            n: 20,
            nodes: 40,
            replications: 16,
            alpha: 0.05,
            fd_step: 1e-2,
            delta: 1e-3,
            seed: 3,
        };
        let a = coverage_experiment(&cfg).unwrap();
        let b = coverage_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        assert!(csv.starts_with(b"t,proportion,failures\n"));
        let bad = CoverageConfig {
            n: 40,
            ..cfg.clone()
        };
        assert!(coverage_experiment(&bad).is_err());
        let bad = CoverageConfig {
            replications: 0,
            ..cfg
        };
        assert!(coverage_experiment(&bad).is_err());
    }
}
