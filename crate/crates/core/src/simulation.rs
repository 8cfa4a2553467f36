//! Stopping rules on discretely sampled paths and the Monte Carlo payoff
//! study comparing the true, estimated and confidence-curve boundaries.
//!
//! Hitting is checked at path nodes only, so payoffs carry a small
//! discrete-monitoring bias relative to continuous exercise.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{closed_form_boundary_lambda0, solve_boundary, Boundary, Side, SolverConfig};
use crate::bridge::{
    path_stepper, sample_path_through_with, sample_path_with, stream_rng, BridgeSpec,
};
use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::inference::{confidence_curves, mle_sigma, BandCurve, VolEstimate};
use crate::path::{csv_err, PricePath};

/// Exercise the first time the price is at or beyond the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRule {
    boundary: Boundary,
}

impl StoppingRule {
    pub fn new(boundary: Boundary) -> Self {
        Self { boundary }
    }

    /// Rule with the same level at every time.
    pub fn constant(spec: BridgeSpec, side: Side, level: f64, grid: &TimeGrid) -> Result<Self> {
        let values = vec![level; grid.nodes().len()];
        Ok(Self::new(Boundary::new(spec, side, grid.clone(), values)?))
    }

    pub fn boundary(&self) -> &Boundary {
        &self.boundary
    }

    pub fn side(&self) -> Side {
        self.boundary.side()
    }

    pub fn strike(&self) -> f64 {
        self.boundary.spec().strike()
    }

    #[inline]
    fn stops(&self, t: f64, x: f64) -> bool {
        self.stops_at(self.boundary.eval(t), x)
    }

    #[inline]
    fn stops_at(&self, level: f64, x: f64) -> bool {
        match self.side() {
            Side::Put => x <= level,
            Side::Call => x >= level,
        }
    }

    #[inline]
    fn gain(&self, x: f64) -> f64 {
        match self.side() {
            Side::Put => (self.strike() - x).max(0.0),
            Side::Call => (x - self.strike()).max(0.0),
        }
    }

    fn check_window(&self, path: &PricePath, from: usize) -> Result<()> {
        if from >= path.len() {
            return Err(invalid(
                "from",
                format!(
                    "index {from} out of bounds for a path of length {}",
                    path.len()
                ),
            ));
        }
        let grid = self.boundary.grid();
        let tol = grid.tolerance();
        let (start, end) = (path.times()[from], path.times()[path.last_index()]);
        if start < -tol || end > grid.horizon() + tol {
            return Err(Error::TimeOutOfRange {
                time: if start < 0.0 { start } else { end },
                lower: 0.0,
                upper: grid.horizon(),
            });
        }
        Ok(())
    }
}

/// Smallest index `j ≥ from` at which the rule stops; the last index if it
/// never does.
pub fn first_hit(path: &PricePath, rule: &StoppingRule, from: usize) -> Result<usize> {
    rule.check_window(path, from)?;
    Ok(first_hit_unchecked(path, rule, from))
}

fn first_hit_unchecked(path: &PricePath, rule: &StoppingRule, from: usize) -> usize {
    let (times, values) = (path.times(), path.values());
    (from..path.len())
        .find(|&j| rule.stops(times[j], values[j]))
        .unwrap_or(path.last_index())
}

/// `e^{−λ(t_τ − t_from)}·G(X_τ)` with `τ` from [`first_hit`].
pub fn discounted_payoff(
    path: &PricePath,
    rule: &StoppingRule,
    lambda: f64,
    from: usize,
) -> Result<f64> {
    rule.check_window(path, from)?;
    Ok(payoff_unchecked(path, rule, lambda, from))
}

fn payoff_unchecked(path: &PricePath, rule: &StoppingRule, lambda: f64, from: usize) -> f64 {
    let j = first_hit_unchecked(path, rule, from);
    let elapsed = path.times()[j] - path.times()[from];
    (-lambda * elapsed).exp() * rule.gain(path.values()[j])
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Sample mean, unbiased variance (NaN below two samples), standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SampleStats {
    pub mean: f64,
    pub variance: f64,
    pub se: f64,
    pub count: usize,
}

impl SampleStats {
    pub fn of(samples: &[f64]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                variance: f64::NAN,
                se: f64::NAN,
                count,
            };
        }
        let mut acc = CompensatedSum::default();
        samples.iter().for_each(|&v| acc.add(v));
        let mean = acc.total() / count as f64;
        let variance = if count > 1 {
            let mut sq = CompensatedSum::default();
            samples
                .iter()
                .for_each(|&v| sq.add((v - mean) * (v - mean)));
            sq.total() / (count - 1) as f64
        } else {
            f64::NAN
        };
        Self {
            mean,
            variance,
            se: (variance / count as f64).sqrt(),
            count,
        }
    }
}

/// Monte Carlo estimate of the expected discounted payoff of `rule` started
/// at `(times[0], x0)`, over `paths` bridge paths sampled on `times`.
pub fn stopped_payoff_mc(
    spec: &BridgeSpec,
    rule: &StoppingRule,
    x0: f64,
    times: &[f64],
    paths: usize,
    seed: u64,
) -> Result<SampleStats> {
    if paths == 0 {
        return Err(invalid("paths", "must be >= 1"));
    }
    let probe = sample_path_with(spec, x0, times, &mut stream_rng(seed, 0))?;
    rule.check_window(&probe, 0)?;
    let spline = rule.boundary.spline();
    let lambda = spec.discount();
    let payoffs: Vec<f64> = (0..paths)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k as u64);
            let mut hint = 0;
            if rule.stops_at(spline.eval_forward(&mut hint, times[0]), x0) {
                return rule.gain(x0);
            }
            let mut last = (times[0], x0);
            for (t, x) in path_stepper(spec, x0, times, &mut rng).expect("validated grid") {
                last = (t, x);
                if rule.stops_at(spline.eval_forward(&mut hint, t), x) {
                    break;
                }
            }
            (-lambda * (last.0 - times[0])).exp() * rule.gain(last.1)
        })
        .collect();
    Ok(SampleStats::of(&payoffs))
}

/// Stopping rules compared in the payoff study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RuleKind {
    /// Boundary at the true volatility.
    True,
    /// Boundary at the estimated volatility.
    Estimated,
    /// Upper confidence curve.
    Upper,
    /// Lower confidence curve.
    Lower,
}

impl RuleKind {
    pub const ALL: [RuleKind; 4] = [
        RuleKind::True,
        RuleKind::Estimated,
        RuleKind::Upper,
        RuleKind::Lower,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RuleKind::True => "true",
            RuleKind::Estimated => "estimated",
            RuleKind::Upper => "upper",
            RuleKind::Lower => "lower",
        }
    }
}

/// How the reference ("true") boundary of the study is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrueBoundary {
    /// Closed form when `λ = 0`, otherwise a solve on `true_nodes` log intervals.
    #[default]
    Auto,
    ClosedForm,
    /// Solve on `true_nodes` log intervals.
    Solved,
}

fn default_true_nodes() -> usize {
    1000
}

fn default_alpha() -> f64 {
    0.05
}

fn default_history_fraction() -> f64 {
    1.0
}

fn default_nodes() -> usize {
    SolverConfig::DEFAULT_NODES
}

/// Declarative description of the payoff study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub spec: BridgeSpec,
    pub x0: f64,
    /// Base grid count `N`; evaluation nodes are `t_i = i·T/N`.
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    /// Sampling frequency multiplier `r`: paths are sampled every `T/(rN)`.
    pub frequency: usize,
    pub replications: usize,
    pub quantiles: Vec<f64>,
    /// Indices `i` of the evaluation nodes.
    pub eval_nodes: Vec<usize>,
    /// Fraction of the history increments used by the estimator.
    #[serde(default = "default_history_fraction")]
    pub history_fraction: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "crate::inference::default_fd_step")]
    pub fd_step: f64,
    #[serde(default = "crate::inference::default_delta")]
    pub delta: f64,
    /// Intervals of the logarithmic solver grid.
    #[serde(default = "default_nodes")]
    pub solver_nodes: usize,
    #[serde(default)]
    pub true_boundary: TrueBoundary,
    #[serde(default = "default_true_nodes")]
    pub true_nodes: usize,
    /// Skip estimation and use the true σ (diagnostic).
    #[serde(default)]
    pub inject_true_sigma: bool,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.frequency == 0 {
            return Err(invalid("frequency", "must be >= 1"));
        }
        if self.replications == 0 {
            return Err(invalid("replications", "must be >= 1"));
        }
        if self.nodes < 2 {
            return Err(invalid("nodes", "must be >= 2"));
        }
        if self.quantiles.is_empty() || self.quantiles.iter().any(|q| !(*q > 0.0 && *q < 1.0)) {
            return Err(invalid(
                "quantiles",
                "need at least one level, all in (0, 1)",
            ));
        }
        if self.eval_nodes.is_empty() || self.eval_nodes.iter().any(|&i| i == 0 || i >= self.nodes)
        {
            return Err(invalid(
                "eval_nodes",
                format!("need at least one index, all in [1, {})", self.nodes),
            ));
        }
        if !(self.history_fraction > 0.0 && self.history_fraction <= 1.0) {
            return Err(invalid("history_fraction", "must lie in (0, 1]"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha", "must lie in (0, 1)"));
        }
        if !(self.fd_step > 0.0) {
            return Err(invalid("fd_step", "must be > 0"));
        }
        if self.true_boundary == TrueBoundary::ClosedForm && self.spec.discount() != 0.0 {
            return Err(invalid("true_boundary", "closed form requires lambda = 0"));
        }
        Ok(())
    }
}

/// Payoffs of one `(t_i, q)` cell, one vector per rule, paired by path.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffCell {
    pub node: usize,
    pub t: f64,
    pub q: f64,
    /// Forced value at `t`.
    pub x: f64,
    pub failures: usize,
    pub payoffs: BTreeMap<RuleKind, Vec<f64>>,
}

impl PayoffCell {
    pub fn stats(&self, rule: RuleKind) -> SampleStats {
        SampleStats::of(&self.payoffs[&rule])
    }

    /// Statistics of the per-path differences `rule_a − rule_b`.
    pub fn paired(&self, a: RuleKind, b: RuleKind) -> SampleStats {
        let diffs: Vec<f64> = self.payoffs[&a]
            .iter()
            .zip(&self.payoffs[&b])
            .map(|(x, y)| x - y)
            .collect();
        SampleStats::of(&diffs)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffTable {
    pub cells: Vec<PayoffCell>,
}

impl PayoffTable {
    pub fn cell(&self, node: usize, q: f64) -> Option<&PayoffCell> {
        self.cells.iter().find(|c| c.node == node && c.q == q)
    }

    /// Writes the `t,q,rule,mean,variance,se,count,failures` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record([
            "t", "q", "rule", "mean", "variance", "se", "count", "failures",
        ])
        .map_err(csv_err)?;
        for cell in &self.cells {
            for rule in RuleKind::ALL {
                let s = cell.stats(rule);
                w.write_record([
                    cell.t.to_string(),
                    cell.q.to_string(),
                    rule.name().to_string(),
                    s.mean.to_string(),
                    s.variance.to_string(),
                    s.se.to_string(),
                    s.count.to_string(),
                    cell.failures.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn reference_rule(cfg: &ExperimentConfig, path_grid: &TimeGrid) -> Result<StoppingRule> {
    let use_closed = match cfg.true_boundary {
        TrueBoundary::Auto => cfg.spec.discount() == 0.0,
        TrueBoundary::ClosedForm => true,
        TrueBoundary::Solved => false,
    };
    let boundary = if use_closed {
        closed_form_boundary_lambda0(&cfg.spec, path_grid)?
    } else {
        let solver = SolverConfig::new(
            TimeGrid::logarithmic(cfg.true_nodes, cfg.spec.horizon())?,
            cfg.delta,
            SolverConfig::DEFAULT_MAX_ITERATIONS,
        )?;
        solve_boundary(&cfg.spec, &solver)?
    };
    Ok(StoppingRule::new(boundary))
}

/// Runs the payoff study: for every `(t_i, q)` cell, `M` paths forced through
/// the `q`-quantile at `t_i`; σ is estimated from each path's history, and the
/// four rules are evaluated on its future, all on the same paths.
pub fn run_payoff_study(cfg: &ExperimentConfig) -> Result<PayoffTable> {
    cfg.validate()?;
    let spec = cfg.spec;
    let horizon = spec.horizon();
    let steps = cfg.frequency * cfg.nodes;
    let path_grid = TimeGrid::uniform(steps, horizon)?;
    let solver = SolverConfig::new(
        TimeGrid::logarithmic(cfg.solver_nodes, horizon)?,
        cfg.delta,
        SolverConfig::DEFAULT_MAX_ITERATIONS,
    )?;
    let truth = reference_rule(cfg, &path_grid)?;

    let mut cells = Vec::new();
    for &node in &cfg.eval_nodes {
        for &q in &cfg.quantiles {
            let t = node as f64 * horizon / cfg.nodes as f64;
            let x = spec.marginal_quantile(t, q, 0.0, cfg.x0)?;
            cells.push((node, t, q, x));
        }
    }

    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..cfg.replications).map(move |m| (c, m)))
        .collect();
    let outcomes: Vec<Option<[f64; 4]>> = jobs
        .par_iter()
        .map(|&(c, m)| {
            let (node, _, _, x) = cells[c];
            let split = node * cfg.frequency;
            let mut rng = stream_rng(cfg.seed, ((c as u64) << 32) | m as u64);
            let path = sample_path_through_with(
                &spec,
                cfg.x0,
                path_grid.nodes()[split],
                x,
                path_grid.nodes(),
                &mut rng,
            )
            .expect("split is an interior grid node");
            evaluate_path(cfg, &solver, &truth, &path, split).ok()
        })
        .collect();

    let mut table = Vec::with_capacity(cells.len());
    for (c, &(node, t, q, x)) in cells.iter().enumerate() {
        let mut payoffs: BTreeMap<RuleKind, Vec<f64>> =
            RuleKind::ALL.iter().map(|&r| (r, Vec::new())).collect();
        let mut failures = 0;
        for outcome in &outcomes[c * cfg.replications..(c + 1) * cfg.replications] {
            match outcome {
                Some(values) => {
                    for (rule, v) in RuleKind::ALL.iter().zip(values) {
                        payoffs.get_mut(rule).expect("all rules present").push(*v);
                    }
                }
                None => failures += 1,
            }
        }
        table.push(PayoffCell {
            node,
            t,
            q,
            x,
            failures,
            payoffs,
        });
    }
    Ok(PayoffTable { cells: table })
}

fn evaluate_path(
    cfg: &ExperimentConfig,
    solver: &SolverConfig,
    truth: &StoppingRule,
    path: &PricePath,
    split: usize,
) -> Result<[f64; 4]> {
    let spec = cfg.spec;
    let est = if cfg.inject_true_sigma {
        VolEstimate::from_sigma(spec.sigma(), split)
    } else {
        let used = ((cfg.history_fraction * split as f64).floor() as usize).max(1);
        mle_sigma(path, used, spec.strike(), spec.horizon())?
    };
    let band = confidence_curves(&est, &spec, solver, cfg.alpha, cfg.fd_step)?;
    let lambda = spec.discount();
    let mut out = [0.0; 4];
    for (slot, rule) in out.iter_mut().zip(RuleKind::ALL) {
        *slot = match rule {
            RuleKind::True => payoff_unchecked(path, truth, lambda, split),
            other => {
                let curve = match other {
                    RuleKind::Estimated => BandCurve::Center,
                    RuleKind::Upper => BandCurve::Upper,
                    _ => BandCurve::Lower,
                };
                payoff_unchecked(
                    path,
                    &StoppingRule::new(band.boundary(curve)?),
                    lambda,
                    split,
                )
            }
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> BridgeSpec {
        BridgeSpec::new(10.0, 1.0, 1.0, 0.0).unwrap()
    }

    fn level_rule(level: f64) -> StoppingRule {
        StoppingRule::constant(
            unit(),
            Side::Put,
            level,
            &TimeGrid::uniform(4, 1.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn immediate_stop_when_starting_below() {
        let p = PricePath::new(vec![0.0, 0.5, 1.0], vec![9.0, 11.0, 10.0]).unwrap();
        assert_eq!(first_hit(&p, &level_rule(9.5), 0).unwrap(), 0);
        assert!((discounted_payoff(&p, &level_rule(9.5), 0.0, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn never_hit_pays_nothing() {
        let p = PricePath::new(vec![0.0, 0.5, 1.0], vec![11.0, 10.5, 10.0]).unwrap();
        assert_eq!(first_hit(&p, &level_rule(9.5), 0).unwrap(), 2);
        assert_eq!(
            discounted_payoff(&p, &level_rule(9.5), 0.3, 0).unwrap(),
            0.0
        );
    }

    #[test]
    fn crossing_between_nodes_stops_at_first_node_at_or_below() {
        // Enumerate every level against a three-point path.
        let p = PricePath::new(vec![0.0, 0.4, 0.8], vec![10.0, 9.6, 9.2]).unwrap();
        for k in 0..=40 {
            let level = 9.0 + k as f64 * 0.05;
            let expect = p.values().iter().position(|&x| x <= level).unwrap_or(2);
            assert_eq!(
                first_hit(&p, &level_rule(level), 0).unwrap(),
                expect,
                "level {level}"
            );
        }
        assert_eq!(first_hit(&p, &level_rule(9.6), 0).unwrap(), 1);
    }

    #[test]
    fn discounting_uses_elapsed_time() {
        let p = PricePath::new(vec![0.2, 0.5, 0.7], vec![10.0, 9.8, 9.0]).unwrap();
        let v = discounted_payoff(&p, &level_rule(9.5), 0.1, 0).unwrap();
        assert!((v - (-0.05f64).exp()).abs() < 1e-15);
        assert!((v - 0.951_229_424_500_714).abs() < 1e-12);
    }

    #[test]
    fn call_rule_mirrors_put_rule() {
        let call = StoppingRule::constant(
            unit(),
            Side::Call,
            10.5,
            &TimeGrid::uniform(4, 1.0).unwrap(),
        )
        .unwrap();
        let p = PricePath::new(vec![0.0, 0.5, 1.0], vec![10.0, 11.0, 10.0]).unwrap();
        assert_eq!(first_hit(&p, &call, 0).unwrap(), 1);
        assert!((discounted_payoff(&p, &call, 0.0, 0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn window_outside_rule_grid_is_rejected() {
        let p = PricePath::new(vec![0.0, 0.5, 1.5], vec![10.0, 9.8, 9.0]).unwrap();
        assert!(first_hit(&p, &level_rule(9.5), 0).is_err());
        let q = PricePath::new(vec![0.0, 0.5], vec![10.0, 9.8]).unwrap();
        assert!(first_hit(&q, &level_rule(9.5), 2).is_err());
    }

    #[test]
    fn sample_stats_edge_cases() {
        let one = SampleStats::of(&[2.0]);
        assert_eq!(one.mean, 2.0);
        assert!(one.variance.is_nan());
        let s = SampleStats::of(&[1.0, 2.0, 3.0, 4.0]);
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.se - (5.0 / 12.0f64).sqrt()).abs() < 1e-15);
    }

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            spec: unit(),
            x0: 10.0,
            nodes: 40,
            frequency: 2,
            replications: 12,
            quantiles: vec![0.2, 0.8],
            eval_nodes: vec![10, 30],
            history_fraction: 1.0,
            alpha: 0.05,
            fd_step: 1e-2,
            delta: 1e-3,
            solver_nodes: 40,
            true_boundary: TrueBoundary::Auto,
            true_nodes: 1000,
            inject_true_sigma: false,
            seed: 5,
        }
    }

    #[test]
    fn identical_rules_give_identical_columns() {
        let cfg = ExperimentConfig {
            inject_true_sigma: true,
            true_boundary: TrueBoundary::Solved,
            true_nodes: 40,
            alpha: 1.0 - 1e-15,
            ..small_config()
        };
        let table = run_payoff_study(&cfg).unwrap();
        for cell in &table.cells {
            let base = &cell.payoffs[&RuleKind::True];
            for rule in RuleKind::ALL {
                assert_eq!(&cell.payoffs[&rule], base, "rule {rule:?}");
            }
        }
    }

    #[test]
    fn payoff_study_is_deterministic_and_bounded() {
        let cfg = small_config();
        let a = run_payoff_study(&cfg).unwrap();
        let b = run_payoff_study(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.cells.len(), 4);
        for cell in &a.cells {
            for v in cell.payoffs.values().flatten() {
                assert!(*v >= 0.0 && *v <= 10.0);
            }
        }
        let mut csv = Vec::new();
        a.write_csv(&mut csv).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert!(text.starts_with("t,q,rule,mean,variance,se,count,failures\n"));
        assert_eq!(text.lines().count(), 1 + 4 * 4);
    }

    #[test]
    fn single_replication_has_undefined_variance() {
        let cfg = ExperimentConfig {
            replications: 1,
            ..small_config()
        };
        let table = run_payoff_study(&cfg).unwrap();
        assert!(table.cells[0].stats(RuleKind::True).variance.is_nan());
    }

    #[test]
    fn config_validation() {
        let bad = ExperimentConfig {
            eval_nodes: vec![40],
            ..small_config()
        };
        assert!(run_payoff_study(&bad).is_err());
        let bad = ExperimentConfig {
            quantiles: vec![1.0],
            ..small_config()
        };
        assert!(run_payoff_study(&bad).is_err());
        let bad = ExperimentConfig {
            frequency: 0,
            ..small_config()
        };
        assert!(run_payoff_study(&bad).is_err());
        let json = serde_json::to_value(small_config()).unwrap();
        let mut with_typo = json.clone();
        with_typo["replicatons"] = 3.into();
        let err = serde_json::from_value::<ExperimentConfig>(with_typo).unwrap_err();
        assert!(err.to_string().contains("replicatons"));
        assert_eq!(
            serde_json::from_value::<ExperimentConfig>(json).unwrap(),
            small_config()
        );
    }
}
