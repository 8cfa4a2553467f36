//! Free-boundary solver for the American put on a pinned Brownian bridge.
//!
//! The boundary solves `b(t) = S − ∫_t^T K(t, b(t), u, b(u)) du`. The integral
//! is discretised with right Riemann sums on every subinterval but the last,
//! where the kernel is singular; that piece is replaced by half of its upper
//! bound `H`. Nodes are resolved backward from `b(T) = S`, each one as the
//! fixed point of the resulting update map.

use std::f64::consts::PI;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::bridge::BridgeSpec;
use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::normal;
use crate::path::{csv_err, read_two_columns};
use crate::spline::CubicSpline;

/// Constant of the zero-discount closed form `b(t) = S − Bσ√(T − t)`, as
/// printed (four decimals).
pub const SHEPP_CONSTANT: f64 = 0.8399;

/// Option side a boundary belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Put,
    Call,
}

impl std::str::FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "put" => Ok(Side::Put),
            "call" => Ok(Side::Call),
            other => Err(invalid("side", format!("expected put|call, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative fixed-point tolerance.
    pub delta: f64,
    pub max_iterations: usize,
    pub grid: TimeGrid,
}

impl SolverConfig {
    pub const DEFAULT_DELTA: f64 = 1e-3;
    pub const DEFAULT_NODES: usize = 200;
    pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

    pub fn new(grid: TimeGrid, delta: f64, max_iterations: usize) -> Result<Self> {
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(invalid("delta", format!("must be > 0, got {delta}")));
        }
        if max_iterations == 0 {
            return Err(invalid("max_iterations", "must be >= 1"));
        }
        Ok(Self {
            delta,
            max_iterations,
            grid,
        })
    }

    /// Logarithmic grid with `nodes` intervals, `δ = 10⁻³`, 1000 iterations.
    pub fn log_default(nodes: usize, horizon: f64) -> Result<Self> {
        Self::new(
            TimeGrid::logarithmic(nodes, horizon)?,
            Self::DEFAULT_DELTA,
            Self::DEFAULT_MAX_ITERATIONS,
        )
    }
}

/// Per-node diagnostics of a solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub delta: f64,
    #[serde(rename = "N")]
    pub intervals: usize,
    #[serde(rename = "iterations-per-node")]
    pub iterations: Vec<usize>,
}

/// Grid-sampled stopping boundary, interpolated by a natural cubic spline.
#[derive(Debug, Clone, PartialEq)]
pub struct Boundary {
    spec: BridgeSpec,
    side: Side,
    grid: TimeGrid,
    values: Vec<f64>,
    spline: CubicSpline,
    stats: Option<SolveStats>,
}

impl Boundary {
    pub fn new(spec: BridgeSpec, side: Side, grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes().len() {
            return Err(invalid(
                "values",
                format!(
                    "{} values for a grid of {} nodes",
                    values.len(),
                    grid.nodes().len()
                ),
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "non-finite boundary value"));
        }
        let spline = CubicSpline::natural(grid.nodes(), &values);
        Ok(Self {
            spec,
            side,
            grid,
            values,
            spline,
            stats: None,
        })
    }

    fn with_stats(mut self, stats: SolveStats) -> Self {
        self.stats = Some(stats);
        self
    }

    pub fn spec(&self) -> &BridgeSpec {
        &self.spec
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        self.grid.nodes()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn stats(&self) -> Option<&SolveStats> {
        self.stats.as_ref()
    }

    /// Spline value at `t`.
    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        self.spline.eval(t)
    }

    pub fn spline(&self) -> &CubicSpline {
        &self.spline
    }

    /// Resamples the boundary (through its spline) on another grid.
    pub fn resample(&self, grid: &TimeGrid) -> Result<Self> {
        let values = grid.nodes().iter().map(|&t| self.eval(t)).collect();
        Self::new(self.spec, self.side, grid.clone(), values)
    }

    /// Writes the `t,b` CSV form.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["t", "b"]).map_err(csv_err)?;
        for (t, b) in self.times().iter().zip(&self.values) {
            w.write_record([t.to_string(), b.to_string()])
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a `t,b` CSV; the grid must start at 0 and end at the horizon
    /// of `spec`.
    pub fn read_csv<R: Read>(reader: R, spec: BridgeSpec, side: Side) -> Result<Self> {
        let (times, values) = read_two_columns(reader, ("t", "b"))?;
        let grid = TimeGrid::new(times)?;
        if (grid.horizon() - spec.horizon()).abs() > grid.tolerance() {
            return Err(Error::InvalidGrid(format!(
                "boundary ends at {}, expected horizon {}",
                grid.horizon(),
                spec.horizon()
            )));
        }
        Self::new(spec, side, grid, values)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(BoundaryDoc {
            spec: self.spec,
            side: self.side,
            grid: self.grid.clone(),
            values: self.values.clone(),
            solver: self.stats.clone(),
        })
        .expect("boundary serialises")
    }

    pub fn from_json(value: serde_json::Value) -> Result<Self> {
        let doc: BoundaryDoc =
            serde_json::from_value(value).map_err(|e| Error::Parse(e.to_string()))?;
        let b = Self::new(doc.spec, doc.side, doc.grid, doc.values)?;
        Ok(match doc.solver {
            Some(stats) => b.with_stats(stats),
            None => b,
        })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoundaryDoc {
    spec: BridgeSpec,
    side: Side,
    grid: TimeGrid,
    values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    solver: Option<SolveStats>,
}

/// Logarithmically spaced grid `t_i = log(1 + (i/N)(e^T − 1))`.
pub fn log_grid(intervals: usize, horizon: f64) -> Result<TimeGrid> {
    TimeGrid::logarithmic(intervals, horizon)
}

/// Kernel `K_{σ,λ}(t, x1, u, x2)` of the pricing representation.
///
/// At `u = t` the transition is degenerate; the continuous limit
/// `(1/(T−t) + λ)(S − x1)·1{x2 ≥ x1}` is returned.
pub fn kernel(spec: &BridgeSpec, t: f64, x1: f64, u: f64, x2: f64) -> Result<f64> {
    let horizon = spec.horizon();
    if !(u < horizon) {
        return Err(Error::TimeOutOfRange {
            time: u,
            lower: t,
            upper: horizon,
        });
    }
    if !(t <= u) {
        return Err(Error::TimeOutOfRange {
            time: t,
            lower: f64::NEG_INFINITY,
            upper: u,
        });
    }
    if u == t {
        let rate = 1.0 / (horizon - t) + spec.discount();
        return Ok(if x2 >= x1 {
            rate * (spec.strike() - x1)
        } else {
            0.0
        });
    }
    Ok(kernel_unchecked(spec, t, x1, u, x2))
}

#[inline]
pub(crate) fn kernel_unchecked(spec: &BridgeSpec, t: f64, x1: f64, u: f64, x2: f64) -> f64 {
    let lambda = spec.discount();
    let mean = spec.mean_unchecked(t, x1, u);
    let sd = spec.stddev_unchecked(t, u);
    let z = (x2 - mean) / sd;
    let weight = (-lambda * (u - t)).exp() * (1.0 / (spec.horizon() - u) + lambda);
    weight * ((spec.strike() - mean) * normal::cdf(z) + sd * normal::pdf(z))
}

/// `H(t, a)/2`: half the upper bound of `∫_a^T K(t, x, u, b(u)) du`, used as
/// the estimate of the integral over the last (singular) subinterval.
pub fn tail_estimate(spec: &BridgeSpec, t: f64, x: f64, a: f64) -> f64 {
    let horizon = spec.horizon();
    let lambda = spec.discount();
    let h = horizon - a;
    let decay = (-lambda * (a - t)).exp();
    0.5 * decay
        * ((spec.strike() - x) * h / (horizon - t) * (1.0 + 0.5 * lambda * h)
            + spec.sigma() * (2.0 * h / PI).sqrt() * (1.0 + lambda * h / 3.0))
}

/// Precomputed per-node constants of the interior update
/// `b ← (c_i − Σ_j Δt_j K(t_i, b, t_j, b_j)) / d_i`.
struct Recursion<'a> {
    spec: &'a BridgeSpec,
    nodes: &'a [f64],
    numerators: Vec<f64>,
    denominators: Vec<f64>,
}

impl<'a> Recursion<'a> {
    fn new(spec: &'a BridgeSpec, grid: &'a TimeGrid) -> Result<Self> {
        let nodes = grid.nodes();
        let n = nodes.len() - 1;
        let horizon = spec.horizon();
        if (grid.horizon() - horizon).abs() > grid.tolerance() {
            return Err(Error::InvalidGrid(format!(
                "grid ends at {}, horizon is {horizon}",
                grid.horizon()
            )));
        }
        let lambda = spec.discount();
        let strike = spec.strike();
        let h = horizon - nodes[n - 1];
        if lambda * h >= 1.0 {
            return Err(Error::GridTooCoarse {
                node: n - 1,
                time: nodes[n - 1],
                denominator: 0.5 - 0.25 * lambda * h,
            });
        }
        let tail_sigma = spec.sigma() * (2.0 * h / PI).sqrt() * (1.0 + lambda * h / 3.0);
        let grow = 1.0 + 0.5 * lambda * h;
        let mut numerators = vec![0.0; n];
        let mut denominators = vec![0.0; n];
        for i in 0..n - 1 {
            let ratio = h / (horizon - nodes[i]);
            let decay = (-lambda * (nodes[n - 1] - nodes[i])).exp();
            let d = 1.0 - 0.5 * decay * grow * ratio;
            if !(d > 0.0) {
                return Err(Error::GridTooCoarse {
                    node: i,
                    time: nodes[i],
                    denominator: d,
                });
            }
            denominators[i] = d;
            numerators[i] = strike - 0.5 * decay * (strike * ratio * grow + tail_sigma);
        }
        Ok(Self {
            spec,
            nodes,
            numerators,
            denominators,
        })
    }

    /// Closed-form value at the second-to-last node.
    fn last_node(&self) -> f64 {
        let n = self.nodes.len() - 1;
        let lambda = self.spec.discount();
        let h = self.spec.horizon() - self.nodes[n - 1];
        let sigma = self.spec.sigma();
        (0.5 * self.spec.strike() * (1.0 - 0.5 * lambda * h)
            - sigma * (h / (2.0 * PI)).sqrt() * (1.0 + lambda * h / 3.0))
            / (0.5 - 0.25 * lambda * h)
    }

    /// One application of the interior update at node `i`, using the later
    /// values `values[i+1..N-1]`.
    fn update(&self, i: usize, candidate: f64, values: &[f64]) -> f64 {
        let n = self.nodes.len() - 1;
        let t = self.nodes[i];
        let sum: f64 = (i + 1..n)
            .map(|j| {
                (self.nodes[j] - self.nodes[j - 1])
                    * kernel_unchecked(self.spec, t, candidate, self.nodes[j], values[j])
            })
            .sum();
        (self.numerators[i] - sum) / self.denominators[i]
    }
}

/// Solves for the put boundary on `config.grid`.
pub fn solve_boundary(spec: &BridgeSpec, config: &SolverConfig) -> Result<Boundary> {
    let rec = Recursion::new(spec, &config.grid)?;
    let nodes = config.grid.nodes();
    let n = nodes.len() - 1;
    let mut values = vec![0.0; n + 1];
    let mut iterations = vec![0; n + 1];
    values[n] = spec.strike();
    values[n - 1] = rec.last_node();
    for i in (0..n - 1).rev() {
        let mut current = values[i + 1];
        let mut converged = false;
        let mut change = f64::INFINITY;
        for it in 1..=config.max_iterations {
            let next = rec.update(i, current, &values);
            change = relative_change(current, next);
            current = next;
            if !current.is_finite() {
                break;
            }
            if change <= config.delta {
                iterations[i] = it;
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(Error::NonConvergence {
                node: i,
                time: nodes[i],
                iterations: config.max_iterations,
                last: current,
                residual: change,
            });
        }
        values[i] = current;
    }
    let stats = SolveStats {
        delta: config.delta,
        intervals: n,
        iterations,
    };
    Ok(Boundary::new(*spec, Side::Put, config.grid.clone(), values)?.with_stats(stats))
}

fn relative_change(old: f64, new: f64) -> f64 {
    let diff = (old - new).abs();
    if old == 0.0 {
        diff
    } else {
        diff / old.abs()
    }
}

/// Applies the interior update at node `i` of a solved put boundary with
/// `candidate` in place of `b(t_i)`. Used to inspect fixed-point residuals.
pub fn node_update(boundary: &Boundary, i: usize, candidate: f64) -> Result<f64> {
    let n = boundary.grid.intervals();
    if i + 1 >= n {
        return Err(invalid(
            "i",
            format!("interior update needs i < N - 1 = {}", n - 1),
        ));
    }
    let rec = Recursion::new(&boundary.spec, &boundary.grid)?;
    Ok(rec.update(i, candidate, &boundary.values))
}

/// Zero-discount closed form `b(t) = S − Bσ√(T − t)` sampled on `grid`.
pub fn closed_form_boundary_lambda0(spec: &BridgeSpec, grid: &TimeGrid) -> Result<Boundary> {
    if spec.discount() != 0.0 {
        return Err(invalid(
            "lambda",
            format!("closed form requires lambda = 0, got {}", spec.discount()),
        ));
    }
    let horizon = spec.horizon();
    let values = grid
        .nodes()
        .iter()
        .map(|&t| spec.strike() - SHEPP_CONSTANT * spec.sigma() * (horizon - t).max(0.0).sqrt())
        .collect();
    Boundary::new(*spec, Side::Put, grid.clone(), values)
}

/// Call boundary obtained by reflecting a put boundary about the strike.
pub fn call_boundary_from_put(put: &Boundary) -> Result<Boundary> {
    if put.side != Side::Put {
        return Err(invalid("side", "expected a put boundary"));
    }
    let strike = put.spec.strike();
    let values = put.values.iter().map(|b| 2.0 * strike - b).collect();
    let call = Boundary::new(put.spec, Side::Call, put.grid.clone(), values)?;
    Ok(match &put.stats {
        Some(s) => call.with_stats(s.clone()),
        None => call,
    })
}

/// Unit-volatility counterpart of `spec` under `Y_s = σ^{-1/2} X_{s/σ}`:
/// strike `σ^{-1/2}S`, horizon `σT`, volatility 1, discount `λ/σ`.
pub fn unit_volatility_spec(spec: &BridgeSpec) -> Result<BridgeSpec> {
    let sigma = spec.sigma();
    BridgeSpec::new(
        spec.strike() / sigma.sqrt(),
        spec.horizon() * sigma,
        1.0,
        spec.discount() / sigma,
    )
}

/// Maps a unit-volatility boundary `b_Y` back to volatility `sigma`:
/// `b_X(t) = σ^{1/2} b_Y(σt)`, sampled on `grid` (over `[0, T_Y/σ]`).
pub fn rescale_boundary(unit: &Boundary, sigma: f64, grid: &TimeGrid) -> Result<Boundary> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be > 0, got {sigma}")));
    }
    let src = unit.spec;
    let spec = BridgeSpec::new(
        src.strike() * sigma.sqrt(),
        src.horizon() / sigma,
        src.sigma() * sigma,
        src.discount() * sigma,
    )?;
    if (grid.horizon() - spec.horizon()).abs() > grid.tolerance() {
        return Err(Error::InvalidGrid(format!(
            "target grid ends at {}, rescaled horizon is {}",
            grid.horizon(),
            spec.horizon()
        )));
    }
    let values = grid
        .nodes()
        .iter()
        .map(|&t| sigma.sqrt() * unit.eval(t * sigma))
        .collect();
    Boundary::new(spec, unit.side, grid.clone(), values)
}

// Gauss–Legendre nodes and weights on [0, 1].
const GL_NODES: [f64; 8] = [
    0.019_855_071_751_231_856,
    0.101_666_761_293_186_63,
    0.237_233_795_041_835_5,
    0.408_282_678_752_175_1,
    0.591_717_321_247_825,
    0.762_766_204_958_164_5,
    0.898_333_238_706_813_4,
    0.980_144_928_248_768_2,
];
const GL_WEIGHTS: [f64; 8] = [
    0.050_614_268_145_188_13,
    0.111_190_517_226_687_24,
    0.156_853_322_938_943_64,
    0.181_341_891_689_181,
    0.181_341_891_689_181,
    0.156_853_322_938_943_64,
    0.111_190_517_226_687_24,
    0.050_614_268_145_188_13,
];

/// Treatment of `∫_{t_{N−1}}^T K du` in [`value_function_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TailRule {
    /// Half the upper bound `H`, as in the solver.
    HalfBound,
    /// Boundary continued as `S − (S − b(t_{N−1}))·√((T − u)/(T − t_{N−1}))`
    /// and integrated with Gauss–Legendre after `u = T − s²`, which removes
    /// the `1/√(T − u)` singularity.
    #[default]
    SqrtProfile,
}

/// Value of the put, `V(t, x) = ∫_t^T K(t, x, u, b(u)) du`, with `b` the
/// spline through the boundary nodes and the default [`TailRule`].
pub fn value_function(t: f64, x: f64, boundary: &Boundary, spec: &BridgeSpec) -> Result<f64> {
    value_function_with(t, x, boundary, spec, TailRule::default())
}

/// [`value_function`] with an explicit tail rule.
///
/// Quadrature: on `[t, t_{N−1}]` composite Simpson over the boundary grid
/// (midpoints taken from the spline), except the first subinterval, where
/// the kernel behaves like `√(u − t)`; there Gauss–Legendre is applied after
/// the substitution `u = t + (t_1 − t)w²`, which also avoids the degenerate
/// endpoint `u = t`.
pub fn value_function_with(
    t: f64,
    x: f64,
    boundary: &Boundary,
    spec: &BridgeSpec,
    tail: TailRule,
) -> Result<f64> {
    let horizon = spec.horizon();
    if !(t >= 0.0 && t < horizon) {
        return Err(Error::TimeOutOfRange {
            time: t,
            lower: 0.0,
            upper: horizon,
        });
    }
    let nodes = boundary.times();
    let n = nodes.len() - 1;
    let last = nodes[n - 1].max(t);
    let mut integral = 0.0;
    if t < nodes[n - 1] {
        let tol = boundary.grid.tolerance();
        let mut knots = vec![t];
        knots.extend(nodes[..n].iter().copied().filter(|&s| s > t + tol));
        let f = |u: f64| kernel_unchecked(spec, t, x, u, boundary.eval(u));

        let first = knots[1] - t;
        integral += GL_NODES
            .iter()
            .zip(GL_WEIGHTS)
            .map(|(&w, wt)| wt * 2.0 * w * first * f(t + first * w * w))
            .sum::<f64>();
        let mut f_left = f(knots[1]);
        for win in knots[1..].windows(2) {
            let (a, c) = (win[0], win[1]);
            let f_right = f(c);
            integral += (c - a) / 6.0 * (f_left + 4.0 * f(0.5 * (a + c)) + f_right);
            f_left = f_right;
        }
    }
    integral += match tail {
        TailRule::HalfBound => tail_estimate(spec, t, x, last),
        TailRule::SqrtProfile => {
            let h = horizon - last;
            let root = h.sqrt();
            let gap = spec.strike() - boundary.eval(last);
            if t == last {
                // Kernel is degenerate at u = t; start just past it.
                sqrt_tail(spec, t, x, root, gap, 1e-300)
            } else {
                sqrt_tail(spec, t, x, root, gap, 0.0)
            }
        }
    };
    Ok(integral)
}

/// `∫_{T−r²}^{T} K(t, x, u, S − gap·√(T−u)/r) du` via `u = T − s²`.
fn sqrt_tail(spec: &BridgeSpec, t: f64, x: f64, root: f64, gap: f64, floor: f64) -> f64 {
    let horizon = spec.horizon();
    let strike = spec.strike();
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS)
        .map(|(&w, wt)| {
            // s ∈ (0, root]; the integrand 2s·K stays bounded as s → 0
            let s = (root * w).max(floor);
            let u = horizon - s * s;
            let b = strike - gap * s / root;
            wt * root * 2.0 * s * kernel_unchecked(spec, t, x, u, b)
        })
        .sum()
}
