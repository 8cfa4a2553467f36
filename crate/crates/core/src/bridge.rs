//! Brownian bridge pinned at the strike: transition moments, marginal
//! quantiles and exact sequential path sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::TimeGrid;
use crate::normal;
use crate::path::PricePath;

/// Parameters of the pinned process `dX = (S − X)/(T − t) dt + σ dW` together
/// with the discount rate used for payoffs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct BridgeSpec {
    strike: f64,
    horizon: f64,
    sigma: f64,
    discount: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(rename = "S")]
    strike: f64,
    #[serde(rename = "T")]
    horizon: f64,
    sigma: f64,
    lambda: f64,
}

impl TryFrom<RawSpec> for BridgeSpec {
    type Error = Error;

    fn try_from(raw: RawSpec) -> Result<Self> {
        BridgeSpec::new(raw.strike, raw.horizon, raw.sigma, raw.lambda)
    }
}

impl From<BridgeSpec> for RawSpec {
    fn from(spec: BridgeSpec) -> Self {
        RawSpec {
            strike: spec.strike,
            horizon: spec.horizon,
            sigma: spec.sigma,
            lambda: spec.discount,
        }
    }
}

impl BridgeSpec {
    pub fn new(strike: f64, horizon: f64, sigma: f64, discount: f64) -> Result<Self> {
        if !strike.is_finite() {
            return Err(invalid("strike", format!("must be finite, got {strike}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(invalid("horizon", format!("must be > 0, got {horizon}")));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(invalid("sigma", format!("must be > 0, got {sigma}")));
        }
        if !(discount >= 0.0 && discount.is_finite()) {
            return Err(invalid("lambda", format!("must be >= 0, got {discount}")));
        }
        Ok(Self {
            strike,
            horizon,
            sigma,
            discount,
        })
    }

    pub fn strike(&self) -> f64 {
        self.strike
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn discount(&self) -> f64 {
        self.discount
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.strike, self.horizon, sigma, self.discount)
    }

    pub fn with_discount(&self, discount: f64) -> Result<Self> {
        Self::new(self.strike, self.horizon, self.sigma, discount)
    }

    fn check_times(&self, t: f64, u: f64) -> Result<()> {
        if !(t < self.horizon) {
            return Err(Error::TimeOutOfRange {
                time: t,
                lower: f64::NEG_INFINITY,
                upper: self.horizon,
            });
        }
        if !(u >= t && u <= self.horizon) {
            return Err(Error::TimeOutOfRange {
                time: u,
                lower: t,
                upper: self.horizon,
            });
        }
        Ok(())
    }

    /// Conditional mean `E[X_u | X_t = x]`.
    pub fn mean(&self, t: f64, x: f64, u: f64) -> Result<f64> {
        self.check_times(t, u)?;
        Ok(self.mean_unchecked(t, x, u))
    }

    /// Conditional standard deviation of `X_u` given `X_t`.
    pub fn stddev(&self, t: f64, u: f64) -> Result<f64> {
        self.check_times(t, u)?;
        Ok(self.stddev_unchecked(t, u))
    }

    #[inline]
    pub(crate) fn mean_unchecked(&self, t: f64, x: f64, u: f64) -> f64 {
        bridge_mean(t, x, u, self.horizon, self.strike)
    }

    #[inline]
    pub(crate) fn stddev_unchecked(&self, t: f64, u: f64) -> f64 {
        bridge_stddev(t, u, self.horizon, self.sigma)
    }

    /// `q`-quantile of `X_t` given `X_{t0} = x0`.
    pub fn marginal_quantile(&self, t: f64, q: f64, t0: f64, x0: f64) -> Result<f64> {
        if !(q > 0.0 && q < 1.0) {
            return Err(invalid("q", format!("must lie in (0, 1), got {q}")));
        }
        if !(t > t0 && t < self.horizon) {
            return Err(Error::TimeOutOfRange {
                time: t,
                lower: t0,
                upper: self.horizon,
            });
        }
        Ok(self.mean_unchecked(t0, x0, t) + self.stddev_unchecked(t0, t) * normal::quantile(q))
    }
}

#[inline]
fn bridge_mean(t: f64, x: f64, u: f64, end: f64, end_value: f64) -> f64 {
    let span = end - t;
    x * ((end - u) / span) + end_value * ((u - t) / span)
}

#[inline]
fn bridge_stddev(t: f64, u: f64, end: f64, sigma: f64) -> f64 {
    sigma * ((u - t) * (end - u) / (end - t)).sqrt()
}

/// Deterministic generator for stream `stream` of the experiment seeded by `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Lazily samples a bridge pinned to `end_value` at `times.last()`, starting
/// from `X_{times[0]} = x0`. Each step draws from the exact one-step
/// transition re-rooted at the previous node; yields `(t_i, X_{t_i})` for
/// `i ≥ 1`.
pub struct PathStepper<'a, R: Rng + ?Sized> {
    times: &'a [f64],
    end: f64,
    end_value: f64,
    sigma: f64,
    next: usize,
    x: f64,
    rng: &'a mut R,
}

impl<'a, R: Rng + ?Sized> PathStepper<'a, R> {
    fn new(times: &'a [f64], x0: f64, end_value: f64, sigma: f64, rng: &'a mut R) -> Self {
        Self {
            times,
            end: times[times.len() - 1],
            end_value,
            sigma,
            next: 1,
            x: x0,
            rng,
        }
    }
}

impl<R: Rng + ?Sized> Iterator for PathStepper<'_, R> {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        if self.next >= self.times.len() {
            return None;
        }
        let (t, u) = (self.times[self.next - 1], self.times[self.next]);
        self.x = if u >= self.end {
            self.end_value
        } else {
            let z: f64 = self.rng.sample(StandardNormal);
            bridge_mean(t, self.x, u, self.end, self.end_value)
                + bridge_stddev(t, u, self.end, self.sigma) * z
        };
        self.next += 1;
        Some((u, self.x))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.times.len() - self.next;
        (left, Some(left))
    }
}

/// Step-by-step sampler of the bridge of `spec` on `times` from `x0`, for
/// consumers that can stop early.
pub fn path_stepper<'a, R: Rng + ?Sized>(
    spec: &BridgeSpec,
    x0: f64,
    times: &'a [f64],
    rng: &'a mut R,
) -> Result<PathStepper<'a, R>> {
    check_sampling_times(spec, times)?;
    Ok(PathStepper::new(times, x0, spec.strike, spec.sigma, rng))
}

fn sample_segment<R: Rng + ?Sized>(
    times: &[f64],
    x0: f64,
    end_value: f64,
    sigma: f64,
    rng: &mut R,
    out: &mut Vec<f64>,
) {
    out.extend(PathStepper::new(times, x0, end_value, sigma, rng).map(|(_, x)| x));
}

fn check_sampling_times(spec: &BridgeSpec, times: &[f64]) -> Result<()> {
    if times.len() < 2 {
        return Err(Error::InvalidGrid(
            "sampling grid needs at least two nodes".into(),
        ));
    }
    let end = times[times.len() - 1];
    if (end - spec.horizon).abs() > 1e-12 * spec.horizon {
        return Err(Error::InvalidGrid(format!(
            "sampling grid must end at T = {}, ends at {end}",
            spec.horizon
        )));
    }
    if times[0] >= spec.horizon || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(
            "sampling grid must be strictly increasing and start before T".into(),
        ));
    }
    Ok(())
}

fn path_from(
    times: &[f64],
    x0: f64,
    sigma: f64,
    spec: &BridgeSpec,
    rng: &mut impl Rng,
) -> PricePath {
    let mut values = Vec::with_capacity(times.len());
    values.push(x0);
    sample_segment(times, x0, spec.strike, sigma, rng, &mut values);
    PricePath::new(times.to_vec(), values).expect("sampled path is well formed")
}

/// Samples a bridge path on `times` (starting at `times[0]` from `x0`).
pub fn sample_path_with<R: Rng>(
    spec: &BridgeSpec,
    x0: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<PricePath> {
    check_sampling_times(spec, times)?;
    Ok(path_from(times, x0, spec.sigma, spec, rng))
}

/// Seeded version of [`sample_path_with`].
pub fn sample_path(spec: &BridgeSpec, x0: f64, times: &[f64], seed: u64) -> Result<PricePath> {
    sample_path_with(spec, x0, times, &mut stream_rng(seed, 0))
}

/// Zero-volatility limit of [`sample_path`]: the straight line from
/// `(times[0], x0)` to `(T, S)`. Only meant as a degenerate test mode.
pub fn sample_path_noiseless(spec: &BridgeSpec, x0: f64, times: &[f64]) -> Result<PricePath> {
    check_sampling_times(spec, times)?;
    Ok(path_from(times, x0, 0.0, spec, &mut stream_rng(0, 0)))
}

/// Samples a path forced through `(t_mid, x_mid)`: two independent bridge
/// segments `(t0, x0) → (t_mid, x_mid)` and `(t_mid, x_mid) → (T, S)`.
pub fn sample_path_through_with<R: Rng>(
    spec: &BridgeSpec,
    x0: f64,
    t_mid: f64,
    x_mid: f64,
    times: &[f64],
    rng: &mut R,
) -> Result<PricePath> {
    check_sampling_times(spec, times)?;
    let tol = 1e-12 * spec.horizon;
    let mid = times
        .iter()
        .position(|&t| (t - t_mid).abs() <= tol)
        .ok_or(Error::NotOnGrid(t_mid))?;
    if mid == 0 || mid == times.len() - 1 {
        return Err(Error::TimeOutOfRange {
            time: t_mid,
            lower: times[0],
            upper: spec.horizon,
        });
    }
    let mut values = Vec::with_capacity(times.len());
    values.push(x0);
    sample_segment(&times[..=mid], x0, x_mid, spec.sigma, rng, &mut values);
    sample_segment(
        &times[mid..],
        x_mid,
        spec.strike,
        spec.sigma,
        rng,
        &mut values,
    );
    Ok(PricePath::new(times.to_vec(), values).expect("sampled path is well formed"))
}

pub fn sample_path_through(
    spec: &BridgeSpec,
    x0: f64,
    t_mid: f64,
    x_mid: f64,
    times: &[f64],
    seed: u64,
) -> Result<PricePath> {
    sample_path_through_with(spec, x0, t_mid, x_mid, times, &mut stream_rng(seed, 0))
}

/// Convenience: the nodes of `grid` from `t0` on, for sampling.
pub fn sampling_times(grid: &TimeGrid, t0: f64) -> Result<&[f64]> {
    grid.tail_from(t0)
}
