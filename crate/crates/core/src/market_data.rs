//! Real option data: strike normalisation, pinning diagnostics, history
//! splits and aggregation of exercise profits across options.
//!
//! A bundle directory holds `meta.csv` (`id,strike,expiry`), one
//! `path_<id>.csv` (`t,x`) and one `oi_<id>.csv` (`day,oi`) per option, and
//! optionally `rates.csv` (`date,rate`). Path times, expiries and rate dates
//! share one numeric clock (days, by convention); rates are annualised
//! decimals.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boundary::{solve_boundary, Boundary, Side, SolverConfig};
use crate::bridge::BridgeSpec;
use crate::error::{invalid, Error, Result};
use crate::inference::mle_sigma;
use crate::path::{csv_err, read_two_columns, PricePath};
use crate::simulation::{discounted_payoff, CompensatedSum, StoppingRule};

/// One listed option: the underlying's raw prices over the option's life and
/// its daily open interest.
#[derive(Debug, Clone, PartialEq)]
pub struct OptionRecord {
    pub id: String,
    pub strike: f64,
    pub expiry: f64,
    pub path: PricePath,
    pub oi: Vec<f64>,
}

impl OptionRecord {
    pub fn new(
        id: impl Into<String>,
        strike: f64,
        expiry: f64,
        path: PricePath,
        oi: Vec<f64>,
    ) -> Result<Self> {
        let id = id.into();
        if !(strike > 0.0 && strike.is_finite()) {
            return Err(invalid(
                "strike",
                format!("option {id}: must be > 0, got {strike}"),
            ));
        }
        let (first, last) = (path.times()[0], path.times()[path.last_index()]);
        if !(expiry > first) || expiry < last {
            return Err(invalid(
                "expiry",
                format!(
                    "option {id}: expiry {expiry} must lie after {first} and not before {last}"
                ),
            ));
        }
        if oi.iter().any(|o| !(*o >= 0.0 && o.is_finite())) {
            return Err(invalid(
                "oi",
                format!("option {id}: counts must be finite and >= 0"),
            ));
        }
        Ok(Self {
            id,
            strike,
            expiry,
            path,
            oi,
        })
    }

    /// Length of the option's life in clock units.
    pub fn lifespan(&self) -> f64 {
        self.expiry - self.path.times()[0]
    }
}

/// Divides prices by the strike and maps `[t_0, expiry]` onto `[0, 1]`.
pub fn normalize(record: &OptionRecord) -> Result<PricePath> {
    if !(record.strike > 0.0) {
        return Err(invalid(
            "strike",
            format!("must be > 0, got {}", record.strike),
        ));
    }
    let t0 = record.path.times()[0];
    let span = record.expiry - t0;
    if !(span > 0.0) {
        return Err(invalid("expiry", "must lie after the first observation"));
    }
    let times = record
        .path
        .times()
        .iter()
        .map(|t| (t - t0) / span)
        .collect();
    let values = record
        .path
        .values()
        .iter()
        .map(|x| x / record.strike)
        .collect();
    PricePath::new(times, values)
}

/// `|X_N − 1|` of a strike-normalised path.
pub fn pinning_deviance(path: &PricePath) -> Result<f64> {
    match path.values().last() {
        Some(x) => Ok((x - 1.0).abs()),
        None => Err(Error::InvalidPath("path is empty".into())),
    }
}

/// Weights `e^{−(1−k/K)}`, normalised to sum to one. A single day gets
/// weight one.
pub fn oi_weights(days: usize) -> Vec<f64> {
    if days <= 1 {
        return vec![1.0; days];
    }
    let k_max = (days - 1) as f64;
    let raw: Vec<f64> = (0..days)
        .map(|k| (-(1.0 - k as f64 / k_max)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Exponentially time-weighted open interest.
pub fn weighted_oi(oi: &[f64]) -> Result<f64> {
    if oi.is_empty() {
        return Err(invalid("oi", "empty open-interest series"));
    }
    if oi.iter().any(|o| !(*o >= 0.0 && o.is_finite())) {
        return Err(invalid("oi", "counts must be finite and >= 0"));
    }
    Ok(oi_weights(oi.len())
        .iter()
        .zip(oi)
        .map(|(w, o)| w * o)
        .sum())
}

/// History and future sets of a path split at `k = ⌊ρN⌋`; index `k`
/// belongs to both.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub index: usize,
    pub history: PricePath,
    pub future: PricePath,
}

impl Split {
    /// Number of increments available for estimation.
    pub fn history_increments(&self) -> usize {
        self.index
    }
}

/// `⌊ρN⌋`, robust to `ρ·N` landing a rounding error below an integer.
pub fn split_index(last: usize, rho: f64) -> Result<usize> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(invalid("rho", format!("must lie in (0, 1), got {rho}")));
    }
    let k = (rho * last as f64 * (1.0 + 4.0 * f64::EPSILON)).floor() as usize;
    Ok(k.min(last))
}

pub fn split_path(path: &PricePath, rho: f64) -> Result<Split> {
    let last = path.last_index();
    let index = split_index(last, rho)?;
    Ok(Split {
        index,
        history: path.slice(0, index)?,
        future: path.slice(index, last)?,
    })
}

/// Step-function lookup of annualised rates by date.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RateTable {
    dates: Vec<f64>,
    rates: Vec<f64>,
}

impl RateTable {
    pub fn new(mut rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.iter().any(|(d, r)| !d.is_finite() || !r.is_finite()) {
            return Err(invalid("rates", "non-finite entry"));
        }
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        if rows.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(invalid("rates", "duplicate date"));
        }
        let (dates, rates) = rows.into_iter().unzip();
        Ok(Self { dates, rates })
    }

    pub fn read_csv<R: std::io::Read>(reader: R) -> Result<Self> {
        let (dates, rates) = read_two_columns(reader, ("date", "rate"))?;
        Self::new(dates.into_iter().zip(rates).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    /// Rate of the latest date not after `date`.
    pub fn rate_at(&self, date: f64) -> Result<f64> {
        let i = self.dates.partition_point(|&d| d <= date);
        if i == 0 {
            return Err(invalid(
                "rates",
                format!("no rate on or before date {date}"),
            ));
        }
        Ok(self.rates[i - 1])
    }
}

/// Discount rate in normalised time: `rate · lifespan / days_per_year`.
pub fn normalized_rate(rate: f64, lifespan: f64, days_per_year: f64) -> f64 {
    rate * lifespan / days_per_year
}

/// Options and rates read from a bundle directory.
#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub options: Vec<OptionRecord>,
    pub rates: Option<RateTable>,
}

#[derive(Deserialize)]
struct MetaRow {
    id: String,
    strike: f64,
    expiry: f64,
}

impl Bundle {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let meta_path = dir.join("meta.csv");
        let named = |file: &Path, e: Error| Error::Parse(format!("{}: {e}", file.display()));
        let meta = std::fs::File::open(&meta_path)
            .map_err(|e| Error::Io(format!("{}: {e}", meta_path.display())))?;
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(meta);
        let mut rows = Vec::new();
        for row in rdr.deserialize::<MetaRow>() {
            rows.push(row.map_err(|e| named(&meta_path, csv_err(e)))?);
        }
        if rows.is_empty() {
            return Err(named(&meta_path, Error::Parse("no options listed".into())));
        }
        let mut options = Vec::with_capacity(rows.len());
        for row in rows {
            let path = PricePath::load(dir.join(format!("path_{}.csv", row.id)))?;
            let oi_path = dir.join(format!("oi_{}.csv", row.id));
            let file = std::fs::File::open(&oi_path)
                .map_err(|e| Error::Io(format!("{}: {e}", oi_path.display())))?;
            let (days, oi) =
                read_two_columns(file, ("day", "oi")).map_err(|e| named(&oi_path, e))?;
            if days.windows(2).any(|w| w[1] <= w[0]) {
                return Err(named(&oi_path, Error::Parse("days must increase".into())));
            }
            let record = OptionRecord::new(row.id, row.strike, row.expiry, path, oi)
                .map_err(|e| named(&meta_path, e))?;
            options.push(record);
        }
        let rates_path = dir.join("rates.csv");
        let rates = if rates_path.exists() {
            let file = std::fs::File::open(&rates_path)?;
            Some(RateTable::read_csv(file).map_err(|e| named(&rates_path, e))?)
        } else {
            None
        };
        Ok(Self { options, rates })
    }
}

/// Per-option diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptionSummary {
    pub id: String,
    pub pinning_deviance: f64,
    pub weighted_oi: f64,
}

pub fn summarize(options: &[OptionRecord]) -> Result<Vec<OptionSummary>> {
    options
        .iter()
        .map(|o| {
            Ok(OptionSummary {
                id: o.id.clone(),
                pinning_deviance: pinning_deviance(&normalize(o)?)?,
                weighted_oi: if o.oi.is_empty() {
                    f64::NAN
                } else {
                    weighted_oi(&o.oi)?
                },
            })
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(rows: &[OptionSummary], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["id", "pinning_deviance", "weighted_oi"])
        .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.id.clone(),
            r.pinning_deviance.to_string(),
            r.weighted_oi.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// How an exercise decision is made on a future set.
#[derive(Debug, Clone, PartialEq)]
pub enum Strategy {
    /// Bridge boundary re-solved per split at the volatility estimated on
    /// the history set.
    Bridge,
    /// Fixed boundary in normalised coordinates.
    Fixed(Boundary),
}

/// Settings of the profit evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfitConfig {
    #[serde(default = "default_rhos")]
    pub rhos: Vec<f64>,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
    #[serde(default = "crate::inference::default_delta")]
    pub delta: f64,
    #[serde(default = "default_days_per_year")]
    pub days_per_year: f64,
}

fn default_rhos() -> Vec<f64> {
    (1..=9).map(|k| k as f64 / 10.0).collect()
}

fn default_nodes() -> usize {
    SolverConfig::DEFAULT_NODES
}

fn default_days_per_year() -> f64 {
    365.0
}

impl Default for ProfitConfig {
    fn default() -> Self {
        Self {
            rhos: default_rhos(),
            nodes: default_nodes(),
            delta: crate::inference::default_delta(),
            days_per_year: default_days_per_year(),
        }
    }
}

impl ProfitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rhos.is_empty() {
            return Err(invalid("rhos", "need at least one fraction"));
        }
        if let Some(r) = self.rhos.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(invalid(
                "rhos",
                format!("fractions must lie in (0, 1), got {r}"),
            ));
        }
        if !(self.days_per_year > 0.0) {
            return Err(invalid("days_per_year", "must be > 0"));
        }
        Ok(())
    }
}

/// Discounted profit of one strategy on one (option, ρ) split.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfitRecord {
    pub option: String,
    pub deviance: f64,
    pub rho: f64,
    pub strategy: String,
    pub profit: f64,
}

/// Split skipped because the bridge strategy could not be estimated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedSplit {
    pub option: String,
    pub rho: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProfitEvaluation {
    pub records: Vec<ProfitRecord>,
    pub skipped: Vec<SkippedSplit>,
}

/// Exercises every strategy on every option's future set for each ρ,
/// starting from the split point, as a put struck at 1. A split whose bridge
/// boundary cannot be built (too short a history, σ̂ = 0, solver failure) is
/// dropped for all strategies.
pub fn evaluate_profits(
    bundle: &Bundle,
    strategies: &[(String, Strategy)],
    cfg: &ProfitConfig,
) -> Result<ProfitEvaluation> {
    cfg.validate()?;
    if strategies.is_empty() {
        return Err(invalid("strategies", "need at least one strategy"));
    }
    let per_option: Vec<Result<ProfitEvaluation>> = bundle
        .options
        .par_iter()
        .map(|option| evaluate_option(option, bundle.rates.as_ref(), strategies, cfg))
        .collect();
    let mut out = ProfitEvaluation::default();
    for part in per_option {
        let part = part?;
        out.records.extend(part.records);
        out.skipped.extend(part.skipped);
    }
    Ok(out)
}

fn evaluate_option(
    option: &OptionRecord,
    rates: Option<&RateTable>,
    strategies: &[(String, Strategy)],
    cfg: &ProfitConfig,
) -> Result<ProfitEvaluation> {
    let path = normalize(option)?;
    let deviance = pinning_deviance(&path)?;
    let mut out = ProfitEvaluation::default();
    for &rho in &cfg.rhos {
        let split = split_path(&path, rho)?;
        let raw_date = option.path.times()[split.index];
        let lambda = match rates {
            Some(table) => normalized_rate(
                table.rate_at(raw_date)?,
                option.lifespan(),
                cfg.days_per_year,
            ),
            None => 0.0,
        };
        let unit = BridgeSpec::new(1.0, 1.0, 1.0, lambda)?;
        let needs_bridge = strategies
            .iter()
            .any(|(_, s)| matches!(s, Strategy::Bridge));
        let bridge_rule = if needs_bridge {
            match bridge_boundary(&split, lambda, cfg) {
                Ok(b) => Some(StoppingRule::new(b)),
                Err(e) => {
                    out.skipped.push(SkippedSplit {
                        option: option.id.clone(),
                        rho,
                        reason: e.to_string(),
                    });
                    continue;
                }
            }
        } else {
            None
        };
        for (name, strategy) in strategies {
            let profit = match strategy {
                Strategy::Bridge => discounted_payoff(
                    &split.future,
                    bridge_rule.as_ref().expect("solved"),
                    lambda,
                    0,
                )?,
                Strategy::Fixed(b) => {
                    let rule = StoppingRule::new(Boundary::new(
                        unit,
                        Side::Put,
                        b.grid().clone(),
                        b.values().to_vec(),
                    )?);
                    discounted_payoff(&split.future, &rule, lambda, 0)?
                }
            };
            out.records.push(ProfitRecord {
                option: option.id.clone(),
                deviance,
                rho,
                strategy: name.clone(),
                profit,
            });
        }
    }
    Ok(out)
}

fn bridge_boundary(split: &Split, lambda: f64, cfg: &ProfitConfig) -> Result<Boundary> {
    let n = split.history_increments();
    if n == 0 {
        return Err(invalid("rho", "history set has no increments"));
    }
    let est = mle_sigma(&split.history, n, 1.0, 1.0)?;
    if est.is_degenerate() {
        return Err(Error::DegenerateEstimate(format!(
            "sigma_hat = {} from {n} increments",
            est.sigma_hat
        )));
    }
    let spec = BridgeSpec::new(1.0, 1.0, est.sigma_hat, lambda)?;
    let solver = SolverConfig::new(
        crate::boundary::log_grid(cfg.nodes, 1.0)?,
        cfg.delta,
        SolverConfig::DEFAULT_MAX_ITERATIONS,
    )?;
    solve_boundary(&spec, &solver)
}

/// Cohort means at one pinning-deviance threshold `p`; the cohort holds
/// the options with deviance strictly below `p`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfitAggregate {
    pub p: f64,
    pub cohort: usize,
    pub mean_profit: BTreeMap<String, f64>,
}

impl ProfitAggregate {
    pub fn is_empty(&self) -> bool {
        self.cohort == 0
    }

    /// `(A(p) − B(p)) / B(p)`.
    pub fn relative_profit(&self, a: &str, b: &str) -> Result<f64> {
        if self.is_empty() {
            return Err(Error::EmptyCohort(self.p));
        }
        let get = |s: &str| {
            self.mean_profit
                .get(s)
                .copied()
                .ok_or_else(|| invalid("strategy", format!("unknown strategy `{s}`")))
        };
        let (ma, mb) = (get(a)?, get(b)?);
        Ok((ma - mb) / mb)
    }
}

/// Averages profits over the options with deviance below `p` and over all
/// splits, per strategy. Splits absent from `records` are left out of the
/// average, and a strategy with no record in the cohort gets no entry. The result does not depend on the order of `records`.
pub fn aggregate_profit(records: &[ProfitRecord], p: f64) -> Result<ProfitAggregate> {
    if records.is_empty() {
        return Err(invalid("records", "no profit records"));
    }
    let mut by_strategy: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut cohort: Vec<&str> = Vec::new();
    for r in records.iter().filter(|r| r.deviance < p) {
        by_strategy
            .entry(r.strategy.clone())
            .or_default()
            .push(r.profit);
        cohort.push(&r.option);
    }
    cohort.sort_unstable();
    cohort.dedup();
    let mean_profit = if cohort.is_empty() {
        BTreeMap::new()
    } else {
        by_strategy
            .into_iter()
            .filter(|(_, v)| !v.is_empty())
            .map(|(name, mut v)| {
                v.sort_by(f64::total_cmp);
                let mut acc = CompensatedSum::default();
                v.iter().for_each(|&x| acc.add(x));
                (name, acc.total() / v.len() as f64)
            })
            .collect()
    };
    Ok(ProfitAggregate {
        p,
        cohort: cohort.len(),
        mean_profit,
    })
}

/// Writes `p,strategy,mean_profit`; an empty cohort is one row per
/// threshold with strategy `*` and mean `empty`.
pub fn write_aggregates_csv<W: Write>(rows: &[ProfitAggregate], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["p", "strategy", "mean_profit"])
        .map_err(csv_err)?;
    for agg in rows {
        if agg.is_empty() {
            w.write_record([agg.p.to_string(), "*".into(), "empty".into()])
                .map_err(csv_err)?;
        }
        for (name, m) in &agg.mean_profit {
            w.write_record([agg.p.to_string(), name.clone(), m.to_string()])
                .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `p,relative_profit` for strategies `a` against `b`; empty
/// cohorts are written as `empty`.
pub fn write_relative_csv<W: Write>(
    rows: &[ProfitAggregate],
    a: &str,
    b: &str,
    writer: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["p", "relative_profit"]).map_err(csv_err)?;
    for agg in rows {
        let value = match agg.relative_profit(a, b) {
            Ok(v) => v.to_string(),
            Err(Error::EmptyCohort(_)) => "empty".into(),
            Err(e) => return Err(e),
        };
        w.write_record([agg.p.to_string(), value])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(values: &[f64]) -> PricePath {
        PricePath::new(
            (0..values.len()).map(|i| i as f64).collect(),
            values.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn normalize_divides_by_strike_and_rescales_time() {
        let rec =
            OptionRecord::new("a", 50.0, 4.0, path(&[50.0, 51.0, 49.5, 49.0]), vec![]).unwrap();
        let p = normalize(&rec).unwrap();
        assert_eq!(p.values()[3], 0.98);
        assert_eq!(p.times(), &[0.0, 0.25, 0.5, 0.75]);
        assert!((pinning_deviance(&p).unwrap() - 0.02).abs() < 1e-15);
    }

    #[test]
    fn constant_path_at_strike_normalises_to_one() {
        let rec = OptionRecord::new("a", 7.0, 2.0, path(&[7.0, 7.0, 7.0]), vec![]).unwrap();
        let p = normalize(&rec).unwrap();
        assert!(p.values().iter().all(|&v| v == 1.0));
        assert_eq!(pinning_deviance(&p).unwrap(), 0.0);
    }

    #[test]
    fn normalize_is_idempotent_at_unit_strike() {
        let rec = OptionRecord::new("a", 3.0, 2.0, path(&[3.3, 2.9, 3.1]), vec![]).unwrap();
        let once = normalize(&rec).unwrap();
        let again =
            normalize(&OptionRecord::new("a", 1.0, 1.0, once.clone(), vec![]).unwrap()).unwrap();
        assert_eq!(once, again);
    }

    #[test]
    fn rejects_non_positive_strike() {
        assert!(OptionRecord::new("a", 0.0, 2.0, path(&[1.0, 1.0]), vec![]).is_err());
    }

    #[test]
    fn two_day_weighted_oi() {
        let w = weighted_oi(&[0.0, 1.0]).unwrap();
        assert!((w - 1.0 / (1.0 + (-1.0f64).exp())).abs() < 1e-15);
        assert!((w - 0.731_058_578_630_004_9).abs() < 1e-12);
    }

    #[test]
    fn weights_increase_and_sum_to_one() {
        let w = oi_weights(30);
        assert!(w.windows(2).all(|p| p[1] > p[0]));
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        assert!((weighted_oi(&[4.0; 30]).unwrap() - 4.0).abs() < 1e-13);
        assert!(weighted_oi(&[]).is_err());
    }

    #[test]
    fn split_overlaps_at_the_split_index() {
        let p = path(&(0..=10).map(|i| i as f64).collect::<Vec<_>>());
        let s = split_path(&p, 0.5).unwrap();
        assert_eq!(s.index, 5);
        assert_eq!(s.history.values(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(s.future.values(), &[5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
        let short = split_path(&p, 0.05).unwrap();
        assert_eq!(short.history.len(), 1);
        assert_eq!(short.history_increments(), 0);
        assert!(split_path(&p, 1.0).is_err());
        assert!(split_path(&p, 0.0).is_err());
    }

    #[test]
    fn split_index_absorbs_rounding() {
        assert_eq!(split_index(100, 0.29).unwrap(), 29);
        assert_eq!(split_index(10, 0.7).unwrap(), 7);
    }

    #[test]
    fn rate_lookup_is_a_step_function() {
        let t = RateTable::new(vec![(10.0, 0.02), (0.0, 0.01)]).unwrap();
        assert_eq!(t.rate_at(0.0).unwrap(), 0.01);
        assert_eq!(t.rate_at(9.9).unwrap(), 0.01);
        assert_eq!(t.rate_at(10.0).unwrap(), 0.02);
        assert!(t.rate_at(-1.0).is_err());
    }

    fn rec(option: &str, deviance: f64, rho: f64, strategy: &str, profit: f64) -> ProfitRecord {
        ProfitRecord {
            option: option.into(),
            deviance,
            rho,
            strategy: strategy.into(),
            profit,
        }
    }

    #[test]
    fn aggregate_hand_computed_cohort() {
        let records = vec![
            rec("a", 0.01, 0.1, "bb", 0.10),
            rec("a", 0.01, 0.5, "bb", 0.30),
            rec("b", 0.03, 0.1, "bb", 0.05),
            rec("b", 0.03, 0.5, "bb", 0.15),
            rec("c", 0.20, 0.1, "bb", 9.0),
            rec("c", 0.20, 0.5, "bb", 9.0),
        ];
        let agg = aggregate_profit(&records, 0.1).unwrap();
        assert_eq!(agg.cohort, 2);
        assert!((agg.mean_profit["bb"] - (0.10 + 0.30 + 0.05 + 0.15) / 4.0).abs() < 1e-15);
    }

    #[test]
    fn empty_cohort_is_explicit() {
        let records = vec![
            rec("a", 0.5, 0.5, "bb", 0.1),
            rec("a", 0.5, 0.5, "gbm", 0.1),
        ];
        let agg = aggregate_profit(&records, 0.1).unwrap();
        assert!(agg.is_empty());
        assert_eq!(
            agg.relative_profit("bb", "gbm"),
            Err(Error::EmptyCohort(0.1))
        );
        let mut out = Vec::new();
        write_aggregates_csv(&[agg], &mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "p,strategy,mean_profit\n0.1,*,empty\n"
        );
    }

    #[test]
    fn identical_strategies_have_zero_relative_profit() {
        let records = vec![rec("a", 0.0, 0.5, "x", 0.2), rec("a", 0.0, 0.5, "y", 0.2)];
        let agg = aggregate_profit(&records, 0.1).unwrap();
        assert_eq!(agg.relative_profit("x", "y").unwrap(), 0.0);
        assert!(aggregate_profit(&[], 0.1).is_err());
    }
}
