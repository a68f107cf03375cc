//! Performance metrics over simulation logs, the two-stage participation
//! condition, and threshold-sweep aggregation with confidence intervals.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::auction::AuctionSpec;
use crate::callout::{run_stream, Selector, StreamOptions};
use crate::data_io::{derive_seed, BidMatrix};
use crate::{BidderId, Error, Money, Result};

/// One simulated auction as seen by the scoring and evaluation layers:
/// who was called, what they bid, how the auction cleared, and how the
/// cleared revenue attributes back to the called bidders.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionRecord {
    pub called: Vec<BidderId>,
    /// Bids submitted by the called bidders, parallel to `called`.
    pub bids: Vec<Money>,
    pub reserve: Money,
    pub winner: Option<BidderId>,
    pub price: Money,
    /// Per-auction Shapley attribution of the called bidders' reserve-zeroed
    /// bids, parallel to `called`.
    pub shapley: Vec<Money>,
}

/// Running per-bidder totals accumulated over a stream.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct BidderAggregate {
    pub auctions_called: u64,
    pub items_won: u64,
    pub total_cost: Money,
    /// Sum of the bids this bidder submitted on the items they won.
    pub total_winning_bid: Money,
}

/// Per-auction records plus per-bidder aggregates for one simulated stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationLog {
    n_bidders: usize,
    records: Vec<AuctionRecord>,
    aggregates: Vec<BidderAggregate>,
    called_total: u64,
}

impl SimulationLog {
    pub fn new(n_bidders: usize) -> Self {
        Self { n_bidders, records: Vec::new(), aggregates: vec![BidderAggregate::default(); n_bidders], called_total: 0 }
    }

    pub fn n_bidders(&self) -> usize {
        self.n_bidders
    }

    pub fn records(&self) -> &[AuctionRecord] {
        &self.records
    }

    pub fn aggregates(&self) -> &[BidderAggregate] {
        &self.aggregates
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends a record and folds it into the per-bidder aggregates.
    pub fn push(&mut self, record: AuctionRecord) -> Result<()> {
        if record.bids.len() != record.called.len() || record.shapley.len() != record.called.len() {
            return Err(Error::InvalidParameter {
                name: "record",
                reason: "called, bids, and shapley must have equal lengths".into(),
            });
        }
        if let Some(&bad) = record.called.iter().find(|&&id| id >= self.n_bidders) {
            return Err(Error::UnknownBidder(bad));
        }
        for (idx, &id) in record.called.iter().enumerate() {
            self.aggregates[id].auctions_called += 1;
            if record.winner == Some(id) {
                self.aggregates[id].items_won += 1;
                self.aggregates[id].total_cost += record.price;
                self.aggregates[id].total_winning_bid += record.bids[idx];
            }
        }
        self.called_total += record.called.len() as u64;
        self.records.push(record);
        Ok(())
    }

    /// Mean fraction of bidders called per auction.
    pub fn pct_called(&self) -> f64 {
        if self.records.is_empty() || self.n_bidders == 0 {
            return 0.0;
        }
        self.called_total as f64 / (self.records.len() as f64 * self.n_bidders as f64)
    }

    /// Sum of clearing prices over the stream.
    pub fn total_revenue(&self) -> Money {
        self.records.iter().map(|r| r.price).sum()
    }
}

/// Which population the per-bidder estimators average over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WelfareDenominator {
    /// Every bidder in the roster, called or not (the default).
    #[default]
    AllBidders,
    /// Only bidders called to at least one auction.
    CalledBidders,
}

fn per_bidder_mean(log: &SimulationLog, denom: WelfareDenominator, term: impl Fn(&BidderAggregate) -> Money) -> Result<Money> {
    if log.is_empty() {
        return Err(Error::EmptyLog);
    }
    let included: Vec<&BidderAggregate> = match denom {
        WelfareDenominator::AllBidders => log.aggregates.iter().collect(),
        WelfareDenominator::CalledBidders => log.aggregates.iter().filter(|a| a.auctions_called > 0).collect(),
    };
    if included.is_empty() {
        return Ok(0.0);
    }
    let sum: Money = included.iter().map(|a| term(a)).sum();
    Ok(sum / included.len() as f64)
}

/// Immediate revenue estimate: the mean over bidders of each bidder's
/// average cost on the items they win; bidders without wins contribute 0.
pub fn immediate_revenue(log: &SimulationLog) -> Result<Money> {
    immediate_revenue_with(log, WelfareDenominator::AllBidders)
}

pub fn immediate_revenue_with(log: &SimulationLog, denom: WelfareDenominator) -> Result<Money> {
    per_bidder_mean(log, denom, |a| if a.items_won > 0 { a.total_cost / a.items_won as f64 } else { 0.0 })
}

/// Social welfare estimate: the mean over bidders of (average winning bid −
/// average cost), the bid-minus-cost residual; zero-win bidders contribute 0.
pub fn social_welfare(log: &SimulationLog) -> Result<Money> {
    social_welfare_with(log, WelfareDenominator::AllBidders)
}

pub fn social_welfare_with(log: &SimulationLog, denom: WelfareDenominator) -> Result<Money> {
    per_bidder_mean(
        log,
        denom,
        |a| if a.items_won > 0 { (a.total_winning_bid - a.total_cost) / a.items_won as f64 } else { 0.0 },
    )
}

/// Outside-option utility: the bid-minus-cost estimator applied to a
/// pre-intervention baseline log (full participation or the status quo).
pub fn outside_option(baseline: &SimulationLog) -> Result<Money> {
    social_welfare(baseline)
}

/// Outcome of checking the two-stage participation game.
#[derive(Debug, Clone, PartialEq)]
pub enum EquilibriumOutcome {
    Participating {
        /// The revenue-maximizing mechanism among those bidders accept.
        chosen: String,
        /// `max_e c^e / c^{chosen}`; 1 when the chosen mechanism is the
        /// global revenue maximizer.
        ratio: f64,
        /// Whether `ratio - 1 <= delta`, i.e. the chosen mechanism survives
        /// as the equilibrium strategy.
        holds: bool,
    },
    /// No mechanism offers bidders at least their outside option.
    NoParticipation,
}

/// Evaluates the participation equilibrium over per-mechanism immediate
/// revenue (`c_values`) and welfare (`u_values`) against an outside option.
pub fn equilibrium_condition(
    c_values: &BTreeMap<String, Money>,
    u_values: &BTreeMap<String, Money>,
    outside: Money,
    delta: f64,
) -> Result<EquilibriumOutcome> {
    if c_values.is_empty() {
        return Err(Error::InvalidParameter { name: "c_values", reason: "no mechanisms given".into() });
    }
    if c_values.keys().ne(u_values.keys()) {
        return Err(Error::MismatchedMechanisms);
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter { name: "delta", reason: format!("{delta} lies outside [0, 1]") });
    }
    let mut chosen: Option<(&String, Money)> = None;
    for (name, &c) in c_values {
        if u_values[name] >= outside && chosen.map_or(true, |(_, best)| c > best) {
            chosen = Some((name, c));
        }
    }
    let Some((chosen, c_star)) = chosen else {
        return Ok(EquilibriumOutcome::NoParticipation);
    };
    let global_max = c_values.values().copied().fold(f64::NEG_INFINITY, f64::max);
    let ratio = if c_star > 0.0 {
        global_max / c_star
    } else if global_max == c_star {
        1.0
    } else {
        f64::INFINITY
    };
    Ok(EquilibriumOutcome::Participating { chosen: chosen.clone(), ratio, holds: ratio - 1.0 <= delta })
}

/// Exchange payoff over the two stages: a bidder who clears their outside
/// option keeps participating and the stage revenue repeats discounted.
pub fn long_term_payoff(c: Money, u_e: Money, outside: Money, delta: f64) -> Result<Money> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::InvalidParameter { name: "delta", reason: format!("{delta} lies outside [0, 1]") });
    }
    Ok(if u_e >= outside { c * (1.0 + delta) } else { c })
}

/// One grid cell of a sweep: the dial value written to the `theta` CSV
/// column and the selector it configures.
#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub dial: f64,
    pub selector: Selector,
}

/// Aggregated metrics for one grid cell across the seed datasets.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricPoint {
    pub dial: f64,
    /// Mean fraction of bidders called, averaged over datasets.
    pub pct_called: f64,
    pub revenue_mean: Money,
    /// 95% normal-approximation interval across datasets; absent for a
    /// single dataset.
    pub revenue_ci: Option<(Money, Money)>,
    pub welfare_mean: Money,
    pub welfare_ci: Option<(Money, Money)>,
    pub revenue_per_seed: Vec<Money>,
    pub welfare_per_seed: Vec<Money>,
}

/// Full sweep of one mechanism across a grid, points sorted by measured
/// `pct_called`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub mechanism: String,
    pub points: Vec<MetricPoint>,
    /// Mean revenue across grid points; the scalar used to rank mechanisms.
    pub score_integral: Money,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn ci95(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64;
    let stderr = (var / xs.len() as f64).sqrt();
    Some((m - 1.96 * stderr, m + 1.96 * stderr))
}

/// Runs every `(grid point, dataset)` cell — in parallel, merged back in
/// grid order — and aggregates per-point means and confidence intervals.
pub fn sweep(
    mechanism: &str,
    spec: &AuctionSpec,
    datasets: &[BidMatrix],
    points: &[SweepPoint],
    seed: u64,
    opts: &StreamOptions,
) -> Result<SweepResult> {
    if datasets.is_empty() {
        return Err(Error::InvalidParameter { name: "datasets", reason: "at least one dataset is required".into() });
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter { name: "grid", reason: "the sweep grid is empty".into() });
    }
    let m = datasets.len();
    let cells: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..m).map(move |d| (p, d))).collect();
    let outcomes: Vec<Result<(f64, Money, Money)>> = cells
        .par_iter()
        .map(|&(p, d)| {
            let stream_seed = derive_seed(seed, (p * m + d) as u64);
            let log = run_stream(&points[p].selector, spec, &datasets[d], stream_seed, opts)?;
            Ok((log.pct_called(), immediate_revenue(&log)?, social_welfare(&log)?))
        })
        .collect();
    let mut metric_points = Vec::with_capacity(points.len());
    for (p, point) in points.iter().enumerate() {
        let mut pct = Vec::with_capacity(m);
        let mut revenue = Vec::with_capacity(m);
        let mut welfare = Vec::with_capacity(m);
        for d in 0..m {
            match &outcomes[p * m + d] {
                Ok((pc, rev, wel)) => {
                    pct.push(*pc);
                    revenue.push(*rev);
                    welfare.push(*wel);
                }
                Err(e) => {
                    return Err(Error::InvalidParameter { name: "sweep", reason: format!("cell failed: {e}") })
                }
            }
        }
        metric_points.push(MetricPoint {
            dial: point.dial,
            pct_called: mean(&pct),
            revenue_mean: mean(&revenue),
            revenue_ci: ci95(&revenue),
            welfare_mean: mean(&welfare),
            welfare_ci: ci95(&welfare),
            revenue_per_seed: revenue,
            welfare_per_seed: welfare,
        });
    }
    metric_points.sort_by(|a, b| a.pct_called.total_cmp(&b.pct_called));
    let score_integral = mean(&metric_points.iter().map(|p| p.revenue_mean).collect::<Vec<_>>());
    Ok(SweepResult { mechanism: mechanism.to_string(), points: metric_points, score_integral })
}

/// Exact header of the sweep CSV schema.
pub const SWEEP_CSV_HEADER: &str =
    "mechanism,theta,pct_called,revenue_mean,revenue_ci_low,revenue_ci_high,welfare_mean,welfare_ci_low,welfare_ci_high";

/// Writes a sweep result in the sweep CSV schema; absent confidence bounds
/// become empty fields.
pub fn write_sweep_csv<W: Write>(mut w: W, result: &SweepResult) -> Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for p in &result.points {
        let fmt_ci = |ci: Option<(Money, Money)>| match ci {
            Some((lo, hi)) => (lo.to_string(), hi.to_string()),
            None => (String::new(), String::new()),
        };
        let (rlo, rhi) = fmt_ci(p.revenue_ci);
        let (wlo, whi) = fmt_ci(p.welfare_ci);
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            result.mechanism, p.dial, p.pct_called, p.revenue_mean, rlo, rhi, p.welfare_mean, wlo, whi
        )?;
    }
    Ok(())
}

/// One parsed row of a sweep CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub mechanism: String,
    pub dial: f64,
    pub pct_called: f64,
    pub revenue_mean: Money,
    pub revenue_ci: Option<(Money, Money)>,
    pub welfare_mean: Money,
    pub welfare_ci: Option<(Money, Money)>,
}

/// Reads a sweep CSV produced by [`write_sweep_csv`].
pub fn read_sweep_csv<R: std::io::Read>(reader: R) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = rdr.headers()?;
        let expected: Vec<&str> = SWEEP_CSV_HEADER.split(',').collect();
        if headers.iter().collect::<Vec<_>>() != expected {
            return Err(Error::CsvFormat { line: 1, reason: format!("unexpected header {:?}", headers) });
        }
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64> {
            record[i].parse::<f64>().map_err(|e| Error::CsvFormat { line, reason: format!("field {i}: {e}") })
        };
        let optional_pair = |i: usize| -> Result<Option<(f64, f64)>> {
            if record[i].is_empty() && record[i + 1].is_empty() {
                Ok(None)
            } else {
                Ok(Some((field(i)?, field(i + 1)?)))
            }
        };
        rows.push(SweepRow {
            mechanism: record[0].to_string(),
            dial: field(1)?,
            pct_called: field(2)?,
            revenue_mean: field(3)?,
            revenue_ci: optional_pair(4)?,
            welfare_mean: field(6)?,
            welfare_ci: optional_pair(7)?,
        });
    }
    Ok(rows)
}
