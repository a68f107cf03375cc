//! Callout policies: which bidders to invite to each auction.
//!
//! Score-threshold heuristics maintain per-bidder running metrics and call
//! everyone whose score clears a threshold; the baselines are random
//! throttling and a Monte Carlo greedy set builder.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::auction::{price_setter, winner_and_price, AuctionSpec};
use crate::evaluation::{AuctionRecord, SimulationLog};
use crate::shapley::{attribute_mechanism, OrderedBids};
use crate::{BidderId, Error, Money, Result};

/// The score-threshold heuristics. All scores are oriented so that larger is
/// better and a single `>=` comparison selects bidders; rank is the one raw
/// metric where smaller is better, so its score is negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HeuristicKind {
    /// Average Shapley-attributed revenue per called auction.
    Sha,
    /// Number of past bids at or above the reserve.
    Bar,
    /// Number of past wins.
    Win,
    /// Total spend on won items.
    Spd,
    /// Negated average rank among called bidders (1 = highest bid).
    Rnk,
    /// Total of all submitted bids.
    Bid,
    /// Total revenue credited to the winner and the price setter.
    Rvc,
}

impl HeuristicKind {
    pub const ALL: [HeuristicKind; 7] = [
        HeuristicKind::Sha,
        HeuristicKind::Bar,
        HeuristicKind::Win,
        HeuristicKind::Spd,
        HeuristicKind::Rnk,
        HeuristicKind::Bid,
        HeuristicKind::Rvc,
    ];

    pub fn token(self) -> &'static str {
        match self {
            HeuristicKind::Sha => "sha",
            HeuristicKind::Bar => "bar",
            HeuristicKind::Win => "win",
            HeuristicKind::Spd => "spd",
            HeuristicKind::Rnk => "rnk",
            HeuristicKind::Bid => "bid",
            HeuristicKind::Rvc => "rvc",
        }
    }

    /// Whether the raw metric prefers smaller values (the score negates it).
    pub fn lower_is_better_raw(self) -> bool {
        matches!(self, HeuristicKind::Rnk)
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for HeuristicKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        HeuristicKind::ALL.into_iter().find(|k| k.token() == s).ok_or_else(|| Error::InvalidParameter {
            name: "heuristic",
            reason: format!("unknown heuristic `{s}`"),
        })
    }
}

/// How a heuristic's threshold is interpreted per auction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    /// A fixed score cutoff applied every auction.
    Fixed(Money),
    /// Call (at least) the top `fraction` of bidders by current score: the
    /// cutoff is re-derived each auction as the matching score quantile,
    /// with ties included. This pins the measured call percentage near the
    /// target so different heuristics are comparable at equal cost.
    TopFraction(f64),
}

/// A complete callout policy for one stream.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    Heuristic { kind: HeuristicKind, threshold: Threshold },
    /// Random quota throttling: drop each bidder independently.
    Rqt { drop_prob: f64 },
    /// Greedy set construction by Monte Carlo marginal revenue, bounded by
    /// `max_size`, with `ceil(1/epsilon)` samples per estimate.
    Gra { max_size: usize, epsilon: f64 },
}

impl Selector {
    fn validate(&self, n: usize) -> Result<()> {
        match *self {
            Selector::Heuristic { threshold: Threshold::TopFraction(f), .. } => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::InvalidParameter {
                        name: "fraction",
                        reason: format!("{f} lies outside (0, 1]"),
                    });
                }
            }
            Selector::Heuristic { threshold: Threshold::Fixed(t), .. } => {
                if t.is_nan() {
                    return Err(Error::InvalidParameter { name: "theta", reason: "threshold is NaN".into() });
                }
            }
            Selector::Rqt { drop_prob } => {
                if !(0.0..=1.0).contains(&drop_prob) {
                    return Err(Error::InvalidDropProbability(drop_prob));
                }
            }
            Selector::Gra { max_size, epsilon } => {
                if max_size == 0 {
                    return Err(Error::InvalidParameter { name: "K", reason: "greedy set size must be >= 1".into() });
                }
                if !(epsilon > 0.0 && epsilon <= 1.0) {
                    return Err(Error::InvalidParameter {
                        name: "epsilon",
                        reason: format!("{epsilon} lies outside (0, 1]"),
                    });
                }
                let _ = n;
            }
        }
        Ok(())
    }
}

/// What the learning side of a policy gets to observe each auction.
///
/// Offline evaluation runs on complete matrices (synthetic draws, or real
/// logs resampled to completeness), so scores can learn from every bidder's
/// bid while revenue is still earned only among the called set; that is the
/// default. `CalledOnly` instead hides uninvited bidders' bids from the
/// accumulators, modeling a live exchange — selection quality degrades
/// accordingly, since bidders locked out early stop producing signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BidVisibility {
    #[default]
    Complete,
    CalledOnly,
}

/// Stream-level knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamOptions {
    /// Share of the clearing price credited to the winner under RVC; the
    /// remainder goes to the price setter when one exists.
    pub rvc_winner_share: f64,
    /// Average ShA credit over all auctions seen rather than over the
    /// auctions the bidder was called to.
    pub sha_over_all_auctions: bool,
    /// Optional per-bidder threshold overrides for fixed-threshold
    /// heuristics; entry `i` replaces the global cutoff for bidder `i`.
    pub theta_overrides: Option<Vec<Money>>,
    /// Whether scores learn from the whole bid row or only from called
    /// bidders' bids.
    pub visibility: BidVisibility,
}

impl Default for StreamOptions {
    fn default() -> Self {
        Self {
            rvc_winner_share: 0.5,
            sha_over_all_auctions: false,
            theta_overrides: None,
            visibility: BidVisibility::Complete,
        }
    }
}

/// Per-bidder running accumulators feeding every heuristic score.
///
/// Bidders never called carry the neutral initial score of zero for every
/// heuristic, and auctions a bidder is not called to touch none of their
/// accumulators.
#[derive(Debug, Clone)]
pub struct ScoreState {
    rvc_winner_share: f64,
    sha_over_all_auctions: bool,
    auctions_seen: u64,
    per: Vec<Accumulators>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Accumulators {
    called: u64,
    wins: u64,
    spend: Money,
    bid_total: Money,
    rank_sum: f64,
    above_reserve: u64,
    revenue_credit: Money,
    shapley_credit: Money,
}

impl ScoreState {
    pub fn new(n: usize) -> Self {
        Self::with_options(n, &StreamOptions::default())
    }

    pub fn with_options(n: usize, opts: &StreamOptions) -> Self {
        Self {
            rvc_winner_share: opts.rvc_winner_share,
            sha_over_all_auctions: opts.sha_over_all_auctions,
            auctions_seen: 0,
            per: vec![Accumulators::default(); n],
        }
    }

    pub fn n(&self) -> usize {
        self.per.len()
    }

    /// Raw win count, used by tests and diagnostics.
    pub fn wins(&self, bidder: BidderId) -> u64 {
        self.per[bidder].wins
    }

    /// The normalized score of `bidder` under `kind`; zero participations
    /// yield the neutral score 0.
    pub fn score(&self, kind: HeuristicKind, bidder: BidderId) -> Money {
        let a = &self.per[bidder];
        if a.called == 0 {
            return 0.0;
        }
        match kind {
            HeuristicKind::Sha => {
                let denom = if self.sha_over_all_auctions { self.auctions_seen } else { a.called };
                a.shapley_credit / denom as f64
            }
            HeuristicKind::Bar => a.above_reserve as f64,
            HeuristicKind::Win => a.wins as f64,
            HeuristicKind::Spd => a.spend,
            HeuristicKind::Rnk => -(a.rank_sum / a.called as f64),
            HeuristicKind::Bid => a.bid_total,
            HeuristicKind::Rvc => a.revenue_credit,
        }
    }

    pub fn scores(&self, kind: HeuristicKind) -> Vec<Money> {
        (0..self.n()).map(|i| self.score(kind, i)).collect()
    }

    /// Folds one auction into the accumulators: participation, bids,
    /// above-reserve counts, fractional ranks, winner spend, the
    /// winner/price-setter revenue split, and the Shapley credits carried by
    /// the record.
    pub fn update(&mut self, record: &AuctionRecord) -> Result<()> {
        if record.bids.len() != record.called.len() || record.shapley.len() != record.called.len() {
            return Err(Error::InvalidParameter {
                name: "record",
                reason: "called, bids, and shapley must have equal lengths".into(),
            });
        }
        if let Some(&bad) = record.called.iter().find(|&&id| id >= self.n()) {
            return Err(Error::UnknownBidder(bad));
        }
        self.auctions_seen += 1;
        let ranks = fractional_ranks(&record.bids);
        let setter = price_setter(record.reserve, record.called.iter().copied().zip(record.bids.iter().copied()));
        for (idx, &id) in record.called.iter().enumerate() {
            let a = &mut self.per[id];
            a.called += 1;
            a.bid_total += record.bids[idx];
            if record.bids[idx] >= record.reserve {
                a.above_reserve += 1;
            }
            a.rank_sum += ranks[idx];
            a.shapley_credit += record.shapley[idx];
            if record.winner == Some(id) {
                a.wins += 1;
                a.spend += record.price;
                a.revenue_credit += self.rvc_winner_share * record.price;
            }
            if setter == Some(id) {
                a.revenue_credit += (1.0 - self.rvc_winner_share) * record.price;
            }
        }
        Ok(())
    }
}

/// Competition ranks with ties averaged: the highest bid ranks 1, and tied
/// bids share the mean of the positions they span, keeping ranks independent
/// of bidder identity.
fn fractional_ranks(bids: &[Money]) -> Vec<f64> {
    let n = bids.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| bids[b].total_cmp(&bids[a]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && bids[order[end]] == bids[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end, averaged
        let rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

/// Bidders whose score clears the global threshold.
pub fn select_callout(scores: &ScoreState, kind: HeuristicKind, theta: Money) -> Vec<BidderId> {
    (0..scores.n()).filter(|&i| scores.score(kind, i) >= theta).collect()
}

/// As [`select_callout`] with one threshold per bidder.
pub fn select_callout_per_bidder(scores: &ScoreState, kind: HeuristicKind, thetas: &[Money]) -> Vec<BidderId> {
    (0..scores.n()).filter(|&i| scores.score(kind, i) >= thetas[i]).collect()
}

/// The score cutoff that admits (at least) the top `fraction` of bidders.
fn top_fraction_cutoff(scores: &[Money], fraction: f64) -> Money {
    let n = scores.len();
    let k = ((fraction * n as f64).ceil() as usize).clamp(1, n);
    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    sorted[k - 1]
}

/// Random quota throttling: each bidder is independently retained with
/// probability `1 - drop_prob`.
pub fn rqt_select(n: usize, drop_prob: f64, rng: &mut impl Rng) -> Result<Vec<BidderId>> {
    if !(0.0..=1.0).contains(&drop_prob) || drop_prob.is_nan() {
        return Err(Error::InvalidDropProbability(drop_prob));
    }
    Ok((0..n).filter(|_| rng.random::<f64>() >= drop_prob).collect())
}

/// Per-bidder multisets of observed bids, resampled by the greedy baseline.
#[derive(Debug, Clone, Default)]
pub struct EmpiricalBidModel {
    observations: Vec<Vec<Money>>,
    sums: Vec<Money>,
}

impl EmpiricalBidModel {
    pub fn new(n: usize) -> Self {
        Self { observations: vec![Vec::new(); n], sums: vec![0.0; n] }
    }

    /// Builds a model from per-bidder observation lists.
    pub fn from_observations(observations: Vec<Vec<Money>>) -> Self {
        let sums = observations.iter().map(|o| o.iter().sum()).collect();
        Self { observations, sums }
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }

    pub fn record(&mut self, bidder: BidderId, bid: Money) {
        self.sums[bidder] += bid;
        self.observations[bidder].push(bid);
    }

    pub fn observation_count(&self, bidder: BidderId) -> usize {
        self.observations[bidder].len()
    }

    /// Mean of the observed bids (0 with no observations); the greedy
    /// tie-break key.
    pub fn mean(&self, bidder: BidderId) -> Money {
        let len = self.observations[bidder].len();
        if len == 0 {
            0.0
        } else {
            self.sums[bidder] / len as f64
        }
    }

    /// Uniform draw from the bidder's observed multiset.
    fn sample(&self, bidder: BidderId, rng: &mut impl Rng) -> Money {
        let obs = &self.observations[bidder];
        obs[rng.random_range(0..obs.len())]
    }
}

/// Greedy callout: grows the set for up to `max_size` rounds, each round
/// adding the bidder with the highest Monte Carlo estimate (`ceil(1/epsilon)`
/// paired samples) of marginal expected revenue.
///
/// The first round always seeds the set — under second price with no reserve
/// every singleton has zero revenue, so a literal stop-at-nonpositive rule
/// would never start; later rounds stop as soon as the best marginal is
/// non-positive. Ties go to the higher empirical mean bid, then the lower id.
pub fn gra_select(
    model: &EmpiricalBidModel,
    spec: &AuctionSpec,
    max_size: usize,
    epsilon: f64,
    rng: &mut impl Rng,
) -> Result<Vec<BidderId>> {
    let n = model.n();
    if n == 0 {
        return Err(Error::EmptyBidModel);
    }
    if max_size == 0 {
        return Err(Error::InvalidParameter { name: "K", reason: "greedy set size must be >= 1".into() });
    }
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter { name: "epsilon", reason: format!("{epsilon} lies outside (0, 1]") });
    }
    let starved: Vec<String> =
        (0..n).filter(|&i| model.observation_count(i) == 0).map(|i| i.to_string()).collect();
    if !starved.is_empty() {
        return Err(Error::NoObservations(starved));
    }
    let repetitions = (1.0 / epsilon).ceil() as usize;
    let mut selected: Vec<BidderId> = Vec::new();
    let mut draws: Vec<(BidderId, Money)> = Vec::new();
    for round in 0..max_size.min(n) {
        let mut best: Option<(f64, Money, BidderId)> = None;
        for candidate in 0..n {
            if selected.contains(&candidate) {
                continue;
            }
            let mut marginal_total = 0.0;
            for _ in 0..repetitions {
                draws.clear();
                for &member in &selected {
                    draws.push((member, model.sample(member, rng)));
                }
                let without = winner_and_price(spec, draws.iter().copied()).1;
                draws.push((candidate, model.sample(candidate, rng)));
                let with = winner_and_price(spec, draws.iter().copied()).1;
                marginal_total += with - without;
            }
            let marginal = marginal_total / repetitions as f64;
            let key = (marginal, model.mean(candidate));
            let better = match best {
                None => true,
                Some((bm, bmean, bid_)) => {
                    key.0 > bm || (key.0 == bm && (key.1 > bmean || (key.1 == bmean && candidate < bid_)))
                }
            };
            if better {
                best = Some((marginal, key.1, candidate));
            }
        }
        let Some((marginal, _, pick)) = best else { break };
        if round > 0 && marginal <= 0.0 {
            break;
        }
        selected.push(pick);
    }
    selected.sort_unstable();
    Ok(selected)
}

/// Runs one callout policy over a complete bid matrix: each auction selects
/// the callout set from history, clears the auction among the called
/// bidders' bids, and folds the outcome back into the policy's state.
///
/// Scores start at zero, so the cold-start auction calls every bidder
/// whenever the threshold admits score 0; the greedy baseline likewise calls
/// everyone once to seed its bid model. One stream is sequential by
/// construction; distinct streams share nothing and may run concurrently.
pub fn run_stream(
    selector: &Selector,
    spec: &AuctionSpec,
    data: &crate::data_io::BidMatrix,
    seed: u64,
    opts: &StreamOptions,
) -> Result<SimulationLog> {
    let n = data.bidder_count();
    let auctions = data.auction_count();
    if auctions == 0 || n == 0 {
        return Err(Error::EmptyDataset);
    }
    if !data.is_complete() {
        return Err(Error::IncompleteMatrix(data.missing_count()));
    }
    selector.validate(n)?;
    AuctionSpec::new(spec.mechanism, spec.reserve)?;
    if let Some(overrides) = &opts.theta_overrides {
        if overrides.len() != n {
            return Err(Error::InvalidParameter {
                name: "theta_overrides",
                reason: format!("{} overrides for {n} bidders", overrides.len()),
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores = ScoreState::with_options(n, opts);
    let mut model = EmpiricalBidModel::new(n);
    let mut log = SimulationLog::new(n);
    for t in 0..auctions {
        let called: Vec<BidderId> = match selector {
            Selector::Heuristic { kind, threshold: Threshold::Fixed(theta) } => match &opts.theta_overrides {
                Some(overrides) => {
                    let thetas: Vec<Money> = overrides.iter().map(|&o| if o.is_nan() { *theta } else { o }).collect();
                    select_callout_per_bidder(&scores, *kind, &thetas)
                }
                None => select_callout(&scores, *kind, *theta),
            },
            Selector::Heuristic { kind, threshold: Threshold::TopFraction(f) } => {
                let all = scores.scores(*kind);
                select_callout(&scores, *kind, top_fraction_cutoff(&all, *f))
            }
            Selector::Rqt { drop_prob } => rqt_select(n, *drop_prob, &mut rng)?,
            Selector::Gra { max_size, epsilon } => {
                if t == 0 {
                    (0..n).collect()
                } else {
                    gra_select(&model, spec, *max_size, *epsilon, &mut rng)?
                }
            }
        };
        let bids: Vec<Money> = called.iter().map(|&i| data.bid(t, i)).collect();
        let (winner, price) = winner_and_price(spec, called.iter().copied().zip(bids.iter().copied()));
        let shapley = auction_attribution(spec, &called, &bids)?;
        let record = AuctionRecord { called, bids, reserve: spec.reserve, winner, price, shapley };
        // Learning sees either the full row (counterfactual full-participation
        // auction) or just the called outcome; the log always records the
        // auction actually run.
        let learning = match opts.visibility {
            BidVisibility::Complete => {
                let roster: Vec<BidderId> = (0..n).collect();
                let row: Vec<Money> = (0..n).map(|i| data.bid(t, i)).collect();
                let (full_winner, full_price) =
                    winner_and_price(spec, roster.iter().copied().zip(row.iter().copied()));
                let full_shapley = auction_attribution(spec, &roster, &row)?;
                AuctionRecord {
                    called: roster,
                    bids: row,
                    reserve: spec.reserve,
                    winner: full_winner,
                    price: full_price,
                    shapley: full_shapley,
                }
            }
            BidVisibility::CalledOnly => record.clone(),
        };
        scores.update(&learning)?;
        if matches!(selector, Selector::Gra { .. }) {
            for (idx, &id) in learning.called.iter().enumerate() {
                model.record(id, learning.bids[idx]);
            }
        }
        log.push(record)?;
    }
    Ok(log)
}

/// Shapley attribution of one auction over the called bidders' reserve-zeroed
/// bids, returned parallel to `called`. Empty and degenerate called sets
/// attribute zero.
fn auction_attribution(spec: &AuctionSpec, called: &[BidderId], bids: &[Money]) -> Result<Vec<Money>> {
    if called.is_empty() {
        return Ok(Vec::new());
    }
    let effective = bids.iter().map(|&b| if b < spec.reserve { 0.0 } else { b });
    // Positions are indices into `called`, so the permutation maps straight
    // back to slots in the output vector.
    let ordered = OrderedBids::from_pairs(effective.enumerate().map(|(slot, b)| (slot, b)))?;
    let by_slot = attribute_mechanism(spec.mechanism, &ordered);
    let mut out = vec![0.0; called.len()];
    for (slot, value) in by_slot {
        out[slot] = value;
    }
    Ok(out)
}
