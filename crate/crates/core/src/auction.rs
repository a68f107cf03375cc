//! Single-auction mechanics: winner determination, clearing prices with
//! reserve, and the coalition revenue function consumed by the attribution
//! oracle.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::shapley::{Coalition, CoalitionValue};
use crate::{BidderId, Error, Money, Result};

/// The two mechanisms whose revenue is linear over the cumulative bid basis.
/// Mechanisms without that structure (e.g. third price) have no attribution
/// operator and are unrepresentable here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    FirstPrice,
    SecondPrice,
}

impl Mechanism {
    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::FirstPrice => "first-price",
            Mechanism::SecondPrice => "second-price",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first-price" => Ok(Mechanism::FirstPrice),
            "second-price" => Ok(Mechanism::SecondPrice),
            other => Err(Error::InvalidParameter {
                name: "mechanism",
                reason: format!("unknown mechanism `{other}` (expected first-price or second-price)"),
            }),
        }
    }
}

/// Mechanism plus reserve price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuctionSpec {
    pub mechanism: Mechanism,
    pub reserve: Money,
}

impl AuctionSpec {
    pub fn new(mechanism: Mechanism, reserve: Money) -> Result<Self> {
        if !(reserve >= 0.0) || !reserve.is_finite() {
            return Err(Error::NegativeReserve(reserve));
        }
        Ok(Self { mechanism, reserve })
    }
}

/// Result of one auction. Without a winner the price is zero; with one, the
/// price lies between the reserve and the winner's bid.
#[derive(Debug, Clone, PartialEq)]
pub struct AuctionOutcome {
    pub winner: Option<BidderId>,
    pub price: Money,
    /// Bids of everyone who participated.
    pub bids: BTreeMap<BidderId, Money>,
}

/// Winner and clearing price for an iterator of `(bidder, bid)` pairs.
///
/// The winner is the highest bidder meeting the reserve, ties going to the
/// lowest id. Second price clears at the second-highest eligible bid, or at
/// the reserve when the winner is the only eligible bidder; first price
/// clears at the winner's bid.
pub(crate) fn winner_and_price(
    spec: &AuctionSpec,
    pairs: impl IntoIterator<Item = (BidderId, Money)>,
) -> (Option<BidderId>, Money) {
    let mut best: Option<(BidderId, Money)> = None;
    let mut second: Option<(BidderId, Money)> = None;
    for (id, bid) in pairs {
        if bid < spec.reserve {
            continue;
        }
        let beats = |incumbent: &Option<(BidderId, Money)>| match incumbent {
            None => true,
            Some((iid, ibid)) => bid > *ibid || (bid == *ibid && id < *iid),
        };
        if beats(&best) {
            second = best;
            best = Some((id, bid));
        } else if beats(&second) {
            second = Some((id, bid));
        }
    }
    match best {
        None => (None, 0.0),
        Some((winner, bid)) => {
            let price = match spec.mechanism {
                Mechanism::FirstPrice => bid,
                Mechanism::SecondPrice => second.map_or(spec.reserve, |(_, b)| b.max(spec.reserve)),
            };
            (Some(winner), price)
        }
    }
}

/// The bidder who sets the second-price clearing price: the second-highest
/// eligible bidder under the same ordering as winner selection, if any.
pub(crate) fn price_setter(
    reserve: Money,
    pairs: impl IntoIterator<Item = (BidderId, Money)>,
) -> Option<BidderId> {
    let mut best: Option<(BidderId, Money)> = None;
    let mut second: Option<(BidderId, Money)> = None;
    for (id, bid) in pairs {
        if bid < reserve {
            continue;
        }
        let beats = |incumbent: &Option<(BidderId, Money)>| match incumbent {
            None => true,
            Some((iid, ibid)) => bid > *ibid || (bid == *ibid && id < *iid),
        };
        if beats(&best) {
            second = best;
            best = Some((id, bid));
        } else if beats(&second) {
            second = Some((id, bid));
        }
    }
    second.map(|(id, _)| id)
}

/// Runs one auction over a bidder-to-bid map.
pub fn run_auction(spec: &AuctionSpec, bids: &BTreeMap<BidderId, Money>) -> Result<AuctionOutcome> {
    AuctionSpec::new(spec.mechanism, spec.reserve)?;
    for (&bidder, &bid) in bids {
        if !(bid >= 0.0) || !bid.is_finite() {
            return Err(Error::NegativeBid { bidder, bid });
        }
    }
    let (winner, price) = winner_and_price(spec, bids.iter().map(|(&id, &b)| (id, b)));
    Ok(AuctionOutcome { winner, price, bids: bids.clone() })
}

/// Revenue of the auction restricted to the coalition `subset`.
pub fn coalition_revenue(
    spec: &AuctionSpec,
    bids: &BTreeMap<BidderId, Money>,
    subset: &BTreeSet<BidderId>,
) -> Result<Money> {
    if let Some(&missing) = subset.iter().find(|id| !bids.contains_key(id)) {
        return Err(Error::UnknownBidder(missing));
    }
    let restricted: BTreeMap<BidderId, Money> =
        bids.iter().filter(|(id, _)| subset.contains(id)).map(|(&id, &b)| (id, b)).collect();
    Ok(run_auction(spec, &restricted)?.price)
}

/// Replaces every bid below the reserve with zero; such bids cannot carry
/// revenue impact, so attribution treats them as absent.
pub fn effective_bids(bids: &BTreeMap<BidderId, Money>, reserve: Money) -> BTreeMap<BidderId, Money> {
    bids.iter().map(|(&id, &b)| (id, if b < reserve { 0.0 } else { b })).collect()
}

/// A fixed bid vector viewed as a coalition game over player indices: the
/// value of a coalition is the auction revenue among exactly those players.
#[derive(Debug, Clone)]
pub struct AuctionGame<'a> {
    spec: AuctionSpec,
    bids: &'a [Money],
}

impl<'a> AuctionGame<'a> {
    pub fn new(spec: AuctionSpec, bids: &'a [Money]) -> Self {
        Self { spec, bids }
    }

    pub fn spec(&self) -> &AuctionSpec {
        &self.spec
    }
}

impl CoalitionValue for AuctionGame<'_> {
    fn value(&self, coalition: Coalition) -> Money {
        winner_and_price(&self.spec, coalition.members().map(|i| (i, self.bids[i]))).1
    }
}
