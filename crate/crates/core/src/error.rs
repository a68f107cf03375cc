//! Crate-wide error type.

use crate::{BidderId, Money};

/// Errors produced by attribution, auction, callout, and data operations.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("bidder {bidder} submitted a negative bid ({bid})")]
    NegativeBid { bidder: BidderId, bid: Money },

    #[error("bid set is empty")]
    EmptyBids,

    #[error("duplicate bidder id {0}")]
    DuplicateBidder(BidderId),

    #[error("first-price attribution requires at least one bidder")]
    FirstPriceDimension,

    #[error("second-price attribution requires at least two bidders (got {0})")]
    SecondPriceDimension(usize),

    #[error("dimension mismatch: operator is {operator}x{operator}, bid vector has length {bids}")]
    DimensionMismatch { operator: usize, bids: usize },

    #[error("invalid probability profile at k={k}: {reason}")]
    InvalidProfile { k: usize, reason: String },

    #[error("exact enumeration over {n} players exceeds the limit of {limit}")]
    EnumerationLimit { n: usize, limit: usize },

    #[error("subset weights are not a probability distribution: {0}")]
    InvalidWeights(String),

    #[error("reserve price must be non-negative (got {0})")]
    NegativeReserve(Money),

    #[error("auction record references unknown bidder {0}")]
    UnknownBidder(BidderId),

    #[error("drop probability must lie in [0, 1] (got {0})")]
    InvalidDropProbability(f64),

    #[error("greedy callout requires a bid model with at least one bidder")]
    EmptyBidModel,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid synthetic spec field `{field}`: {reason}")]
    InvalidSyntheticField { field: &'static str, reason: String },

    #[error("dataset contains no auctions")]
    EmptyDataset,

    #[error("bid matrix has {0} missing cells; fill them before simulating")]
    IncompleteMatrix(usize),

    #[error("simulation log is empty")]
    EmptyLog,

    #[error("csv: line {line}: {reason}")]
    CsvFormat { line: u64, reason: String },

    #[error("csv: duplicate (auction, bidder) pair at line {line}")]
    DuplicateCell { line: u64 },

    #[error("bidders with no observed bids: {}", .0.join(", "))]
    NoObservations(Vec<String>),

    #[error("reserve must be positive to rescale bids (got {0})")]
    NonPositiveReserveScale(Money),

    #[error("revenue and welfare inputs list different mechanisms")]
    MismatchedMechanisms,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
