//! Revenue attribution and callout evaluation for repeated online auctions.
//!
//! The crate has two halves that share a small set of domain types:
//!
//! * **Attribution** ([`shapley`], [`auction`]): closed-form linear operators
//!   that split an auction's revenue across bidders according to the Shapley
//!   axioms, a parameterized asymmetric variant, and an exact
//!   subset-enumeration oracle for cross-checking them.
//! * **Callout evaluation** ([`callout`], [`evaluation`], [`data_io`]):
//!   streaming simulation of "which bidders do we invite to each auction"
//!   policies over bid matrices, together with the revenue / social-welfare
//!   estimators, threshold sweeps, and synthetic data generation used to
//!   compare policies.
//!
//! All functions are pure with respect to their inputs; randomized operations
//! take explicit seeds and are reproducible.

pub mod auction;
pub mod callout;
pub mod data_io;
pub mod error;
pub mod evaluation;
pub mod shapley;

/// Monetary amounts (bids, prices, attributions).
pub type Money = f64;

/// Bidders are dense indices `0..n` into whatever roster the caller manages.
pub type BidderId = usize;

pub use auction::{coalition_revenue, effective_bids, run_auction, AuctionGame, AuctionOutcome, AuctionSpec, Mechanism};
pub use callout::{
    gra_select, rqt_select, run_stream, select_callout, BidVisibility, EmpiricalBidModel, HeuristicKind, ScoreState,
    Selector, StreamOptions, Threshold,
};
pub use data_io::{derive_seed, fill_missing, gen_synthetic, load_csv, scale_to_reserve_units, BidMatrix, SyntheticSpec};
pub use error::{Error, Result};
pub use evaluation::{
    equilibrium_condition, immediate_revenue, long_term_payoff, outside_option, social_welfare, sweep,
    AuctionRecord, EquilibriumOutcome, MetricPoint, SimulationLog, SweepPoint, SweepResult,
};
pub use shapley::{
    attribute, attribute_positions, brute_force_shapley, build_first_price_matrix, build_modified_matrix,
    build_second_price_matrix, decompose, linearity_check, order_bids, weighted_shapley, AttributionMatrix,
    BasisDecomposition, Coalition, CoalitionValue, MatrixKind, OrderedBids, ProbabilityProfile,
};
