//! Attribution machinery: ordered bids, basis decomposition, closed-form
//! attribution operators, and the exact subset-enumeration oracle.

mod bids;
mod matrix;
mod oracle;

pub use bids::{decompose, order_bids, BasisDecomposition, OrderedBids};
pub use matrix::{
    attribute, attribute_mechanism, attribute_positions, build_first_price_matrix, build_modified_matrix,
    build_second_price_matrix, AttributionMatrix, MatrixKind, ProbabilityProfile,
};
pub use oracle::{
    brute_force_shapley, brute_force_shapley_with_limit, linearity_check, shapley_subset_weights, weighted_shapley,
    Coalition, CoalitionValue, LinearityCheck, DEFAULT_ENUMERATION_LIMIT,
};
