//! Closed-form attribution operators for first- and second-price auctions,
//! and their asymmetric generalization parameterized by position-probability
//! vectors.

use std::collections::BTreeMap;

use crate::auction::Mechanism;
use crate::shapley::bids::{difference_coefficients, OrderedBids};
use crate::{BidderId, Error, Money, Result};

/// Tolerance for "each probability vector sums to one" checks.
const PROFILE_SUM_TOL: f64 = 1e-9;

/// Which attribution rule a matrix encodes.
#[derive(Debug, Clone, PartialEq)]
pub enum MatrixKind {
    /// Shapley attribution of a first-price auction: the operator maps the
    /// cumulative basis vector with `k` ones to `(1/k) e_k`.
    FirstPrice,
    /// Shapley attribution of a second-price auction: as first price for
    /// `k >= 2`, and the single-bidder basis vector maps to zero.
    SecondPrice,
    /// Asymmetric attribution: basis vector `e_k` maps to the profile's
    /// `p_k` instead of the uniform `(1/k) e_k`.
    Modified(ProbabilityProfile),
}

/// An upper-triangular `n x n` linear operator mapping an ordered bid vector
/// to per-position revenue attributions.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMatrix {
    n: usize,
    entries: Vec<Money>, // row-major
    kind: MatrixKind,
}

impl AttributionMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &MatrixKind {
        &self.kind
    }

    /// Entry at (row, col), 0-based.
    pub fn entry(&self, row: usize, col: usize) -> Money {
        self.entries[row * self.n + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Money] {
        &self.entries
    }

    /// The image of the cumulative basis vector with ones in the top `k`
    /// positions (`1 <= k <= n`), i.e. the sum of the first `k` columns.
    pub fn basis_image(&self, k: usize) -> Vec<Money> {
        assert!(k >= 1 && k <= self.n, "basis index out of range");
        let mut out = vec![0.0; self.n];
        for (row, slot) in out.iter_mut().enumerate() {
            for col in 0..k {
                *slot += self.entry(row, col);
            }
        }
        out
    }

    /// Dense matrix-vector product; primarily a diagnostic cross-check for
    /// [`attribute_positions`], which applies the operator in closed form.
    pub fn matvec(&self, values: &[Money]) -> Result<Vec<Money>> {
        if values.len() != self.n {
            return Err(Error::DimensionMismatch { operator: self.n, bids: values.len() });
        }
        let mut out = vec![0.0; self.n];
        for (row, slot) in out.iter_mut().enumerate() {
            for col in row..self.n {
                *slot += self.entry(row, col) * values[col];
            }
        }
        Ok(out)
    }
}

fn first_price_entries(n: usize) -> Vec<Money> {
    // Column j (1-based): 1/j on the diagonal, -1/(j(j-1)) above it.
    let mut entries = vec![0.0; n * n];
    for col in 0..n {
        let j = (col + 1) as f64;
        entries[col * n + col] = 1.0 / j;
        for row in 0..col {
            entries[row * n + col] = -1.0 / (j * (j - 1.0));
        }
    }
    entries
}

/// The unique operator satisfying efficiency, symmetry, and the dummy-player
/// rule for first-price revenue; its product with each cumulative basis
/// vector `e_k` is `(1/k) e_k`.
pub fn build_first_price_matrix(n: usize) -> Result<AttributionMatrix> {
    if n == 0 {
        return Err(Error::FirstPriceDimension);
    }
    Ok(AttributionMatrix { n, entries: first_price_entries(n), kind: MatrixKind::FirstPrice })
}

/// The second-price analogue: the first column is zero (a lone bidder
/// generates no second-price revenue), the second column splits evenly
/// between the top two positions, and later columns match the first-price
/// form.
pub fn build_second_price_matrix(n: usize) -> Result<AttributionMatrix> {
    if n < 2 {
        return Err(Error::SecondPriceDimension(n));
    }
    let mut entries = first_price_entries(n);
    for row in 0..n {
        entries[row * n] = 0.0;
    }
    entries[1] = 0.5; // row 0, col 1
    entries[n + 1] = 0.5; // row 1, col 1
    Ok(AttributionMatrix { n, entries, kind: MatrixKind::SecondPrice })
}

/// Position-probability vectors `p_1..p_n` parameterizing asymmetric
/// attribution: `p_k` describes how the value of a k-way tie at the top is
/// split across the top `k` positions.
///
/// Each `p_k` is supported on the first `k` positions, non-negative, and sums
/// to one — except that `p_1` may instead be all-zero, which callers must
/// supply explicitly when building a second-price operator (a lone bidder
/// generates no second-price revenue, so no unit of value exists to split).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityProfile {
    n: usize,
    rows: Vec<Vec<Money>>,
}

impl ProbabilityProfile {
    /// Validates support, non-negativity, and per-row normalization.
    /// `rows[k]` is `p_{k+1}` and must have length `n`.
    pub fn new(rows: Vec<Vec<Money>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::InvalidProfile { k: 0, reason: "profile has no rows".into() });
        }
        for (idx, row) in rows.iter().enumerate() {
            let k = idx + 1;
            if row.len() != n {
                return Err(Error::InvalidProfile {
                    k,
                    reason: format!("row has length {}, expected {}", row.len(), n),
                });
            }
            if let Some(bad) = row.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidProfile { k, reason: format!("negative or non-finite entry {bad}") });
            }
            if let Some(pos) = (k..n).find(|&l| row[l] != 0.0) {
                return Err(Error::InvalidProfile {
                    k,
                    reason: format!("entry at position {} lies outside the support (first {k} positions)", pos + 1),
                });
            }
            let sum: f64 = row[..k].iter().sum();
            let zero_first_row = idx == 0 && sum == 0.0;
            if !zero_first_row && (sum - 1.0).abs() > PROFILE_SUM_TOL {
                return Err(Error::InvalidProfile { k, reason: format!("entries sum to {sum}, expected 1") });
            }
        }
        Ok(Self { n, rows })
    }

    /// The symmetric profile `p_k = (1/k) e_k`; for second price `p_1` is the
    /// zero vector. Building a modified operator from this profile recovers
    /// the corresponding closed-form Shapley operator exactly.
    pub fn symmetric(n: usize, mechanism: Mechanism) -> Self {
        let rows = (1..=n)
            .map(|k| {
                let mut row = vec![0.0; n];
                if !(k == 1 && mechanism == Mechanism::SecondPrice) {
                    let share = 1.0 / k as f64;
                    row[..k].fill(share);
                }
                row
            })
            .collect();
        Self { n, rows }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `rows()[k]` is `p_{k+1}`, a length-`n` vector.
    pub fn rows(&self) -> &[Vec<Money>] {
        &self.rows
    }

    fn validate_for(&self, mechanism: Mechanism) -> Result<()> {
        let first_sum: f64 = self.rows[0].iter().sum();
        match mechanism {
            Mechanism::FirstPrice if first_sum == 0.0 && self.n > 0 => Err(Error::InvalidProfile {
                k: 1,
                reason: "first-price profiles require p_1 to sum to 1".into(),
            }),
            Mechanism::SecondPrice if first_sum != 0.0 => Err(Error::InvalidProfile {
                k: 1,
                reason: "second-price profiles require an explicit all-zero p_1".into(),
            }),
            _ => Ok(()),
        }
    }
}

/// Builds the asymmetric operator with `A p-profile`: column `k` is
/// `p_k - p_{k-1}` (taking `p_0 = 0`), so the operator maps each cumulative
/// basis vector `e_k` to `p_k`.
///
/// A symmetric profile short-circuits to the closed-form Shapley entries;
/// the two constructions agree mathematically, and the short-circuit makes
/// them agree bit-for-bit.
pub fn build_modified_matrix(profile: &ProbabilityProfile, mechanism: Mechanism) -> Result<AttributionMatrix> {
    profile.validate_for(mechanism)?;
    let n = profile.n;
    if profile == &ProbabilityProfile::symmetric(n, mechanism) {
        let closed = match mechanism {
            Mechanism::FirstPrice => build_first_price_matrix(n)?,
            Mechanism::SecondPrice => build_second_price_matrix(n)?,
        };
        return Ok(AttributionMatrix { n, entries: closed.entries, kind: MatrixKind::Modified(profile.clone()) });
    }
    let mut entries = vec![0.0; n * n];
    for col in 0..n {
        for row in 0..n {
            let current = profile.rows[col][row];
            let previous = if col == 0 { 0.0 } else { profile.rows[col - 1][row] };
            entries[row * n + col] = current - previous;
        }
    }
    Ok(AttributionMatrix { n, entries, kind: MatrixKind::Modified(profile.clone()) })
}

/// Applies an attribution operator to descending bid values, returning
/// per-position attributions.
///
/// The product is evaluated through the bid vector's basis decomposition
/// (`A b = sum_k coeff_k (A e_k)`), which never materializes basis vectors,
/// costs `O(n)` for the Shapley operators, and makes tied bids receive
/// bit-identical attributions.
pub fn attribute_positions(matrix: &AttributionMatrix, values: &[Money]) -> Result<Vec<Money>> {
    if values.len() != matrix.n {
        return Err(Error::DimensionMismatch { operator: matrix.n, bids: values.len() });
    }
    debug_assert!(values.windows(2).all(|w| w[0] >= w[1]), "bid values must be descending");
    let coeffs = difference_coefficients(values);
    match &matrix.kind {
        MatrixKind::FirstPrice => Ok(shapley_positions(&coeffs, Mechanism::FirstPrice)),
        MatrixKind::SecondPrice => Ok(shapley_positions(&coeffs, Mechanism::SecondPrice)),
        MatrixKind::Modified(profile) => {
            let n = matrix.n;
            let mut out = vec![0.0; n];
            for (k, &c) in coeffs.iter().enumerate() {
                if c != 0.0 {
                    let row = &profile.rows[k];
                    for (slot, &p) in out.iter_mut().zip(row.iter()).take(k + 1) {
                        *slot += c * p;
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Suffix-sum evaluation of the closed-form operators: position `i` collects
/// `coeff_k / k` for every basis component `k >= i` it belongs to; second
/// price drops the single-bidder component.
fn shapley_positions(coeffs: &[Money], mechanism: Mechanism) -> Vec<Money> {
    let n = coeffs.len();
    let mut out = vec![0.0; n];
    let first_k = match mechanism {
        Mechanism::FirstPrice => 0,
        Mechanism::SecondPrice => 1,
    };
    let mut acc = 0.0;
    for k in (first_k..n).rev() {
        acc = coeffs[k] / (k + 1) as f64 + acc;
        out[k] = acc;
    }
    if mechanism == Mechanism::SecondPrice && n >= 2 {
        out[0] = out[1];
    }
    out
}

/// Applies the operator and maps position attributions back to bidder ids.
/// The attribution sum equals the mechanism's revenue on these bids.
pub fn attribute(matrix: &AttributionMatrix, bids: &OrderedBids) -> Result<BTreeMap<BidderId, Money>> {
    let positions = attribute_positions(matrix, bids.values())?;
    Ok(positions.into_iter().enumerate().map(|(pos, v)| (bids.bidder_at(pos), v)).collect())
}

/// Shapley attribution for a mechanism without materializing the operator;
/// equivalent to `attribute(build_*_price_matrix(n), bids)` with the
/// convention that degenerate second-price auctions (fewer than two bidders)
/// attribute zero.
pub fn attribute_mechanism(mechanism: Mechanism, bids: &OrderedBids) -> BTreeMap<BidderId, Money> {
    let n = bids.n();
    if mechanism == Mechanism::SecondPrice && n < 2 {
        return bids.perm().iter().map(|&id| (id, 0.0)).collect();
    }
    let coeffs = difference_coefficients(bids.values());
    let positions = shapley_positions(&coeffs, mechanism);
    positions.into_iter().enumerate().map(|(pos, v)| (bids.bidder_at(pos), v)).collect()
}
