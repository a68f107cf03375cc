//! Ordered bid vectors and their decomposition over the cumulative basis.

use std::collections::BTreeMap;

use crate::{BidderId, Error, Money, Result};

/// A bid vector sorted into descending order together with the permutation
/// back to bidder identities.
///
/// Position `k` (0-based) holds the `k+1`-th largest bid. Ties are broken by
/// ascending bidder id. Tied bids receive identical attributions under the
/// symmetric operators, so the tie rule is observationally irrelevant there,
/// but asymmetric operators make position assignment meaningful; the rule is
/// therefore part of the public contract.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedBids {
    values: Vec<Money>,
    perm: Vec<BidderId>,
}

impl OrderedBids {
    /// Sorts `(bidder, bid)` pairs descending by bid, ascending by id on ties.
    ///
    /// Rejects empty input, duplicate bidder ids, and negative (or NaN) bids,
    /// naming the offending bidder.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (BidderId, Money)>) -> Result<Self> {
        let mut pairs: Vec<(BidderId, Money)> = pairs.into_iter().collect();
        if pairs.is_empty() {
            return Err(Error::EmptyBids);
        }
        for &(bidder, bid) in &pairs {
            if !(bid >= 0.0) || !bid.is_finite() {
                return Err(Error::NegativeBid { bidder, bid });
            }
        }
        let mut ids: Vec<BidderId> = pairs.iter().map(|&(id, _)| id).collect();
        ids.sort_unstable();
        if let Some(dup) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateBidder(dup[0]));
        }
        pairs.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        Ok(Self {
            values: pairs.iter().map(|&(_, bid)| bid).collect(),
            perm: pairs.iter().map(|&(id, _)| id).collect(),
        })
    }

    /// Wraps an already-descending vector of non-negative bids; the position
    /// permutation is the identity (bidder `k` sits at position `k`).
    pub fn from_descending(values: Vec<Money>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyBids);
        }
        for (bidder, &bid) in values.iter().enumerate() {
            if !(bid >= 0.0) || !bid.is_finite() {
                return Err(Error::NegativeBid { bidder, bid });
            }
        }
        if values.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: "bid vector is not in descending order".into(),
            });
        }
        let perm = (0..values.len()).collect();
        Ok(Self { values, perm })
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Bids in descending order.
    pub fn values(&self) -> &[Money] {
        &self.values
    }

    /// Maps 0-based position to bidder id.
    pub fn perm(&self) -> &[BidderId] {
        &self.perm
    }

    /// The bidder holding the `pos`-th largest bid (0-based).
    pub fn bidder_at(&self, pos: usize) -> BidderId {
        self.perm[pos]
    }
}

/// Sorts a bidder-to-bid map into an [`OrderedBids`].
pub fn order_bids(raw: &BTreeMap<BidderId, Money>) -> Result<OrderedBids> {
    OrderedBids::from_pairs(raw.iter().map(|(&id, &bid)| (id, bid)))
}

/// Coefficients of an ordered bid vector over the cumulative basis: the
/// vectors with ones in the top `k` positions and zeros below.
///
/// `coeffs[k] = b_k - b_{k+1}` for all but the last position, which holds the
/// smallest bid itself. All coefficients are non-negative and
/// [`recompose`](Self::recompose) reproduces the ordered values.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisDecomposition {
    coeffs: Vec<Money>,
}

impl BasisDecomposition {
    pub fn coeffs(&self) -> &[Money] {
        &self.coeffs
    }

    /// Rebuilds the ordered bid vector by suffix-summing the coefficients.
    pub fn recompose(&self) -> Vec<Money> {
        let mut values = vec![0.0; self.coeffs.len()];
        let mut acc = 0.0;
        for k in (0..self.coeffs.len()).rev() {
            acc = self.coeffs[k] + acc;
            values[k] = acc;
        }
        values
    }
}

/// Expresses ordered bids as non-negative weights on the cumulative basis.
pub fn decompose(bids: &OrderedBids) -> BasisDecomposition {
    BasisDecomposition { coeffs: difference_coefficients(bids.values()) }
}

/// `values` must be descending; returns adjacent differences with the final
/// value as the last coefficient.
pub(crate) fn difference_coefficients(values: &[Money]) -> Vec<Money> {
    let n = values.len();
    let mut coeffs = Vec::with_capacity(n);
    for k in 0..n {
        if k + 1 < n {
            coeffs.push(values[k] - values[k + 1]);
        } else {
            coeffs.push(values[k]);
        }
    }
    coeffs
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(BidderId, Money)]) -> BTreeMap<BidderId, Money> {
        pairs.iter().copied().collect()
    }

    #[test]
    fn orders_descending_with_ascending_id_ties() {
        let bids = order_bids(&map(&[(0, 3.0), (1, 5.0), (2, 5.0)])).unwrap();
        assert_eq!(bids.values(), &[5.0, 5.0, 3.0]);
        assert_eq!(bids.perm(), &[1, 2, 0]);
    }

    #[test]
    fn singleton_is_fine() {
        let bids = order_bids(&map(&[(0, 7.0)])).unwrap();
        assert_eq!(bids.values(), &[7.0]);
        assert_eq!(bids.perm(), &[0]);
    }

    #[test]
    fn negative_bid_names_the_bidder() {
        let err = order_bids(&map(&[(3, -1.0)])).unwrap_err();
        match err {
            Error::NegativeBid { bidder, .. } => assert_eq!(bidder, 3),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        assert!(matches!(order_bids(&map(&[])), Err(Error::EmptyBids)));
    }

    #[test]
    fn duplicate_pairs_are_rejected() {
        let err = OrderedBids::from_pairs([(1, 2.0), (1, 3.0)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateBidder(1)));
    }

    #[test]
    fn from_descending_rejects_unsorted() {
        assert!(OrderedBids::from_descending(vec![1.0, 2.0]).is_err());
    }

    #[test]
    fn decompose_examples() {
        let d = decompose(&OrderedBids::from_descending(vec![5.0, 3.0, 2.0]).unwrap());
        assert_eq!(d.coeffs(), &[2.0, 1.0, 2.0]);

        let d = decompose(&OrderedBids::from_descending(vec![4.0, 4.0, 4.0]).unwrap());
        assert_eq!(d.coeffs(), &[0.0, 0.0, 4.0]);

        let d = decompose(&OrderedBids::from_descending(vec![10.0, 6.0]).unwrap());
        assert_eq!(d.coeffs(), &[4.0, 6.0]);
        assert_eq!(d.recompose(), vec![10.0, 6.0]);
    }

    proptest::proptest! {
        // Money-grid bids (multiples of 2^-20 below 2^20) keep every
        // difference and suffix sum exactly representable, so the round trip
        // must be bit-exact.
        #[test]
        fn recompose_is_exact_on_money_grid(raw in proptest::collection::vec(0u32..=(1 << 20), 1..40)) {
            let mut values: Vec<Money> = raw.iter().map(|&v| v as Money / (1u64 << 20) as Money * 1024.0).collect();
            values.sort_by(|a, b| b.total_cmp(a));
            let bids = OrderedBids::from_descending(values.clone()).unwrap();
            proptest::prop_assert_eq!(decompose(&bids).recompose(), values);
        }

        #[test]
        fn coefficients_are_nonnegative(raw in proptest::collection::vec(0.0f64..1e6, 1..40)) {
            let mut values = raw;
            values.sort_by(|a, b| b.total_cmp(a));
            let bids = OrderedBids::from_descending(values).unwrap();
            proptest::prop_assert!(decompose(&bids).coeffs().iter().all(|&c| c >= 0.0));
        }
    }
}
