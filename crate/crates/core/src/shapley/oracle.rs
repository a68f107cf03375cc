//! Exact subset-enumeration attribution: the ground truth the closed-form
//! operators are checked against, plus the arbitrary-weight generalization.

use std::collections::BTreeMap;

use crate::auction::Mechanism;
use crate::shapley::bids::{difference_coefficients, OrderedBids};
use crate::{BidderId, Error, Money, Result};

/// Enumeration is refused above this player count by default (about a
/// million subsets); callers who accept the exponential cost can raise it
/// via [`brute_force_shapley_with_limit`].
pub const DEFAULT_ENUMERATION_LIMIT: usize = 20;

const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A subset of players `0..n` packed into a bitmask.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition(u64);

impl Coalition {
    pub const EMPTY: Self = Self(0);

    pub fn from_bits(bits: u64) -> Self {
        Self(bits)
    }

    pub fn from_members(members: impl IntoIterator<Item = usize>) -> Self {
        let mut bits = 0u64;
        for m in members {
            assert!(m < 64, "player index out of range");
            bits |= 1 << m;
        }
        Self(bits)
    }

    /// All players `0..n`.
    pub fn full(n: usize) -> Self {
        assert!(n < 64, "coalitions support at most 63 players");
        Self((1u64 << n) - 1)
    }

    pub fn bits(self) -> u64 {
        self.0
    }

    pub fn contains(self, player: usize) -> bool {
        player < 64 && self.0 & (1 << player) != 0
    }

    pub fn with(self, player: usize) -> Self {
        assert!(player < 64, "player index out of range");
        Self(self.0 | (1 << player))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let next = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(next)
            }
        })
    }
}

/// A coalition game: the revenue earned by running the auction among exactly
/// the given subset of players. Implementations must return 0 for the empty
/// coalition and never a negative value.
pub trait CoalitionValue {
    fn value(&self, coalition: Coalition) -> Money;
}

impl<F: Fn(Coalition) -> Money> CoalitionValue for F {
    fn value(&self, coalition: Coalition) -> Money {
        self(coalition)
    }
}

/// Permutation weights `|S|!(n-|S|-1)!/n!` for subset sizes `0..n`, built by
/// incremental ratio multiplication so no factorial is ever materialized.
fn permutation_weights(n: usize) -> Vec<f64> {
    let mut weights = Vec::with_capacity(n);
    let mut w = 1.0 / n as f64; // size 0
    weights.push(w);
    for s in 1..n {
        w *= s as f64 / (n - s) as f64;
        weights.push(w);
    }
    weights
}

/// Exact attribution by full subset enumeration: player `i` receives the
/// permutation-weighted sum of marginal contributions `v(S + i) - v(S)` over
/// all coalitions `S` not containing `i`.
pub fn brute_force_shapley(game: &impl CoalitionValue, n: usize) -> Result<Vec<Money>> {
    brute_force_shapley_with_limit(game, n, DEFAULT_ENUMERATION_LIMIT)
}

/// As [`brute_force_shapley`] with an explicit player-count cap.
pub fn brute_force_shapley_with_limit(game: &impl CoalitionValue, n: usize, limit: usize) -> Result<Vec<Money>> {
    if n > limit || n >= 64 {
        return Err(Error::EnumerationLimit { n, limit: limit.min(63) });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let weights = permutation_weights(n);
    let mut out = vec![0.0; n];
    for bits in 0u64..(1 << n) {
        let without = Coalition::from_bits(bits);
        if without.len() == n {
            continue; // no player left to add
        }
        let base = game.value(without);
        let weight = weights[without.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            if !without.contains(i) {
                *slot += weight * (game.value(without.with(i)) - base);
            }
        }
    }
    Ok(out)
}

/// The symmetric subset distribution over coalitions excluding `player`:
/// exactly the weights under which [`weighted_shapley`] reproduces
/// [`brute_force_shapley`].
pub fn shapley_subset_weights(n: usize, player: BidderId) -> BTreeMap<Coalition, f64> {
    assert!(player < n && n < 64);
    let weights = permutation_weights(n);
    let mut out = BTreeMap::new();
    for bits in 0u64..(1 << n) {
        let subset = Coalition::from_bits(bits);
        if !subset.contains(player) {
            out.insert(subset, weights[subset.len()]);
        }
    }
    out
}

/// Attribution of `player` under an arbitrary probability distribution over
/// the coalitions they might join: the expected marginal contribution
/// `sum_S Pr(S) (v(S + player) - v(S))`.
///
/// The weights must be non-negative, sum to one, and be supported on subsets
/// of `0..n` that exclude `player`.
pub fn weighted_shapley(
    game: &impl CoalitionValue,
    weights: &BTreeMap<Coalition, f64>,
    player: BidderId,
    n: usize,
) -> Result<Money> {
    if n > DEFAULT_ENUMERATION_LIMIT || player >= n {
        return Err(Error::EnumerationLimit { n, limit: DEFAULT_ENUMERATION_LIMIT });
    }
    let mut total = 0.0;
    for (&subset, &w) in weights {
        if !(w >= 0.0) || !w.is_finite() {
            return Err(Error::InvalidWeights(format!("weight {w} is negative or non-finite")));
        }
        if subset.contains(player) {
            return Err(Error::InvalidWeights(format!("subset {:#b} contains player {player}", subset.bits())));
        }
        if subset.bits() >> n != 0 {
            return Err(Error::InvalidWeights(format!("subset {:#b} lies outside 0..{n}", subset.bits())));
        }
        total += w;
    }
    if (total - 1.0).abs() > WEIGHT_SUM_TOL {
        return Err(Error::InvalidWeights(format!("weights sum to {total}, expected 1")));
    }
    let mut value = 0.0;
    for (&subset, &w) in weights {
        value += w * (game.value(subset.with(player)) - game.value(subset));
    }
    Ok(value)
}

/// Both sides of the revenue-linearity identity for a mechanism: the revenue
/// of the full auction versus the basis-decomposed sum
/// `sum_k coeff_k * v(e_k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearityCheck {
    /// Revenue of the auction run on the full bid vector (no reserve).
    pub direct: Money,
    /// The same revenue reassembled from the basis decomposition.
    pub decomposed: Money,
    pub holds: bool,
}

/// Verifies that the mechanism's revenue is linear over the cumulative
/// basis: each basis auction with `k >= 2` tied top bids yields revenue 1,
/// the single-bidder basis auction yields 1 under first price and 0 under
/// second price, and the decomposition coefficients recombine these into the
/// full auction's revenue.
pub fn linearity_check(mechanism: Mechanism, bids: &OrderedBids) -> LinearityCheck {
    let values = bids.values();
    let direct = match mechanism {
        Mechanism::FirstPrice => values[0],
        Mechanism::SecondPrice => values.get(1).copied().unwrap_or(0.0),
    };
    let coeffs = difference_coefficients(values);
    let skip = match mechanism {
        Mechanism::FirstPrice => 0,
        Mechanism::SecondPrice => 1,
    };
    let decomposed: Money = coeffs.iter().skip(skip).sum();
    let scale = direct.abs().max(decomposed.abs()).max(1.0);
    let holds = (direct - decomposed).abs() <= 1e-9 * scale;
    LinearityCheck { direct, decomposed, holds }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auction::{AuctionGame, AuctionSpec};
    use approx::assert_abs_diff_eq;

    fn second_price_game(bids: &[Money]) -> AuctionGame<'_> {
        AuctionGame::new(AuctionSpec::new(Mechanism::SecondPrice, 0.0).unwrap(), bids)
    }

    fn first_price_game(bids: &[Money]) -> AuctionGame<'_> {
        AuctionGame::new(AuctionSpec::new(Mechanism::FirstPrice, 0.0).unwrap(), bids)
    }

    #[test]
    fn coalition_membership_roundtrips() {
        let c = Coalition::from_members([0, 3, 5]);
        assert_eq!(c.len(), 3);
        assert!(c.contains(3));
        assert!(!c.contains(1));
        assert_eq!(c.members().collect::<Vec<_>>(), vec![0, 3, 5]);
        assert_eq!(Coalition::full(3).bits(), 0b111);
    }

    #[test]
    fn two_bidder_second_price_splits_evenly() {
        let bids = [10.0, 6.0];
        let shapley = brute_force_shapley(&second_price_game(&bids), 2).unwrap();
        assert_abs_diff_eq!(shapley[0], 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(shapley[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn two_bidder_first_price() {
        let bids = [10.0, 6.0];
        let shapley = brute_force_shapley(&first_price_game(&bids), 2).unwrap();
        assert_abs_diff_eq!(shapley[0], 7.0, epsilon = 1e-12);
        assert_abs_diff_eq!(shapley[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn additive_game_pays_each_player_their_own_value() {
        let contributions = [2.0, 5.0, 1.25, 0.5];
        let game = |c: Coalition| c.members().map(|i| contributions[i]).sum::<Money>();
        let shapley = brute_force_shapley(&game, 4).unwrap();
        for (got, want) in shapley.iter().zip(contributions.iter()) {
            assert_abs_diff_eq!(got, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn enumeration_limit_is_enforced() {
        let game = |_: Coalition| 0.0;
        assert!(matches!(brute_force_shapley(&game, 21), Err(Error::EnumerationLimit { n: 21, limit: 20 })));
        assert!(brute_force_shapley_with_limit(&game, 21, 22).is_ok());
    }

    #[test]
    fn symmetric_weights_reproduce_enumeration() {
        let bids = [6.0, 3.0, 1.0, 0.5];
        let game = second_price_game(&bids);
        let exact = brute_force_shapley(&game, 4).unwrap();
        for player in 0..4 {
            let weights = shapley_subset_weights(4, player);
            let value = weighted_shapley(&game, &weights, player, 4).unwrap();
            assert_abs_diff_eq!(value, exact[player], epsilon = 1e-9);
        }
    }

    #[test]
    fn point_mass_gives_leave_one_out_marginal() {
        let bids = [6.0, 3.0, 1.0];
        let game = second_price_game(&bids);
        let rest = Coalition::from_members([1, 2]);
        let weights = BTreeMap::from([(rest, 1.0)]);
        let value = weighted_shapley(&game, &weights, 0, 3).unwrap();
        let expected = game.value(Coalition::full(3)) - game.value(rest);
        assert_abs_diff_eq!(value, expected, epsilon = 1e-12);
    }

    #[test]
    fn uniform_weights_match_hand_enumeration() {
        // Bids (6, 3, 0), uniform over the four subsets of {1, 2}, player 0.
        let bids = [6.0, 3.0, 0.0];
        let game = second_price_game(&bids);
        let weights: BTreeMap<Coalition, f64> = [
            (Coalition::EMPTY, 0.25),
            (Coalition::from_members([1]), 0.25),
            (Coalition::from_members([2]), 0.25),
            (Coalition::from_members([1, 2]), 0.25),
        ]
        .into_iter()
        .collect();
        let value = weighted_shapley(&game, &weights, 0, 3).unwrap();
        let mut expected = 0.0;
        for subset in [Coalition::EMPTY, Coalition::from_members([1]), Coalition::from_members([2]), Coalition::from_members([1, 2])] {
            expected += 0.25 * (game.value(subset.with(0)) - game.value(subset));
        }
        assert_abs_diff_eq!(value, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(value, 0.25 * (3.0 + 3.0), epsilon = 1e-12);
    }

    #[test]
    fn non_distribution_weights_are_rejected() {
        let bids = [6.0, 3.0];
        let game = second_price_game(&bids);
        let weights = BTreeMap::from([(Coalition::EMPTY, 0.5)]);
        assert!(matches!(weighted_shapley(&game, &weights, 0, 2), Err(Error::InvalidWeights(_))));
        let weights = BTreeMap::from([(Coalition::from_members([0]), 1.0)]);
        assert!(matches!(weighted_shapley(&game, &weights, 0, 2), Err(Error::InvalidWeights(_))));
    }

    proptest::proptest! {
        // Symmetric permutation weights must reproduce the enumeration
        // value for every player, across sizes up to 8.
        #[test]
        fn symmetric_weights_identity(
            raw in proptest::collection::vec(0.0f64..50.0, 2..=8),
            player_pick in 0usize..8,
        ) {
            let n = raw.len();
            let player = player_pick % n;
            let game = second_price_game(&raw);
            let exact = brute_force_shapley(&game, n).unwrap();
            let weights = shapley_subset_weights(n, player);
            let value = weighted_shapley(&game, &weights, player, n).unwrap();
            proptest::prop_assert!((value - exact[player]).abs() <= 1e-9);
        }
    }

    #[test]
    fn linearity_examples() {
        let bids = OrderedBids::from_descending(vec![6.0, 3.0, 0.0]).unwrap();
        let check = linearity_check(Mechanism::SecondPrice, &bids);
        assert!(check.holds);
        assert_eq!(check.direct, 3.0);
        assert_eq!(check.decomposed, 3.0);

        let check = linearity_check(Mechanism::FirstPrice, &bids);
        assert!(check.holds);
        assert_eq!(check.direct, 6.0);

        let lone = OrderedBids::from_descending(vec![4.25]).unwrap();
        let check = linearity_check(Mechanism::FirstPrice, &lone);
        assert!(check.holds);
        assert_eq!(check.direct, 4.25);
    }
}
