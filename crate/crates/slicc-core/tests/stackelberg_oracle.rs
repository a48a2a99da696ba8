//! Equivalence of the staged equilibrium selection against a single-pass
//! enumeration oracle, plus the invariances the selection must satisfy.
//!
//! The oracle below was written against the selection rules directly and is
//! frozen; it shares no code with the library.

use proptest::prelude::*;
use slicc_core::stackelberg::{follower_best_response, ActionPair, PayoffBimatrix};

/// Reference selection: scan every pair explicitly.
///
/// Step 1: expected pair = global argmax of the leader matrix, ties by lowest
/// row then lowest column. Step 2: follower plays argmax of its own vector,
/// ties by lowest index. Step 3: leader plays the row minimizing the absolute
/// gap to the expected payoff in the follower's column; the expected row wins
/// any tie it attains, remaining ties go to the lowest row.
fn oracle(leader: &[Vec<f64>], follower: &[f64]) -> (usize, usize) {
    let n_p = leader.len();
    let n_i = follower.len();

    let mut e = (0usize, 0usize);
    for i in 0..n_p {
        for j in 0..n_i {
            if leader[i][j] > leader[e.0][e.1] {
                e = (i, j);
            }
        }
    }

    let mut br = 0usize;
    for j in 1..n_i {
        if follower[j] > follower[br] {
            br = j;
        }
    }

    let target = leader[e.0][e.1];
    let mut a_p = 0usize;
    let mut best_gap = (leader[0][br] - target).abs();
    for u in 1..n_p {
        let gap = (leader[u][br] - target).abs();
        if gap < best_gap {
            a_p = u;
            best_gap = gap;
        }
    }
    if (leader[e.0][br] - target).abs() == best_gap {
        a_p = e.0;
    }

    (a_p, br)
}

fn game_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=9, 1usize..=9).prop_flat_map(|(n_p, n_i)| {
        (
            proptest::collection::vec(
                proptest::collection::vec(-10.0f64..10.0, n_i),
                n_p,
            ),
            proptest::collection::vec(-10.0f64..10.0, n_i),
        )
    })
}

/// Games on a dyadic grid: entries k/16 with |k| <= 160. Adding another grid
/// point or scaling by a power of two is exact in f64, so the invariance
/// properties are exact statements, not approximate ones.
fn dyadic_game_strategy() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=9, 1usize..=9).prop_flat_map(|(n_p, n_i)| {
        (
            proptest::collection::vec(
                proptest::collection::vec((-160i32..=160).prop_map(|k| k as f64 / 16.0), n_i),
                n_p,
            ),
            proptest::collection::vec((-160i32..=160).prop_map(|k| k as f64 / 16.0), n_i),
        )
    })
}

fn solve(leader: &[Vec<f64>], follower: &[f64]) -> ActionPair {
    PayoffBimatrix::from_rows(leader.to_vec(), follower.to_vec())
        .expect("strategy generates valid games")
        .stackelberg_step()
}

proptest! {
    #[test]
    fn matches_enumeration_oracle((leader, follower) in game_strategy()) {
        let got = solve(&leader, &follower);
        let want = oracle(&leader, &follower);
        prop_assert_eq!((got.leader_action, got.follower_action), want);
    }

    #[test]
    fn shift_invariant(
        (leader, follower) in dyadic_game_strategy(),
        c in (-100i32..=100).prop_map(|k| k as f64 / 16.0),
    ) {
        let base = solve(&leader, &follower);
        let shifted_leader: Vec<Vec<f64>> =
            leader.iter().map(|row| row.iter().map(|x| x + c).collect()).collect();
        let shifted_follower: Vec<f64> = follower.iter().map(|x| x + c).collect();
        let shifted = solve(&shifted_leader, &shifted_follower);
        prop_assert_eq!(base, shifted);
    }

    #[test]
    fn positive_scale_invariant(
        (leader, follower) in dyadic_game_strategy(),
        exp in -2i32..=3,
    ) {
        let s = (2.0f64).powi(exp);
        let base = solve(&leader, &follower);
        let scaled_leader: Vec<Vec<f64>> =
            leader.iter().map(|row| row.iter().map(|x| x * s).collect()).collect();
        let scaled_follower: Vec<f64> = follower.iter().map(|x| x * s).collect();
        let scaled = solve(&scaled_leader, &scaled_follower);
        prop_assert_eq!(base, scaled);
    }

    #[test]
    fn zero_gap_pins_expected_pair((leader, follower) in game_strategy()) {
        let game = PayoffBimatrix::from_rows(leader.clone(), follower.clone()).unwrap();
        let expected = game.expected_action_pair();
        let br = follower_best_response(&follower).unwrap();
        let pair = game.stackelberg_step();
        prop_assert_eq!(pair.follower_action, br);
        if br == expected.follower_action {
            prop_assert_eq!(pair, expected);
        }
    }
}
