//! Bimatrix Stackelberg games over Q-values and their staged solution.
//!
//! A game holds the leader's payoff matrix Q^P(o^P,·,·) and the follower's
//! payoff vector Q^I(o^I,·) evaluated at fixed observations. The solution is
//! pure-strategy and proceeds in three stages: the expected pair maximizes
//! the leader matrix globally, the follower best-responds to its own vector,
//! and the leader picks the action closest in payoff to the expected pair
//! inside the follower's chosen column.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::SliccError;
use crate::fmath;

/// A joint action: leader row, follower column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ActionPair {
    pub leader_action: usize,
    pub follower_action: usize,
}

/// Leader payoff matrix (row-major, n_p x n_i) plus follower payoff vector
/// (length n_i). Construction rejects empty shapes, ragged rows, and
/// non-finite entries, so solving never fails.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffBimatrix {
    leader: Vec<f64>,
    follower: Vec<f64>,
    n_p: usize,
    n_i: usize,
}

impl PayoffBimatrix {
    /// Build from a flat row-major leader matrix.
    pub fn from_flat(
        n_p: usize,
        n_i: usize,
        leader: Vec<f64>,
        follower: Vec<f64>,
    ) -> Result<Self, SliccError> {
        if n_p == 0 || n_i == 0 || leader.len() != n_p * n_i {
            return Err(SliccError::BadMatrix {
                rows: n_p,
                cols: n_i,
            });
        }
        if follower.len() != n_i {
            return Err(SliccError::DimMismatch {
                expected: n_i,
                got: follower.len(),
            });
        }
        if !leader.iter().chain(follower.iter()).all(|x| x.is_finite()) {
            return Err(SliccError::NonFinite("payoff entry"));
        }
        Ok(Self {
            leader,
            follower,
            n_p,
            n_i,
        })
    }

    /// Build from nested rows; every row must have the follower's length.
    pub fn from_rows(leader: Vec<Vec<f64>>, follower: Vec<f64>) -> Result<Self, SliccError> {
        let n_p = leader.len();
        let n_i = follower.len();
        if n_p == 0 || n_i == 0 {
            return Err(SliccError::BadMatrix {
                rows: n_p,
                cols: n_i,
            });
        }
        let mut flat = Vec::with_capacity(n_p * n_i);
        for row in &leader {
            if row.len() != n_i {
                return Err(SliccError::BadMatrix {
                    rows: n_p,
                    cols: row.len(),
                });
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(n_p, n_i, flat, follower)
    }

    pub fn n_p(&self) -> usize {
        self.n_p
    }

    pub fn n_i(&self) -> usize {
        self.n_i
    }

    #[inline]
    pub fn leader_at(&self, row: usize, col: usize) -> f64 {
        self.leader[row * self.n_i + col]
    }

    pub fn follower(&self) -> &[f64] {
        &self.follower
    }

    /// The pair that maximizes the leader matrix globally. Ties break to the
    /// lowest row, then the lowest column.
    pub fn expected_action_pair(&self) -> ActionPair {
        let mut best = 0usize;
        for idx in 1..self.leader.len() {
            if self.leader[idx] > self.leader[best] {
                best = idx;
            }
        }
        ActionPair {
            leader_action: best / self.n_i,
            follower_action: best % self.n_i,
        }
    }

    /// The leader row minimizing |Q^P(row, follower_br) - Q^P(expected)|.
    /// The expected row wins any tie it attains; remaining ties break low.
    pub fn leader_action(
        &self,
        follower_br: usize,
        expected: ActionPair,
    ) -> Result<usize, SliccError> {
        if follower_br >= self.n_i {
            return Err(SliccError::DimMismatch {
                expected: self.n_i,
                got: follower_br,
            });
        }
        if expected.leader_action >= self.n_p || expected.follower_action >= self.n_i {
            return Err(SliccError::DimMismatch {
                expected: self.n_p,
                got: expected.leader_action,
            });
        }
        let target = self.leader_at(expected.leader_action, expected.follower_action);
        let mut best = 0usize;
        let mut best_gap = fmath::abs(self.leader_at(0, follower_br) - target);
        for row in 1..self.n_p {
            let gap = fmath::abs(self.leader_at(row, follower_br) - target);
            if gap < best_gap {
                best = row;
                best_gap = gap;
            }
        }
        if fmath::abs(self.leader_at(expected.leader_action, follower_br) - target) == best_gap {
            best = expected.leader_action;
        }
        Ok(best)
    }

    /// Full three-stage selection. Construction already validated the game,
    /// so this cannot fail.
    pub fn stackelberg_step(&self) -> ActionPair {
        let expected = self.expected_action_pair();
        let br = best_index(&self.follower);
        let leader = self
            .leader_action(br, expected)
            .expect("indices produced internally are in bounds");
        ActionPair {
            leader_action: leader,
            follower_action: br,
        }
    }
}

#[inline]
fn best_index(values: &[f64]) -> usize {
    let mut best = 0usize;
    for i in 1..values.len() {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

/// Argmax of the follower's payoff vector, ties to the lowest index.
pub fn follower_best_response(follower: &[f64]) -> Result<usize, SliccError> {
    if follower.is_empty() {
        return Err(SliccError::DimMismatch {
            expected: 1,
            got: 0,
        });
    }
    if !follower.iter().all(|x| x.is_finite()) {
        return Err(SliccError::NonFinite("follower payoff"));
    }
    Ok(best_index(follower))
}

/// Map a continuous observation onto integer bins of the given widths.
/// Component i lands in floor(obs[i] / widths[i]).
pub fn discretize(obs: &[f64], widths: &[f64]) -> Result<Vec<i64>, SliccError> {
    if obs.len() != widths.len() {
        return Err(SliccError::DimMismatch {
            expected: widths.len(),
            got: obs.len(),
        });
    }
    let mut key = Vec::with_capacity(obs.len());
    for (x, w) in obs.iter().zip(widths) {
        if !x.is_finite() || !(*w > 0.0) {
            return Err(SliccError::NonFinite("observation or bin width"));
        }
        key.push(fmath::floor(x / w) as i64);
    }
    Ok(key)
}

/// Tabular Q-values over discretized observations, one matrix per leader
/// observation and one vector per follower observation. Absent states read
/// as zero and are only materialized by updates.
#[derive(Debug, Clone)]
pub struct TabularQ {
    prosocial: BTreeMap<Vec<i64>, Vec<f64>>,
    introspective: BTreeMap<Vec<i64>, Vec<f64>>,
    n_p: usize,
    n_i: usize,
    alpha: f64,
    gamma: f64,
}

impl TabularQ {
    pub fn new(n_p: usize, n_i: usize, alpha: f64, gamma: f64) -> Result<Self, SliccError> {
        if n_p == 0 || n_i == 0 {
            return Err(SliccError::BadConfig("action counts must be positive"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(SliccError::BadConfig("alpha must lie in [0, 1]"));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(SliccError::BadConfig("gamma must lie in [0, 1)"));
        }
        Ok(Self {
            prosocial: BTreeMap::new(),
            introspective: BTreeMap::new(),
            n_p,
            n_i,
            alpha,
            gamma,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Swap the learning rate; supports externally driven schedules.
    pub fn set_alpha(&mut self, alpha: f64) -> Result<(), SliccError> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(SliccError::BadConfig("alpha must lie in [0, 1]"));
        }
        self.alpha = alpha;
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Stored leader value, zero when the state or entry was never written.
    pub fn prosocial_value(&self, o: &[i64], a: ActionPair) -> f64 {
        self.prosocial
            .get(o)
            .map_or(0.0, |m| m[a.leader_action * self.n_i + a.follower_action])
    }

    /// Stored follower value, zero when never written.
    pub fn introspective_value(&self, o: &[i64], a: usize) -> f64 {
        self.introspective.get(o).map_or(0.0, |v| v[a])
    }

    /// Game at a pair of observations, with zeros for unseen states.
    pub fn game_at(&self, o_p: &[i64], o_i: &[i64]) -> PayoffBimatrix {
        let leader = self
            .prosocial
            .get(o_p)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.n_p * self.n_i]);
        let follower = self
            .introspective
            .get(o_i)
            .cloned()
            .unwrap_or_else(|| vec![0.0; self.n_i]);
        PayoffBimatrix::from_flat(self.n_p, self.n_i, leader, follower)
            .expect("stored tables have consistent shapes")
    }

    /// Q^P(o,a) <- (1-a)Q + a[r + g max_u Q^P(o', u, F^I(o_i'))], target r
    /// alone on terminal transitions. F^I is the follower's greedy action at
    /// its own next observation. Exactly one entry changes.
    pub fn update_prosocial(
        &mut self,
        o: &[i64],
        a: ActionPair,
        r: f64,
        o_next: &[i64],
        o_i_next: &[i64],
        terminal: bool,
    ) -> Result<(), SliccError> {
        if !r.is_finite() {
            return Err(SliccError::NonFinite("reward"));
        }
        if a.leader_action >= self.n_p || a.follower_action >= self.n_i {
            return Err(SliccError::DimMismatch {
                expected: self.n_p,
                got: a.leader_action,
            });
        }
        let target = if terminal {
            r
        } else {
            let follower_next = self
                .introspective
                .get(o_i_next)
                .map(Vec::as_slice)
                .unwrap_or(&[]);
            let br = if follower_next.is_empty() {
                0
            } else {
                best_index(follower_next)
            };
            let max_next = match self.prosocial.get(o_next) {
                Some(m) => {
                    let mut best = m[br];
                    for row in 1..self.n_p {
                        let v = m[row * self.n_i + br];
                        if v > best {
                            best = v;
                        }
                    }
                    best
                }
                None => 0.0,
            };
            r + self.gamma * max_next
        };
        let row = self
            .prosocial
            .entry(o.to_vec())
            .or_insert_with(|| vec![0.0; self.n_p * self.n_i]);
        let cell = &mut row[a.leader_action * self.n_i + a.follower_action];
        *cell = (1.0 - self.alpha) * *cell + self.alpha * target;
        Ok(())
    }

    /// Q^I(o,a) <- (1-a)Q + a[r + g max_u Q^I(o', u)], target r alone on
    /// terminal transitions. Exactly one entry changes.
    pub fn update_introspective(
        &mut self,
        o: &[i64],
        a: usize,
        r: f64,
        o_next: &[i64],
        terminal: bool,
    ) -> Result<(), SliccError> {
        if !r.is_finite() {
            return Err(SliccError::NonFinite("reward"));
        }
        if a >= self.n_i {
            return Err(SliccError::DimMismatch {
                expected: self.n_i,
                got: a,
            });
        }
        let target = if terminal {
            r
        } else {
            let max_next = self.introspective.get(o_next).map_or(0.0, |v| {
                let mut best = v[0];
                for &x in &v[1..] {
                    if x > best {
                        best = x;
                    }
                }
                best
            });
            r + self.gamma * max_next
        };
        let row = self
            .introspective
            .entry(o.to_vec())
            .or_insert_with(|| vec![0.0; self.n_i]);
        row[a] = (1.0 - self.alpha) * row[a] + self.alpha * target;
        Ok(())
    }
}
