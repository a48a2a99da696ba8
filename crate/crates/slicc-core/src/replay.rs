//! Experience replay over paired per-agent transitions.
//!
//! Both agents' views of one environment step live in a single record, so a
//! sampled mini-batch lines up the same timesteps for leader and follower
//! updates. Storage is a FIFO ring; sampling is uniform without replacement
//! within a batch.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::SliccError;

/// One step as both agents saw it. Observations are stored as the networks
/// consume them (already scaled, when scaling is on).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JointTransition {
    pub o_p: [f64; 8],
    pub a_p: usize,
    pub r_p: f64,
    pub o_p_next: [f64; 8],
    pub o_i: [f64; 4],
    pub a_i: usize,
    pub r_i: f64,
    pub o_i_next: [f64; 4],
    pub terminal: bool,
}

impl JointTransition {
    pub fn validate(&self) -> Result<(), SliccError> {
        if self.a_p >= crate::env::N_ACTIONS || self.a_i >= crate::env::N_ACTIONS {
            return Err(SliccError::DimMismatch {
                expected: crate::env::N_ACTIONS,
                got: self.a_p.max(self.a_i),
            });
        }
        let finite = self
            .o_p
            .iter()
            .chain(&self.o_p_next)
            .chain(&self.o_i)
            .chain(&self.o_i_next)
            .all(|x| x.is_finite())
            && self.r_p.is_finite()
            && self.r_i.is_finite();
        if !finite {
            return Err(SliccError::NonFinite("transition field"));
        }
        Ok(())
    }
}

/// FIFO ring buffer. `head` marks the slot the next push overwrites once
/// the buffer has wrapped.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    storage: Vec<JointTransition>,
    capacity: usize,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Result<Self, SliccError> {
        if capacity == 0 {
            return Err(SliccError::BadConfig("replay capacity must be positive"));
        }
        Ok(Self {
            storage: Vec::with_capacity(capacity.min(4096)),
            capacity,
            head: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Append, evicting the oldest record when full.
    pub fn push(&mut self, t: JointTransition) {
        if self.storage.len() < self.capacity {
            self.storage.push(t);
        } else {
            self.storage[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// The stored transitions oldest-first (test and dump aid; sampling does
    /// not go through here).
    pub fn iter_in_order(&self) -> impl Iterator<Item = &JointTransition> {
        let (wrapped, fresh) = self.storage.split_at(self.head);
        fresh.iter().chain(wrapped.iter())
    }

    /// Uniform sample of `batch` distinct records. Ring positions have no
    /// age meaning to the caller, so indices are drawn over the raw storage.
    pub fn sample<'a, R: Rng + ?Sized>(
        &'a self,
        rng: &mut R,
        batch: usize,
    ) -> Result<Vec<&'a JointTransition>, SliccError> {
        if batch == 0 {
            return Err(SliccError::BadConfig("batch must be positive"));
        }
        if self.storage.len() < batch {
            return Err(SliccError::BadState("not enough transitions buffered"));
        }
        let idx = rand::seq::index::sample(rng, self.storage.len(), batch);
        Ok(idx.iter().map(|i| &self.storage[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(tag: f64) -> JointTransition {
        JointTransition {
            o_p: [tag; 8],
            a_p: 0,
            r_p: tag,
            o_p_next: [tag; 8],
            o_i: [tag; 4],
            a_i: 0,
            r_i: tag,
            o_i_next: [tag; 4],
            terminal: false,
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut buf = ReplayBuffer::new(2).unwrap();
        buf.push(t(1.0));
        buf.push(t(2.0));
        assert_eq!(buf.len(), 2);
        buf.push(t(3.0));
        assert_eq!(buf.len(), 2);
        let tags: Vec<f64> = buf.iter_in_order().map(|x| x.r_p).collect();
        assert_eq!(tags, vec![2.0, 3.0]);
        buf.push(t(4.0));
        let tags: Vec<f64> = buf.iter_in_order().map(|x| x.r_p).collect();
        assert_eq!(tags, vec![3.0, 4.0]);
    }

    #[test]
    fn count_tracks_pushes_below_capacity() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        for k in 0..7 {
            buf.push(t(k as f64));
            assert_eq!(buf.len(), k + 1);
        }
        let tags: Vec<f64> = buf.iter_in_order().map(|x| x.r_p).collect();
        assert_eq!(tags, vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
    }

    #[test]
    fn stored_transition_round_trips() {
        let mut buf = ReplayBuffer::new(4).unwrap();
        let original = JointTransition {
            o_p: [0.1, -0.2, 0.3, -0.4, 0.5, -0.6, 0.7, -0.8],
            a_p: 4,
            r_p: -0.123456789,
            o_p_next: [1.0; 8],
            o_i: [1e-300, -1e300, 0.0, -0.0],
            a_i: 8,
            r_i: 42.0,
            o_i_next: [f64::MIN_POSITIVE; 4],
            terminal: true,
        };
        buf.push(original.clone());
        let got = buf.iter_in_order().next().unwrap();
        assert_eq!(got, &original);
        assert_eq!(got.o_i[0].to_bits(), original.o_i[0].to_bits());
    }

    #[test]
    fn sampling_is_seeded_and_without_replacement() {
        let mut buf = ReplayBuffer::new(16).unwrap();
        for k in 0..10 {
            buf.push(t(k as f64));
        }
        let mut rng1 = ChaCha8Rng::seed_from_u64(5);
        let mut rng2 = ChaCha8Rng::seed_from_u64(5);
        let s1: Vec<f64> = buf.sample(&mut rng1, 6).unwrap().iter().map(|x| x.r_p).collect();
        let s2: Vec<f64> = buf.sample(&mut rng2, 6).unwrap().iter().map(|x| x.r_p).collect();
        assert_eq!(s1, s2);

        // Exhaustive batch is a permutation.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut all: Vec<f64> = buf.sample(&mut rng, 10).unwrap().iter().map(|x| x.r_p).collect();
        all.sort_by(f64::total_cmp);
        assert_eq!(all, (0..10).map(|k| k as f64).collect::<Vec<_>>());

        assert!(buf.sample(&mut rng, 11).is_err());
        assert!(buf.sample(&mut rng, 0).is_err());
    }

    #[test]
    fn sampling_is_close_to_uniform() {
        let mut buf = ReplayBuffer::new(10).unwrap();
        for k in 0..10 {
            buf.push(t(k as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut counts = [0usize; 10];
        let draws = 40_000;
        for _ in 0..draws {
            for tr in buf.sample(&mut rng, 3).unwrap() {
                counts[tr.r_p as usize] += 1;
            }
        }
        // Each index is expected in 3/10 of draws: 12_000 hits. 5% slack.
        let expected = draws as f64 * 0.3;
        for (i, c) in counts.iter().enumerate() {
            let rel = (*c as f64 - expected).abs() / expected;
            assert!(rel < 0.05, "index {i}: count {c}, relative deviation {rel}");
        }
    }

    #[test]
    fn validation_rejects_bad_transitions() {
        assert!(t(0.5).validate().is_ok());
        let mut bad = t(0.0);
        bad.a_p = 9;
        assert!(bad.validate().is_err());
        let mut bad = t(0.0);
        bad.o_i[1] = f64::INFINITY;
        assert!(bad.validate().is_err());
        let mut bad = t(0.0);
        bad.r_i = f64::NAN;
        assert!(bad.validate().is_err());
        assert!(ReplayBuffer::new(0).is_err());
    }
}
