#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod env;
pub mod error;
pub mod fmath;
pub mod mlp;
pub mod replay;
pub mod reward;
pub mod stackelberg;
pub mod trainer;

pub use error::SliccError;

/// Every randomized entry point takes this generator, and seeds mean
/// nothing across a version bump of it. Re-exported so callers stay on
/// the exact stream implementation the crate was built with.
pub use rand_chacha::ChaCha8Rng;
pub use rand::{Rng, RngCore, SeedableRng};
