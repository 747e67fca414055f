//! Sparse estimation under a known interfering subspace.
//!
//! The crate generates random overcomplete dictionaries with
//! signal-plus-interference observations ([`model`]), removes the known
//! interference by orthogonal deflation, evaluates expected Cramér-Rao bounds
//! in exact and large-system form ([`bounds`], [`rmt`]), runs sparse
//! estimators on the deflated system ([`estimators`]) and benchmarks them
//! against the bounds with seeded Monte-Carlo experiments ([`harness`]).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod config;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod quad;
pub mod rmt;
pub mod stats;

pub use error::{Error, Result};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Random stream `stream` of the family rooted at `seed`.
///
/// Streams of one family are independent, so work items keyed by an index
/// draw the same numbers whatever order or thread they run on.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
