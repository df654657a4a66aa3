//! Recency-bias measurement for sequential recommenders.
//!
//! The crate evaluates next-item scorers against the full catalog and reports,
//! next to the usual Hit@K and NDCG@K, the hit rate of the *last input item*
//! (HRLI@K): how often the item the user just consumed shows up in the model's
//! own Top-K. It also implements the counterfactual where the last item's score
//! is pushed below every other item, yielding the starred metrics Hit\*@K and
//! NDCG\*@K, so the cost of recency bias on measured accuracy can be read off
//! directly.
//!
//! Around that core sit the pieces needed to run the measurement end to end:
//!
//! * [`corpus`] ingests interaction logs, applies k-core filtering and builds
//!   leave-one-out splits.
//! * [`numerics`] holds the seeded generator, Adam, softmax cross-entropy and
//!   a finite-difference gradient checker.
//! * [`models`] provides four scorers (popularity, first-order Markov, a GRU and
//!   a single-block causal self-attention model) and the training loop.
//! * [`eval`] ranks, masks and aggregates.
//! * [`dump`] is the interchange format that lets external models be audited.
//! * [`report`] renders metric tables.
//! * [`synth`] generates logs with a known repeat probability.
//!
//! The accompanying book (`book/`) walks through the metric algebra; its code
//! listings are compiled and run as doc-tests of this crate.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod dump;
mod error;
pub mod eval;
mod format;
pub mod models;
pub mod numerics;
pub mod report;
pub mod synth;

pub use error::{Error, ErrorClass, Result};

/// Magic prefix shared by every text artifact this crate writes.
pub const MAGIC_PREFIX: &str = "#hrli-";

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/sessions.md")]
    mod sessions {}
    #[doc = include_str!("../../../book/src/metrics.md")]
    mod metrics {}
    #[doc = include_str!("../../../book/src/masking.md")]
    mod masking {}
    #[doc = include_str!("../../../book/src/scorers.md")]
    mod scorers {}
    #[doc = include_str!("../../../book/src/calibration.md")]
    mod calibration {}
    #[doc = include_str!("../../../book/src/auditing.md")]
    mod auditing {}
}
