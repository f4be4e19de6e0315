//! Anytime combinatorial search with state-space reduction.
//!
//! The crate provides best-first search and depth-first branch-and-bound over
//! any [`SearchProblem`], two cost transforms that shrink a hard search space
//! into an easier one (epsilon zeroing of small increments and delta pruning of
//! large ones), iterative drivers that turn those transforms into anytime
//! algorithms, and problem adapters for incremental random trees, the
//! asymmetric and symmetric TSP and maximum 3-SAT.
//!
//! Everything here is `no_std` with `alloc`. Wall-clock timestamps are taken
//! through an optional function pointer in [`Limits`], so a host with a clock
//! can supply one while the algorithms stay machine-independent.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod atsp;
pub mod error;
pub mod maxsat;
pub mod profile;
pub mod reduction;
pub mod sampling;
pub mod search;
pub mod stsp;
pub mod tree;

pub use error::{Error, Result};
pub use search::{
    best_first_search, dfbnb, AnytimeEvent, AnytimeRecord, Child, Cost, Limits, SearchProblem,
    SearchResult,
};
