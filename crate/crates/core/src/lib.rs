//! Efficient one-sided inference over convex tangent cones.
//!
//! The crate works in `L2(P)` for a base measure `P` on the real line. An
//! influence curve `κ` is projected onto the convex cone and onto the linear
//! span generated by finitely many tangents; the projections drive the
//! optimal one-sided tests, the efficient one-step estimators and their
//! confidence limits, and the distribution-free signed rank tests.
//!
//! Everything here is `no_std` (with `alloc`). Monte Carlo harnesses take an
//! [`mc::Executor`] so that a std front end can shard replications across
//! threads without changing any result: every replication draws from its own
//! ChaCha stream derived from the root seed and the replication index.

#![no_std]
#![deny(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod catalog;
pub mod cone;
pub mod confidence;
mod error;
pub mod function;
pub mod hilbert;
pub mod linalg;
mod math;
pub mod mc;
pub mod measure;
pub mod model;
pub mod normal;
pub mod one_sided;
pub mod paths;
pub mod quadrature;
pub mod ranks;

pub use error::{Error, Result};
pub use function::ScalarFunction;
pub use measure::BaseMeasure;
pub use model::{LocalModel, TangentSet};
