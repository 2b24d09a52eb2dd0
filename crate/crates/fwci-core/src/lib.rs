//! Cost-aware fixed-width confidence intervals for the difference of two
//! Bernoulli proportions.
//!
//! Given two populations with unknown success probabilities `p_x` and `p_y`
//! and per-observation costs `c_x` and `c_y`, this crate builds Wald
//! confidence intervals for `p_x - p_y` whose half-width is driven below a
//! target `epsilon`, while trying to spend as little as possible on
//! observations. It provides:
//!
//! - the underlying statistics ([`stat`]): Wald interval, half-width,
//!   variance proxies, normal quantile, minimax proportion estimates;
//! - closed-form sample-size allocation ([`allocation`]): cost-minimizing
//!   and observation-minimizing two-stage plans;
//! - eight end-to-end sampling procedures ([`procedures`]): conservative,
//!   two-stage, naive batching, adaptive batching, one-step look-ahead, and
//!   their observation-minimizing counterparts;
//! - expected-cost evaluation of candidate batch allocations by outcome
//!   enumeration with a cost-to-go approximation ([`lookahead`]);
//! - a seeded Monte Carlo replication engine with common random numbers
//!   ([`sim`]) and summary reporting ([`report`]);
//! - the reference scenario battery and published benchmark values used by
//!   the reproduction harness ([`reference`](crate::reference)).

pub mod allocation;
pub mod lookahead;
pub mod procedures;
pub mod reference;
pub mod report;
pub mod sim;
pub mod stat;

pub use stat::{ConfidenceInterval, CostModel, SampleState, StatError, TargetSpec};
