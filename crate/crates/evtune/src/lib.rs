//! Event-camera bias tuning toolkit.
//!
//! The staring-scenario tuning problem has four degrees of freedom: two
//! filter biases (`fo`, `hpf`) and two threshold biases (`diff_on`,
//! `diff_off`). Holding the filters fixed, there is exactly one threshold
//! pair that pins the positive and negative background event rates to a
//! common target, and driving both to `D/2` maximizes the detected signal
//! under a total-rate cap of `D`. That collapses the search to the filter
//! plane, which a grid sweep explores experimentally.
//!
//! The crate provides, in matching modules:
//!
//! - [`bias`], [`events`], [`io`]: domain types, event streams, and CSV I/O.
//! - [`analytic`]: closed-form rate and signal surfaces with the exact
//!   monotonicity and limit structure the argument needs, used as oracles.
//! - [`solver`]: nested-bisection solution of the two-equation system,
//!   implicit sensitivities, the constrained-optimum check, and an ordering
//!   counterexample search for unequal targets.
//! - [`sim`]: a pixel-level event-camera simulator with a log photoreceptor,
//!   bias-controlled filter chain, threshold comparators, refractory period,
//!   and a periodic-lamp scene generator.
//! - [`controller`]: the feedback loop balancing per-polarity rates to `D/2`
//!   against any rate source.
//! - [`sweep`]: the filter-plane grid harness producing threshold and signal
//!   surfaces.
//! - [`budget`]: event-rate budget arithmetic and the cluster false-alarm
//!   estimate.

pub mod analytic;
pub mod bias;
pub mod budget;
pub mod controller;
pub mod error;
pub mod events;
pub mod io;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod sweep;

pub use bias::{BiasRanges, BiasTuple};
pub use error::{Error, Result};
pub use events::{Event, EventStream, Polarity, RateEstimate, RegionOfInterest};
