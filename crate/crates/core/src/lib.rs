//! Cosine-similarity gating of auxiliary-task updates.
//!
//! The core rule: given a main-task gradient `g` and an auxiliary update `v`
//! on shared parameters, apply `v` only to the extent that it agrees with `g`,
//! measured by the cosine of the angle between them. The [`gate`] module holds
//! the rule itself; the remaining modules are the experiment surfaces built on
//! top of it:
//!
//! - [`landscape`]: analytic 2-D losses, steepest-descent trajectories, and
//!   line integrals showing the merged field is not conservative.
//! - [`gridworld`]: tabular policy-gradient students distilling from a
//!   Q-learning teacher across related environments.
//! - [`densenet`]: a small fully-connected net with manual backprop and
//!   RMSprop for the rotated-digits transfer study.
//! - [`harness`]: configs, seeding, CSV/JSON emission, and the
//!   high-dimensional cosine statistics study.

pub mod densenet;
pub mod error;
pub mod gate;
pub mod gridworld;
pub mod harness;
pub mod landscape;
pub mod vector;

pub use error::{Error, Result};
pub use gate::{
    combine, cosine, gate_weight, partitioned_step, per_layer_cosine, step, CosineTracker,
    GateConfig, GateDecision, GateMode, PartitionedGrads, PartitionedParams,
};
pub use vector::ParamVector;
