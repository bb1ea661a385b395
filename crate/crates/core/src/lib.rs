//! Numerical laboratory for spiked tensor PCA.
//!
//! Observations follow `T = lambda v^{(x)k} + W` with i.i.d. standard
//! Gaussian `W`, and `gamma = lambda / n^{(k-1)/2}`. The crate provides:
//!
//! - [`model`]: the model, signal sampling and dense contraction;
//! - [`dense`]: tensor power iteration on a materialized tensor;
//! - [`conditioned`]: an exact-law simulator of the same trajectory that
//!   never builds the `n^k` tensor and exposes the error terms of the
//!   alignment recurrence;
//! - [`recurrence`]: the scalar surrogate `X_{t+1} = gamma (X_t + Z_t)^{k-1}`
//!   and its deterministic envelopes;
//! - [`bounds`]: closed-form constants and the convergence-time bracket;
//! - [`trace`]: per-step records and the convergence, stopping and hitting
//!   times;
//! - [`experiments`], [`table`], [`cli`]: the Monte Carlo harness, output
//!   files and the command line.
//!
//! All randomness flows through explicit [`rng::Stream`]s, so every run is
//! reproducible from `(master_seed, replication)`.

// `!(x > 0.0)` style guards are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod bounds;
pub mod cli;
pub mod conditioned;
pub mod dense;
pub mod error;
pub mod experiments;
pub mod model;
pub mod recurrence;
pub mod rng;
pub mod stats;
pub mod table;
pub mod trace;
mod vecops;

pub use error::{Error, Result};
pub use model::{
    sample_signal, sample_spiked_tensor, DenseTensor, ModelConfig, SpikedTensor, UnitVector,
};
pub use rng::Stream;
pub use trace::{t_conv, t_hit, t_stop, EngineKind, IterateTrace, StepRecord, StopRuleConfig};

/// Inner product, exposed for examples and tests.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    vecops::dot(a, b)
}
