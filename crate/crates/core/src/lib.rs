//! Design of 1-bit analogue pre/post-coding vectors for point-to-point MIMO.
//!
//! A transmit vector `f` and a receive vector `g` take values in `{-1, +1}`
//! (phase shifts of pi or 0) and are chosen to maximize `|g^T H f|^2`. The
//! crate provides:
//!
//! - [`designers::exhaustive_search`], the exact benchmark;
//! - [`designers::svd_sign_design`], sign quantization of the leading
//!   singular vectors;
//! - [`designers::rq_design`] / [`designers::rqm_design`], Rayleigh-quotient
//!   alternations;
//! - [`qa::qa_design`], alternating optimization where each half-step is a
//!   QUBO solved by a pluggable [`qubo::Sampler`] (exact enumeration,
//!   simulated annealing, or an external annealer behind
//!   [`harness::BridgeSampler`]);
//! - [`harness::run_campaign`], a seeded Monte-Carlo comparison writing CSV.

pub mod designers;
pub mod harness;
pub mod linalg;
pub mod model;
pub mod qa;
pub mod qubo;

pub use designers::{DesignResult, IterControl};
pub use model::{ChannelMatrix, CodingPair, SpinVector, SystemParams};
