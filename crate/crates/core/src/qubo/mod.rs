//! QUBO construction from the SNR Gram matrices, sample sets, and the
//! sampler backends (exact enumeration, simulated annealing, and the
//! external-process bridge in [`crate::harness::bridge`]).

mod anneal;
mod exact;
pub mod exchange;
mod instance;
mod sampleset;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anneal::{beta_schedule, solve_sa};
pub use exact::{solve_exact, DEFAULT_KEEP, EXACT_MAX_VARS};
pub use instance::{
    binary_to_spin, build_qubo_from_gram, spin_to_binary, BinaryVector, QuboInstance, Sense,
    SYMMETRY_TOL,
};
pub use sampleset::{Sample, SampleSet, StageTimings, ENERGY_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QuboError {
    #[error("matrix is {rows}x{cols}, expected a non-empty square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric at ({i}, {j}): |difference| = {diff:e}")]
    NotSymmetric { i: usize, j: usize, diff: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("bit {index} is not 0 or 1")]
    InvalidBit { index: usize },
    #[error("term ({i}, {j}) out of range for n = {n}")]
    TermOutOfRange { i: usize, j: usize, n: usize },
    #[error("instance with {n} variables exceeds the exact-enumeration limit of {limit}")]
    TooLarge { n: usize, limit: usize },
    #[error("sample {index}: stored energy {stored} differs from recomputed {recomputed}")]
    EnergyMismatch {
        index: usize,
        stored: f64,
        recomputed: f64,
    },
    #[error("invalid sample set: {0}")]
    InvalidSampleSet(String),
    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),
}

/// Per-invocation sampler settings. The sweep count and beta range only
/// affect simulated annealing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    num_reads: u64,
    seed: u64,
    sa_sweeps: usize,
    sa_beta_range: (f64, f64),
}

impl SamplerConfig {
    pub const DEFAULT_READS: u64 = 1000;
    pub const DEFAULT_SWEEPS: usize = 100;
    pub const DEFAULT_BETA_RANGE: (f64, f64) = (0.1, 10.0);

    pub fn new(num_reads: u64, seed: u64, sa_sweeps: usize, sa_beta_range: (f64, f64)) -> Result<Self, QuboError> {
        if num_reads == 0 {
            return Err(QuboError::InvalidConfig("num_reads must be >= 1".into()));
        }
        if sa_sweeps == 0 {
            return Err(QuboError::InvalidConfig("sa_sweeps must be >= 1".into()));
        }
        let (lo, hi) = sa_beta_range;
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo < hi) {
            return Err(QuboError::InvalidConfig(format!(
                "beta range must be positive and increasing, got ({lo}, {hi})"
            )));
        }
        Ok(Self {
            num_reads,
            seed,
            sa_sweeps,
            sa_beta_range,
        })
    }

    pub fn num_reads(&self) -> u64 {
        self.num_reads
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn sa_sweeps(&self) -> usize {
        self.sa_sweeps
    }

    pub fn sa_beta_range(&self) -> (f64, f64) {
        self.sa_beta_range
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            num_reads: Self::DEFAULT_READS,
            seed: 0,
            sa_sweeps: Self::DEFAULT_SWEEPS,
            sa_beta_range: Self::DEFAULT_BETA_RANGE,
        }
    }
}

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error("bridge transport failed: {0}")]
    Transport(String),
    #[error("bridge response rejected: {0}")]
    Response(#[from] exchange::ExchangeError),
}

/// A backend that turns a QUBO instance into a [`SampleSet`].
pub trait Sampler: Send + Sync {
    fn name(&self) -> &str;

    fn sample(&self, inst: &QuboInstance, cfg: &SamplerConfig) -> Result<SampleSet, SamplerError>;
}

/// Exhaustive enumeration; ignores the read count and seed.
#[derive(Debug, Clone, Copy)]
pub struct ExactSampler {
    pub keep: Option<usize>,
}

impl Default for ExactSampler {
    fn default() -> Self {
        Self {
            keep: Some(DEFAULT_KEEP),
        }
    }
}

impl Sampler for ExactSampler {
    fn name(&self) -> &str {
        "exact"
    }

    fn sample(&self, inst: &QuboInstance, _cfg: &SamplerConfig) -> Result<SampleSet, SamplerError> {
        Ok(solve_exact(inst, self.keep)?)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SaSampler;

impl Sampler for SaSampler {
    fn name(&self) -> &str {
        "sa"
    }

    fn sample(&self, inst: &QuboInstance, cfg: &SamplerConfig) -> Result<SampleSet, SamplerError> {
        Ok(solve_sa(inst, cfg))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::new(0, 0, 10, (0.1, 1.0)).is_err());
        assert!(SamplerConfig::new(1, 0, 0, (0.1, 1.0)).is_err());
        assert!(SamplerConfig::new(1, 0, 10, (1.0, 0.1)).is_err());
        assert!(SamplerConfig::new(1, 0, 10, (0.0, 1.0)).is_err());
        assert!(SamplerConfig::new(1, 0, 10, (0.1, 1.0)).is_ok());
        let d = SamplerConfig::default();
        assert_eq!((d.num_reads(), d.sa_sweeps(), d.sa_beta_range()), (1000, 100, (0.1, 10.0)));
    }
}
