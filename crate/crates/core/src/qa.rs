//! Alternating optimization where each half-step is a QUBO handed to a
//! [`Sampler`], repeated from `L` initial receive vectors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designers::{DesignResult, IterControl};
use crate::model::{self, ChannelMatrix, CodingPair, ModelError, SpinVector, SystemParams};
use crate::qubo::{self, QuboError, Sampler, SamplerConfig, SamplerError};

#[derive(Debug, Error)]
pub enum QaError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("number of restarts must be >= 1")]
    NoRestarts,
    #[error("all {count} restarts failed; first failure: {first}")]
    AllRestartsFailed { count: usize, first: String },
}

#[derive(Debug, Error)]
pub enum HalfStepError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Qubo(#[from] QuboError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("sampler returned an empty sample set")]
    EmptySampleSet,
}

/// `delta`, `K`, the restart count `L` and the sampler settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QaControl {
    pub ctrl: IterControl,
    pub restarts: usize,
    pub sampler_cfg: SamplerConfig,
    pub restart_seed: u64,
}

impl Default for QaControl {
    fn default() -> Self {
        Self {
            ctrl: IterControl::default(),
            restarts: 10,
            sampler_cfg: SamplerConfig::default(),
            restart_seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct RestartRecord {
    pub initial_g: SpinVector,
    pub outcome: Result<DesignResult, HalfStepError>,
}

#[derive(Debug)]
pub struct QaResult {
    /// Best design across restarts.
    pub design: DesignResult,
    pub best_restart: usize,
    pub restarts: Vec<RestartRecord>,
}

impl QaResult {
    pub fn failed_restarts(&self) -> usize {
        self.restarts.iter().filter(|r| r.outcome.is_err()).count()
    }

    /// Final SNR of every successful restart.
    pub fn restart_snrs(&self) -> Vec<Option<f64>> {
        self.restarts
            .iter()
            .map(|r| r.outcome.as_ref().ok().map(DesignResult::snr))
            .collect()
    }
}

/// `L` receive start vectors, uniform over spins with the first entry +1.
/// Restart `l` draws from ChaCha stream `l` of `seed`.
pub fn random_restart_vectors(n_r: usize, restarts: usize, seed: u64) -> Vec<SpinVector> {
    (0..restarts)
        .map(|l| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(l as u64);
            let spins = (0..n_r)
                .map(|k| if k == 0 || rng.random::<bool>() { 1 } else { -1 })
                .collect();
            SpinVector::new(spins).expect("n_r >= 1")
        })
        .collect()
}

/// All `2^(n_r - 1)` receive vectors with first entry +1.
pub fn sign_distinct_starts(n_r: usize) -> Vec<SpinVector> {
    (0..1u64 << (n_r - 1))
        .map(|i| SpinVector::from_index(n_r, i, 1))
        .collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Sampler seed for half-step `half` (0 = f, 1 = g) of iteration `k` in
/// restart `l`.
fn call_seed(base: u64, l: usize, k: usize, half: u64) -> u64 {
    let mut s = splitmix64(base);
    s = splitmix64(s ^ l as u64);
    s = splitmix64(s ^ k as u64);
    splitmix64(s ^ half)
}

/// Solves `max_x x^T q x` over spins with one sampler call and returns the
/// minimum-energy sample as a spin vector.
pub fn qubo_half_step(
    q: &ndarray::Array2<f64>,
    sampler: &dyn Sampler,
    cfg: &SamplerConfig,
) -> Result<SpinVector, HalfStepError> {
    let inst = qubo::build_qubo_from_gram(q)?;
    let ss = sampler.sample(&inst, cfg)?;
    let best = ss.best().ok_or(HalfStepError::EmptySampleSet)?;
    Ok(qubo::binary_to_spin(&best.bits)?)
}

/// One restart of the alternating QUBO design from `g0` (with `f0 = 1`).
pub fn qa_single_restart(
    params: &SystemParams,
    h: &ChannelMatrix,
    qc: &QaControl,
    sampler: &dyn Sampler,
    g0: &SpinVector,
    restart_index: usize,
) -> Result<DesignResult, HalfStepError> {
    let mut g = g0.clone();
    let mut f = SpinVector::ones(params.n_t());
    let mut rho_old = model::evaluate_snr(params, h, &g, &f)?;
    let mut trace = Vec::with_capacity(qc.ctrl.max_iters());
    let mut converged = false;
    let base = qc.sampler_cfg.seed();

    for k in 1..=qc.ctrl.max_iters() {
        let cfg_f = qc.sampler_cfg.with_seed(call_seed(base, restart_index, k, 0));
        f = qubo_half_step(&model::objective_gram_f(h, &g)?, sampler, &cfg_f)?;
        let cfg_g = qc.sampler_cfg.with_seed(call_seed(base, restart_index, k, 1));
        g = qubo_half_step(&model::objective_gram_g(h, &f)?, sampler, &cfg_g)?;
        let rho_new = model::evaluate_snr(params, h, &g, &f)?;
        trace.push(rho_new);
        if qc.ctrl.has_converged(rho_old, rho_new) {
            converged = true;
            break;
        }
        rho_old = rho_new;
    }
    Ok(DesignResult {
        pair: CodingPair::evaluate(params, h, g, f)?,
        iterations_used: trace.len(),
        converged_by_tolerance: converged,
        trace: Some(trace),
    })
}

/// Runs `qc.restarts` restarts from random receive vectors and keeps the
/// best.
pub fn qa_design(
    params: &SystemParams,
    h: &ChannelMatrix,
    qc: &QaControl,
    sampler: &dyn Sampler,
) -> Result<QaResult, QaError> {
    if qc.restarts == 0 {
        return Err(QaError::NoRestarts);
    }
    let starts = random_restart_vectors(params.n_r(), qc.restarts, qc.restart_seed);
    qa_design_with_starts(params, h, qc, sampler, &starts)
}

/// Same as [`qa_design`] with explicit receive start vectors (one restart
/// each). Failed restarts are recorded; the call fails only if all fail.
pub fn qa_design_with_starts(
    params: &SystemParams,
    h: &ChannelMatrix,
    qc: &QaControl,
    sampler: &dyn Sampler,
    starts: &[SpinVector],
) -> Result<QaResult, QaError> {
    h.check_shape(params)?;
    if starts.is_empty() {
        return Err(QaError::NoRestarts);
    }
    for g0 in starts {
        if g0.len() != params.n_r() {
            return Err(ModelError::DimensionMismatch {
                which: "g0 (initial receive spin vector)",
                expected: params.n_r(),
                got: g0.len(),
            }
            .into());
        }
    }
    let restarts: Vec<RestartRecord> = starts
        .par_iter()
        .enumerate()
        .map(|(l, g0)| RestartRecord {
            initial_g: g0.clone(),
            outcome: qa_single_restart(params, h, qc, sampler, g0, l),
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (l, r) in restarts.iter().enumerate() {
        if let Ok(d) = &r.outcome {
            if best.is_none_or(|(_, snr)| d.snr() > snr) {
                best = Some((l, d.snr()));
            }
        }
    }
    match best {
        Some((l, _)) => {
            let design = restarts[l]
                .outcome
                .as_ref()
                .expect("best restart succeeded")
                .clone();
            Ok(QaResult {
                design,
                best_restart: l,
                restarts,
            })
        }
        None => Err(QaError::AllRestartsFailed {
            count: restarts.len(),
            first: restarts[0]
                .outcome
                .as_ref()
                .err()
                .map(ToString::to_string)
                .unwrap_or_default(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designers::exhaustive_search;
    use crate::model::generate_channel;
    use crate::qubo::{ExactSampler, QuboInstance, SampleSet};
    use num_complex::Complex64;

    struct Failing;

    impl Sampler for Failing {
        fn name(&self) -> &str {
            "failing"
        }

        fn sample(&self, _: &QuboInstance, _: &SamplerConfig) -> Result<SampleSet, SamplerError> {
            Err(SamplerError::Transport("offline".into()))
        }
    }

    /// Fails on every call whose seed is odd.
    struct Flaky;

    impl Sampler for Flaky {
        fn name(&self) -> &str {
            "flaky"
        }

        fn sample(&self, inst: &QuboInstance, cfg: &SamplerConfig) -> Result<SampleSet, SamplerError> {
            if cfg.seed() % 2 == 1 {
                Err(SamplerError::Transport("dropped".into()))
            } else {
                ExactSampler::default().sample(inst, cfg)
            }
        }
    }

    #[test]
    fn scalar_channel() {
        let p = SystemParams::new(1, 1, 2.0, 1.0).unwrap();
        let h = ChannelMatrix::from_rows(&[vec![Complex64::new(0.6, 0.8)]]).unwrap();
        let r = qa_design(&p, &h, &QaControl::default(), &ExactSampler::default()).unwrap();
        assert!((r.design.snr() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn all_failures_is_an_error() {
        let p = SystemParams::new(3, 3, 1.0, 1.0).unwrap();
        let h = generate_channel(&p, 1);
        let err = qa_design(&p, &h, &QaControl::default(), &Failing).unwrap_err();
        assert!(matches!(err, QaError::AllRestartsFailed { count: 10, .. }));
    }

    #[test]
    fn partial_failures_are_counted() {
        let p = SystemParams::new(3, 3, 1.0, 1.0).unwrap();
        let h = generate_channel(&p, 2);
        let r = qa_design(&p, &h, &QaControl::default(), &Flaky).unwrap();
        let failed = r.failed_restarts();
        assert!(failed > 0 && failed < 10, "failed = {failed}");
        let best = r.restart_snrs().into_iter().flatten().fold(f64::MIN, f64::max);
        assert_eq!(r.design.snr(), best);
    }

    #[test]
    fn restart_vectors_pin_first_entry() {
        let v = random_restart_vectors(6, 50, 3);
        assert!(v.iter().all(|g| g.as_slice()[0] == 1));
        assert_eq!(v, random_restart_vectors(6, 50, 3));
        assert!(v.iter().any(|g| g.as_slice()[1..].contains(&-1)));
        assert_eq!(sign_distinct_starts(3).len(), 4);
    }

    #[test]
    fn never_beats_exhaustive_search() {
        let p = SystemParams::new(4, 3, 1.0, 1.0).unwrap();
        let qc = QaControl {
            restarts: 3,
            ..QaControl::default()
        };
        for seed in 0..10 {
            let h = generate_channel(&p, seed);
            let es = exhaustive_search(&p, &h).unwrap().snr();
            let qa = qa_design(&p, &h, &qc, &ExactSampler::default()).unwrap();
            assert!(qa.design.snr() <= es);
        }
    }
}
