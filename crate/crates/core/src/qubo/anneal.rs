//! Simulated annealing over the logical QUBO: each read is an independent
//! single-spin-flip Metropolis run under a geometric inverse-temperature
//! schedule.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{BinaryVector, QuboInstance, SampleSet, SamplerConfig, StageTimings};

/// Inverse temperatures for `sweeps` sweeps, geometric from `beta_min` to
/// `beta_max`.
pub fn beta_schedule(beta_min: f64, beta_max: f64, sweeps: usize) -> Vec<f64> {
    if sweeps == 1 {
        return vec![beta_max];
    }
    let ratio = (beta_max / beta_min).powf(1.0 / (sweeps - 1) as f64);
    let mut out = Vec::with_capacity(sweeps);
    let mut beta = beta_min;
    for _ in 0..sweeps {
        out.push(beta);
        beta *= ratio;
    }
    out[sweeps - 1] = beta_max;
    out
}

/// Runs `cfg.num_reads` anneals. Read `r` draws from the ChaCha stream `r`
/// of `cfg.seed`, so the output does not depend on scheduling.
pub fn solve_sa(inst: &QuboInstance, cfg: &SamplerConfig) -> SampleSet {
    let program = Instant::now();
    let n = inst.n();
    let coeffs: Vec<f64> = inst.coeffs().iter().copied().collect();
    let betas = beta_schedule(cfg.sa_beta_range().0, cfg.sa_beta_range().1, cfg.sa_sweeps());
    let programming_us = program.elapsed().as_secs_f64() * 1e6;

    let anneal = Instant::now();
    let reads: Vec<BinaryVector> = (0..cfg.num_reads())
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed());
            rng.set_stream(r);
            BinaryVector::from_raw(anneal_once(&coeffs, n, &betas, &mut rng))
        })
        .collect();
    let anneal_us = anneal.elapsed().as_secs_f64() * 1e6;

    let post = Instant::now();
    let mut ss = SampleSet::from_reads(inst, reads, StageTimings::new());
    let post_us = post.elapsed().as_secs_f64() * 1e6;
    let mut timing = StageTimings::new();
    timing.insert("Programming time".into(), programming_us);
    timing.insert("Anneal time".into(), anneal_us);
    timing.insert("Post processing".into(), post_us);
    ss.set_timing(timing);
    ss
}

fn anneal_once(coeffs: &[f64], n: usize, betas: &[f64], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut b: Vec<u8> = (0..n).map(|_| rng.random::<bool>() as u8).collect();
    // field[i] = sum_{j != i} c_ij b_j
    let mut field = vec![0.0f64; n];
    for i in 0..n {
        let row = &coeffs[i * n..(i + 1) * n];
        field[i] = (0..n)
            .filter(|&j| j != i && b[j] == 1)
            .map(|j| row[j])
            .sum();
    }
    for &beta in betas {
        for i in 0..n {
            let row = &coeffs[i * n..(i + 1) * n];
            let up = row[i] + 2.0 * field[i];
            let delta = if b[i] == 0 { up } else { -up };
            let accept = delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp();
            if accept {
                b[i] ^= 1;
                let s = if b[i] == 1 { 1.0 } else { -1.0 };
                for (j, fj) in field.iter_mut().enumerate() {
                    if j != i {
                        *fj += s * row[j];
                    }
                }
            }
        }
    }
    b
}
