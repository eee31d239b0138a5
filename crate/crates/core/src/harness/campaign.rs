use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::bridge::{BridgeEndpoint, BridgeSampler};
use super::config::{ExperimentConfig, Method};
use crate::designers::{self, DesignResult};
use crate::linalg;
use crate::model::{generate_channel, ChannelMatrix, SpinVector};
use crate::qa::{self, QaControl};
use crate::qubo::{ExactSampler, SaSampler, Sampler};

pub const CSV_HEADER: &str = "trial,seed,method,snr,iterations,converged,wall_us";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub snr: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub wall_us: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub seed: u64,
    /// Largest squared singular value of the channel.
    pub sigma1_sq: Option<f64>,
    /// Single-mode eigenbeamforming SNR `P lambda1 / sigma^2`, an upper
    /// bound on every spin design.
    pub eigen_bound: Option<f64>,
    pub outcomes: Vec<MethodOutcome>,
}

impl TrialRecord {
    pub fn snr(&self, method: Method) -> Option<f64> {
        self.outcomes
            .iter()
            .find(|o| o.method == method)
            .and_then(|o| o.snr)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_snr: f64,
    pub std_snr: f64,
    pub mean_snr_db: f64,
    pub successes: usize,
    pub failures: usize,
    pub mean_wall_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub summaries: Vec<MethodSummary>,
    pub eigen_bound_mean: f64,
    pub trials: Vec<TrialRecord>,
}

impl CampaignReport {
    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn mean(&self, method: Method) -> Option<f64> {
        self.summary(method).map(|s| s.mean_snr)
    }

    /// Per-trial bound checks: every heuristic at most ES, ES at most the
    /// eigen bound. Returns one message per violation.
    pub fn bound_violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.trials {
            let es = t.snr(Method::Es);
            if let Some(es) = es {
                for o in &t.outcomes {
                    if let (true, Some(snr)) = (o.method.is_heuristic(), o.snr) {
                        if snr > es {
                            out.push(format!("trial {}: {} snr {snr} > es {es}", t.trial, o.method));
                        }
                    }
                }
            }
            if let Some(bound) = t.eigen_bound {
                for o in &t.outcomes {
                    if let Some(snr) = o.snr {
                        if snr > bound {
                            out.push(format!(
                                "trial {}: {} snr {snr} > eigen bound {bound}",
                                t.trial, o.method
                            ));
                        }
                    }
                }
            }
        }
        out
    }

    /// One row per trial per method. `wall_us` is left empty unless the
    /// configuration records wall-clock time.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(CSV_HEADER);
        out.push('\n');
        for t in &self.trials {
            for o in &t.outcomes {
                let snr = o.snr.map(|v| v.to_string()).unwrap_or_default();
                let iterations = o.iterations.map(|v| v.to_string()).unwrap_or_default();
                let converged = match (o.converged, &o.error) {
                    (_, Some(_)) => "failed".to_string(),
                    (Some(c), None) => c.to_string(),
                    (None, None) => String::new(),
                };
                let wall = if self.config.record_wall_clock {
                    format!("{:.0}", o.wall_us)
                } else {
                    String::new()
                };
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    t.trial, t.seed, o.method, snr, iterations, converged, wall
                );
            }
        }
        out
    }

    /// Writes `<path>` (CSV) and `<path stem>.summary.json`.
    pub fn write_files(&self, path: &Path) -> std::io::Result<PathBuf> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, self.to_csv())?;
        let summary_path = path.with_extension("summary.json");
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(&summary_path, json)?;
        Ok(summary_path)
    }
}

struct Samplers {
    exact: ExactSampler,
    sa: SaSampler,
    bridge: Option<BridgeSampler>,
}

fn qa_control(cfg: &ExperimentConfig, seed: u64) -> QaControl {
    QaControl {
        ctrl: cfg.ctrl,
        restarts: cfg.restarts,
        sampler_cfg: cfg.sampler_cfg.with_seed(seed),
        restart_seed: seed,
    }
}

fn run_method(
    cfg: &ExperimentConfig,
    samplers: &Samplers,
    method: Method,
    h: &ChannelMatrix,
    seed: u64,
) -> Result<DesignResult, String> {
    let params = &cfg.params;
    let qa_with = |sampler: &dyn Sampler| {
        qa::qa_design(params, h, &qa_control(cfg, seed), sampler)
            .map(|r| r.design)
            .map_err(|e| e.to_string())
    };
    match method {
        Method::Es => designers::exhaustive_search(params, h).map_err(|e| e.to_string()),
        Method::Svd => designers::svd_sign_design(params, h).map_err(|e| e.to_string()),
        Method::Rq => {
            let g0 = if cfg.randomize_init {
                qa::random_restart_vectors(params.n_r(), 1, seed ^ 0x5251_0000)
                    .pop()
                    .expect("one vector")
            } else {
                SpinVector::ones(params.n_r())
            };
            designers::rq_design(params, h, &cfg.ctrl, &g0).map_err(|e| e.to_string())
        }
        Method::Rqm => {
            let g0 = designers::seeded_unit_vector(params.n_r(), seed);
            designers::rqm_design(params, h, &cfg.ctrl, &g0).map_err(|e| e.to_string())
        }
        Method::QaExact => qa_with(&samplers.exact),
        Method::QaSa => qa_with(&samplers.sa),
        Method::QaBridge => match &samplers.bridge {
            Some(b) => qa_with(b),
            None => Err("no bridge command configured".into()),
        },
    }
}

fn run_trial(cfg: &ExperimentConfig, samplers: &Samplers, trial: u64) -> TrialRecord {
    let seed = cfg.trial_seed(trial);
    let h = generate_channel(&cfg.params, seed);
    let sigma1_sq = linalg::leading_triplet_default(&h).ok().map(|t| t.sigma1_sq);
    let eigen_bound = sigma1_sq.map(|l| cfg.params.power() * l / cfg.params.noise_var());
    let outcomes = cfg
        .methods
        .iter()
        .map(|&method| {
            let start = Instant::now();
            let result = run_method(cfg, samplers, method, &h, seed);
            let wall_us = start.elapsed().as_secs_f64() * 1e6;
            match result {
                Ok(d) => MethodOutcome {
                    method,
                    snr: Some(d.snr()),
                    iterations: Some(d.iterations_used),
                    converged: Some(d.converged_by_tolerance),
                    wall_us,
                    error: None,
                },
                Err(e) => MethodOutcome {
                    method,
                    snr: None,
                    iterations: None,
                    converged: None,
                    wall_us,
                    error: Some(e),
                },
            }
        })
        .collect();
    TrialRecord {
        trial,
        seed,
        sigma1_sq,
        eigen_bound,
        outcomes,
    }
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Runs every configured method on `n_trials` channels. Trial `i` (counted
/// from `first_trial`) uses channel seed `master_seed + i`; trials run in
/// parallel and bridge calls are serialized.
pub fn run_campaign(cfg: &ExperimentConfig) -> CampaignReport {
    let bridge = cfg.bridge_cmd.as_ref().and_then(|cmd| {
        BridgeEndpoint::from_command(cmd, cfg.annealing_time_us, cfg.ferromagnetic_coupling)
            .map(BridgeSampler::new)
    });
    let samplers = Samplers {
        exact: ExactSampler::default(),
        sa: SaSampler,
        bridge,
    };
    let first = cfg.first_trial;
    let trials: Vec<TrialRecord> = (first..first + cfg.n_trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, &samplers, t))
        .collect();

    let summaries = cfg
        .methods
        .iter()
        .map(|&method| {
            let outcomes: Vec<&MethodOutcome> = trials
                .iter()
                .flat_map(|t| t.outcomes.iter().filter(move |o| o.method == method))
                .collect();
            let snrs: Vec<f64> = outcomes.iter().filter_map(|o| o.snr).collect();
            let (mean_snr, std_snr) = mean_std(&snrs);
            let walls: Vec<f64> = outcomes.iter().map(|o| o.wall_us).collect();
            MethodSummary {
                method,
                mean_snr,
                std_snr,
                mean_snr_db: 10.0 * mean_snr.log10(),
                successes: snrs.len(),
                failures: outcomes.len() - snrs.len(),
                mean_wall_us: mean_std(&walls).0,
            }
        })
        .collect();
    let bounds: Vec<f64> = trials.iter().filter_map(|t| t.eigen_bound).collect();
    CampaignReport {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: cfg.clone(),
        summaries,
        eigen_bound_mean: mean_std(&bounds).0,
        trials,
    }
}
