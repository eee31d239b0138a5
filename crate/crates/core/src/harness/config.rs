use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::designers::{IterControl, ES_MAX_ANTENNAS};
use crate::model::{db_to_linear, SystemParams};
use crate::qubo::{SamplerConfig, EXACT_MAX_VARS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("config file: {0}")]
    Toml(String),
    #[error("unknown method `{0}` (expected es, svd, rq, rqm, qa, qa-exact, qa-sa or qa-bridge)")]
    UnknownMethod(String),
    #[error("unknown sampler `{0}` (expected exact, sa or bridge)")]
    UnknownSampler(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "es")]
    Es,
    #[serde(rename = "svd")]
    Svd,
    #[serde(rename = "rq")]
    Rq,
    #[serde(rename = "rqm")]
    Rqm,
    #[serde(rename = "qa-exact")]
    QaExact,
    #[serde(rename = "qa-sa")]
    QaSa,
    #[serde(rename = "qa-bridge")]
    QaBridge,
}

impl Method {
    pub const ALL: [Method; 7] = [
        Method::Es,
        Method::Svd,
        Method::Rq,
        Method::Rqm,
        Method::QaExact,
        Method::QaSa,
        Method::QaBridge,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Es => "es",
            Method::Svd => "svd",
            Method::Rq => "rq",
            Method::Rqm => "rqm",
            Method::QaExact => "qa-exact",
            Method::QaSa => "qa-sa",
            Method::QaBridge => "qa-bridge",
        }
    }

    pub fn is_heuristic(&self) -> bool {
        *self != Method::Es
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| ConfigError::UnknownMethod(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    Exact,
    Sa,
    Bridge,
}

impl SamplerKind {
    pub fn qa_method(&self) -> Method {
        match self {
            SamplerKind::Exact => Method::QaExact,
            SamplerKind::Sa => Method::QaSa,
            SamplerKind::Bridge => Method::QaBridge,
        }
    }
}

impl FromStr for SamplerKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(SamplerKind::Exact),
            "sa" => Ok(SamplerKind::Sa),
            "bridge" => Ok(SamplerKind::Bridge),
            other => Err(ConfigError::UnknownSampler(other.to_string())),
        }
    }
}

/// Parses a comma-separated method list; `qa` resolves through `sampler`.
pub fn parse_methods(list: &str, sampler: SamplerKind) -> Result<Vec<Method>, ConfigError> {
    let mut out: Vec<Method> = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let m = if name == "qa" {
            sampler.qa_method()
        } else {
            name.parse()?
        };
        if !out.contains(&m) {
            out.push(m);
        }
    }
    Ok(out)
}

/// Every campaign setting as an optional value. Config files deserialize
/// into this, CLI flags fill another instance, and [`Self::overlay`]
/// combines them with the flags winning.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub nt: Option<usize>,
    pub nr: Option<usize>,
    pub power_db: Option<f64>,
    pub noise_var: Option<f64>,
    pub trials: Option<usize>,
    pub first_trial: Option<u64>,
    pub seed: Option<u64>,
    pub methods: Option<String>,
    pub delta: Option<f64>,
    pub max_iters: Option<usize>,
    pub restarts: Option<usize>,
    pub reads: Option<u64>,
    pub sweeps: Option<usize>,
    pub beta_min: Option<f64>,
    pub beta_max: Option<f64>,
    pub sampler: Option<String>,
    pub bridge_cmd: Option<String>,
    pub annealing_time_us: Option<f64>,
    pub ferromagnetic_coupling: Option<f64>,
    pub randomize_init: Option<bool>,
    pub wall_clock: Option<bool>,
    pub out: Option<PathBuf>,
}

pub fn parse_config_toml(text: &str) -> Result<ConfigFile, ConfigError> {
    toml::from_str(text).map_err(|e| ConfigError::Toml(e.to_string()))
}

impl ConfigFile {
    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: ConfigFile) -> ConfigFile {
        ConfigFile {
            nt: top.nt.or(self.nt),
            nr: top.nr.or(self.nr),
            power_db: top.power_db.or(self.power_db),
            noise_var: top.noise_var.or(self.noise_var),
            trials: top.trials.or(self.trials),
            first_trial: top.first_trial.or(self.first_trial),
            seed: top.seed.or(self.seed),
            methods: top.methods.or(self.methods),
            delta: top.delta.or(self.delta),
            max_iters: top.max_iters.or(self.max_iters),
            restarts: top.restarts.or(self.restarts),
            reads: top.reads.or(self.reads),
            sweeps: top.sweeps.or(self.sweeps),
            beta_min: top.beta_min.or(self.beta_min),
            beta_max: top.beta_max.or(self.beta_max),
            sampler: top.sampler.or(self.sampler),
            bridge_cmd: top.bridge_cmd.or(self.bridge_cmd),
            annealing_time_us: top.annealing_time_us.or(self.annealing_time_us),
            ferromagnetic_coupling: top.ferromagnetic_coupling.or(self.ferromagnetic_coupling),
            randomize_init: top.randomize_init.or(self.randomize_init),
            wall_clock: top.wall_clock.or(self.wall_clock),
            out: top.out.or(self.out),
        }
    }

    /// Resolves defaults and validates.
    pub fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let d = ExperimentConfig::default();
        let n_t = self.nt.unwrap_or(d.params.n_t());
        let n_r = self.nr.unwrap_or(d.params.n_r());
        let power_db = self.power_db.unwrap_or(d.power_db);
        let noise_var = self.noise_var.unwrap_or(d.params.noise_var());
        let params = SystemParams::with_power_db(n_t, n_r, power_db, noise_var)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let sampler = match &self.sampler {
            Some(s) => s.parse()?,
            None => SamplerKind::Sa,
        };
        let methods = match &self.methods {
            Some(list) => parse_methods(list, sampler)?,
            None => d.methods.clone(),
        };
        let ctrl = IterControl::new(
            self.delta.unwrap_or(d.ctrl.rel_tol()),
            self.max_iters.unwrap_or(d.ctrl.max_iters()),
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let sampler_cfg = SamplerConfig::new(
            self.reads.unwrap_or(d.sampler_cfg.num_reads()),
            0,
            self.sweeps.unwrap_or(d.sampler_cfg.sa_sweeps()),
            (
                self.beta_min.unwrap_or(d.sampler_cfg.sa_beta_range().0),
                self.beta_max.unwrap_or(d.sampler_cfg.sa_beta_range().1),
            ),
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let bridge_cmd = self
            .bridge_cmd
            .as_ref()
            .map(|c| c.split_whitespace().map(str::to_string).collect::<Vec<_>>())
            .filter(|v| !v.is_empty());
        let cfg = ExperimentConfig {
            params,
            power_db,
            n_trials: self.trials.unwrap_or(d.n_trials),
            first_trial: self.first_trial.unwrap_or(0),
            master_seed: self.seed.unwrap_or(d.master_seed),
            methods,
            ctrl,
            restarts: self.restarts.unwrap_or(d.restarts),
            sampler_cfg,
            annealing_time_us: self.annealing_time_us.unwrap_or(d.annealing_time_us),
            ferromagnetic_coupling: self.ferromagnetic_coupling.unwrap_or(d.ferromagnetic_coupling),
            bridge_cmd,
            randomize_init: self.randomize_init.unwrap_or(false),
            record_wall_clock: self.wall_clock.unwrap_or(false),
            output_path: self.out.clone(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A fully resolved campaign configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub params: SystemParams,
    /// Transmit power as given, in dB; `params.power()` holds the linear value.
    pub power_db: f64,
    pub n_trials: usize,
    /// Index of the first trial; trial `i` uses seed `master_seed + i`.
    pub first_trial: u64,
    pub master_seed: u64,
    pub methods: Vec<Method>,
    pub ctrl: IterControl,
    pub restarts: usize,
    pub sampler_cfg: SamplerConfig,
    pub annealing_time_us: f64,
    pub ferromagnetic_coupling: f64,
    pub bridge_cmd: Option<Vec<String>>,
    /// Random spin start for the RQ design instead of all +1.
    pub randomize_init: bool,
    /// Fill the CSV `wall_us` column. Off by default so that repeated
    /// campaigns produce identical bytes.
    pub record_wall_clock: bool,
    pub output_path: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::new(8, 8, db_to_linear(0.0), 1.0).expect("valid defaults"),
            power_db: 0.0,
            n_trials: 1000,
            first_trial: 0,
            master_seed: 0,
            methods: vec![Method::Es, Method::Svd, Method::Rq, Method::Rqm, Method::QaSa],
            ctrl: IterControl::default(),
            restarts: 10,
            sampler_cfg: SamplerConfig::default(),
            annealing_time_us: 1.0,
            ferromagnetic_coupling: 3.0,
            bridge_cmd: None,
            randomize_init: false,
            record_wall_clock: false,
            output_path: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_trials == 0 {
            return Err(ConfigError::Invalid("trials must be >= 1".into()));
        }
        if self.methods.is_empty() {
            return Err(ConfigError::Invalid("at least one method is required".into()));
        }
        if self.restarts == 0 {
            return Err(ConfigError::Invalid("restarts must be >= 1".into()));
        }
        let (n_t, n_r) = (self.params.n_t(), self.params.n_r());
        if self.methods.contains(&Method::Es) && n_t + n_r > ES_MAX_ANTENNAS {
            return Err(ConfigError::Invalid(format!(
                "es needs n_t + n_r <= {ES_MAX_ANTENNAS}, got {}",
                n_t + n_r
            )));
        }
        if self.methods.contains(&Method::QaExact) && n_t.max(n_r) > EXACT_MAX_VARS {
            return Err(ConfigError::Invalid(format!(
                "qa-exact needs max(n_t, n_r) <= {EXACT_MAX_VARS}"
            )));
        }
        if self.methods.contains(&Method::QaBridge) && self.bridge_cmd.is_none() {
            return Err(ConfigError::Invalid("qa-bridge needs a bridge command".into()));
        }
        if !(self.annealing_time_us.is_finite() && self.annealing_time_us > 0.0) {
            return Err(ConfigError::Invalid("annealing time must be > 0".into()));
        }
        if !self.ferromagnetic_coupling.is_finite() {
            return Err(ConfigError::Invalid("ferromagnetic coupling must be finite".into()));
        }
        Ok(())
    }

    pub fn trial_seed(&self, trial: u64) -> u64 {
        self.master_seed.wrapping_add(trial)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_evaluation_setup() {
        let cfg = ConfigFile::default().resolve().unwrap();
        assert_eq!(cfg.params.noise_var(), 1.0);
        assert_eq!(cfg.params.power(), 1.0);
        assert_eq!(cfg.ctrl.max_iters(), 10);
        assert_eq!(cfg.ctrl.rel_tol(), 0.01);
        assert_eq!(cfg.restarts, 10);
        assert_eq!(cfg.sampler_cfg.num_reads(), 1000);
        assert_eq!(cfg.ferromagnetic_coupling, 3.0);
    }

    #[test]
    fn flags_override_file() {
        let file = parse_config_toml("nt = 4\nnr = 5\nmethods = \"es,qa\"\nsampler = \"exact\"\n").unwrap();
        let flags = ConfigFile {
            nr: Some(3),
            ..Default::default()
        };
        let cfg = file.overlay(flags).resolve().unwrap();
        assert_eq!((cfg.params.n_t(), cfg.params.n_r()), (4, 3));
        assert_eq!(cfg.methods, vec![Method::Es, Method::QaExact]);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(parse_config_toml("bogus = 1").is_err());
        assert!(parse_config_toml("nt = -1").is_err());
        let c = ConfigFile {
            methods: Some("es,foo".into()),
            ..Default::default()
        };
        assert_eq!(c.resolve().unwrap_err(), ConfigError::UnknownMethod("foo".into()));
        let c = ConfigFile {
            nt: Some(16),
            nr: Some(16),
            methods: Some("es".into()),
            ..Default::default()
        };
        assert!(c.resolve().is_err());
        let c = ConfigFile {
            methods: Some("qa-bridge".into()),
            ..Default::default()
        };
        assert!(c.resolve().is_err());
        let c = ConfigFile {
            trials: Some(0),
            ..Default::default()
        };
        assert!(c.resolve().is_err());
    }

    #[test]
    fn power_in_db() {
        let c = ConfigFile {
            power_db: Some(10.0),
            ..Default::default()
        };
        let cfg = c.resolve().unwrap();
        assert!((cfg.params.power() - 10.0).abs() < 1e-12);
        assert_eq!(cfg.power_db, 10.0);
    }
}
