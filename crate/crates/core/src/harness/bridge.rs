//! Client side of the external sampler protocol, plus the in-process
//! request handler behind `onebit serve-local`.
//!
//! The bridge is a subprocess that reads one request document on stdin and
//! writes one response document on stdout.

use std::io::Write;
use std::process::{Command, Stdio};
use std::sync::Mutex;

use crate::qubo::exchange::{self, ExchangeError, ExchangeRequest, ExchangeResponse};
use crate::qubo::{solve_exact, solve_sa, QuboInstance, SampleSet, Sampler, SamplerConfig, SamplerError};

/// How to launch the bridge process.
#[derive(Debug, Clone, PartialEq)]
pub struct BridgeEndpoint {
    pub program: String,
    pub args: Vec<String>,
    pub annealing_time_us: f64,
    pub ferromagnetic_coupling: f64,
}

impl BridgeEndpoint {
    /// `command[0]` is the program, the rest its arguments.
    pub fn from_command(command: &[String], annealing_time_us: f64, ferromagnetic_coupling: f64) -> Option<Self> {
        let (program, args) = command.split_first()?;
        Some(Self {
            program: program.clone(),
            args: args.to_vec(),
            annealing_time_us,
            ferromagnetic_coupling,
        })
    }
}

/// Sends `inst` to the bridge and validates the reply against the instance's
/// own coefficients and the requested read count.
pub fn bridge_client_sample(
    inst: &QuboInstance,
    cfg: &SamplerConfig,
    endpoint: &BridgeEndpoint,
) -> Result<SampleSet, SamplerError> {
    let request = ExchangeRequest::from_instance(
        inst,
        cfg.num_reads(),
        endpoint.annealing_time_us,
        endpoint.ferromagnetic_coupling,
        Some(cfg.seed()),
    )
    .to_json();

    let mut child = Command::new(&endpoint.program)
        .args(&endpoint.args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| SamplerError::Transport(format!("cannot start `{}`: {e}", endpoint.program)))?;
    let mut stdin = child.stdin.take().expect("stdin is piped");
    let writer = std::thread::spawn(move || stdin.write_all(request.as_bytes()));
    let output = child
        .wait_with_output()
        .map_err(|e| SamplerError::Transport(format!("bridge I/O failed: {e}")))?;
    // A bridge that exits without draining stdin is reported through its
    // exit status or response below.
    let _ = writer.join();

    let stdout = String::from_utf8_lossy(&output.stdout);
    if !output.status.success() {
        if let Err(remote @ ExchangeError::Remote { .. }) = exchange::parse_response(&stdout) {
            return Err(remote.into());
        }
        return Err(SamplerError::Transport(format!(
            "bridge exited with {}: {}",
            output.status,
            String::from_utf8_lossy(&output.stderr).trim()
        )));
    }
    let response = exchange::parse_response(&stdout)?;
    Ok(response.into_sample_set(inst, cfg.num_reads())?)
}

/// [`Sampler`] over a bridge process; one request in flight at a time.
#[derive(Debug)]
pub struct BridgeSampler {
    endpoint: BridgeEndpoint,
    in_flight: Mutex<()>,
}

impl BridgeSampler {
    pub fn new(endpoint: BridgeEndpoint) -> Self {
        Self {
            endpoint,
            in_flight: Mutex::new(()),
        }
    }
}

impl Sampler for BridgeSampler {
    fn name(&self) -> &str {
        "bridge"
    }

    fn sample(&self, inst: &QuboInstance, cfg: &SamplerConfig) -> Result<SampleSet, SamplerError> {
        let _guard = self.in_flight.lock().unwrap_or_else(|p| p.into_inner());
        bridge_client_sample(inst, cfg, &self.endpoint)
    }
}

/// Backend used by the local (offline) bridge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LocalBackend {
    /// Lowest `num_reads` states, one occurrence each.
    Exact,
    Sa { sweeps: usize, beta_range: (f64, f64) },
}

/// Answers one request document; failures become error documents with
/// codes `parse` (malformed request) or `sampler`.
pub fn serve_local(request: &str, backend: LocalBackend, default_seed: u64) -> Result<String, String> {
    let req = exchange::parse_request(request).map_err(|e| exchange::error_document("parse", &e.to_string()))?;
    let inst = req
        .to_instance()
        .map_err(|e| exchange::error_document("parse", &e.to_string()))?;
    let seed = req.seed.unwrap_or(default_seed);
    let ss = match backend {
        LocalBackend::Exact => {
            let keep = usize::try_from(req.num_reads).unwrap_or(usize::MAX);
            solve_exact(&inst, Some(keep)).map_err(|e| exchange::error_document("sampler", &e.to_string()))?
        }
        LocalBackend::Sa { sweeps, beta_range } => {
            let cfg = SamplerConfig::new(req.num_reads, seed, sweeps, beta_range)
                .map_err(|e| exchange::error_document("sampler", &e.to_string()))?;
            solve_sa(&inst, &cfg)
        }
    };
    Ok(ExchangeResponse::from_sample_set(&ss).to_json())
}
