//! JSON documents exchanged with an external sampler process.
//!
//! Request:
//!
//! ```json
//! {"n": 3, "sense": "min", "coeffs": [[0, 0, -1.0], [0, 2, 0.5]],
//!  "num_reads": 1000, "annealing_time_us": 1.0, "ferromagnetic_coupling": 3.0}
//! ```
//!
//! `coeffs` lists upper-triangle QUBO terms `(i, j, value)` with `i <= j`
//! and `energy = sum value * b_i * b_j`. An optional `"seed"` is forwarded
//! to samplers that honour one.
//!
//! Response:
//!
//! ```json
//! {"samples": [{"bits": "010", "energy": -1.0, "occurrences": 998}, ...],
//!  "timing": {"Programming time": 15762.0, "Anneal time": 1000.0}}
//! ```
//!
//! or an error document `{"error": "<code>", "detail": "..."}`.

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::{BinaryVector, QuboInstance, Sample, SampleSet, StageTimings};

/// Relative tolerance on response energies versus the instance's own
/// coefficients.
pub const RESPONSE_ENERGY_RTOL: f64 = 1e-6;

/// Largest `n` a request document may declare.
pub const MAX_EXCHANGE_VARS: usize = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExchangeError {
    #[error("document is not valid JSON: {0}")]
    Syntax(String),
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("invalid field `{field}`: {reason}")]
    InvalidField { field: String, reason: String },
    #[error("sampler reported error `{code}`: {detail}")]
    Remote { code: String, detail: String },
    #[error("sample {index}: energy {reported} disagrees with recomputed {recomputed}")]
    EnergyMismatch {
        index: usize,
        reported: f64,
        recomputed: f64,
    },
    #[error("occurrences sum to {got}, expected {expected} reads")]
    ReadCount { expected: u64, got: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeRequest {
    pub n: usize,
    pub coeffs: Vec<(usize, usize, f64)>,
    pub num_reads: u64,
    pub annealing_time_us: f64,
    pub ferromagnetic_coupling: f64,
    pub seed: Option<u64>,
}

impl ExchangeRequest {
    pub fn from_instance(
        inst: &QuboInstance,
        num_reads: u64,
        annealing_time_us: f64,
        ferromagnetic_coupling: f64,
        seed: Option<u64>,
    ) -> Self {
        Self {
            n: inst.n(),
            coeffs: inst.upper_triangle_terms(),
            num_reads,
            annealing_time_us,
            ferromagnetic_coupling,
            seed,
        }
    }

    pub fn to_instance(&self) -> Result<QuboInstance, ExchangeError> {
        QuboInstance::from_upper_triangle_terms(self.n, &self.coeffs).map_err(|e| {
            ExchangeError::InvalidField {
                field: "coeffs".into(),
                reason: e.to_string(),
            }
        })
    }

    pub fn to_value(&self) -> Value {
        let coeffs: Vec<Value> = self
            .coeffs
            .iter()
            .map(|&(i, j, v)| json!([i, j, v]))
            .collect();
        let mut doc = json!({
            "n": self.n,
            "sense": "min",
            "coeffs": coeffs,
            "num_reads": self.num_reads,
            "annealing_time_us": self.annealing_time_us,
            "ferromagnetic_coupling": self.ferromagnetic_coupling,
        });
        if let Some(seed) = self.seed {
            doc["seed"] = json!(seed);
        }
        doc
    }

    pub fn to_json(&self) -> String {
        self.to_value().to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeResponse {
    pub samples: Vec<Sample>,
    pub timing: StageTimings,
}

impl ExchangeResponse {
    pub fn from_sample_set(ss: &SampleSet) -> Self {
        Self {
            samples: ss.samples().to_vec(),
            timing: ss.timing().clone(),
        }
    }

    pub fn to_value(&self) -> Value {
        let samples: Vec<Value> = self
            .samples
            .iter()
            .map(|s| json!({"bits": s.bits.to_string(), "energy": s.energy, "occurrences": s.occurrences}))
            .collect();
        let timing: Map<String, Value> = self
            .timing
            .iter()
            .map(|(k, v)| (k.clone(), json!(v)))
            .collect();
        json!({"samples": samples, "timing": timing})
    }

    pub fn to_json(&self) -> String {
        self.to_value().to_string()
    }

    /// Validates against `inst` and the requested read count and builds a
    /// sample set. Energies must match `b^T coeffs b` within
    /// [`RESPONSE_ENERGY_RTOL`] relative (absolute floor 1e-12).
    pub fn into_sample_set(self, inst: &QuboInstance, expected_reads: u64) -> Result<SampleSet, ExchangeError> {
        let mut seen = std::collections::HashSet::new();
        for (index, s) in self.samples.iter().enumerate() {
            if s.bits.len() != inst.n() {
                return Err(ExchangeError::InvalidField {
                    field: format!("samples[{index}].bits"),
                    reason: format!("has {} bits, instance has {} variables", s.bits.len(), inst.n()),
                });
            }
            if !seen.insert(&s.bits) {
                return Err(ExchangeError::InvalidField {
                    field: format!("samples[{index}].bits"),
                    reason: "duplicate state".into(),
                });
            }
            let recomputed = inst.energy(s.bits.as_slice());
            if !energy_close(s.energy, recomputed) {
                return Err(ExchangeError::EnergyMismatch {
                    index,
                    reported: s.energy,
                    recomputed,
                });
            }
        }
        let got: u64 = self.samples.iter().map(|s| s.occurrences).sum();
        if got != expected_reads {
            return Err(ExchangeError::ReadCount {
                expected: expected_reads,
                got,
            });
        }
        Ok(SampleSet::new(self.samples, self.timing))
    }
}

pub fn energy_close(reported: f64, recomputed: f64) -> bool {
    (reported - recomputed).abs() <= RESPONSE_ENERGY_RTOL * recomputed.abs().max(1e-6)
}

pub fn error_document(code: &str, detail: &str) -> String {
    json!({"error": code, "detail": detail}).to_string()
}

fn field<'a>(obj: &'a Map<String, Value>, name: &str) -> Result<&'a Value, ExchangeError> {
    obj.get(name)
        .ok_or_else(|| ExchangeError::MissingField(name.to_string()))
}

fn invalid(field: impl Into<String>, reason: impl Into<String>) -> ExchangeError {
    ExchangeError::InvalidField {
        field: field.into(),
        reason: reason.into(),
    }
}

fn as_u64(v: &Value, name: &str) -> Result<u64, ExchangeError> {
    v.as_u64()
        .ok_or_else(|| invalid(name, "expected a non-negative integer"))
}

fn as_f64(v: &Value, name: &str) -> Result<f64, ExchangeError> {
    let x = v.as_f64().ok_or_else(|| invalid(name, "expected a number"))?;
    if !x.is_finite() {
        return Err(invalid(name, "must be finite"));
    }
    Ok(x)
}

fn parse_object(text: &str) -> Result<Map<String, Value>, ExchangeError> {
    match serde_json::from_str::<Value>(text) {
        Ok(Value::Object(obj)) => Ok(obj),
        Ok(_) => Err(invalid("<root>", "expected a JSON object")),
        Err(e) => Err(ExchangeError::Syntax(e.to_string())),
    }
}

/// Parses a request document.
pub fn parse_request(text: &str) -> Result<ExchangeRequest, ExchangeError> {
    let obj = parse_object(text)?;
    let n = as_u64(field(&obj, "n")?, "n")?;
    if n == 0 || n > MAX_EXCHANGE_VARS as u64 {
        return Err(invalid("n", format!("must lie in 1..={MAX_EXCHANGE_VARS}")));
    }
    let n = n as usize;
    match field(&obj, "sense")?.as_str() {
        Some("min") => {}
        _ => return Err(invalid("sense", "expected \"min\"")),
    }
    let raw = field(&obj, "coeffs")?
        .as_array()
        .ok_or_else(|| invalid("coeffs", "expected an array"))?;
    let mut coeffs = Vec::with_capacity(raw.len());
    for (k, term) in raw.iter().enumerate() {
        let name = format!("coeffs[{k}]");
        let t = term
            .as_array()
            .filter(|t| t.len() == 3)
            .ok_or_else(|| invalid(&name, "expected [i, j, value]"))?;
        let i = as_u64(&t[0], &name)? as usize;
        let j = as_u64(&t[1], &name)? as usize;
        if i > j || j >= n {
            return Err(invalid(&name, format!("need i <= j < n, got ({i}, {j}) with n = {n}")));
        }
        coeffs.push((i, j, as_f64(&t[2], &name)?));
    }
    let num_reads = as_u64(field(&obj, "num_reads")?, "num_reads")?;
    if num_reads == 0 {
        return Err(invalid("num_reads", "must be >= 1"));
    }
    let annealing_time_us = as_f64(field(&obj, "annealing_time_us")?, "annealing_time_us")?;
    if annealing_time_us <= 0.0 {
        return Err(invalid("annealing_time_us", "must be > 0"));
    }
    let ferromagnetic_coupling = as_f64(field(&obj, "ferromagnetic_coupling")?, "ferromagnetic_coupling")?;
    let seed = match obj.get("seed") {
        None | Some(Value::Null) => None,
        Some(v) => Some(as_u64(v, "seed")?),
    };
    Ok(ExchangeRequest {
        n,
        coeffs,
        num_reads,
        annealing_time_us,
        ferromagnetic_coupling,
        seed,
    })
}

/// Parses a response document; error documents become
/// [`ExchangeError::Remote`].
pub fn parse_response(text: &str) -> Result<ExchangeResponse, ExchangeError> {
    let obj = parse_object(text)?;
    if let Some(code) = obj.get("error") {
        let code = code
            .as_str()
            .map(str::to_string)
            .unwrap_or_else(|| code.to_string());
        let detail = obj
            .get("detail")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        return Err(ExchangeError::Remote { code, detail });
    }
    let raw = field(&obj, "samples")?
        .as_array()
        .ok_or_else(|| invalid("samples", "expected an array"))?;
    let mut samples = Vec::with_capacity(raw.len());
    for (k, s) in raw.iter().enumerate() {
        let prefix = format!("samples[{k}]");
        let s = s
            .as_object()
            .ok_or_else(|| invalid(&prefix, "expected an object"))?;
        let get = |name: &str| {
            s.get(name)
                .ok_or_else(|| ExchangeError::MissingField(format!("{prefix}.{name}")))
        };
        let bits_name = format!("{prefix}.bits");
        let bits_text = get("bits")?
            .as_str()
            .ok_or_else(|| invalid(&bits_name, "expected a 0/1 string"))?;
        let bits = BinaryVector::parse(bits_text).map_err(|e| invalid(&bits_name, e.to_string()))?;
        let energy = as_f64(get("energy")?, &format!("{prefix}.energy"))?;
        let occ_name = format!("{prefix}.occurrences");
        let occurrences = as_u64(get("occurrences")?, &occ_name)?;
        if occurrences == 0 {
            return Err(invalid(occ_name, "must be >= 1"));
        }
        samples.push(Sample {
            bits,
            energy,
            occurrences,
        });
    }
    let timing_obj = field(&obj, "timing")?
        .as_object()
        .ok_or_else(|| invalid("timing", "expected an object"))?;
    let mut timing = StageTimings::new();
    for (stage, v) in timing_obj {
        timing.insert(stage.clone(), as_f64(v, &format!("timing.{stage}"))?);
    }
    Ok(ExchangeResponse { samples, timing })
}
