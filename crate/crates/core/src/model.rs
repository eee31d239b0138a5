//! MIMO system abstractions: system parameters, the channel matrix, spin
//! vectors and the received-SNR objective.
//!
//! The SNR of a spin pair `(g, f)` is
//!
//! ```text
//! rho(g, f) = P |g^T H f|^2 / (n_t n_r sigma^2)
//! ```
//!
//! where `g^T` is a plain transpose. `g` is real so this equals `g^H`; do not
//! "fix" it to a conjugate transpose.

use std::fmt;
use std::ops::Neg;

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid system parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },
    #[error("{which} has length {got}, expected {expected}")]
    DimensionMismatch {
        which: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("spin vector entry {index} is {value}, expected -1 or +1")]
    InvalidSpin { index: usize, value: i64 },
    #[error("spin vector must not be empty")]
    EmptySpin,
    #[error("channel entry ({row}, {col}) is not finite")]
    NonFiniteChannel { row: usize, col: usize },
    #[error("channel is {rows}x{cols}, expected {expected_rows}x{expected_cols}")]
    ChannelShape {
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("malformed channel document: {0}")]
    ChannelDocument(String),
}

/// Antenna counts, transmit power (linear) and noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    n_t: usize,
    n_r: usize,
    power: f64,
    noise_var: f64,
}

impl SystemParams {
    pub fn new(n_t: usize, n_r: usize, power: f64, noise_var: f64) -> Result<Self, ModelError> {
        if n_t == 0 {
            return Err(ModelError::InvalidParam {
                name: "n_t",
                reason: "must be at least 1".into(),
            });
        }
        if n_r == 0 {
            return Err(ModelError::InvalidParam {
                name: "n_r",
                reason: "must be at least 1".into(),
            });
        }
        if !(power.is_finite() && power > 0.0) {
            return Err(ModelError::InvalidParam {
                name: "power",
                reason: format!("must be finite and > 0, got {power}"),
            });
        }
        if !(noise_var.is_finite() && noise_var > 0.0) {
            return Err(ModelError::InvalidParam {
                name: "noise_var",
                reason: format!("must be finite and > 0, got {noise_var}"),
            });
        }
        Ok(Self {
            n_t,
            n_r,
            power,
            noise_var,
        })
    }

    /// Builds parameters from a transmit power given in dB.
    pub fn with_power_db(
        n_t: usize,
        n_r: usize,
        power_db: f64,
        noise_var: f64,
    ) -> Result<Self, ModelError> {
        Self::new(n_t, n_r, db_to_linear(power_db), noise_var)
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Factor mapping `|g^T H f|^2` to SNR: `P / (n_t n_r sigma^2)`.
    pub fn snr_scale(&self) -> f64 {
        self.power / (self.n_t as f64 * self.n_r as f64 * self.noise_var)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Complex `n_r x n_t` channel matrix; entry `(i, j)` couples transmit
/// antenna `j` to receive antenna `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix {
    entries: Array2<Complex64>,
    seed: Option<u64>,
}

impl ChannelMatrix {
    pub fn new(entries: Array2<Complex64>) -> Result<Self, ModelError> {
        for ((row, col), h) in entries.indexed_iter() {
            if !(h.re.is_finite() && h.im.is_finite()) {
                return Err(ModelError::NonFiniteChannel { row, col });
            }
        }
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(ModelError::ChannelShape {
                rows: entries.nrows(),
                cols: entries.ncols(),
                expected_rows: entries.nrows().max(1),
                expected_cols: entries.ncols().max(1),
            });
        }
        Ok(Self {
            entries,
            seed: None,
        })
    }

    /// Row-major construction, mostly for tests and small literals.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self, ModelError> {
        let n_r = rows.len();
        let n_t = rows.first().map_or(0, Vec::len);
        let mut flat = Vec::with_capacity(n_r * n_t);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_t {
                return Err(ModelError::ChannelShape {
                    rows: i,
                    cols: row.len(),
                    expected_rows: n_r,
                    expected_cols: n_t,
                });
            }
            flat.extend_from_slice(row);
        }
        let entries = Array2::from_shape_vec((n_r, n_t), flat).map_err(|e| {
            ModelError::ChannelDocument(format!("cannot shape channel entries: {e}"))
        })?;
        Self::new(entries)
    }

    /// Real-valued convenience constructor.
    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self, ModelError> {
        let rows: Vec<Vec<Complex64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn entries(&self) -> &Array2<Complex64> {
        &self.entries
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn n_r(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n_t(&self) -> usize {
        self.entries.ncols()
    }

    pub fn check_shape(&self, params: &SystemParams) -> Result<(), ModelError> {
        if self.n_r() != params.n_r() || self.n_t() != params.n_t() {
            return Err(ModelError::ChannelShape {
                rows: self.n_r(),
                cols: self.n_t(),
                expected_rows: params.n_r(),
                expected_cols: params.n_t(),
            });
        }
        Ok(())
    }

    /// Squared Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        self.entries.iter().map(Complex64::norm_sqr).sum()
    }

    /// `H x` for a complex vector `x` of length `n_t`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.n_t());
        self.entries
            .rows()
            .into_iter()
            .map(|row| row.iter().zip(x).map(|(h, v)| h * v).sum())
            .collect()
    }

    /// `H^H y` for a complex vector `y` of length `n_r`.
    pub fn apply_adjoint(&self, y: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(y.len(), self.n_r());
        self.entries
            .columns()
            .into_iter()
            .map(|col| col.iter().zip(y).map(|(h, v)| h.conj() * v).sum())
            .collect()
    }

    /// Serializes to the channel document consumed by `gen-channel` readers.
    pub fn to_document(&self) -> ChannelDocument {
        ChannelDocument {
            n_r: self.n_r(),
            n_t: self.n_t(),
            seed: self.seed,
            distribution: "CN(0,1)".to_string(),
            entries: self.entries.iter().map(|h| [h.re, h.im]).collect(),
        }
    }

    /// Parses a channel document (JSON) produced by `gen-channel`.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let doc: ChannelDocument =
            serde_json::from_str(text).map_err(|e| ModelError::ChannelDocument(e.to_string()))?;
        Self::from_document(doc)
    }

    pub fn from_document(doc: ChannelDocument) -> Result<Self, ModelError> {
        let expected = doc
            .n_r
            .checked_mul(doc.n_t)
            .ok_or_else(|| ModelError::ChannelDocument("n_r * n_t overflows".into()))?;
        if expected == 0 {
            return Err(ModelError::ChannelDocument("n_r and n_t must be >= 1".into()));
        }
        if doc.entries.len() != expected {
            return Err(ModelError::ChannelDocument(format!(
                "expected {expected} entries for a {}x{} channel, got {}",
                doc.n_r,
                doc.n_t,
                doc.entries.len()
            )));
        }
        let flat = doc
            .entries
            .iter()
            .map(|[re, im]| Complex64::new(*re, *im))
            .collect();
        let entries = Array2::from_shape_vec((doc.n_r, doc.n_t), flat)
            .map_err(|e| ModelError::ChannelDocument(e.to_string()))?;
        let h = Self::new(entries)?;
        Ok(match doc.seed {
            Some(s) => h.with_seed(s),
            None => h,
        })
    }
}

/// On-disk channel representation: row-major `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDocument {
    pub n_r: usize,
    pub n_t: usize,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_distribution")]
    pub distribution: String,
    pub entries: Vec<[f64; 2]>,
}

fn default_distribution() -> String {
    "CN(0,1)".to_string()
}

/// Draws an i.i.d. `CN(0, 1)` Rayleigh channel. Each call seeds its own
/// generator so that channel `i` of a campaign depends only on its seed.
pub fn generate_channel(params: &SystemParams, seed: u64) -> ChannelMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let std = std::f64::consts::FRAC_1_SQRT_2;
    let entries = Array2::from_shape_simple_fn((params.n_r(), params.n_t()), || {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(std * re, std * im)
    });
    ChannelMatrix {
        entries,
        seed: Some(seed),
    }
}

/// A vector over `{-1, +1}`, stored as `i8`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinVector(Vec<i8>);

impl SpinVector {
    pub fn new(spins: Vec<i8>) -> Result<Self, ModelError> {
        if spins.is_empty() {
            return Err(ModelError::EmptySpin);
        }
        if let Some((index, &value)) = spins.iter().enumerate().find(|(_, &s)| s != 1 && s != -1) {
            return Err(ModelError::InvalidSpin {
                index,
                value: value.into(),
            });
        }
        Ok(Self(spins))
    }

    pub fn ones(n: usize) -> Self {
        assert!(n > 0, "spin vector length must be >= 1");
        Self(vec![1; n])
    }

    /// Elementwise sign with `sign(0) = +1`.
    pub fn sign_of(values: impl IntoIterator<Item = f64>) -> Self {
        let spins: Vec<i8> = values
            .into_iter()
            .map(|x| if x < 0.0 { -1 } else { 1 })
            .collect();
        assert!(!spins.is_empty(), "spin vector length must be >= 1");
        Self(spins)
    }

    /// `sign(Re(z))` elementwise.
    pub fn sign_of_real(z: &[Complex64]) -> Self {
        Self::sign_of(z.iter().map(|c| c.re))
    }

    /// Spin vector whose bit `k` of `index` sets element `k + offset` to -1;
    /// elements below `offset` stay at +1.
    pub fn from_index(n: usize, index: u64, offset: usize) -> Self {
        let spins = (0..n)
            .map(|k| {
                if k >= offset && (index >> (k - offset)) & 1 == 1 {
                    -1
                } else {
                    1
                }
            })
            .collect();
        Self(spins)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = i8> + '_ {
        self.0.iter().copied()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| f64::from(s)).collect()
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.0
            .iter()
            .map(|&s| Complex64::new(f64::from(s), 0.0))
            .collect()
    }

    /// Flips the global sign so the first entry is +1.
    pub fn canonical(&self) -> Self {
        if self.0[0] < 0 {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Neg for SpinVector {
    type Output = SpinVector;

    fn neg(self) -> SpinVector {
        SpinVector(self.0.into_iter().map(|s| -s).collect())
    }
}

impl TryFrom<Vec<i8>> for SpinVector {
    type Error = ModelError;

    fn try_from(v: Vec<i8>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<SpinVector> for Vec<i8> {
    fn from(s: SpinVector) -> Self {
        s.0
    }
}

impl fmt::Display for SpinVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.0 {
            f.write_str(if *s > 0 { "+" } else { "-" })?;
        }
        Ok(())
    }
}

/// A `(g, f)` pair together with the SNR it achieves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodingPair {
    pub g: SpinVector,
    pub f: SpinVector,
    pub snr: f64,
}

impl CodingPair {
    pub fn evaluate(
        params: &SystemParams,
        h: &ChannelMatrix,
        g: SpinVector,
        f: SpinVector,
    ) -> Result<Self, ModelError> {
        let snr = evaluate_snr(params, h, &g, &f)?;
        Ok(Self { g, f, snr })
    }
}

/// `t = H f` with spin `f`, accumulated column by column in index order.
/// Multiplication by +-1 is exact, so `H(-f) = -(H f)` bitwise.
pub(crate) fn spin_combine_columns(h: &ChannelMatrix, f: &SpinVector) -> Vec<Complex64> {
    h.entries()
        .rows()
        .into_iter()
        .map(|row| spin_dot(row, f.as_slice()))
        .collect()
}

/// `sum_k s_k x_k` for complex `x` and spins `s`, in index order.
pub(crate) fn spin_dot(x: ArrayView1<'_, Complex64>, spins: &[i8]) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for (v, &s) in x.iter().zip(spins) {
        if s > 0 {
            acc += v;
        } else {
            acc -= v;
        }
    }
    acc
}

/// `g^T t` where `t = H f` was produced by [`spin_combine_columns`].
pub(crate) fn spin_project(t: &[Complex64], g: &SpinVector) -> Complex64 {
    spin_dot(ArrayView1::from(t), g.as_slice())
}

fn check_pair(h: &ChannelMatrix, g: &SpinVector, f: &SpinVector) -> Result<(), ModelError> {
    if g.len() != h.n_r() {
        return Err(ModelError::DimensionMismatch {
            which: "g (receive spin vector)",
            expected: h.n_r(),
            got: g.len(),
        });
    }
    if f.len() != h.n_t() {
        return Err(ModelError::DimensionMismatch {
            which: "f (transmit spin vector)",
            expected: h.n_t(),
            got: f.len(),
        });
    }
    Ok(())
}

/// `|g^T H f|^2`.
pub fn coupling_gain(h: &ChannelMatrix, g: &SpinVector, f: &SpinVector) -> Result<f64, ModelError> {
    check_pair(h, g, f)?;
    Ok(spin_project(&spin_combine_columns(h, f), g).norm_sqr())
}

/// Received SNR of the spin pair `(g, f)`.
pub fn evaluate_snr(
    params: &SystemParams,
    h: &ChannelMatrix,
    g: &SpinVector,
    f: &SpinVector,
) -> Result<f64, ModelError> {
    h.check_shape(params)?;
    Ok(params.snr_scale() * coupling_gain(h, g, f)?)
}

/// The SNR expression evaluated verbatim on complex vectors, plain
/// transpose included: `P |g^T H f|^2 / (n_t n_r sigma^2)`.
pub fn evaluate_snr_relaxed(
    params: &SystemParams,
    h: &ChannelMatrix,
    g: &[Complex64],
    f: &[Complex64],
) -> Result<f64, ModelError> {
    h.check_shape(params)?;
    if g.len() != h.n_r() {
        return Err(ModelError::DimensionMismatch {
            which: "g (receive vector)",
            expected: h.n_r(),
            got: g.len(),
        });
    }
    if f.len() != h.n_t() {
        return Err(ModelError::DimensionMismatch {
            which: "f (transmit vector)",
            expected: h.n_t(),
            got: f.len(),
        });
    }
    let hf = h.apply(f);
    let s: Complex64 = g.iter().zip(&hf).map(|(a, b)| a * b).sum();
    Ok(params.snr_scale() * s.norm_sqr())
}

/// `Re(H^H g g^T H)`, the `n_t x n_t` Gram whose quadratic form in `f` is
/// `|g^T H f|^2`.
pub fn objective_gram_f(h: &ChannelMatrix, g: &SpinVector) -> Result<Array2<f64>, ModelError> {
    if g.len() != h.n_r() {
        return Err(ModelError::DimensionMismatch {
            which: "g (receive spin vector)",
            expected: h.n_r(),
            got: g.len(),
        });
    }
    // a = H^T g, so H^H g g^T H = conj(a) a^T.
    let a: Vec<Complex64> = h
        .entries()
        .columns()
        .into_iter()
        .map(|col| spin_dot(col, g.as_slice()))
        .collect();
    Ok(real_outer(&a))
}

/// `Re(H f f^T H^H)`, the `n_r x n_r` Gram whose quadratic form in `g` is
/// `|g^T H f|^2`.
pub fn objective_gram_g(h: &ChannelMatrix, f: &SpinVector) -> Result<Array2<f64>, ModelError> {
    if f.len() != h.n_t() {
        return Err(ModelError::DimensionMismatch {
            which: "f (transmit spin vector)",
            expected: h.n_t(),
            got: f.len(),
        });
    }
    Ok(real_outer(&spin_combine_columns(h, f)))
}

/// `Re(c c^H)` (equivalently `Re(conj(c) c^T)`), exactly symmetric.
fn real_outer(c: &[Complex64]) -> Array2<f64> {
    let n = c.len();
    let mut m = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = c[i].re * c[j].re + c[i].im * c[j].im;
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    m
}
