use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::QuboError;
use crate::model::{ModelError, SpinVector};

/// Asymmetry tolerated in a Gram handed to [`build_qubo_from_gram`],
/// relative to its max-norm.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// A vector over `{0, 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct BinaryVector(Vec<u8>);

impl BinaryVector {
    pub fn new(bits: Vec<u8>) -> Result<Self, QuboError> {
        if let Some(index) = bits.iter().position(|&b| b > 1) {
            return Err(QuboError::InvalidBit { index });
        }
        Ok(Self(bits))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub(crate) fn from_raw(bits: Vec<u8>) -> Self {
        debug_assert!(bits.iter().all(|&b| b <= 1));
        Self(bits)
    }

    /// Parses a `0`/`1` string such as `"0110"`.
    pub fn parse(text: &str) -> Result<Self, QuboError> {
        text.bytes()
            .enumerate()
            .map(|(index, c)| match c {
                b'0' => Ok(0),
                b'1' => Ok(1),
                _ => Err(QuboError::InvalidBit { index }),
            })
            .collect::<Result<Vec<u8>, _>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    /// Bitwise complement; the binary image of `-f`.
    pub fn complement(&self) -> Self {
        Self(self.0.iter().map(|b| 1 - b).collect())
    }
}

impl fmt::Display for BinaryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            f.write_str(if *b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl TryFrom<String> for BinaryVector {
    type Error = QuboError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        Self::parse(&s)
    }
}

impl From<BinaryVector> for String {
    fn from(b: BinaryVector) -> Self {
        b.to_string()
    }
}

/// `b = (s + 1) / 2` elementwise.
pub fn spin_to_binary(f: &SpinVector) -> BinaryVector {
    BinaryVector(f.iter().map(|s| if s > 0 { 1 } else { 0 }).collect())
}

/// `s = 2b - 1` elementwise.
pub fn binary_to_spin(b: &BinaryVector) -> Result<SpinVector, ModelError> {
    SpinVector::new(b.0.iter().map(|&x| if x == 1 { 1 } else { -1 }).collect())
}

/// Minimization QUBO `b^T coeffs b` over `b in {0,1}^n`.
///
/// Built from a real symmetric Gram `q` so that minimizing the instance
/// maximizes `f^T q f` over spins `f = 2b - 1`. The spin objective of a
/// binary vector with energy `e` is `offset - scale * e`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuboInstance {
    coeffs: Array2<f64>,
    scale: f64,
    offset: f64,
}

/// Objective direction of an instance. Only minimization is produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    #[serde(rename = "min")]
    Minimize,
}

impl QuboInstance {
    /// Wraps an already-calibrated symmetric coefficient matrix.
    pub fn from_coeffs(coeffs: Array2<f64>) -> Result<Self, QuboError> {
        let n = coeffs.nrows();
        if n == 0 || coeffs.ncols() != n {
            return Err(QuboError::NotSquare {
                rows: coeffs.nrows(),
                cols: coeffs.ncols(),
            });
        }
        if coeffs.iter().any(|v| !v.is_finite()) {
            return Err(QuboError::NonFinite);
        }
        check_symmetric(&coeffs, 1e-12)?;
        Ok(Self {
            coeffs,
            scale: 1.0,
            offset: 0.0,
        })
    }

    pub fn n(&self) -> usize {
        self.coeffs.nrows()
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The constant `1^T q 1` dropped when moving from spins to bits.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn sense(&self) -> Sense {
        Sense::Minimize
    }

    /// Canonical energy `b^T coeffs b`, accumulated row by row as
    /// `sum_i b_i (c_ii + 2 sum_{j<i} b_j c_ij)`.
    pub fn energy(&self, b: &[u8]) -> f64 {
        debug_assert_eq!(b.len(), self.n());
        let mut e = 0.0;
        for i in 0..b.len() {
            if b[i] == 1 {
                e += self.row_term(b, i);
            }
        }
        e
    }

    #[inline]
    pub(crate) fn row_term(&self, b: &[u8], i: usize) -> f64 {
        let row = self.coeffs.row(i);
        let mut r = row[i];
        for j in 0..i {
            if b[j] == 1 {
                r += 2.0 * row[j];
            }
        }
        r
    }

    /// Spin-domain objective `f^T q f` corresponding to an energy.
    pub fn spin_objective(&self, energy: f64) -> f64 {
        self.offset - self.scale * energy
    }

    /// Upper triangle as `(i, j, value)` QUBO terms: the diagonal term is
    /// `c_ii` and off-diagonal terms carry `2 c_ij`, so that
    /// `energy = sum value * b_i * b_j`.
    pub fn upper_triangle_terms(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in i..n {
                let v = if i == j {
                    self.coeffs[[i, i]]
                } else {
                    2.0 * self.coeffs[[i, j]]
                };
                if v != 0.0 {
                    out.push((i, j, v));
                }
            }
        }
        out
    }

    /// Inverse of [`Self::upper_triangle_terms`]. Repeated keys accumulate;
    /// `(j, i)` with `j > i` is folded onto `(i, j)`.
    pub fn from_upper_triangle_terms(n: usize, terms: &[(usize, usize, f64)]) -> Result<Self, QuboError> {
        if n == 0 {
            return Err(QuboError::NotSquare { rows: 0, cols: 0 });
        }
        let mut coeffs = Array2::zeros((n, n));
        for &(a, b, v) in terms {
            if a >= n || b >= n {
                return Err(QuboError::TermOutOfRange { i: a, j: b, n });
            }
            if !v.is_finite() {
                return Err(QuboError::NonFinite);
            }
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            if i == j {
                coeffs[[i, i]] += v;
            } else {
                coeffs[[i, j]] += 0.5 * v;
                coeffs[[j, i]] = coeffs[[i, j]];
            }
        }
        Self::from_coeffs(coeffs)
    }
}

fn check_symmetric(m: &Array2<f64>, rel_tol: f64) -> Result<(), QuboError> {
    let max_abs = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = rel_tol * max_abs.max(1.0);
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let d = (m[[i, j]] - m[[j, i]]).abs();
            if d > tol {
                return Err(QuboError::NotSymmetric { i, j, diff: d });
            }
        }
    }
    Ok(())
}

/// Maps the spin maximization `max_f f^T q f` to a calibrated minimization
/// QUBO.
///
/// With `f = 2b - 1`: `f^T q f = b^T Q0 b + 1^T q 1` where
/// `Q0 = 4q - 4 diag(q 1)` (linear terms folded onto the diagonal via
/// `b_i^2 = b_i`). `Q0` is scaled by its max-norm and negated.
pub fn build_qubo_from_gram(q: &Array2<f64>) -> Result<QuboInstance, QuboError> {
    let n = q.nrows();
    if n == 0 || q.ncols() != n {
        return Err(QuboError::NotSquare {
            rows: q.nrows(),
            cols: q.ncols(),
        });
    }
    if q.iter().any(|v| !v.is_finite()) {
        return Err(QuboError::NonFinite);
    }
    check_symmetric(q, SYMMETRY_TOL)?;

    let mut q0 = Array2::zeros((n, n));
    let mut offset = 0.0;
    for i in 0..n {
        let row_sum: f64 = q.row(i).sum();
        offset += row_sum;
        for j in i..n {
            let qij = 0.5 * (q[[i, j]] + q[[j, i]]);
            let v = if i == j { 4.0 * qij - 4.0 * row_sum } else { 4.0 * qij };
            q0[[i, j]] = v;
            q0[[j, i]] = v;
        }
    }
    let max_norm = q0.iter().fold(0.0f64, |a: f64, v: &f64| a.max(v.abs()));
    let scale = if max_norm > 0.0 { max_norm } else { 1.0 };
    // `+ 0.0` keeps negated zeros out of serialized documents.
    let coeffs = q0.mapv(|v| -v / scale + 0.0);
    Ok(QuboInstance {
        coeffs,
        scale,
        offset,
    })
}
