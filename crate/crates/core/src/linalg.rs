//! Leading singular triplet of the channel by power iteration, and the
//! closed-form top eigenvector of a rank-1 Hermitian matrix.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::model::ChannelMatrix;

/// Fixed seed for the power-iteration start vector.
const START_SEED: u64 = 0x0b17_5eed_1f00_d5ad;

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is identically zero")]
    ZeroMatrix,
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("power iteration did not converge in {iterations} iterations (relative residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },
    #[error("invalid iteration control: {0}")]
    InvalidControl(String),
}

/// Largest squared singular value `lambda1` with unit singular vectors
/// satisfying `H v1 = sqrt(lambda1) u1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriplet {
    pub sigma1_sq: f64,
    pub u1: Vec<Complex64>,
    pub v1: Vec<Complex64>,
    pub iterations: usize,
}

pub fn norm(x: &[Complex64]) -> f64 {
    x.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

/// `<x, y> = x^H y`.
pub fn inner(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    x.iter().zip(y).map(|(a, b)| a.conj() * b).sum()
}

fn scale(x: &mut [Complex64], s: f64) {
    for v in x {
        *v *= s;
    }
}

pub fn normalize(x: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    let n = norm(x);
    if n == 0.0 || !n.is_finite() {
        return Err(LinalgError::ZeroVector);
    }
    let mut out = x.to_vec();
    scale(&mut out, 1.0 / n);
    Ok(out)
}

/// Top eigenvector of `a a^H`, which is `a / ||a||`.
pub fn rank1_top_eigvec(a: &[Complex64]) -> Result<Vec<Complex64>, LinalgError> {
    normalize(a)
}

/// Default iteration budget: `10 * max(n_t, n_r) * ceil(log10(1 / tol))`.
pub fn default_max_iter(h: &ChannelMatrix, tol: f64) -> usize {
    let digits = (1.0 / tol).log10().ceil().max(1.0) as usize;
    10 * h.n_t().max(h.n_r()) * digits
}

/// Leading triplet with the default tolerance and budget.
pub fn leading_triplet_default(h: &ChannelMatrix) -> Result<SingularTriplet, LinalgError> {
    leading_triplet(h, DEFAULT_TOL, default_max_iter(h, DEFAULT_TOL))
}

/// Power iteration on the smaller of `H^H H` and `H H^H`.
///
/// Stops once the Rayleigh quotient `mu` moves by less than `tol * mu` and
/// the eigen-residual `||A x - mu x||` is below `0.1 * sqrt(tol) * mu`; the
/// eigenvalue error is then second order in the residual. The returned pair
/// is gauge-fixed so the largest-magnitude entry of `v1` (lowest index on
/// ties) is real and positive.
pub fn leading_triplet(
    h: &ChannelMatrix,
    tol: f64,
    max_iter: usize,
) -> Result<SingularTriplet, LinalgError> {
    if !(tol > 0.0 && tol < 1.0) {
        return Err(LinalgError::InvalidControl(format!("tol must lie in (0, 1), got {tol}")));
    }
    if max_iter == 0 {
        return Err(LinalgError::InvalidControl("max_iter must be >= 1".into()));
    }
    if h.frobenius_sq() == 0.0 {
        return Err(LinalgError::ZeroMatrix);
    }

    let right_side = h.n_t() <= h.n_r();
    let dim = if right_side { h.n_t() } else { h.n_r() };
    // x -> A x with A = H^H H (right) or H H^H (left).
    let gram_apply = |x: &[Complex64]| -> Vec<Complex64> {
        if right_side {
            h.apply_adjoint(&h.apply(x))
        } else {
            h.apply(&h.apply_adjoint(x))
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let start: Vec<Complex64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    let mut x = normalize(&start)?;
    let vec_tol = 0.1 * tol.sqrt();
    let mut mu_prev = f64::NAN;
    let mut residual = f64::INFINITY;

    for it in 1..=max_iter {
        let ax = gram_apply(&x);
        let mu = inner(&x, &ax).re;
        if mu <= 0.0 {
            // Start vector annihilated by H; only possible for H = 0 in exact arithmetic.
            return Err(LinalgError::ZeroMatrix);
        }
        residual = ax
            .iter()
            .zip(&x)
            .map(|(a, v)| (a - v * mu).norm_sqr())
            .sum::<f64>()
            .sqrt()
            / mu;
        let settled = (mu - mu_prev).abs() <= tol * mu;
        if residual <= vec_tol && (settled || residual <= tol) {
            return Ok(finish_triplet(h, x, right_side, it, tol.sqrt()));
        }
        mu_prev = mu;
        x = normalize(&ax)?;
    }
    Err(LinalgError::NotConverged {
        iterations: max_iter,
        residual,
    })
}

fn finish_triplet(
    h: &ChannelMatrix,
    x: Vec<Complex64>,
    right_side: bool,
    iterations: usize,
    snap: f64,
) -> SingularTriplet {
    let (mut u1, mut v1, sigma1_sq) = if right_side {
        let hv = h.apply(&x);
        let s = norm(&hv);
        let mut u = hv;
        scale(&mut u, 1.0 / s);
        (u, x, s * s)
    } else {
        let hu = h.apply_adjoint(&x);
        let s = norm(&hu);
        let mut v = hu;
        scale(&mut v, 1.0 / s);
        (x, v, s * s)
    };
    let phase = gauge_phase(&v1);
    // Components at the level of the iteration error carry no sign
    // information; flush them so that sign rules see an exact zero.
    let flush = |t: f64| if t.abs() <= snap { 0.0 } else { t };
    for z in u1.iter_mut().chain(v1.iter_mut()) {
        *z *= phase;
        *z = Complex64::new(flush(z.re), flush(z.im));
    }
    SingularTriplet {
        sigma1_sq,
        u1,
        v1,
        iterations,
    }
}

/// Unit phase that rotates the largest-magnitude entry (first on ties) onto
/// the positive real axis.
fn gauge_phase(v: &[Complex64]) -> Complex64 {
    let mut best = 0;
    let mut best_mag = -1.0;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm_sqr();
        if m > best_mag {
            best = i;
            best_mag = m;
        }
    }
    let pivot = v[best];
    if pivot.norm() == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        pivot.conj() / pivot.norm()
    }
}
