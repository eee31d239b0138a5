//! Classical 1-bit designs: exhaustive search, SVD sign quantization and the
//! two Rayleigh-quotient alternations (quantize every step, or quantize once
//! at the end).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, LinalgError};
use crate::model::{
    self, spin_combine_columns, spin_project, ChannelMatrix, CodingPair, ModelError, SpinVector,
    SystemParams,
};

/// Largest `n_t + n_r` the exhaustive search accepts.
pub const ES_MAX_ANTENNAS: usize = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DesignError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("exhaustive search over n_t + n_r = {antennas} antennas exceeds the limit of {limit}; use the QUBO alternating design instead")]
    TooLarge { antennas: usize, limit: usize },
    #[error("relaxed vector vanished at iteration {iteration}")]
    Degenerate { iteration: usize },
    #[error("invalid iteration control: {0}")]
    InvalidControl(String),
}

/// Relative tolerance `delta` and iteration cap `K` of the alternating designs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterControl {
    rel_tol: f64,
    max_iters: usize,
}

impl IterControl {
    pub fn new(rel_tol: f64, max_iters: usize) -> Result<Self, DesignError> {
        if !(rel_tol > 0.0 && rel_tol < 1.0) {
            return Err(DesignError::InvalidControl(format!(
                "relative tolerance must lie in (0, 1), got {rel_tol}"
            )));
        }
        if max_iters == 0 {
            return Err(DesignError::InvalidControl("K must be >= 1".into()));
        }
        Ok(Self { rel_tol, max_iters })
    }

    pub fn rel_tol(&self) -> f64 {
        self.rel_tol
    }

    pub fn max_iters(&self) -> usize {
        self.max_iters
    }

    /// `|new - old| / |old| < delta`; a zero `old` never counts as converged.
    pub fn has_converged(&self, old: f64, new: f64) -> bool {
        if old == 0.0 {
            return false;
        }
        (new - old).abs() / old.abs() < self.rel_tol
    }
}

impl Default for IterControl {
    fn default() -> Self {
        Self {
            rel_tol: 0.01,
            max_iters: 10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignResult {
    pub pair: CodingPair,
    pub iterations_used: usize,
    pub converged_by_tolerance: bool,
    /// Per-iteration SNR of the iterative designs.
    pub trace: Option<Vec<f64>>,
}

impl DesignResult {
    pub fn snr(&self) -> f64 {
        self.pair.snr
    }

    /// Best SNR seen along the trace (equals `snr()` for non-iterative designs).
    pub fn best_seen(&self) -> f64 {
        self.trace
            .as_ref()
            .and_then(|t| t.iter().copied().reduce(f64::max))
            .unwrap_or(self.pair.snr)
    }
}

/// Global maximizer of `|g^T H f|^2` over all spin pairs.
///
/// The first element of both vectors is pinned to +1 (the objective is
/// invariant under `g -> -g`, `f -> -f`), leaving `2^(n_t + n_r - 2)` pairs.
/// Candidates are scored with the same arithmetic as [`model::evaluate_snr`]
/// and the first maximizer in enumeration order wins.
pub fn exhaustive_search(params: &SystemParams, h: &ChannelMatrix) -> Result<DesignResult, DesignError> {
    h.check_shape(params)?;
    let (n_t, n_r) = (params.n_t(), params.n_r());
    if n_t + n_r > ES_MAX_ANTENNAS {
        return Err(DesignError::TooLarge {
            antennas: n_t + n_r,
            limit: ES_MAX_ANTENNAS,
        });
    }
    let f_count = 1u64 << (n_t - 1);
    let g_count = 1u64 << (n_r - 1);
    let g_all: Vec<SpinVector> = (0..g_count).map(|i| SpinVector::from_index(n_r, i, 1)).collect();

    let mut best = (-1.0f64, 0u64, 0u64);
    for fi in 0..f_count {
        let f = SpinVector::from_index(n_t, fi, 1);
        let t = spin_combine_columns(h, &f);
        for (gi, g) in g_all.iter().enumerate() {
            let gain = spin_project(&t, g).norm_sqr();
            if gain > best.0 {
                best = (gain, fi, gi as u64);
            }
        }
    }
    let f = SpinVector::from_index(n_t, best.1, 1);
    let g = SpinVector::from_index(n_r, best.2, 1);
    Ok(DesignResult {
        pair: CodingPair::evaluate(params, h, g, f)?,
        iterations_used: 1,
        converged_by_tolerance: true,
        trace: None,
    })
}

/// `f = sign(Re(v1))`, `g = sign(Re(u1))`: the spin vectors closest in MSE
/// to the optimal digital beamformers.
pub fn svd_sign_design(params: &SystemParams, h: &ChannelMatrix) -> Result<DesignResult, DesignError> {
    h.check_shape(params)?;
    let triplet = linalg::leading_triplet_default(h)?;
    let f = SpinVector::sign_of_real(&triplet.v1);
    let g = SpinVector::sign_of_real(&triplet.u1);
    Ok(DesignResult {
        pair: CodingPair::evaluate(params, h, g, f)?,
        iterations_used: 1,
        converged_by_tolerance: true,
        trace: None,
    })
}

/// Rayleigh-quotient alternation that quantizes after every half-step.
///
/// `f_r = z1(H^H g g^T H) = H^H g / ||H^H g||`, `f = sign(Re f_r)`, then the
/// mirror step for `g`. The initial SNR is taken at `(g0, 1)`. Returns the
/// last iterate, not the best one seen.
pub fn rq_design(
    params: &SystemParams,
    h: &ChannelMatrix,
    ctrl: &IterControl,
    g0: &SpinVector,
) -> Result<DesignResult, DesignError> {
    h.check_shape(params)?;
    if g0.len() != params.n_r() {
        return Err(ModelError::DimensionMismatch {
            which: "g0 (initial receive spin vector)",
            expected: params.n_r(),
            got: g0.len(),
        }
        .into());
    }
    let mut g = g0.clone();
    let mut f = SpinVector::ones(params.n_t());
    let mut rho_old = model::evaluate_snr(params, h, &g, &f)?;
    let mut trace = Vec::with_capacity(ctrl.max_iters());
    let mut converged = false;

    for k in 1..=ctrl.max_iters() {
        let f_r = linalg::rank1_top_eigvec(&h.apply_adjoint(&g.to_complex()))
            .map_err(|_| DesignError::Degenerate { iteration: k })?;
        f = SpinVector::sign_of_real(&f_r);
        let g_r = linalg::rank1_top_eigvec(&h.apply(&f.to_complex()))
            .map_err(|_| DesignError::Degenerate { iteration: k })?;
        g = SpinVector::sign_of_real(&g_r);
        let rho_new = model::evaluate_snr(params, h, &g, &f)?;
        trace.push(rho_new);
        if ctrl.has_converged(rho_old, rho_new) {
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

/// Modified alternation: the relaxed vectors are carried through the loop
/// unquantized (`f_r <- H^H g_r / ||.||`, `g_r <- H f_r / ||.||`, which is
/// power iteration on `H H^H`) and only the final pair is quantized.
///
/// The Gram `H^H g_r g_r^T H` is read with conjugate pairing
/// (`(H^H g_r)(H^H g_r)^H`). Convergence uses the SNR expression evaluated
/// on the complex vectors; the initial value is taken at
/// `(g0, 1 / sqrt(n_t))`.
pub fn rqm_design(
    params: &SystemParams,
    h: &ChannelMatrix,
    ctrl: &IterControl,
    g0: &[Complex64],
) -> Result<DesignResult, DesignError> {
    h.check_shape(params)?;
    if g0.len() != params.n_r() {
        return Err(ModelError::DimensionMismatch {
            which: "g0 (initial receive vector)",
            expected: params.n_r(),
            got: g0.len(),
        }
        .into());
    }
    let mut g_r = linalg::normalize(g0).map_err(|_| DesignError::Degenerate { iteration: 0 })?;
    let f_init = Complex64::new(1.0 / (params.n_t() as f64).sqrt(), 0.0);
    let mut f_r = vec![f_init; params.n_t()];
    let mut rho_old = model::evaluate_snr_relaxed(params, h, &g_r, &f_r)?;
    let mut relaxed_trace = Vec::with_capacity(ctrl.max_iters());
    let mut converged = false;

    for k in 1..=ctrl.max_iters() {
        f_r = linalg::rank1_top_eigvec(&h.apply_adjoint(&g_r))
            .map_err(|_| DesignError::Degenerate { iteration: k })?;
        g_r = linalg::rank1_top_eigvec(&h.apply(&f_r))
            .map_err(|_| DesignError::Degenerate { iteration: k })?;
        let rho_new = model::evaluate_snr_relaxed(params, h, &g_r, &f_r)?;
        relaxed_trace.push(rho_new);
        if ctrl.has_converged(rho_old, rho_new) {
            converged = true;
            break;
        }
        rho_old = rho_new;
    }
    let f = SpinVector::sign_of_real(&f_r);
    let g = SpinVector::sign_of_real(&g_r);
    Ok(DesignResult {
        pair: CodingPair::evaluate(params, h, g, f)?,
        iterations_used: relaxed_trace.len(),
        converged_by_tolerance: converged,
        trace: Some(relaxed_trace),
    })
}

/// Relaxed vectors after running the modified alternation; exposed for
/// inspecting its power-iteration behaviour.
pub fn rqm_relaxed_vectors(
    h: &ChannelMatrix,
    iterations: usize,
    g0: &[Complex64],
) -> Result<(Vec<Complex64>, Vec<Complex64>), DesignError> {
    let mut g_r = linalg::normalize(g0).map_err(|_| DesignError::Degenerate { iteration: 0 })?;
    let mut f_r = Vec::new();
    for k in 1..=iterations {
        f_r = linalg::rank1_top_eigvec(&h.apply_adjoint(&g_r))
            .map_err(|_| DesignError::Degenerate { iteration: k })?;
        g_r = linalg::rank1_top_eigvec(&h.apply(&f_r))
            .map_err(|_| DesignError::Degenerate { iteration: k })?;
    }
    Ok((g_r, f_r))
}

/// Deterministic unit-norm complex start vector for [`rqm_design`].
pub fn seeded_unit_vector(n: usize, seed: u64) -> Vec<Complex64> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<Complex64> = (0..n)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im)
        })
        .collect();
    linalg::normalize(&v).unwrap_or_else(|_| {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[0] = Complex64::new(1.0, 0.0);
        e
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_channel;

    fn unit(n_t: usize, n_r: usize) -> SystemParams {
        SystemParams::new(n_t, n_r, 1.0, 1.0).unwrap()
    }

    #[test]
    fn es_scalar_channel() {
        let p = SystemParams::new(1, 1, 2.0, 0.5).unwrap();
        let h = ChannelMatrix::from_rows(&[vec![Complex64::new(0.3, -1.2)]]).unwrap();
        let r = exhaustive_search(&p, &h).unwrap();
        let expect = 2.0 * (0.3f64 * 0.3 + 1.2 * 1.2) / 0.5;
        assert!((r.snr() - expect).abs() < 1e-12);
    }

    #[test]
    fn es_identity_channel() {
        let h = ChannelMatrix::from_real_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = exhaustive_search(&unit(2, 2), &h).unwrap();
        assert_eq!(r.snr(), 1.0);
        assert_eq!(r.pair.f.as_slice(), &[1, 1]);
        assert_eq!(r.pair.g.as_slice(), &[1, 1]);
    }

    #[test]
    fn es_size_guard() {
        let p = unit(16, 15);
        let h = generate_channel(&p, 0);
        assert!(matches!(
            exhaustive_search(&p, &h),
            Err(DesignError::TooLarge { antennas: 31, .. })
        ));
    }

    #[test]
    fn svd_sign_positive_diagonal_uses_zero_rule() {
        let h = ChannelMatrix::from_real_rows(&[
            vec![3.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let r = svd_sign_design(&unit(3, 3), &h).unwrap();
        assert_eq!(r.pair.f.as_slice(), &[1, 1, 1]);
        assert_eq!(r.pair.g.as_slice(), &[1, 1, 1]);
    }

    #[test]
    fn sign_of_real_part() {
        let v1 = [Complex64::new(0.9, 0.0), Complex64::new(-0.1, 0.2)];
        assert_eq!(SpinVector::sign_of_real(&v1).as_slice(), &[1, -1]);
    }

    #[test]
    fn rq_scalar_converges_in_one_iteration() {
        let p = SystemParams::new(1, 1, 3.0, 1.5).unwrap();
        let h = ChannelMatrix::from_real_rows(&[vec![1.0]]).unwrap();
        let r = rq_design(&p, &h, &IterControl::default(), &SpinVector::ones(1)).unwrap();
        assert_eq!(r.iterations_used, 1);
        assert!(r.converged_by_tolerance);
        assert!((r.snr() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rq_positive_matrix_fixed_point() {
        let h = ChannelMatrix::from_real_rows(&[vec![0.5, 1.0, 2.0], vec![1.5, 0.2, 0.7]]).unwrap();
        let r = rq_design(&unit(3, 2), &h, &IterControl::default(), &SpinVector::ones(2)).unwrap();
        assert_eq!(r.iterations_used, 1);
        assert_eq!(r.pair.f.as_slice(), &[1, 1, 1]);
        assert_eq!(r.pair.g.as_slice(), &[1, 1]);
    }

    #[test]
    fn rq_degenerate_start_is_reported() {
        // Columns cancel for g = (+1, +1): H^H g = 0.
        let h = ChannelMatrix::from_real_rows(&[vec![1.0, 2.0], vec![-1.0, -2.0]]).unwrap();
        let err = rq_design(&unit(2, 2), &h, &IterControl::default(), &SpinVector::ones(2)).unwrap_err();
        assert_eq!(err, DesignError::Degenerate { iteration: 1 });
    }

    #[test]
    fn rqm_diagonal_fixed_point() {
        let h = ChannelMatrix::from_real_rows(&[vec![2.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let e1 = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let (g_r, f_r) = rqm_relaxed_vectors(&h, 1, &e1).unwrap();
        assert_eq!(g_r, e1.to_vec());
        assert_eq!(f_r, e1.to_vec());
        let r = rqm_design(&unit(2, 2), &h, &IterControl::default(), &e1).unwrap();
        assert_eq!(r.pair.f.as_slice(), &[1, 1]);
        assert_eq!(r.pair.g.as_slice(), &[1, 1]);
    }

    #[test]
    fn rqm_zero_start_rejected() {
        let h = ChannelMatrix::from_real_rows(&[vec![1.0]]).unwrap();
        let err = rqm_design(&unit(1, 1), &h, &IterControl::default(), &[Complex64::new(0.0, 0.0)]);
        assert_eq!(err.unwrap_err(), DesignError::Degenerate { iteration: 0 });
    }

    #[test]
    fn iter_control_validation() {
        assert!(IterControl::new(0.0, 10).is_err());
        assert!(IterControl::new(1.0, 10).is_err());
        assert!(IterControl::new(0.01, 0).is_err());
        let c = IterControl::new(0.01, 10).unwrap();
        assert!(!c.has_converged(0.0, 0.0));
        assert!(c.has_converged(1.0, 1.005));
        assert!(!c.has_converged(1.0, 1.02));
    }

    #[test]
    fn trace_length_matches_iterations() {
        let p = unit(6, 5);
        for seed in 0..20 {
            let h = generate_channel(&p, seed);
            let ctrl = IterControl::new(1e-6, 7).unwrap();
            let r = rq_design(&p, &h, &ctrl, &SpinVector::ones(5)).unwrap();
            assert_eq!(r.trace.as_ref().unwrap().len(), r.iterations_used);
            assert!(r.iterations_used <= 7);
            let r = rqm_design(&p, &h, &ctrl, &seeded_unit_vector(5, seed)).unwrap();
            assert_eq!(r.trace.as_ref().unwrap().len(), r.iterations_used);
        }
    }
}
