use alloc::format;
use alloc::vec;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use super::{model_covariance, SampleCovariance};
use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};

const SINGULAR_DENOMINATOR: f64 = 1e-12;

/// Tracked inverse of the model covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaState {
    pub sigma_inv: CMatrix,
    pub sigma2: f64,
}

impl SigmaState {
    /// `Sigma^-1 = I / sigma2`, i.e. `gamma = 0`.
    pub fn initial(d: usize, sigma2: f64) -> Self {
        Self {
            sigma_inv: CMatrix::from_diagonal_element(d, d, Complex64::new(1.0 / sigma2, 0.0)),
            sigma2,
        }
    }

    /// Exact inverse of `sigma2 I + A diag(gamma) A^H`.
    pub fn direct(gamma: &[f64], codebook: &Codebook, sigma2: f64) -> Result<Self> {
        let sigma = model_covariance(gamma, codebook, sigma2);
        Ok(Self {
            sigma_inv: linalg::inverse_hpd(&sigma)?,
            sigma2,
        })
    }

    /// Relative Frobenius distance to the exact inverse for `gamma`.
    pub fn drift(&self, gamma: &[f64], codebook: &Codebook) -> Result<f64> {
        let exact = Self::direct(gamma, codebook, self.sigma2)?;
        Ok(linalg::relative_frobenius_error(&self.sigma_inv, &exact.sigma_inv))
    }

    pub fn dim(&self) -> usize {
        self.sigma_inv.nrows()
    }
}

/// The two quadratic forms a coordinate step needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoordinateStats {
    /// `a_i^H Sigma^-1 a_i`
    pub s: f64,
    /// `a_i^H Sigma^-1 Sigma_hat Sigma^-1 a_i`
    pub t: f64,
}

/// Computes `u = Sigma^-1 a` into `u` and returns the stats; `v` is scratch.
pub(crate) fn stats_into(
    a: &[Complex64],
    sigma_inv: &CMatrix,
    sigma_hat: &CMatrix,
    u: &mut [Complex64],
    v: &mut [Complex64],
) -> CoordinateStats {
    linalg::matvec(sigma_inv, a, u);
    linalg::matvec(sigma_hat, u, v);
    CoordinateStats {
        s: linalg::dot_conj(a, u).re,
        t: linalg::dot_conj(u, v).re,
    }
}

pub fn coordinate_stats(
    i: usize,
    state: &SigmaState,
    sigma_hat: &SampleCovariance,
    codebook: &Codebook,
) -> Result<CoordinateStats> {
    if i >= codebook.len() {
        return Err(Error::InvalidInput(format!("coordinate {i} out of range")));
    }
    if state.dim() != codebook.dim() || sigma_hat.dim() != codebook.dim() {
        return Err(Error::InvalidInput("dimension mismatch".into()));
    }
    let d = codebook.dim();
    let mut u = vec![linalg::ZERO; d];
    let mut v = vec![linalg::ZERO; d];
    Ok(stats_into(
        codebook.column(i),
        &state.sigma_inv,
        &sigma_hat.sigma_hat,
        &mut u,
        &mut v,
    ))
}

/// Minimizer of `f` along one coordinate, clipped so that `gamma_i + d >= 0`.
pub fn optimal_step(stats: CoordinateStats, gamma_i: f64) -> Result<f64> {
    let CoordinateStats { s, t } = stats;
    if !(s > 0.0) || !s.is_finite() || !t.is_finite() {
        return Err(Error::Numerical(format!(
            "a^H Sigma^-1 a = {s:e} (t = {t:e}) is not a positive finite number"
        )));
    }
    let unconstrained = (t - s) / (s * s);
    Ok(unconstrained.max(-gamma_i))
}

pub fn cd_step(
    i: usize,
    state: &SigmaState,
    sigma_hat: &SampleCovariance,
    codebook: &Codebook,
    gamma: &[f64],
) -> Result<f64> {
    let stats = coordinate_stats(i, state, sigma_hat, codebook)?;
    optimal_step(stats, gamma[i])
}

/// Decrease of `f` produced by moving coordinate `i` by `d`:
/// `d t / (1 + d s) - log(1 + d s)`.
pub fn reward_from_stats(d: f64, stats: CoordinateStats) -> f64 {
    if d == 0.0 {
        return 0.0;
    }
    let ds = d * stats.s;
    d * stats.t / (1.0 + ds) - ds.ln_1p()
}

pub fn reward(
    i: usize,
    d: f64,
    state: &SigmaState,
    sigma_hat: &SampleCovariance,
    codebook: &Codebook,
) -> Result<f64> {
    let stats = coordinate_stats(i, state, sigma_hat, codebook)?;
    if !(stats.s > 0.0) {
        return Err(Error::Numerical(format!("a^H Sigma^-1 a = {:e}", stats.s)));
    }
    Ok(reward_from_stats(d, stats))
}

/// Sherman-Morrison update of `Sigma^-1` for `gamma_i += d`.
pub fn apply_rank_one_update(
    state: &SigmaState,
    i: usize,
    d: f64,
    codebook: &Codebook,
) -> Result<SigmaState> {
    let dim = codebook.dim();
    let mut u = vec![linalg::ZERO; dim];
    linalg::matvec(&state.sigma_inv, codebook.column(i), &mut u);
    let s = linalg::dot_conj(codebook.column(i), &u).re;
    let mut next = state.clone();
    update_in_place(&mut next.sigma_inv, &u, d, s)?;
    Ok(next)
}

/// `Sigma^-1 <- Sigma^-1 - d u u^H / (1 + d s)` with `u = Sigma^-1 a`, `s = a^H u`.
pub(crate) fn update_in_place(sigma_inv: &mut CMatrix, u: &[Complex64], d: f64, s: f64) -> Result<()> {
    if d == 0.0 {
        return Ok(());
    }
    let denominator = 1.0 + d * s;
    if !(denominator > SINGULAR_DENOMINATOR) {
        return Err(Error::SingularUpdate { denominator });
    }
    linalg::hermitian_rank_one_sub(sigma_inv, u, d / denominator);
    Ok(())
}
