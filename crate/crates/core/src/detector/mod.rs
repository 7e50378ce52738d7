//! Covariance-based maximum-likelihood activity detection.
//!
//! The received block `Y` (D x M) has columns that behave like independent
//! CN(0, Sigma) samples with `Sigma = sigma2 I + A diag(gamma) A^H`. The
//! detector minimizes the negative log-likelihood per antenna
//!
//! ```text
//! f(gamma) = log det Sigma + tr(Sigma^-1 Sigma_hat),   gamma >= 0
//! ```
//!
//! one coordinate at a time, with closed-form steps and Sherman-Morrison
//! updates of `Sigma^-1`. Which coordinate to visit is decided by a
//! [`Policy`]: uniformly at random, cyclically, or by a Bayesian learning
//! automaton that arbitrates between a greedy pick (largest cached descent)
//! and a random one.

mod bla;
mod run;
mod state;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::codebook::Codebook;
use crate::error::{invalid_param, Error, Result};
use crate::linalg::{self, CMatrix};

pub use bla::{BlaState, Selection};
pub use run::{
    run_detection, run_detection_observed, Detection, DetectionFailure, IterationRecord,
    NoObserver, Observer, RunOptions,
};
pub use state::{
    apply_rank_one_update, cd_step, coordinate_stats, optimal_step, reward, reward_from_stats,
    CoordinateStats, SigmaState,
};

/// `Sigma_hat = Y Y^H / M`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleCovariance {
    pub sigma_hat: CMatrix,
    pub m: usize,
}

impl SampleCovariance {
    pub fn dim(&self) -> usize {
        self.sigma_hat.nrows()
    }

    /// Wraps a known covariance, e.g. the model covariance of a test instance.
    pub fn from_matrix(sigma_hat: CMatrix, m: usize) -> Self {
        let mut sigma_hat = sigma_hat;
        linalg::symmetrize_in_place(&mut sigma_hat);
        Self { sigma_hat, m }
    }
}

pub fn sample_covariance(y: &CMatrix) -> Result<SampleCovariance> {
    let m = y.ncols();
    if m == 0 {
        return Err(Error::InvalidInput("need at least one antenna sample".into()));
    }
    let mut sigma_hat = y * y.adjoint();
    sigma_hat /= Complex64::new(m as f64, 0.0);
    linalg::symmetrize_in_place(&mut sigma_hat);
    Ok(SampleCovariance { sigma_hat, m })
}

/// Nonnegative codeword activity powers.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaVector {
    pub gamma: Vec<f64>,
}

impl GammaVector {
    pub fn zeros(n: usize) -> Self {
        Self { gamma: vec![0.0; n] }
    }

    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if gamma.iter().any(|&g| !(g >= 0.0)) {
            return Err(Error::InvalidInput("activity powers must be >= 0".into()));
        }
        Ok(Self { gamma })
    }

    pub fn len(&self) -> usize {
        self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gamma.is_empty()
    }

    pub fn support(&self) -> BTreeSet<usize> {
        threshold_decide(&self.gamma, 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Policy {
    Bla,
    Random,
    Cyclic,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Bla, Policy::Random, Policy::Cyclic];

    pub fn as_str(self) -> &'static str {
        match self {
            Policy::Bla => "bla",
            Policy::Random => "random",
            Policy::Cyclic => "cyclic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "bla" => Some(Policy::Bla),
            "random" => Some(Policy::Random),
            "cyclic" => Some(Policy::Cyclic),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Iteration budget `Q`.
    pub q_total: usize,
    /// Full reward-cache refresh period.
    pub q_mod: usize,
    /// Decision threshold on `gamma_hat`, power units.
    pub zeta: f64,
    pub policy: Policy,
    /// Known noise variance.
    pub sigma2: f64,
    /// Iterations between exact recomputations of `Sigma^-1`.
    pub resync_period: usize,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            q_total: 40_000,
            q_mod: 2048,
            zeta: 0.5,
            policy: Policy::Bla,
            sigma2: 1.0,
            resync_period: 10_000,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.q_total == 0 {
            return Err(invalid_param("q_total", "must be at least 1"));
        }
        if self.q_mod == 0 {
            return Err(invalid_param("q_mod", "must be at least 1"));
        }
        if !(self.zeta >= 0.0) {
            return Err(invalid_param("zeta", format!("{} must be >= 0", self.zeta)));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(invalid_param("sigma2", format!("{} must be finite and > 0", self.sigma2)));
        }
        if self.resync_period == 0 {
            return Err(invalid_param("resync_period", "must be at least 1"));
        }
        Ok(())
    }
}

/// `Sigma = sigma2 I + A diag(gamma) A^H`, built densely.
pub fn model_covariance(gamma: &[f64], codebook: &Codebook, sigma2: f64) -> CMatrix {
    let d = codebook.dim();
    let mut sigma = CMatrix::from_diagonal_element(d, d, Complex64::new(sigma2, 0.0));
    for (i, &g) in gamma.iter().enumerate() {
        if g != 0.0 {
            let a = codebook.column(i);
            // Sigma += g a a^H
            linalg::hermitian_rank_one_sub(&mut sigma, a, -g);
        }
    }
    sigma
}

/// `f(gamma) = log det Sigma + tr(Sigma^-1 Sigma_hat)`, through a Cholesky factor.
pub fn cost(gamma: &[f64], codebook: &Codebook, sigma_hat: &SampleCovariance, sigma2: f64) -> Result<f64> {
    if gamma.len() != codebook.len() {
        return Err(Error::InvalidInput(format!(
            "gamma has {} entries for {} codewords",
            gamma.len(),
            codebook.len()
        )));
    }
    if sigma_hat.dim() != codebook.dim() {
        return Err(Error::InvalidInput("covariance and codebook dimensions differ".into()));
    }
    let sigma = model_covariance(gamma, codebook, sigma2);
    let log_det = linalg::log_det_hpd(&sigma)?;
    let inv = linalg::inverse_hpd(&sigma)?;
    let trace = trace_of_product(&inv, &sigma_hat.sigma_hat);
    let f = log_det + trace;
    if f.is_finite() {
        Ok(f)
    } else {
        Err(Error::Numerical(format!("cost evaluated to {f}")))
    }
}

/// `Re tr(a b)` for Hermitian `a`, `b`.
pub(crate) fn trace_of_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for k in 0..n {
            let x = a[(i, k)];
            let y = b[(k, i)];
            acc += x.re * y.re - x.im * y.im;
        }
    }
    acc
}

/// Indices with `gamma_hat_i > zeta`.
pub fn threshold_decide(gamma_hat: &[f64], zeta: f64) -> BTreeSet<usize> {
    gamma_hat
        .iter()
        .enumerate()
        .filter(|(_, &g)| g > zeta)
        .map(|(i, _)| i)
        .collect()
}

/// `e_gamma = ||gamma_hat - gamma||_2`.
pub fn estimation_error(gamma_hat: &[f64], gamma_true: &[f64]) -> f64 {
    assert_eq!(gamma_hat.len(), gamma_true.len(), "gamma lengths differ");
    gamma_hat
        .iter()
        .zip(gamma_true)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}
