use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::Rng;

use super::bla::BlaState;
use super::state::{optimal_step, reward_from_stats, stats_into, update_in_place, CoordinateStats, SigmaState};
use super::{model_covariance, trace_of_product, DetectorConfig, GammaVector, Policy, SampleCovariance};
use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::linalg;

/// One coordinate-descent iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration counter.
    pub iteration: usize,
    pub coordinate: usize,
    pub step: f64,
    pub reward: f64,
    /// Cost after the step.
    pub cost: f64,
    /// `||gamma - gamma_true||_2` after the step, when the truth is known.
    pub e_gamma: Option<f64>,
}

/// Hook called after every iteration with the updated state.
pub trait Observer {
    fn observe(&mut self, record: &IterationRecord, gamma: &[f64], state: &SigmaState);
}

pub struct NoObserver;

impl Observer for NoObserver {
    fn observe(&mut self, _: &IterationRecord, _: &[f64], _: &SigmaState) {}
}

impl<F: FnMut(&IterationRecord, &[f64], &SigmaState)> Observer for F {
    fn observe(&mut self, record: &IterationRecord, gamma: &[f64], state: &SigmaState) {
        self(record, gamma, state)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions<'a> {
    pub record_trace: bool,
    pub gamma_true: Option<&'a [f64]>,
}

#[derive(Debug, Clone)]
pub struct Detection {
    pub gamma: GammaVector,
    pub trace: Vec<IterationRecord>,
    /// Exact cost at the returned `gamma`.
    pub final_cost: f64,
    /// Largest relative Frobenius drift of the tracked inverse seen at a resync.
    pub max_resync_drift: f64,
    pub state: SigmaState,
}

/// A detection that stopped on a numerical failure, with its progress so far.
#[derive(Debug, Clone)]
pub struct DetectionFailure {
    pub error: Error,
    pub gamma: GammaVector,
    pub trace: Vec<IterationRecord>,
}

impl From<Error> for DetectionFailure {
    fn from(error: Error) -> Self {
        Self {
            error,
            gamma: GammaVector::zeros(0),
            trace: Vec::new(),
        }
    }
}

pub fn run_detection<R: Rng + ?Sized>(
    sigma_hat: &SampleCovariance,
    codebook: &Codebook,
    config: &DetectorConfig,
    rng: &mut R,
    options: RunOptions<'_>,
) -> core::result::Result<Detection, DetectionFailure> {
    run_detection_observed(sigma_hat, codebook, config, rng, options, &mut NoObserver)
}

/// Coordinate descent on the ML cost, `config.q_total` iterations.
///
/// Starts from `gamma = 0`, `Sigma^-1 = I / sigma2` and flat automaton priors.
/// Under [`Policy::Bla`] the reward cache is fully refreshed on iterations
/// `1, 1 + q_mod, 1 + 2 q_mod, ...`; in between only the visited coordinate's
/// entry changes, to the reward its next optimal step would earn. The tracked
/// inverse is recomputed exactly every `resync_period` iterations and once at
/// the end.
pub fn run_detection_observed<R: Rng + ?Sized, O: Observer + ?Sized>(
    sigma_hat: &SampleCovariance,
    codebook: &Codebook,
    config: &DetectorConfig,
    rng: &mut R,
    options: RunOptions<'_>,
    observer: &mut O,
) -> core::result::Result<Detection, DetectionFailure> {
    config.validate()?;
    let n = codebook.len();
    let dim = codebook.dim();
    if sigma_hat.dim() != dim {
        return Err(Error::InvalidInput(format!(
            "covariance is {}x{}, codebook dimension is {dim}",
            sigma_hat.dim(),
            sigma_hat.dim()
        ))
        .into());
    }
    if let Some(truth) = options.gamma_true {
        if truth.len() != n {
            return Err(Error::InvalidInput("gamma_true length differs from codebook".into()).into());
        }
    }

    let sigma2 = config.sigma2;
    let mut state = SigmaState::initial(dim, sigma2);
    let mut gamma = vec![0.0; n];
    let mut bla = BlaState::new(n);
    let trace_sigma_hat: f64 = (0..dim).map(|i| sigma_hat.sigma_hat[(i, i)].re).sum();
    let mut f = dim as f64 * sigma2.ln() + trace_sigma_hat / sigma2;
    let mut err2 = options.gamma_true.map(|t| t.iter().map(|x| x * x).sum::<f64>());
    let mut trace = Vec::with_capacity(if options.record_trace { config.q_total } else { 0 });
    let mut max_drift: f64 = 0.0;
    let mut u = vec![linalg::ZERO; dim];
    let mut v = vec![linalg::ZERO; dim];

    let fail = |error: Error, gamma: &[f64], trace: Vec<IterationRecord>| DetectionFailure {
        error,
        gamma: GammaVector { gamma: gamma.to_vec() },
        trace,
    };

    for q in 1..=config.q_total {
        if config.policy == Policy::Bla && (q - 1) % config.q_mod == 0 {
            // s_i = a^H Sigma^-1 a and t_i = a^H B a with B = Sigma^-1 Sigma_hat Sigma^-1
            let mut b = &state.sigma_inv * &sigma_hat.sigma_hat * &state.sigma_inv;
            linalg::symmetrize_in_place(&mut b);
            for (i, psi) in bla.psi.iter_mut().enumerate() {
                let (s, t) = linalg::hermitian_quad_forms(&state.sigma_inv, &b, codebook.column(i));
                let stats = CoordinateStats { s, t };
                match optimal_step(stats, gamma[i]) {
                    Ok(d) => *psi = reward_from_stats(d, stats),
                    Err(e) => return Err(fail(e, &gamma, trace)),
                }
            }
        }

        let i = match config.policy {
            Policy::Bla => bla.select(rng).coordinate,
            Policy::Random => rng.random_range(0..n),
            Policy::Cyclic => (q - 1) % n,
        };

        let stats = stats_into(codebook.column(i), &state.sigma_inv, &sigma_hat.sigma_hat, &mut u, &mut v);
        let step = match optimal_step(stats, gamma[i]) {
            Ok(d) => d,
            Err(e) => return Err(fail(e, &gamma, trace)),
        };
        let reward = reward_from_stats(step, stats);
        if let Err(e) = update_in_place(&mut state.sigma_inv, &u, step, stats.s) {
            return Err(fail(e, &gamma, trace));
        }
        let old = gamma[i];
        gamma[i] = (old + step).max(0.0);
        f -= reward;
        if let (Some(truth), Some(e2)) = (options.gamma_true, err2.as_mut()) {
            let t = truth[i];
            *e2 += (gamma[i] - t).powi(2) - (old - t).powi(2);
        }

        if config.policy == Policy::Bla {
            // after the update: u <- u / (1 + d s), so s and t rescale in closed form
            let scale = 1.0 / (1.0 + step * stats.s);
            let next = CoordinateStats {
                s: stats.s * scale,
                t: stats.t * scale * scale,
            };
            bla.psi[i] = match optimal_step(next, gamma[i]) {
                Ok(d) => reward_from_stats(d, next),
                Err(e) => return Err(fail(e, &gamma, trace)),
            };
        }

        if q % config.resync_period == 0 || q == config.q_total {
            match resync(&gamma, codebook, sigma_hat, sigma2) {
                Ok((exact, exact_f)) => {
                    max_drift = max_drift.max(linalg::relative_frobenius_error(&state.sigma_inv, &exact.sigma_inv));
                    state = exact;
                    f = exact_f;
                }
                Err(e) => return Err(fail(e, &gamma, trace)),
            }
            if let (Some(truth), Some(e2)) = (options.gamma_true, err2.as_mut()) {
                *e2 = gamma.iter().zip(truth).map(|(a, b)| (a - b) * (a - b)).sum();
            }
        }

        let record = IterationRecord {
            iteration: q,
            coordinate: i,
            step,
            reward,
            cost: f,
            e_gamma: err2.map(|e2| e2.max(0.0).sqrt()),
        };
        observer.observe(&record, &gamma, &state);
        if options.record_trace {
            trace.push(record);
        }
    }

    Ok(Detection {
        gamma: GammaVector { gamma },
        trace,
        final_cost: f,
        max_resync_drift: max_drift,
        state,
    })
}

/// Exact `Sigma^-1` and cost from one Cholesky factorization.
fn resync(
    gamma: &[f64],
    codebook: &Codebook,
    sigma_hat: &SampleCovariance,
    sigma2: f64,
) -> Result<(SigmaState, f64)> {
    let sigma = model_covariance(gamma, codebook, sigma2);
    let chol = linalg::cholesky_hpd(&sigma)?;
    let l = chol.l_dirty();
    let log_det: f64 = 2.0 * (0..l.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>();
    let mut inv = chol.inverse();
    linalg::symmetrize_in_place(&mut inv);
    let f = log_det + trace_of_product(&inv, &sigma_hat.sigma_hat);
    if !f.is_finite() {
        return Err(Error::Numerical(format!("cost evaluated to {f}")));
    }
    Ok((SigmaState { sigma_inv: inv, sigma2 }, f))
}
