//! End-to-end Monte Carlo harness.
//!
//! A trial draws `K_a` active users out of `K_tot`, gives each a uniform
//! `W`-bit message, tree-encodes it and sends chunk `s` in slot `s` as a
//! codeword of the common codebook. Every slot sees fresh channel draws
//! (block fading). The receiver runs activity detection per slot, thresholds
//! the estimated powers into chunk lists, tree-decodes the lists and the trial
//! is scored with the per-user misdetection and false-alarm rates.
//!
//! All randomness flows from [`SeedTree`] streams keyed by trial, slot and user
//! index, never by SNR, so sweeps use common random numbers across the grid.

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use num_complex::Complex64;
#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;
use rand::seq::index;
use rand::Rng;

use crate::channel::{self, ChannelMode, ChannelParams, ChannelSpec};
use crate::codebook::{generate_codebook, Codebook};
use crate::detector::{
    run_detection, sample_covariance, threshold_decide, DetectorConfig, IterationRecord, Policy,
    RunOptions,
};
use crate::error::{invalid_param, Error, Result};
use crate::linalg::{self, CMatrix};
use crate::rng::{SeedTree, Stream};
use crate::tree_code::{self, build_rules, encode, Message, ParityRules, SlotLists, TreeCodeSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub k_tot: usize,
    pub k_a: usize,
    /// Receive antennas.
    pub m: usize,
    /// Slot dimension.
    pub d: usize,
    pub tree: TreeCodeSpec,
    /// Common large-scale fading coefficient, linear power.
    pub g: f64,
    pub sigma2: f64,
    pub channel: ChannelParams,
    /// Transmit antennas per user.
    pub n_k: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub detector: DetectorConfig,
    /// When set, the threshold is `zeta_rel` times one user's true activity
    /// power, overriding `detector.zeta`.
    pub zeta_rel: Option<f64>,
    pub normalized_codebook: bool,
    pub max_paths: usize,
}

impl ScenarioConfig {
    /// Full-scale setting: 300 active users, `D = 100`, `M = 300`,
    /// `W = 96` over 32 slots of 12-bit chunks.
    pub fn reference() -> Self {
        Self {
            k_tot: 600,
            k_a: 300,
            m: 300,
            d: 100,
            tree: TreeCodeSpec::reference(0x5eed),
            g: 1.0,
            sigma2: 1.0,
            channel: ChannelParams::default(),
            n_k: 1,
            trials: 100,
            master_seed: 1,
            detector: DetectorConfig::default(),
            zeta_rel: Some(0.5),
            normalized_codebook: false,
            max_paths: tree_code::DEFAULT_MAX_PATHS,
        }
    }

    /// Small setting that runs in well under a second per trial: 20 active
    /// users, `D = 50`, `M = 64`, 10-bit chunks over 8 slots.
    pub fn desk() -> Self {
        Self {
            k_tot: 40,
            k_a: 20,
            m: 64,
            d: 50,
            tree: TreeCodeSpec {
                w: 35,
                s: 8,
                j: 10,
                profile: vec![10, 5, 5, 5, 5, 5, 0, 0],
                parity_seed: 0x5eed,
            },
            g: 1.0,
            sigma2: 1.0,
            channel: ChannelParams::default(),
            n_k: 1,
            trials: 50,
            master_seed: 1,
            detector: DetectorConfig {
                q_total: 4096,
                q_mod: 512,
                ..DetectorConfig::default()
            },
            zeta_rel: Some(0.5),
            normalized_codebook: false,
            max_paths: tree_code::DEFAULT_MAX_PATHS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_a == 0 {
            return Err(invalid_param("k_a", "need at least one active user"));
        }
        if self.k_a > self.k_tot {
            return Err(invalid_param("k_a", format!("{} active users out of {}", self.k_a, self.k_tot)));
        }
        if self.m == 0 || self.d == 0 || self.n_k == 0 {
            return Err(invalid_param("m/d/n_k", "dimensions must be at least 1"));
        }
        if self.trials == 0 {
            return Err(invalid_param("trials", "must be at least 1"));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(invalid_param("sigma2", format!("{} must be finite and > 0", self.sigma2)));
        }
        let snr = self.g / self.sigma2;
        if !(snr > 0.0) || !snr.is_finite() {
            return Err(invalid_param("g", format!("SNR g/sigma2 = {snr} must be finite and > 0")));
        }
        if let Some(z) = self.zeta_rel {
            if !(z >= 0.0) {
                return Err(invalid_param("zeta_rel", format!("{z} must be >= 0")));
            }
        }
        if self.max_paths == 0 {
            return Err(invalid_param("max_paths", "must be at least 1"));
        }
        self.tree.validate()?;
        self.detector.validate()
    }

    pub fn snr_db(&self) -> f64 {
        10.0 * (self.g / self.sigma2).log10()
    }
}

/// `g = sigma2 * 10^(snr_db / 10)`.
pub fn g_for_snr(snr_db: f64, sigma2: f64) -> f64 {
    sigma2 * 10f64.powf(snr_db / 10.0)
}

/// What was actually sent in one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotGroundTruth {
    /// One entry per active user, collisions kept.
    pub active_chunks: Vec<usize>,
    pub gamma_true: Vec<f64>,
}

/// `gamma_i` sums `user_power` over every user that sent codeword `i`.
pub fn slot_ground_truth(chunks: &[usize], n_cw: usize, user_power: f64) -> SlotGroundTruth {
    let mut gamma_true = vec![0.0; n_cw];
    for &c in chunks {
        gamma_true[c] += user_power;
    }
    SlotGroundTruth {
        active_chunks: chunks.to_vec(),
        gamma_true,
    }
}

/// Activity power of one user: `g * sum(lambda_t) / M`.
///
/// The `1/M` puts it on the scale of `Y Y^H / M`; for a normalized spec it is
/// `g * N_k`.
pub fn user_activity_power(spec: &ChannelSpec, g: f64) -> Result<f64> {
    let omega = channel::build_omega(spec)?;
    Ok(g * channel::transmit_eigenvalues(&omega).sum() / spec.m as f64)
}

/// `Y = sum_k sqrt(g) a_{i_k} (H~_k 1)^T + Z`, `Z` i.i.d. CN(0, sigma2).
pub fn synthesize_slot<R: Rng + ?Sized>(
    chunks: &[usize],
    codebook: &Codebook,
    h_tilde: &[CMatrix],
    g: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    if chunks.len() != h_tilde.len() {
        return Err(Error::InvalidInput(format!(
            "{} chunks for {} channel realizations",
            chunks.len(),
            h_tilde.len()
        )));
    }
    let d = codebook.dim();
    let m = h_tilde.first().map_or(0, |h| h.nrows());
    if m == 0 && !chunks.is_empty() {
        return Err(Error::InvalidInput("channel has no receive antennas".into()));
    }
    if h_tilde.iter().any(|h| h.nrows() != m) {
        return Err(Error::InvalidInput("channel realizations disagree on M".into()));
    }
    if let Some(&bad) = chunks.iter().find(|&&c| c >= codebook.len()) {
        return Err(Error::InvalidInput(format!("chunk {bad} outside the codebook")));
    }
    if !(sigma2 >= 0.0) || !(g >= 0.0) {
        return Err(Error::InvalidInput("g and sigma2 must be >= 0".into()));
    }
    let m = if chunks.is_empty() { h_tilde.first().map_or(1, |h| h.nrows()) } else { m };
    let mut y = if sigma2 > 0.0 {
        linalg::complex_normal_matrix(rng, d, m, sigma2)
    } else {
        CMatrix::zeros(d, m)
    };
    let amp = g.sqrt();
    for (&c, h) in chunks.iter().zip(h_tilde) {
        let a = codebook.column(c);
        for col in 0..m {
            let w: Complex64 = h.row(col).iter().sum::<Complex64>() * amp;
            let mut y_col = y.column_mut(col);
            for (yi, &ai) in y_col.iter_mut().zip(a) {
                *yi += ai * w;
            }
        }
    }
    Ok(y)
}

/// Inner-list quality of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SlotStats {
    pub list_size: usize,
    /// Distinct chunks actually sent.
    pub sent: usize,
    pub missed: usize,
    pub false_chunks: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub trial: u64,
    pub p_md: f64,
    pub p_fa: f64,
    pub p_e: f64,
    pub slots: Vec<SlotStats>,
    pub decoded: usize,
    pub decoder_overflows: usize,
    pub detector_failures: usize,
}

/// A trial's report together with what was sent and what came out.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub report: ErrorReport,
    pub users: Vec<usize>,
    pub sent: Vec<Message>,
    pub decoded: BTreeSet<Message>,
    pub lists: SlotLists,
}

/// Misdetection and false-alarm rates of a decoded list against the sent messages.
pub fn score(sent: &[Message], decoded: &BTreeSet<Message>) -> (f64, f64) {
    let missed = sent.iter().filter(|m| !decoded.contains(m)).count();
    let p_md = missed as f64 / sent.len() as f64;
    let sent_set: BTreeSet<&Message> = sent.iter().collect();
    let false_alarms = decoded.iter().filter(|m| !sent_set.contains(m)).count();
    let p_fa = if decoded.is_empty() {
        0.0
    } else {
        false_alarms as f64 / decoded.len() as f64
    };
    (p_md, p_fa)
}

/// Codebook, parity rules and channel law shared by every trial of a scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub codebook: Codebook,
    pub rules: ParityRules,
    pub channel: ChannelSpec,
    seeds: SeedTree,
    channel_seeds: SeedTree,
}

impl Scenario {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let seeds = SeedTree::new(config.master_seed);
        let codebook = generate_codebook(
            seeds.seed(Stream::Codebook, &[]),
            config.d,
            config.tree.num_chunks(),
            config.normalized_codebook,
        )?;
        let rules = build_rules(&config.tree)?;
        let channel = config.channel.to_spec(config.m, config.n_k)?;
        let channel_seeds = config.channel.seed.map_or(seeds, SeedTree::new);
        Ok(Self {
            config,
            codebook,
            rules,
            channel,
            seeds,
            channel_seeds,
        })
    }

    pub fn seeds(&self) -> SeedTree {
        self.seeds
    }

    pub fn channel_seeds(&self) -> SeedTree {
        self.channel_seeds
    }

    /// Threshold used at linear power `g`.
    pub fn zeta(&self, g: f64) -> Result<f64> {
        match self.config.zeta_rel {
            Some(rel) => Ok(rel * user_activity_power(&self.channel, g)?),
            None => Ok(self.config.detector.zeta),
        }
    }

    /// Draws one `H~` per listed user for the given trial and slot.
    pub fn draw_channels(&self, trial: u64, slot: u64, users: &[usize]) -> Vec<CMatrix> {
        users
            .iter()
            .map(|&u| {
                let mut rng = self.channel_seeds.rng(Stream::Channel, &[trial, slot, u as u64]);
                channel::sample_tilde(&self.channel, &mut rng)
            })
            .collect()
    }

    /// Active user ids and their messages for a trial.
    pub fn draw_traffic(&self, trial: u64) -> (Vec<usize>, Vec<Message>) {
        let mut rng = self.seeds.rng(Stream::Trial, &[trial]);
        let mut users = index::sample(&mut rng, self.config.k_tot, self.config.k_a).into_vec();
        users.sort_unstable();
        let messages = users
            .iter()
            .map(|_| Message::random(self.config.tree.w, &mut rng))
            .collect();
        (users, messages)
    }

    /// One trial at the configured `g`.
    pub fn run_trial(&self, trial: u64) -> Result<ErrorReport> {
        self.run_trial_at(trial, self.config.g)
    }

    /// One trial at linear power `g`; streams depend only on the trial index.
    pub fn run_trial_at(&self, trial: u64, g: f64) -> Result<ErrorReport> {
        Ok(self.run_trial_detailed(trial, g)?.report)
    }

    /// [`Scenario::run_trial_at`] keeping the sent and decoded messages.
    pub fn run_trial_detailed(&self, trial: u64, g: f64) -> Result<TrialOutcome> {
        let cfg = &self.config;
        let (users, messages) = self.draw_traffic(trial);
        let seqs = messages
            .iter()
            .map(|m| encode(m, &self.rules, &cfg.tree))
            .collect::<Result<Vec<_>>>()?;
        let zeta = self.zeta(g)?;
        let mut lists = Vec::with_capacity(cfg.tree.s);
        let mut slots = Vec::with_capacity(cfg.tree.s);
        let mut detector_failures = 0;
        for s in 0..cfg.tree.s {
            let chunks: Vec<usize> = seqs.iter().map(|q| q.idx[s] as usize).collect();
            let h = self.draw_channels(trial, s as u64, &users);
            let mut noise = self.seeds.rng(Stream::Noise, &[trial, s as u64]);
            let y = synthesize_slot(&chunks, &self.codebook, &h, g, cfg.sigma2, &mut noise)?;
            let sigma_hat = sample_covariance(&y)?;
            let mut rng = self.seeds.rng(Stream::Detector, &[trial, s as u64]);
            let gamma = match run_detection(&sigma_hat, &self.codebook, &cfg.detector, &mut rng, RunOptions::default()) {
                Ok(det) => det.gamma.gamma,
                Err(failure) => {
                    detector_failures += 1;
                    failure.gamma.gamma
                }
            };
            let list = threshold_decide(&gamma, zeta);
            let sent: BTreeSet<usize> = chunks.iter().copied().collect();
            slots.push(SlotStats {
                list_size: list.len(),
                sent: sent.len(),
                missed: sent.difference(&list).count(),
                false_chunks: list.difference(&sent).count(),
            });
            lists.push(list.into_iter().map(|c| c as u32).collect::<BTreeSet<u32>>());
        }
        let lists = SlotLists { lists };
        let outcome = tree_code::decode_partial(&lists, &self.rules, &cfg.tree, cfg.max_paths)?;
        let (p_md, p_fa) = score(&messages, &outcome.messages);
        let report = ErrorReport {
            trial,
            p_md,
            p_fa,
            p_e: p_md + p_fa,
            slots,
            decoded: outcome.messages.len(),
            decoder_overflows: outcome.overflow.is_some() as usize,
            detector_failures,
        };
        Ok(TrialOutcome {
            report,
            users,
            sent: messages,
            decoded: outcome.messages,
            lists,
        })
    }
}

/// Trial-averaged error rates at one SNR.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub snr_db: f64,
    pub m: usize,
    pub mode: ChannelMode,
    pub p_md: f64,
    pub p_fa: f64,
    pub p_e: f64,
    pub trials: usize,
    pub decoder_overflows: usize,
    pub detector_failures: usize,
}

impl SweepPoint {
    /// Averages reports in the order given.
    pub fn aggregate(snr_db: f64, m: usize, mode: ChannelMode, reports: &[ErrorReport]) -> Self {
        let n = reports.len().max(1) as f64;
        let mean = |f: fn(&ErrorReport) -> f64| reports.iter().map(f).sum::<f64>() / n;
        Self {
            snr_db,
            m,
            mode,
            p_md: mean(|r| r.p_md),
            p_fa: mean(|r| r.p_fa),
            p_e: mean(|r| r.p_e),
            trials: reports.len(),
            decoder_overflows: reports.iter().map(|r| r.decoder_overflows).sum(),
            detector_failures: reports.iter().map(|r| r.detector_failures).sum(),
        }
    }
}

/// Mean error rates over `config.trials` trials at each grid SNR, sequentially.
pub fn snr_sweep(config: &ScenarioConfig, snr_grid_db: &[f64]) -> Result<Vec<SweepPoint>> {
    if snr_grid_db.is_empty() {
        return Err(Error::InvalidInput("empty SNR grid".into()));
    }
    let scenario = Scenario::new(config.clone())?;
    snr_grid_db
        .iter()
        .map(|&snr| {
            let g = g_for_snr(snr, config.sigma2);
            let reports = (0..config.trials as u64)
                .map(|t| scenario.run_trial_at(t, g))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepPoint::aggregate(snr, config.m, scenario.channel.mode, &reports))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyTrace {
    pub policy: Policy,
    /// One record per iteration, `e_gamma` filled in.
    pub records: Vec<IterationRecord>,
    pub final_gamma: Vec<f64>,
    pub final_cost: f64,
}

impl PolicyTrace {
    pub fn e_gamma(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.e_gamma.unwrap_or(f64::NAN)).collect()
    }

    pub fn terminal(&self) -> f64 {
        self.records.last().and_then(|r| r.e_gamma).unwrap_or(f64::NAN)
    }

    /// First 1-based iteration with `e_gamma <= target`.
    pub fn iterations_to_reach(&self, target: f64) -> Option<usize> {
        self.records
            .iter()
            .find(|r| r.e_gamma.is_some_and(|e| e <= target))
            .map(|r| r.iteration)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceResult {
    pub truth: SlotGroundTruth,
    pub traces: Vec<PolicyTrace>,
}

/// One slot of `K_a` users on uniformly drawn codewords, detected once per
/// policy from the same sample covariance.
pub fn convergence_experiment(config: &ScenarioConfig, policies: &[Policy]) -> Result<ConvergenceResult> {
    let scenario = Scenario::new(config.clone())?;
    let seeds = scenario.seeds();
    let n_cw = scenario.codebook.len();
    let mut rng = seeds.rng(Stream::Slot, &[0]);
    let chunks: Vec<usize> = (0..config.k_a).map(|_| rng.random_range(0..n_cw)).collect();
    let users: Vec<usize> = (0..config.k_a).collect();
    let h = scenario.draw_channels(0, 0, &users);
    let mut noise = seeds.rng(Stream::Noise, &[0, 0]);
    let y = synthesize_slot(&chunks, &scenario.codebook, &h, config.g, config.sigma2, &mut noise)?;
    let sigma_hat = sample_covariance(&y)?;
    let truth = slot_ground_truth(&chunks, n_cw, user_activity_power(&scenario.channel, config.g)?);
    let mut traces = Vec::with_capacity(policies.len());
    for &policy in policies {
        let det_cfg = DetectorConfig {
            policy,
            ..config.detector
        };
        let mut det_rng = seeds.rng(Stream::Detector, &[0, 0]);
        let options = RunOptions {
            record_trace: true,
            gamma_true: Some(&truth.gamma_true),
        };
        let det = run_detection(&sigma_hat, &scenario.codebook, &det_cfg, &mut det_rng, options)
            .map_err(|f| f.error)?;
        traces.push(PolicyTrace {
            policy,
            records: det.trace,
            final_gamma: det.gamma.gamma,
            final_cost: det.final_cost,
        });
    }
    Ok(ConvergenceResult { truth, traces })
}
