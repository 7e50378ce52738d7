//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the verdict lines always reach the
//! console. Pass substrings as arguments to run a subset, e.g.
//! `cargo test -p ura --test acceptance -- descent`.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use ura::config::FileConfig;
use ura::experiments::{execute, replay, sweep_points};
use ura::manifest::{RunManifest, Verb};
use ura_core::channel::{make_exp_correlated_spec, sample_coupling, ChannelMode, ChannelSpec};
use ura_core::codebook::{generate_codebook, Codebook};
use ura_core::detector::{
    apply_rank_one_update, run_detection, run_detection_observed, sample_covariance, threshold_decide,
    DetectorConfig, IterationRecord, Policy, RunOptions, SampleCovariance, SigmaState,
};
use ura_core::linalg::{complex_normal_matrix, CMatrix, RMatrix};
use ura_core::rng::SimRng;
use ura_core::sim::{convergence_experiment, g_for_snr, synthesize_slot, ScenarioConfig};
use ura_core::tree_code::{build_rules, decode, encode, expected_false_paths, Message, SlotLists, TreeCodeSpec};
use ura_core::Complex64;

// pinned tolerances
const DESCENT_REL_TOL: f64 = 1e-9;
const ORACLE_COST_ABS_TOL: f64 = 1e-3;
const INVERSE_REL_TOL: f64 = 1e-6;
const REWARD_ABS_TOL: f64 = 1e-8;
const FALSE_PATH_RATIO: (f64, f64) = (0.1, 10.0);
const FALSE_PATH_QUANTILE: f64 = 0.999;
const CHANNEL_REL_TOL: f64 = 0.05;
const CHANNEL_MIN_ENTRY: f64 = 0.1;
const BLA_MAX_ITER_RATIO: f64 = 0.7;
const TERMINAL_AGREEMENT: f64 = 0.05;
const TARGET_P_E: f64 = 0.05;
/// Allowed rise of mean p_e between neighboring points: about two binomial
/// standard deviations of a 50-trial mean of 20-user error fractions at
/// p_e = 1/2, before the variance reduction from shared seeds.
const MONOTONE_SLACK: f64 = 0.03;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Exact cost by dense LU, independent of the detector's Cholesky path.
fn oracle_cost(gamma: &[f64], cb: &Codebook, sigma_hat: &CMatrix, sigma2: f64) -> f64 {
    let sigma = oracle_sigma(gamma, cb, sigma2);
    let det = sigma.clone().determinant();
    let inv = sigma.try_inverse().expect("model covariance is invertible");
    det.re.ln() + (inv * sigma_hat).trace().re
}

fn oracle_sigma(gamma: &[f64], cb: &Codebook, sigma2: f64) -> CMatrix {
    let d = cb.dim();
    let mut sigma = CMatrix::from_fn(d, d, |r, c| if r == c { Complex64::new(sigma2, 0.0) } else { Complex64::new(0.0, 0.0) });
    for (i, &g) in gamma.iter().enumerate() {
        let a = cb.column(i);
        for r in 0..d {
            for c in 0..d {
                sigma[(r, c)] += a[r] * a[c].conj() * g;
            }
        }
    }
    sigma
}

struct Instance {
    codebook: Codebook,
    sigma_hat: SampleCovariance,
    gamma_true: Vec<f64>,
}

/// `k_a` users on distinct codewords, powers in [1, 3), iid channels.
fn instance(seed: u64, d: usize, n: usize, m: usize, k_a: usize, sigma2: f64) -> Instance {
    let mut rng = SimRng::seed_from_u64(seed);
    let codebook = generate_codebook(seed.wrapping_mul(31) ^ 0x51, d, n, false).unwrap();
    let spec = ChannelSpec::iid(m, 1).unwrap();
    let mut y = complex_normal_matrix(&mut rng, d, m, sigma2);
    let mut gamma_true = vec![0.0; n];
    for c in index::sample(&mut rng, n, k_a) {
        let g = rng.random_range(1.0..3.0);
        let h = ura_core::channel::sample_tilde(&spec, &mut rng);
        y += synthesize_slot(&[c], &codebook, &[h], g, 0.0, &mut rng).unwrap();
        gamma_true[c] = g;
    }
    Instance {
        codebook,
        sigma_hat: sample_covariance(&y).unwrap(),
        gamma_true,
    }
}

fn monotone_descent() -> Outcome {
    let mut runs = 0;
    let mut worst_rise = f64::NEG_INFINITY;
    let mut worst_track: f64 = 0.0;
    for seed in 0..200 {
        let inst = instance(seed, 16, 64, 32, 8, 1.0);
        for policy in Policy::ALL {
            let cfg = DetectorConfig { q_total: 384, q_mod: 64, policy, sigma2: 1.0, ..DetectorConfig::default() };
            let mut prev_trace = oracle_cost(&[0.0; 64], &inst.codebook, &inst.sigma_hat.sigma_hat, 1.0);
            let mut prev_oracle = prev_trace;
            let mut failure = None;
            let mut obs = |r: &IterationRecord, gamma: &[f64], _: &SigmaState| {
                let exact = oracle_cost(gamma, &inst.codebook, &inst.sigma_hat.sigma_hat, 1.0);
                for (prev, now, what) in [(prev_trace, r.cost, "trace"), (prev_oracle, exact, "oracle")] {
                    let rise = (now - prev) / prev.abs();
                    worst_rise = worst_rise.max(rise);
                    if rise > DESCENT_REL_TOL && failure.is_none() {
                        failure = Some(format!("seed {seed} {policy:?} iteration {}: {what} cost {prev} -> {now}", r.iteration));
                    }
                }
                worst_track = worst_track.max((r.cost - exact).abs() / exact.abs());
                if gamma.iter().any(|&g| g < 0.0) && failure.is_none() {
                    failure = Some(format!("seed {seed} {policy:?}: negative gamma"));
                }
                prev_trace = r.cost;
                prev_oracle = exact;
            };
            run_detection_observed(&inst.sigma_hat, &inst.codebook, &cfg, &mut SimRng::seed_from_u64(seed), RunOptions::default(), &mut obs)
                .map_err(|f| f.error.to_string())?;
            if let Some(f) = failure {
                return Err(f);
            }
            runs += 1;
        }
    }
    Ok(format!(
        "{runs} runs x 384 iterations, largest relative rise {worst_rise:.2e} (tol {DESCENT_REL_TOL:e}), tracked vs exact cost {worst_track:.1e}"
    ))
}

/// Coordinate-wise minimization by a 64-point grid per coordinate, refined by
/// golden-section search on the bracketing cells; sweeps until no coordinate
/// improves.
fn grid_minimum(cb: &Codebook, sigma_hat: &CMatrix, sigma2: f64, hi: f64) -> (f64, Vec<f64>) {
    let n = cb.len();
    let mut gamma = vec![0.0; n];
    let mut f = oracle_cost(&gamma, cb, sigma_hat, sigma2);
    let along = |gamma: &mut Vec<f64>, i: usize, x: f64| {
        gamma[i] = x;
        oracle_cost(gamma, cb, sigma_hat, sigma2)
    };
    for _sweep in 0..500 {
        let start = f;
        for i in 0..n {
            let mut g = gamma.clone();
            let grid: Vec<f64> = (0..=64).map(|k| hi * k as f64 / 64.0).collect();
            let vals: Vec<f64> = grid.iter().map(|&x| along(&mut g, i, x)).collect();
            let k = (0..vals.len()).min_by(|&a, &b| vals[a].total_cmp(&vals[b])).unwrap();
            let (mut a, mut b) = (grid[k.saturating_sub(1)], grid[(k + 1).min(64)]);
            // the current value keeps its place as a candidate
            let cur = gamma[i];
            a = a.min(cur);
            b = b.max(cur);
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            let (mut x1, mut x2) = (b - phi * (b - a), a + phi * (b - a));
            let (mut f1, mut f2) = (along(&mut g, i, x1), along(&mut g, i, x2));
            while b - a > 1e-12 * (1.0 + b) {
                if f1 < f2 {
                    b = x2;
                    x2 = x1;
                    f2 = f1;
                    x1 = b - phi * (b - a);
                    f1 = along(&mut g, i, x1);
                } else {
                    a = x1;
                    x1 = x2;
                    f1 = f2;
                    x2 = a + phi * (b - a);
                    f2 = along(&mut g, i, x2);
                }
            }
            let best = [(cur, f), (x1, f1), (x2, f2), (grid[k], vals[k])]
                .into_iter()
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            gamma[i] = best.0;
            f = best.1;
        }
        if start - f < 1e-13 {
            break;
        }
    }
    (f, gamma)
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..20 {
        let sigma2 = 0.5;
        let inst = instance(1000 + seed, 8, 8, 512, 3, sigma2);
        let cfg = DetectorConfig { q_total: 4000, q_mod: 16, policy: Policy::Bla, sigma2, ..DetectorConfig::default() };
        let det = run_detection(&inst.sigma_hat, &inst.codebook, &cfg, &mut SimRng::seed_from_u64(seed), RunOptions::default())
            .map_err(|f| f.error.to_string())?;
        let hi = 2.0 * (0..8).map(|i| inst.sigma_hat.sigma_hat[(i, i)].re).fold(0.0, f64::max);
        let (f_grid, _) = grid_minimum(&inst.codebook, &inst.sigma_hat.sigma_hat, sigma2, hi);
        let f_det = oracle_cost(&det.gamma.gamma, &inst.codebook, &inst.sigma_hat.sigma_hat, sigma2);
        let gap = (f_det - f_grid).abs();
        worst = worst.max(gap);
        check(gap <= ORACLE_COST_ABS_TOL, format!("seed {seed}: detector f {f_det}, grid f {f_grid}"))?;
        let min_true = inst.gamma_true.iter().copied().filter(|&g| g > 0.0).fold(f64::INFINITY, f64::min);
        let truth = threshold_decide(&inst.gamma_true, 0.0);
        let est = threshold_decide(&det.gamma.gamma, min_true / 2.0);
        check(est == truth, format!("seed {seed}: support {est:?} vs {truth:?}"))?;
    }
    Ok(format!("20 instances, largest |f - f_grid| {worst:.2e} (tol {ORACLE_COST_ABS_TOL:e}), supports exact"))
}

fn rank_one_fidelity() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let cb = generate_codebook(seed, 16, 64, false).unwrap();
        let mut rng = SimRng::seed_from_u64(seed);
        let mut state = SigmaState::initial(16, 1.0);
        let mut gamma = vec![0.0; 64];
        for k in 1..=1000 {
            let i = rng.random_range(0..64);
            let d = rng.random_range(-gamma[i]..=2.0);
            state = apply_rank_one_update(&state, i, d, &cb).map_err(|e| e.to_string())?;
            gamma[i] += d;
            if k % 100 == 0 {
                let exact = oracle_sigma(&gamma, &cb, 1.0).try_inverse().unwrap();
                let err = (&state.sigma_inv - &exact).norm() / exact.norm();
                worst = worst.max(err);
                check(err <= INVERSE_REL_TOL, format!("seed {seed} after {k} updates: error {err:e}"))?;
            }
        }
    }
    Ok(format!("5 x 1000 updates at D=16, largest relative Frobenius error {worst:.2e} (tol {INVERSE_REL_TOL:e})"))
}

fn reward_is_descent() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut visited = 0usize;
    for seed in 0..20u64 {
        let inst = instance(2000 + seed, 16, 64, 32, 8, 0.5);
        for policy in Policy::ALL {
            let cfg = DetectorConfig { q_total: 256, q_mod: 32, policy, sigma2: 0.5, ..DetectorConfig::default() };
            let mut prev = oracle_cost(&[0.0; 64], &inst.codebook, &inst.sigma_hat.sigma_hat, 0.5);
            let mut obs = |r: &IterationRecord, gamma: &[f64], _: &SigmaState| {
                let now = oracle_cost(gamma, &inst.codebook, &inst.sigma_hat.sigma_hat, 0.5);
                worst = worst.max((r.reward - (prev - now)).abs());
                prev = now;
                visited += 1;
            };
            run_detection_observed(&inst.sigma_hat, &inst.codebook, &cfg, &mut SimRng::seed_from_u64(seed), RunOptions::default(), &mut obs)
                .map_err(|f| f.error.to_string())?;
        }
    }
    check(worst <= REWARD_ABS_TOL, format!("largest |reward - decrease| {worst:e}"))?;
    Ok(format!("{visited} visited coordinates, largest |reward - decrease| {worst:.2e} (tol {REWARD_ABS_TOL:e})"))
}

/// Smallest `n` with `P(Poisson(mean) <= n) >= q`.
fn poisson_quantile(mean: f64, q: f64) -> usize {
    let (mut n, mut p) = (0usize, (-mean).exp());
    let mut cdf = p;
    while cdf < q {
        n += 1;
        p *= mean / n as f64;
        cdf += p;
    }
    n
}

fn false_path_verdict(observed: usize, expected: f64) -> Result<String, String> {
    if expected < 1.0 {
        let bound = poisson_quantile(10.0 * expected, FALSE_PATH_QUANTILE);
        check(observed <= bound, format!("{observed} false paths, expected {expected:.3e}, bound {bound}"))?;
        Ok(format!("{observed} false paths vs expected {expected:.2e} (bound {bound})"))
    } else {
        let ratio = observed as f64 / expected;
        check(
            (FALSE_PATH_RATIO.0..=FALSE_PATH_RATIO.1).contains(&ratio),
            format!("{observed} false paths, expected {expected:.3}, ratio {ratio:.3}"),
        )?;
        Ok(format!("{observed} false paths vs expected {expected:.1} (ratio {ratio:.2})"))
    }
}

fn tree_code_soundness() -> Outcome {
    let spec = TreeCodeSpec::reference(0x5eed);
    let rules = build_rules(&spec).unwrap();
    let mut rng = SimRng::seed_from_u64(5);
    let (mut missed, mut observed, mut expected) = (0usize, 0usize, 0.0);
    for _ in 0..1000 {
        let k = rng.random_range(1..=100);
        let sent: BTreeSet<Message> = (0..k).map(|_| Message::random(spec.w, &mut rng)).collect();
        let seqs: Vec<_> = sent.iter().map(|m| encode(m, &rules, &spec).unwrap()).collect();
        let complete = SlotLists::from_encodings(&seqs, spec.s);
        let decoded = decode(&complete, &rules, &spec, usize::MAX).map_err(|e| e.to_string())?;
        missed += sent.difference(&decoded).count();
        observed += decoded.difference(&sent).count();
        expected += expected_false_paths(&spec, &complete.sizes());

        let mut noisy = complete.clone();
        for list in &mut noisy.lists {
            let before = list.len();
            while list.len() < before + 50 {
                list.insert(rng.random_range(0..1u32 << spec.j));
            }
        }
        let decoded = decode(&noisy, &rules, &spec, usize::MAX).map_err(|e| e.to_string())?;
        missed += sent.difference(&decoded).count();
        observed += decoded.difference(&sent).count();
        expected += expected_false_paths(&spec, &noisy.sizes());
    }
    check(missed == 0, format!("{missed} sent messages missed"))?;
    let reference = false_path_verdict(observed, expected)?;

    // lists of pure noise on a short code, where false paths are frequent
    let small = TreeCodeSpec::new(24, 6, 8, vec![8, 4, 4, 4, 4, 0], 3).unwrap();
    let small_rules = build_rules(&small).unwrap();
    let (mut obs2, mut exp2) = (0usize, 0.0);
    for _ in 0..400 {
        let lists = SlotLists::new((0..small.s).map(|_| {
            let mut l = BTreeSet::new();
            while l.len() < 16 {
                l.insert(rng.random_range(0..1u32 << small.j));
            }
            l.into_iter().collect::<Vec<_>>()
        }));
        obs2 += decode(&lists, &small_rules, &small, usize::MAX).map_err(|e| e.to_string())?.len();
        exp2 += expected_false_paths(&small, &lists.sizes());
    }
    let noise = false_path_verdict(obs2, exp2)?;
    Ok(format!("p_md = 0 over 2000 decodes; reference code: {reference}; noise lists: {noise}"))
}

fn channel_statistics() -> Outcome {
    let specs = [
        ("iid 32x2", ChannelSpec::iid(32, 2).unwrap()),
        ("rho_r 0.9 rho_t 0.5 K 1, 16x4", make_exp_correlated_spec(16, 4, 0.9, 0.5, 1.0).unwrap()),
        ("rho_r 0.9 K 1, 32x1", make_exp_correlated_spec(32, 1, 0.9, 0.0, 1.0).unwrap()),
    ];
    let mut details = Vec::new();
    for (seed, (name, spec)) in specs.iter().enumerate() {
        // coupling recomputed entrywise from the spec fields
        let omega = RMatrix::from_fn(spec.m, spec.n_k, |i, j| spec.hbar[(i, j)].norm_sqr() + spec.p[(i, j)].powi(2));
        let mut rng = SimRng::seed_from_u64(seed as u64);
        let n = 10_000;
        let mut power = RMatrix::zeros(spec.m, spec.n_k);
        let mut frob = 0.0;
        for _ in 0..n {
            let r = sample_coupling(spec, &mut rng);
            power += r.h_tilde.map(|z| z.norm_sqr());
            frob += r.h.norm_squared();
        }
        power /= n as f64;
        frob /= n as f64;
        let total = (spec.m * spec.n_k) as f64;
        let norm_err = (frob - total).abs() / total;
        check(norm_err <= CHANNEL_REL_TOL, format!("{name}: E||H||^2 = {frob}, expected {total}"))?;
        let mut worst: f64 = 0.0;
        for i in 0..spec.m {
            for j in 0..spec.n_k {
                let w = omega[(i, j)];
                if w >= CHANNEL_MIN_ENTRY {
                    let e = (power[(i, j)] - w).abs() / w;
                    worst = worst.max(e);
                    check(e <= CHANNEL_REL_TOL, format!("{name} ({i},{j}): {} vs {w}", power[(i, j)]))?;
                }
            }
        }
        details.push(format!("{name}: norm {norm_err:.3}, coupling {worst:.3}"));
    }
    Ok(format!("10^4 draws each, relative errors (tol {CHANNEL_REL_TOL}): {}", details.join("; ")))
}

fn bla_convergence() -> Outcome {
    let mut ratios = Vec::new();
    let mut worst_gap: f64 = 0.0;
    for seed in 0..20u64 {
        let mut c = ScenarioConfig::desk();
        c.master_seed = 1000 + seed;
        c.g = g_for_snr(-10.0, c.sigma2);
        c.detector.q_total = 10_240;
        c.detector.q_mod = 512;
        c.detector.sigma2 = c.sigma2;
        let r = convergence_experiment(&c, &[Policy::Bla, Policy::Random]).map_err(|e| e.to_string())?;
        let (bla, random) = (&r.traces[0], &r.traces[1]);
        let target = random.terminal();
        let n_bla = bla.iterations_to_reach(target).map_or(f64::INFINITY, |q| q as f64);
        let n_random = random.iterations_to_reach(target).expect("random reaches its own terminal value") as f64;
        ratios.push(n_bla / n_random);
        let gap = (bla.terminal() - target).abs() / target;
        worst_gap = worst_gap.max(gap);
        check(gap <= TERMINAL_AGREEMENT, format!("seed {seed}: terminal e_gamma {} vs {target}", bla.terminal()))?;
    }
    ratios.sort_by(f64::total_cmp);
    let median = (ratios[9] + ratios[10]) / 2.0;
    check(median <= BLA_MAX_ITER_RATIO, format!("median iteration ratio {median:.3}"))?;
    Ok(format!(
        "median iteration ratio {median:.3} (max {BLA_MAX_ITER_RATIO}), terminal e_gamma within {:.2}% (max {}%), 20 paired seeds",
        100.0 * worst_gap,
        100.0 * TERMINAL_AGREEMENT
    ))
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn desk_config(overrides: &[&str]) -> FileConfig {
    let overrides: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
    FileConfig::load(&workspace_root().join("configs/desk.toml"), &overrides)
        .and_then(|c| c.resolved())
        .expect("desk configuration resolves")
}

fn error_rate_trends() -> Outcome {
    let cfg = desk_config(&["detector.q_total=2048", "detector.q_mod=1024", "scenario.trials=50"]);
    let points = sweep_points(&cfg).map_err(|e| format!("{e:#}"))?;
    let grid = &cfg.sweep.snr_db;
    let p_e = |mode: ChannelMode, m: usize| -> Vec<f64> {
        grid.iter()
            .map(|&s| points.iter().find(|p| p.mode == mode && p.m == m && p.snr_db == s).unwrap().p_e)
            .collect()
    };
    let mut table = Vec::new();
    let mut crossings = Vec::new();
    for mode in [ChannelMode::Iid, ChannelMode::Correlated] {
        for &m in &cfg.sweep.m {
            let curve = p_e(mode, m);
            table.push(format!(
                "{} M={m}: [{}]",
                mode.as_str(),
                curve.iter().map(|p| format!("{p:.3}")).collect::<Vec<_>>().join(" ")
            ));
            for (k, w) in curve.windows(2).enumerate() {
                check(
                    w[1] <= w[0] + MONOTONE_SLACK,
                    format!("{} M={m}: p_e rises from {} to {} between {} and {} dB", mode.as_str(), w[0], w[1], grid[k], grid[k + 1]),
                )?;
            }
        }
        for (k, &snr) in grid.iter().enumerate() {
            let by_m: Vec<f64> = cfg.sweep.m.iter().map(|&m| p_e(mode, m)[k]).collect();
            for w in by_m.windows(2) {
                check(w[1] <= w[0] + MONOTONE_SLACK, format!("{} at {snr} dB: p_e rises with M: {by_m:?}", mode.as_str()))?;
            }
        }
    }
    let crossing = |mode, m| p_e(mode, m).iter().position(|&p| p < TARGET_P_E).map(|k| grid[k]);
    let mut compared = 0;
    for &m in &cfg.sweep.m {
        let (iid, corr) = (crossing(ChannelMode::Iid, m), crossing(ChannelMode::Correlated, m));
        let show = |c: Option<f64>| c.map_or(format!("none up to {} dB", grid[grid.len() - 1]), |s| format!("{s} dB"));
        crossings.push(format!("M={m}: iid {}, correlated {}", show(iid), show(corr)));
        if let Some(i) = iid {
            // a curve that never reaches the target crosses above the grid
            check(corr.is_none_or(|c| c > i), format!("M={m}: correlated crosses at {corr:?}, iid at {i}"))?;
            compared += 1;
        }
    }
    check(compared > 0, "iid never reaches the target; no crossing to compare")?;
    Ok(format!("{}; first SNR with p_e < {TARGET_P_E}: {}", table.join("; "), crossings.join("; ")))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn manifest_replay() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = desk_config(&[
        "scenario.trials=3",
        "detector.q_total=512",
        "detector.q_mod=128",
        "sweep.snr_db=[-12.0, -6.0]",
        "sweep.m=[32]",
        "scenario.threads=2",
    ]);
    let mut compared = 0;
    for verb in [Verb::Run, Verb::Sweep, Verb::Convergence] {
        let first = tmp.path().join(verb.as_str());
        execute(verb, &cfg, &first).map_err(|e| format!("{e:#}"))?;
        let manifest = RunManifest::load(&first.join(ura::manifest::FILE_NAME)).map_err(|e| format!("{e:#}"))?;
        let again = tmp.path().join(format!("{}-replay", verb.as_str()));
        replay(&manifest, &again).map_err(|e| format!("{e:#}"))?;
        let (a, b) = (csv_files(&first), csv_files(&again));
        check(!a.is_empty(), format!("{}: no CSV output", verb.as_str()))?;
        check(
            a.iter().map(|f| &f.0).eq(b.iter().map(|f| &f.0)),
            format!("{}: different file sets", verb.as_str()),
        )?;
        for ((name, x), (_, y)) in a.iter().zip(&b) {
            check(x == y, format!("{}: {name} differs after replay", verb.as_str()))?;
        }
        compared += a.len();
    }
    Ok(format!("{compared} CSV files byte-identical after replay (run, sweep, convergence)"))
}

const CRITERIA: &[Criterion] = &[
    ("monotone descent", monotone_descent),
    ("oracle equivalence", oracle_equivalence),
    ("rank-one update fidelity", rank_one_fidelity),
    ("reward equals descent", reward_is_descent),
    ("tree-code soundness and false paths", tree_code_soundness),
    ("channel statistics", channel_statistics),
    ("BLA convergence advantage", bla_convergence),
    ("error-rate trends", error_rate_trends),
    ("manifest reproducibility", manifest_replay),
];

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (k, (name, run)) in CRITERIA.iter().enumerate() {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name} ({secs:.1} s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name} ({secs:.1} s): {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
