//! Self-check suite behind the `validate` verb: small closed-form examples and
//! invariants of every module, no Monte Carlo.

use std::collections::BTreeSet;

use rand::SeedableRng;
use ura_core::channel::{build_omega, normalize_spec, transmit_eigenvalues, ChannelMode, ChannelSpec};
use ura_core::codebook::generate_codebook;
use ura_core::detector::{
    cost, optimal_step, sample_covariance, threshold_decide, BlaState, CoordinateStats, SampleCovariance,
};
use ura_core::linalg::{CMatrix, RMatrix};
use ura_core::rng::{SeedTree, SimRng, Stream};
use ura_core::sim::score;
use ura_core::tree_code::{build_rules, decode, encode, expected_false_paths, Message, SlotLists, TreeCodeSpec};
use ura_core::Error;

use crate::config::FileConfig;

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

type Check = fn() -> Result<(), String>;

fn ensure(cond: bool, what: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(what.into())
    }
}

fn e(err: Error) -> String {
    err.to_string()
}

const CHECKS: &[(&str, Check)] = &[
    ("white channel has a flat coupling matrix", || {
        let spec = ChannelSpec::iid(3, 2).map_err(e)?;
        let omega = build_omega(&spec).map_err(e)?;
        ensure(omega.omega == RMatrix::from_element(3, 2, 1.0), "omega is not all ones")?;
        ensure((transmit_eigenvalues(&omega).sum() - 6.0).abs() < 1e-12, "lambda_t does not sum to N M")
    }),
    ("all-zero channel is degenerate", || {
        let spec = ChannelSpec {
            m: 2,
            n_k: 2,
            hbar: CMatrix::zeros(2, 2),
            p: RMatrix::zeros(2, 2),
            u_t: ura_core::linalg::identity(2),
            u_r: ura_core::linalg::identity(2),
            mode: ChannelMode::Correlated,
        };
        ensure(normalize_spec(&spec) == Err(Error::DegenerateSpec), "zero spec was accepted")
    }),
    ("codebook is deterministic in its seed", || {
        let a = generate_codebook(5, 4, 6, false).map_err(e)?;
        let b = generate_codebook(5, 4, 6, false).map_err(e)?;
        let c = generate_codebook(6, 4, 6, false).map_err(e)?;
        ensure(a.matrix() == b.matrix() && a.matrix() != c.matrix(), "seed does not fix the codebook")?;
        ensure((a.dim(), a.len()) == (4, 6), "wrong shape")
    }),
    ("normalized codebook columns have squared norm D", || {
        let cb = generate_codebook(1, 8, 16, true).map_err(e)?;
        ensure(
            (0..16).all(|i| (cb.column(i).iter().map(|z| z.norm_sqr()).sum::<f64>() - 8.0).abs() < 1e-12),
            "column norm differs from D",
        )
    }),
    ("reference parity matrices have the documented shapes", || {
        let spec = TreeCodeSpec::reference(3);
        let rules = build_rules(&spec).map_err(e)?;
        let (g2, g32) = (rules.matrix(1), rules.matrix(31));
        ensure((g2.rows(), g2.cols()) == (9, 12), "G_2 shape")?;
        ensure((g32.rows(), g32.cols()) == (12, 96), "G_32 shape")?;
        ensure(spec.total_parity_bits() == 288, "total parity bits")
    }),
    ("inconsistent profile is rejected", || {
        ensure(TreeCodeSpec::new(10, 2, 4, vec![4, 4], 0).is_err(), "sum(W_s) != W accepted")?;
        ensure(TreeCodeSpec::new(6, 2, 4, vec![2, 4], 0).is_err(), "W_1 != J accepted")
    }),
    ("all-zero message encodes to all-zero chunks", || {
        let spec = TreeCodeSpec::reference(9);
        let rules = build_rules(&spec).map_err(e)?;
        let seq = encode(&Message::zeros(96), &rules, &spec).map_err(e)?;
        ensure(seq.idx.iter().all(|&c| c == 0), "nonzero chunk")
    }),
    ("singleton lists decode to their message", || {
        let spec = TreeCodeSpec::reference(4);
        let rules = build_rules(&spec).map_err(e)?;
        let msg = Message::random(96, &mut seeded(8));
        let seq = encode(&msg, &rules, &spec).map_err(e)?;
        let out = decode(&SlotLists::from_encodings([&seq], 32), &rules, &spec, 10).map_err(e)?;
        ensure(out == BTreeSet::from([msg]), "round trip failed")
    }),
    ("empty first list decodes to nothing", || {
        let spec = TreeCodeSpec::new(8, 3, 4, vec![4, 2, 2], 1).map_err(e)?;
        let rules = build_rules(&spec).map_err(e)?;
        let lists = SlotLists::new([vec![], vec![0, 1], vec![2]]);
        ensure(decode(&lists, &rules, &spec, 10).map_err(e)?.is_empty(), "paths without roots")
    }),
    ("false-path estimate of singleton lists is 2^-sum(V_s)", || {
        let spec = TreeCodeSpec::reference(0);
        ensure(expected_false_paths(&spec, &[1; 32]) == (-288f64).exp2(), "estimate differs")
    }),
    ("sample covariance of a zero block is zero", || {
        let s = sample_covariance(&CMatrix::zeros(3, 5)).map_err(e)?;
        ensure(s.sigma_hat == CMatrix::zeros(3, 3), "nonzero covariance")
    }),
    ("cost at zero activity is D ln(sigma2) + tr(Sigma_hat) / sigma2", || {
        let cb = generate_codebook(2, 3, 4, false).map_err(e)?;
        let sigma_hat = SampleCovariance::from_matrix(CMatrix::identity(3, 3) * ura_core::Complex64::new(2.0, 0.0), 1);
        let f = cost(&[0.0; 4], &cb, &sigma_hat, 0.5).map_err(e)?;
        ensure((f - (3.0 * 0.5f64.ln() + 12.0)).abs() < 1e-12, format!("cost {f}"))
    }),
    ("infinite threshold selects nothing", || {
        ensure(threshold_decide(&[1.0, 1e300], f64::INFINITY).is_empty(), "selected under infinite threshold")
    }),
    ("greedy ties break to the lowest index", || {
        let mut bla = BlaState::new(4);
        bla.psi = vec![1.0, 3.0, 3.0, 2.0];
        ensure(bla.choose_coordinate(true, &mut seeded(1)) == 1, "wrong argmax")
    }),
    ("optimal step is clipped at the origin", || {
        // t < s pulls the unconstrained step below -gamma_i
        let d = optimal_step(CoordinateStats { s: 2.0, t: 0.5 }, 0.1).map_err(e)?;
        ensure(d == -0.1, format!("step {d}"))?;
        let d = optimal_step(CoordinateStats { s: 2.0, t: 6.0 }, 0.0).map_err(e)?;
        ensure(d == 1.0, format!("step {d}"))
    }),
    ("empty decoded list has no false alarms", || {
        let sent = [Message::zeros(4)];
        ensure(score(&sent, &BTreeSet::new()) == (1.0, 0.0), "wrong score")
    }),
    ("random streams are distinct", || {
        let tree = SeedTree::new(42);
        let seeds: BTreeSet<u64> = Stream::ALL.iter().map(|&s| tree.seed(s, &[])).collect();
        ensure(seeds.len() == Stream::ALL.len(), "stream seeds collide")
    }),
];

/// Runs every check, plus resolution of `config` when given.
pub fn run_checks(config: Option<&FileConfig>) -> Vec<CheckResult> {
    let mut out: Vec<CheckResult> = CHECKS
        .iter()
        .map(|(name, check)| {
            let r = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".into()));
            CheckResult {
                name,
                passed: r.is_ok(),
                detail: r.err().unwrap_or_default(),
            }
        })
        .collect();
    if let Some(cfg) = config {
        let r = cfg.resolved().and_then(|c| {
            ura_core::sim::Scenario::new(c.scenario_config()?)
                .map(|_| ())
                .map_err(anyhow::Error::from)
        });
        out.push(CheckResult {
            name: "scenario configuration builds",
            passed: r.is_ok(),
            detail: r.err().map(|e| format!("{e:#}")).unwrap_or_default(),
        });
    }
    out
}

fn seeded(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}
