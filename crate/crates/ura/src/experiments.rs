//! Experiment runners behind the CLI verbs.
//!
//! Trials fan out over a rayon pool and are collected back in trial order, so
//! every output is independent of the thread count.

use std::path::Path;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde_json::{json, Value};
use ura_core::channel::ChannelParams;
use ura_core::sim::{convergence_experiment, g_for_snr, Scenario, ScenarioConfig, SweepPoint, TrialOutcome};

use crate::config::FileConfig;
use crate::figures::{emit_figure_data, FigureKind, Results};
use crate::formats::{self, write_csv};
use crate::manifest::{RunManifest, SeedRecord, Verb};
use crate::validate::run_checks;

/// Files written by one experiment, relative to its output directory.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Artifacts {
    pub files: Vec<String>,
}

impl Artifacts {
    fn csv(&mut self, dir: &Path, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        write_csv(&dir.join(name), header, rows)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn text(&mut self, dir: &Path, name: &str, text: &str) -> Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, text).with_context(|| format!("cannot write {}", path.display()))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, dir: &Path, name: &str, value: &Value) -> Result<()> {
        self.text(dir, name, &(serde_json::to_string_pretty(value)? + "\n"))
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| anyhow!("cannot start worker pool: {e}"))
}

/// Trials `0..n` at power `g`, in trial order.
pub fn run_trials(scenario: &Scenario, g: f64, threads: usize) -> Result<Vec<TrialOutcome>> {
    let n = scenario.config.trials as u64;
    pool(threads)?.install(|| {
        (0..n)
            .into_par_iter()
            .map(|t| scenario.run_trial_detailed(t, g).map_err(anyhow::Error::from))
            .collect()
    })
}

/// Every `(mode, m, snr)` point of the sweep section, modes outermost.
pub fn sweep_points(config: &FileConfig) -> Result<Vec<SweepPoint>> {
    let base = config.scenario_config()?;
    if config.sweep.snr_db.is_empty() {
        bail!("sweep.snr_db is empty");
    }
    let mut points = Vec::new();
    for &mode in &config.sweep.modes {
        for &m in &config.sweep.m {
            let scenario = Scenario::new(ScenarioConfig {
                m,
                channel: ChannelParams {
                    mode: mode.into(),
                    ..base.channel
                },
                ..base.clone()
            })?;
            for &snr in &config.sweep.snr_db {
                let g = g_for_snr(snr, base.sigma2);
                let reports: Vec<_> = run_trials(&scenario, g, config.scenario.threads)?
                    .into_iter()
                    .map(|o| o.report)
                    .collect();
                points.push(SweepPoint::aggregate(snr, m, mode.into(), &reports));
            }
        }
    }
    Ok(points)
}

fn summary(verb: Verb, config: &FileConfig, metrics: Value) -> Value {
    json!({
        "verb": verb.as_str(),
        "config": config,
        "seeds": SeedRecord::derive(config),
        "metrics": metrics,
    })
}

fn point_json(p: &SweepPoint) -> Value {
    json!({
        "snr_db": p.snr_db,
        "m": p.m,
        "channel_mode": p.mode.as_str(),
        "p_md": p.p_md,
        "p_fa": p.p_fa,
        "p_e": p.p_e,
        "trials": p.trials,
        "decoder_overflows": p.decoder_overflows,
        "detector_failures": p.detector_failures,
    })
}

fn run_verb(config: &FileConfig, dir: &Path, out: &mut Artifacts) -> Result<()> {
    let scenario = Scenario::new(config.scenario_config()?)?;
    let outcomes = run_trials(&scenario, scenario.config.g, config.scenario.threads)?;
    let reports: Vec<_> = outcomes.iter().map(|o| o.report.clone()).collect();
    out.csv(dir, "trials.csv", &formats::TRIALS_HEADER, formats::trial_rows(&reports))?;
    out.csv(dir, "slots.csv", &formats::SLOTS_HEADER, formats::slot_rows(&reports))?;
    if config.output.export_codebook {
        formats::save_with(&dir.join("codebook.bin"), |w| formats::write_codebook(w, &scenario.codebook))?;
        out.files.push("codebook.bin".into());
    }
    if config.output.export_channel {
        let (users, _) = scenario.draw_traffic(0);
        let h_tilde = scenario.draw_channels(0, 0, &users[..1]).remove(0);
        let h = &scenario.channel.u_r * h_tilde * scenario.channel.u_t.adjoint();
        formats::save_with(&dir.join("channel.bin"), |w| formats::write_matrix(w, &h))?;
        out.files.push("channel.bin".into());
    }
    if config.output.export_messages {
        std::fs::create_dir_all(dir.join("messages"))?;
        for o in &outcomes {
            for (kind, msgs) in [("sent", o.sent.iter().collect::<Vec<_>>()), ("decoded", o.decoded.iter().collect())] {
                let name = format!("messages/trial_{:05}_{kind}.hex", o.report.trial);
                formats::write_messages(&dir.join(&name), msgs)?;
                out.files.push(name);
            }
        }
    }
    let point = SweepPoint::aggregate(scenario.config.snr_db(), scenario.config.m, scenario.channel.mode, &reports);
    let mean_list = reports.iter().flat_map(|r| &r.slots).map(|s| s.list_size as f64).sum::<f64>()
        / reports.iter().map(|r| r.slots.len()).sum::<usize>().max(1) as f64;
    let mut metrics = point_json(&point);
    metrics["mean_list_size"] = json!(mean_list);
    out.json(dir, "summary.json", &summary(Verb::Run, config, metrics))
}

fn sweep_verb(config: &FileConfig, dir: &Path, out: &mut Artifacts) -> Result<()> {
    let points = sweep_points(config)?;
    if config.sweep.modes.len() == 1 {
        out.csv(dir, "sweep.csv", &formats::SWEEP_HEADER, formats::sweep_rows(&points))?;
    } else {
        for &mode in &config.sweep.modes {
            let mode = ura_core::channel::ChannelMode::from(mode);
            let subset: Vec<_> = points.iter().filter(|p| p.mode == mode).cloned().collect();
            let name = format!("sweep_{}.csv", mode.as_str());
            out.csv(dir, &name, &formats::SWEEP_HEADER, formats::sweep_rows(&subset))?;
        }
    }
    out.text(dir, "fig2.csv", &emit_figure_data(Results::Sweep(&points), FigureKind::Fig2)?)?;
    let metrics = Value::Array(points.iter().map(point_json).collect());
    out.json(dir, "summary.json", &summary(Verb::Sweep, config, metrics))
}

fn convergence_verb(config: &FileConfig, dir: &Path, out: &mut Artifacts) -> Result<()> {
    let policies: Vec<_> = config.convergence.policies.iter().map(|&p| p.into()).collect();
    if policies.is_empty() {
        bail!("convergence.policies is empty");
    }
    let result = convergence_experiment(&config.scenario_config()?, &policies)?;
    for t in &result.traces {
        let name = format!("trace_{}.csv", t.policy.as_str());
        out.csv(dir, &name, &formats::TRACE_HEADER, formats::trace_rows(&t.records))?;
    }
    out.text(dir, "fig1.csv", &emit_figure_data(Results::Convergence(&result), FigureKind::Fig1)?)?;
    let metrics: Value = result
        .traces
        .iter()
        .map(|t| {
            json!({
                "policy": t.policy.as_str(),
                "iterations": t.records.len(),
                "terminal_e_gamma": t.terminal(),
                "final_cost": t.final_cost,
            })
        })
        .collect();
    out.json(dir, "summary.json", &summary(Verb::Convergence, config, metrics))
}

/// Runs `verb` on a resolved configuration, writing into `dir` only.
///
/// `validate` writes its report and then fails if any check failed.
pub fn execute(verb: Verb, config: &FileConfig, dir: &Path) -> Result<Artifacts> {
    let start = Instant::now();
    // the output location is not part of the experiment
    let mut snapshot = config.clone();
    snapshot.output.dir = None;
    let config = &snapshot;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut out = Artifacts::default();
    let mut failed = Vec::new();
    match verb {
        Verb::Run => run_verb(config, dir, &mut out)?,
        Verb::Sweep => sweep_verb(config, dir, &mut out)?,
        Verb::Convergence => convergence_verb(config, dir, &mut out)?,
        Verb::Validate => {
            let checks = run_checks(Some(config));
            failed = checks.iter().filter(|c| !c.passed).map(|c| format!("{}: {}", c.name, c.detail)).collect();
            let metrics = json!({ "checks": checks, "failed": failed.len() });
            out.json(dir, "validate.json", &summary(Verb::Validate, config, metrics))?;
        }
    }
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        verb,
        config: config.clone(),
        seeds: SeedRecord::derive(config),
        outputs: out.files.clone(),
        duration_seconds: start.elapsed().as_secs_f64(),
    };
    manifest.save(dir)?;
    out.files.push(crate::manifest::FILE_NAME.to_string());
    if !failed.is_empty() {
        bail!("{} self-check(s) failed:\n  {}", failed.len(), failed.join("\n  "));
    }
    Ok(out)
}

/// Re-runs the experiment recorded in a manifest.
pub fn replay(manifest: &RunManifest, dir: &Path) -> Result<Artifacts> {
    execute(manifest.verb, &manifest.config, dir)
}
