//! Plot-ready CSV for the two figure kinds.
//!
//! `fig1`: `iteration,e_gamma,policy`, one row per recorded iteration per
//! policy. `fig2`: `snr_db,m,channel_mode,p_e`, sorted by `(m, channel_mode,
//! snr_db)`.

use std::fmt;
use std::str::FromStr;

use anyhow::{bail, Result};
use ura_core::channel::ChannelMode;
use ura_core::detector::Policy;
use ura_core::sim::{ConvergenceResult, SweepPoint};

use crate::formats::{fmt_f64, parse_f64, read_csv};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureKind {
    Fig1,
    Fig2,
}

impl fmt::Display for FigureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigureKind::Fig1 => "fig1",
            FigureKind::Fig2 => "fig2",
        })
    }
}

impl FromStr for FigureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fig1" => Ok(FigureKind::Fig1),
            "fig2" => Ok(FigureKind::Fig2),
            _ => Err(format!("unknown figure kind `{s}`")),
        }
    }
}

/// Results an experiment can hand to [`emit_figure_data`].
#[derive(Debug, Clone, Copy)]
pub enum Results<'a> {
    Convergence(&'a ConvergenceResult),
    Sweep(&'a [SweepPoint]),
}

#[derive(Debug, thiserror::Error)]
#[error("{kind} needs {needed} results, got {got} results")]
pub struct KindMismatch {
    pub kind: FigureKind,
    pub needed: &'static str,
    pub got: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig1Row {
    pub iteration: usize,
    pub e_gamma: f64,
    pub policy: Policy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Row {
    pub snr_db: f64,
    pub m: usize,
    pub channel_mode: ChannelMode,
    pub p_e: f64,
}

pub const FIG1_HEADER: [&str; 3] = ["iteration", "e_gamma", "policy"];
pub const FIG2_HEADER: [&str; 4] = ["snr_db", "m", "channel_mode", "p_e"];

pub fn fig1_rows(result: &ConvergenceResult) -> Vec<Fig1Row> {
    result
        .traces
        .iter()
        .flat_map(|t| {
            t.records.iter().map(move |r| Fig1Row {
                iteration: r.iteration,
                e_gamma: r.e_gamma.unwrap_or(f64::NAN),
                policy: t.policy,
            })
        })
        .collect()
}

pub fn fig2_rows(points: &[SweepPoint]) -> Vec<Fig2Row> {
    let mut rows: Vec<Fig2Row> = points
        .iter()
        .map(|p| Fig2Row {
            snr_db: p.snr_db,
            m: p.m,
            channel_mode: p.mode,
            p_e: p.p_e,
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.m, a.channel_mode.as_str())
            .cmp(&(b.m, b.channel_mode.as_str()))
            .then(a.snr_db.total_cmp(&b.snr_db))
    });
    rows
}

fn to_csv(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn emit_figure_data(results: Results<'_>, kind: FigureKind) -> Result<String> {
    match (results, kind) {
        (Results::Convergence(c), FigureKind::Fig1) => to_csv(
            &FIG1_HEADER,
            fig1_rows(c)
                .into_iter()
                .map(|r| vec![r.iteration.to_string(), fmt_f64(r.e_gamma), r.policy.as_str().to_string()]),
        ),
        (Results::Sweep(points), FigureKind::Fig2) => to_csv(
            &FIG2_HEADER,
            fig2_rows(points).into_iter().map(|r| {
                vec![fmt_f64(r.snr_db), r.m.to_string(), r.channel_mode.as_str().to_string(), fmt_f64(r.p_e)]
            }),
        ),
        (Results::Convergence(_), FigureKind::Fig2) => Err(KindMismatch {
            kind,
            needed: "sweep",
            got: "convergence",
        }
        .into()),
        (Results::Sweep(_), FigureKind::Fig1) => Err(KindMismatch {
            kind,
            needed: "convergence",
            got: "sweep",
        }
        .into()),
    }
}

pub fn parse_fig1(text: &str) -> Result<Vec<Fig1Row>> {
    let (header, rows) = read_csv(text)?;
    if header != FIG1_HEADER {
        bail!("unexpected fig1 header {header:?}");
    }
    rows.iter()
        .map(|r| {
            let Some(policy) = Policy::parse(&r[2]) else {
                bail!("unknown policy `{}`", r[2]);
            };
            Ok(Fig1Row {
                iteration: r[0].parse()?,
                e_gamma: parse_f64(&r[1])?,
                policy,
            })
        })
        .collect()
}

pub fn parse_fig2(text: &str) -> Result<Vec<Fig2Row>> {
    let (header, rows) = read_csv(text)?;
    if header != FIG2_HEADER {
        bail!("unexpected fig2 header {header:?}");
    }
    rows.iter()
        .map(|r| {
            let Some(channel_mode) = ChannelMode::parse(&r[2]) else {
                bail!("unknown channel mode `{}`", r[2]);
            };
            Ok(Fig2Row {
                snr_db: parse_f64(&r[0])?,
                m: r[1].parse()?,
                channel_mode,
                p_e: parse_f64(&r[3])?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ura_core::detector::IterationRecord;
    use ura_core::sim::{PolicyTrace, SlotGroundTruth};

    fn point(snr_db: f64, m: usize, mode: ChannelMode, p_e: f64) -> SweepPoint {
        SweepPoint {
            snr_db,
            m,
            mode,
            p_md: p_e,
            p_fa: 0.0,
            p_e,
            trials: 1,
            decoder_overflows: 0,
            detector_failures: 0,
        }
    }

    fn convergence() -> ConvergenceResult {
        let trace = |policy, n: usize| PolicyTrace {
            policy,
            records: (1..=n)
                .map(|q| IterationRecord {
                    iteration: q,
                    coordinate: q % 3,
                    step: 0.0,
                    reward: 0.0,
                    cost: 0.0,
                    e_gamma: Some(1.0 / q as f64),
                })
                .collect(),
            final_gamma: vec![],
            final_cost: 0.0,
        };
        ConvergenceResult {
            truth: SlotGroundTruth { active_chunks: vec![], gamma_true: vec![] },
            traces: vec![trace(Policy::Bla, 5), trace(Policy::Random, 7)],
        }
    }

    #[test]
    fn fig1_has_one_row_per_iteration_per_policy() {
        let c = convergence();
        let text = emit_figure_data(Results::Convergence(&c), FigureKind::Fig1).unwrap();
        let rows = parse_fig1(&text).unwrap();
        assert_eq!(rows.len(), 12);
        assert_eq!(rows, fig1_rows(&c));
        assert_eq!(rows[5].policy, Policy::Random);
        assert_eq!(rows[5].e_gamma, 1.0);
    }

    #[test]
    fn fig2_is_sorted_and_round_trips() {
        let points = vec![
            point(5.0, 64, ChannelMode::Iid, 0.01),
            point(-5.0, 64, ChannelMode::Iid, 0.3),
            point(0.0, 32, ChannelMode::Correlated, 0.7),
            point(0.0, 32, ChannelMode::Iid, 1.0 / 3.0),
        ];
        let text = emit_figure_data(Results::Sweep(&points), FigureKind::Fig2).unwrap();
        let rows = parse_fig2(&text).unwrap();
        let keys: Vec<(usize, &str, f64)> = rows.iter().map(|r| (r.m, r.channel_mode.as_str(), r.snr_db)).collect();
        assert_eq!(keys, [(32, "correlated", 0.0), (32, "iid", 0.0), (64, "iid", -5.0), (64, "iid", 5.0)]);
        assert_eq!(rows, fig2_rows(&points));
        assert_eq!(rows[1].p_e.to_bits(), (1.0f64 / 3.0).to_bits());
    }

    #[test]
    fn mismatched_kinds_are_usage_errors() {
        let c = convergence();
        let err = emit_figure_data(Results::Convergence(&c), FigureKind::Fig2).unwrap_err();
        assert!(err.downcast_ref::<KindMismatch>().is_some());
        assert!(emit_figure_data(Results::Sweep(&[]), FigureKind::Fig1).is_err());
        assert_eq!("fig1".parse::<FigureKind>().unwrap(), FigureKind::Fig1);
        assert!("fig3".parse::<FigureKind>().is_err());
    }
}
