//! Run manifests: everything needed to replay an experiment bit-exactly.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use ura_core::rng::{SeedTree, Stream};

use crate::config::FileConfig;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verb {
    Run,
    Sweep,
    Convergence,
    Validate,
}

impl Verb {
    pub fn as_str(self) -> &'static str {
        match self {
            Verb::Run => "run",
            Verb::Sweep => "sweep",
            Verb::Convergence => "convergence",
            Verb::Validate => "validate",
        }
    }
}

/// Root seed of every random stream, plus the per-trial seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master_seed: u64,
    pub parity_seed: u64,
    /// Master of the channel streams; differs from `master_seed` when the
    /// channel block pins its own seed.
    pub channel_master: u64,
    pub streams: BTreeMap<String, u64>,
    pub trials: Vec<u64>,
}

impl SeedRecord {
    pub fn derive(config: &FileConfig) -> Self {
        let master = config.scenario.master_seed;
        let tree = SeedTree::new(master);
        let channel_master = config.channel.seed.unwrap_or(master);
        let channel_tree = SeedTree::new(channel_master);
        let streams = Stream::ALL
            .iter()
            .map(|&s| {
                let t = if s == Stream::Channel { channel_tree } else { tree };
                (s.name().to_string(), t.seed(s, &[]))
            })
            .collect();
        Self {
            master_seed: master,
            parity_seed: config.parity_seed(),
            channel_master,
            streams,
            trials: (0..config.scenario.trials as u64).map(|t| tree.seed(Stream::Trial, &[t])).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub verb: Verb,
    /// Resolved configuration, every derived default written out.
    pub config: FileConfig,
    pub seeds: SeedRecord,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(FILE_NAME);
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{} is not a run manifest", path.display()))
    }
}
