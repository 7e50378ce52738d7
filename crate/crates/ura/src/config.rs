//! Scenario files.
//!
//! A scenario file is TOML with the sections `scenario`, `channel`,
//! `detector`, `treecode`, `output`, `sweep` and `convergence`. Every key is
//! optional; unknown sections and keys are errors. Command-line overrides of
//! the form `section.key=value` are applied to the parsed document before it
//! is checked, so they obey the same rules.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use ura_core::channel::{ChannelMode, ChannelParams};
use ura_core::detector::{DetectorConfig, Policy};
use ura_core::rng::{SeedTree, Stream};
use ura_core::sim::{g_for_snr, ScenarioConfig};
use ura_core::tree_code::{TreeCodeSpec, DEFAULT_MAX_PATHS};

pub const SECTIONS: [&str; 7] = ["scenario", "channel", "detector", "treecode", "output", "sweep", "convergence"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Iid,
    Correlated,
}

impl From<ModeName> for ChannelMode {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::Iid => ChannelMode::Iid,
            ModeName::Correlated => ChannelMode::Correlated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyName {
    Bla,
    Random,
    Cyclic,
}

impl From<PolicyName> for Policy {
    fn from(p: PolicyName) -> Self {
        match p {
            PolicyName::Bla => Policy::Bla,
            PolicyName::Random => Policy::Random,
            PolicyName::Cyclic => Policy::Cyclic,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioSection {
    /// Defaults to `2 * k_a`.
    pub k_tot: Option<usize>,
    pub k_a: usize,
    pub m: usize,
    pub d: usize,
    /// Linear power; mutually exclusive with `snr_db`.
    pub g: Option<f64>,
    pub snr_db: Option<f64>,
    pub sigma2: f64,
    pub n_k: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub normalized_codebook: bool,
    pub max_paths: usize,
    /// Threshold relative to one user's activity power; unset means the
    /// absolute `detector.zeta` is used.
    pub zeta_rel: Option<f64>,
    /// Worker threads, 0 for one per core.
    pub threads: usize,
}

impl Default for ScenarioSection {
    fn default() -> Self {
        let r = ScenarioConfig::reference();
        Self {
            k_tot: None,
            k_a: r.k_a,
            m: r.m,
            d: r.d,
            g: None,
            snr_db: None,
            sigma2: r.sigma2,
            n_k: r.n_k,
            trials: r.trials,
            master_seed: r.master_seed,
            normalized_codebook: r.normalized_codebook,
            max_paths: DEFAULT_MAX_PATHS,
            zeta_rel: r.zeta_rel,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelSection {
    pub mode: ModeName,
    pub rho_r: f64,
    pub rho_t: f64,
    pub rician_k: f64,
    pub seed: Option<u64>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            mode: ModeName::Iid,
            rho_r: 0.0,
            rho_t: 0.0,
            rician_k: 0.0,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorSection {
    pub q_total: usize,
    pub q_mod: usize,
    pub zeta: f64,
    pub policy: PolicyName,
    /// Noise variance assumed by the detector; defaults to `scenario.sigma2`.
    pub sigma2: Option<f64>,
    pub resync_period: usize,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorConfig::default();
        Self {
            q_total: d.q_total,
            q_mod: d.q_mod,
            zeta: d.zeta,
            policy: PolicyName::Bla,
            sigma2: None,
            resync_period: d.resync_period,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeCodeSection {
    pub w: usize,
    pub s: usize,
    pub j: usize,
    pub profile: Vec<usize>,
    /// Unset means the parity stream of the master seed.
    pub parity_seed: Option<u64>,
}

impl Default for TreeCodeSection {
    fn default() -> Self {
        let t = TreeCodeSpec::reference(0);
        Self {
            w: t.w,
            s: t.s,
            j: t.j,
            profile: t.profile,
            parity_seed: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// Write `codebook.bin`.
    pub export_codebook: bool,
    /// Write sent and decoded messages of every trial as hex lists.
    pub export_messages: bool,
    /// Write one channel realization (trial 0, slot 0, first active user).
    pub export_channel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub snr_db: Vec<f64>,
    /// Antenna counts; empty means `scenario.m`.
    pub m: Vec<usize>,
    /// Channel modes; empty means `channel.mode`.
    pub modes: Vec<ModeName>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_db: vec![-10.0, 0.0, 10.0],
            m: Vec::new(),
            modes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConvergenceSection {
    pub policies: Vec<PolicyName>,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            policies: vec![PolicyName::Bla, PolicyName::Random],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FileConfig {
    pub scenario: ScenarioSection,
    pub channel: ChannelSection,
    pub detector: DetectorSection,
    pub treecode: TreeCodeSection,
    pub output: OutputSection,
    pub sweep: SweepSection,
    pub convergence: ConvergenceSection,
}

impl FileConfig {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        if overrides.is_empty() {
            return toml::from_str(text).context("invalid scenario configuration");
        }
        let mut table: toml::Table = toml::from_str(text).context("malformed scenario file")?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        for key in table.keys() {
            if !SECTIONS.contains(&key.as_str()) {
                bail!("unknown section `{key}`; expected one of {}", SECTIONS.join(", "));
            }
        }
        // round-trip through text so field errors point at the offending key
        let merged = toml::to_string(&table)?;
        toml::from_str(&merged).context("invalid scenario configuration")
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        Self::from_toml_str(&text, overrides).with_context(|| format!("in {}", path.display()))
    }

    /// Copy with every derived default written out.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        let s = &mut c.scenario;
        s.k_tot = Some(s.k_tot.unwrap_or(2 * s.k_a));
        let g = match (s.g, s.snr_db) {
            (Some(_), Some(_)) => bail!("scenario.g and scenario.snr_db are mutually exclusive"),
            (Some(g), None) => g,
            (None, Some(snr)) => g_for_snr(snr, s.sigma2),
            (None, None) => s.sigma2,
        };
        s.g = Some(g);
        s.snr_db = None;
        c.detector.sigma2 = Some(c.detector.sigma2.unwrap_or(c.scenario.sigma2));
        if c.sweep.m.is_empty() {
            c.sweep.m = vec![c.scenario.m];
        }
        if c.sweep.modes.is_empty() {
            c.sweep.modes = vec![c.channel.mode];
        }
        c.scenario_config()?.validate().map_err(|e| anyhow!("invalid scenario: {e}"))?;
        Ok(c)
    }

    /// Core scenario; call on a [`FileConfig::resolved`] copy.
    pub fn scenario_config(&self) -> Result<ScenarioConfig> {
        let s = &self.scenario;
        let t = &self.treecode;
        let d = &self.detector;
        let tree = TreeCodeSpec::new(t.w, t.s, t.j, t.profile.clone(), self.parity_seed())
            .map_err(|e| anyhow!("treecode: {e}"))?;
        Ok(ScenarioConfig {
            k_tot: s.k_tot.unwrap_or(2 * s.k_a),
            k_a: s.k_a,
            m: s.m,
            d: s.d,
            tree,
            g: s.g.unwrap_or(s.sigma2),
            sigma2: s.sigma2,
            channel: ChannelParams {
                mode: self.channel.mode.into(),
                rho_r: self.channel.rho_r,
                rho_t: self.channel.rho_t,
                rician_k: self.channel.rician_k,
                seed: self.channel.seed,
            },
            n_k: s.n_k,
            trials: s.trials,
            master_seed: s.master_seed,
            detector: DetectorConfig {
                q_total: d.q_total,
                q_mod: d.q_mod,
                zeta: d.zeta,
                policy: d.policy.into(),
                sigma2: d.sigma2.unwrap_or(s.sigma2),
                resync_period: d.resync_period,
            },
            zeta_rel: s.zeta_rel,
            normalized_codebook: s.normalized_codebook,
            max_paths: s.max_paths,
        })
    }

    pub fn parity_seed(&self) -> u64 {
        self.treecode
            .parity_seed
            .unwrap_or_else(|| SeedTree::new(self.scenario.master_seed).seed(Stream::Parity, &[]))
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }
}

/// Applies `section.key=value`; the value is read as a TOML literal, falling
/// back to a bare string.
pub fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override `{spec}` is not of the form section.key=value"))?;
    let (section, key) = path
        .trim()
        .split_once('.')
        .ok_or_else(|| anyhow!("override key `{path}` is not of the form section.key"))?;
    if !SECTIONS.contains(&section) {
        bail!("unknown section `{section}` in override `{spec}`");
    }
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    };
    let entry = table
        .entry(section.to_string())
        .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(sec) = entry else {
        bail!("`{section}` is not a section");
    };
    sec.insert(key.trim().to_string(), value);
    Ok(())
}
