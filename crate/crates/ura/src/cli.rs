//! Command-line interface.
//!
//! The output directory is the first of `--output-dir`, `output.dir` in the
//! scenario file, `$URA_OUTPUT_DIR`, and `ura-out`.

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::config::FileConfig;
use crate::experiments::{execute, replay, Artifacts};
use crate::manifest::{RunManifest, Verb};

pub const OUTPUT_ENV: &str = "URA_OUTPUT_DIR";
pub const DEFAULT_OUTPUT: &str = "ura-out";

#[derive(Debug, Parser)]
#[command(name = "ura", version, about = "Unsourced random access simulator over massive-MIMO channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Monte Carlo trials at one operating point
    Run(ExperimentArgs),
    /// Error rates over an SNR grid, per antenna count and channel mode
    Sweep(ExperimentArgs),
    /// Coordinate-selection policies on one shared slot
    Convergence(ExperimentArgs),
    /// Closed-form self-checks
    Validate(ExperimentArgs),
    /// Re-run the experiment recorded in a manifest
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Defaults to `replay/` next to the manifest
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Scenario file (TOML); built-in reference defaults when omitted
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override a key, `section.key=value`; repeatable
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Master seed; takes precedence over `--set scenario.master_seed=...`
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

impl ExperimentArgs {
    /// Resolved configuration and output directory.
    pub fn load(&self) -> Result<(FileConfig, PathBuf)> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("scenario.master_seed={seed}"));
        }
        let config = match &self.config {
            Some(path) => FileConfig::load(path, &overrides)?,
            None => FileConfig::from_toml_str("", &overrides)?,
        };
        let dir = output_dir(self.output_dir.as_deref(), config.output.dir.as_deref());
        Ok((config.resolved()?, dir))
    }
}

pub fn output_dir(flag: Option<&Path>, configured: Option<&Path>) -> PathBuf {
    flag.or(configured)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUTPUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT))
}

fn report(dir: &Path, out: &Artifacts) {
    println!("wrote {} file(s) to {}", out.files.len(), dir.display());
    for f in &out.files {
        println!("  {f}");
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let (verb, args) = match cli.command {
        Command::Run(a) => (Verb::Run, a),
        Command::Sweep(a) => (Verb::Sweep, a),
        Command::Convergence(a) => (Verb::Convergence, a),
        Command::Validate(a) => (Verb::Validate, a),
        Command::Replay { manifest, output_dir } => {
            let m = RunManifest::load(&manifest)?;
            let dir = output_dir.unwrap_or_else(|| {
                manifest.parent().unwrap_or_else(|| Path::new(".")).join("replay")
            });
            let out = replay(&m, &dir)?;
            report(&dir, &out);
            return Ok(());
        }
    };
    let (config, dir) = args.load()?;
    let out = execute(verb, &config, &dir)?;
    report(&dir, &out);
    Ok(())
}
