//! Command-line driver: configuration, stage orchestration and output bundles.

pub mod bundle;
pub mod commands;
pub mod config;
pub mod domains;

use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;

pub use bundle::{Bundle, RunManifest};
pub use commands::{execute, Command};
pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "reifenberg",
    version,
    about = "Reifenberg flat domains and harmonic measure at desk scale"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub output: Option<PathBuf>,

    /// Root seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads; overrides REIFENBERG_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Ambient dimension d + 1 (2 or 3).
    #[arg(long, global = true)]
    pub dimension: Option<usize>,

    /// Base domain: half-space, ball or snowflake.
    #[arg(long, global = true)]
    pub domain: Option<String>,

    /// Blip slope.
    #[arg(long, global = true)]
    pub theta: Option<f64>,

    /// Snowflake generations.
    #[arg(long, global = true)]
    pub depth: Option<usize>,

    /// Enlargement parameter.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,

    /// Walks per estimate.
    #[arg(long, global = true)]
    pub walks: Option<usize>,

    /// Any configuration key, e.g. `--set harmonic.alpha=0.4`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Log filter (error, warn, info, debug).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,
}

impl Cli {
    /// Overrides in precedence order: `--set` pairs, then the named flags.
    pub fn overrides(&self) -> Result<Vec<(String, String)>> {
        let mut out = Vec::new();
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got {kv:?}"))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        let mut flag = |k: &str, v: Option<String>| {
            if let Some(v) = v {
                out.push((k.to_string(), v));
            }
        };
        flag(
            "output",
            self.output.as_ref().map(|p| format!("{:?}", p.display().to_string())),
        );
        flag("seed", self.seed.map(|v| v.to_string()));
        flag("dimension", self.dimension.map(|v| v.to_string()));
        flag("domain", self.domain.as_ref().map(|v| format!("{v:?}")));
        flag("snowflake.theta", self.theta.map(|v| format!("{v:?}")));
        flag("snowflake.depth", self.depth.map(|v| v.to_string()));
        flag("enlargement.epsilon", self.epsilon.map(|v| format!("{v:?}")));
        flag("harmonic.n", self.walks.map(|v| v.to_string()));
        Ok(out)
    }

    pub fn load_config(&self) -> Result<RunConfig> {
        config::load(self.config.as_deref(), &self.overrides()?)
    }
}

/// Thread count from the flag, else from `REIFENBERG_THREADS`.
pub fn thread_count(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("REIFENBERG_THREADS") {
        Ok(v) => {
            let n: usize = v
                .trim()
                .parse()
                .with_context(|| format!("REIFENBERG_THREADS = {v:?} is not a count"))?;
            anyhow::ensure!(n >= 1, "REIFENBERG_THREADS must be positive");
            Ok(Some(n))
        }
        Err(_) => Ok(None),
    }
}
