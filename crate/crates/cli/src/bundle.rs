//! Output bundle: files written by the stages plus the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Clone, Debug, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct CertificateEntry {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub cli_version: String,
    pub core_version: String,
    pub config_sha256: String,
    pub config: RunConfig,
    pub seeds: BTreeMap<String, u64>,
    pub files: Vec<FileEntry>,
    pub constants: BTreeMap<String, f64>,
    pub certificates: Vec<CertificateEntry>,
    pub stages: Vec<String>,
    /// `None` when every stage completed.
    pub failed_stage: Option<String>,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn all_pass(&self) -> bool {
        self.failed_stage.is_none() && self.certificates.iter().all(|c| c.pass)
    }
}

/// Collects outputs under one directory. Nothing time- or host-dependent is
/// recorded, so identical inputs give identical bundles.
pub struct Bundle {
    dir: PathBuf,
    manifest: RunManifest,
}

impl Bundle {
    pub fn create(cfg: &RunConfig, command: &str) -> Result<Self> {
        fs::create_dir_all(&cfg.output).with_context(|| format!("creating {}", cfg.output.display()))?;
        let mut seeds = BTreeMap::new();
        seeds.insert("root".to_string(), cfg.seed);
        Ok(Bundle {
            dir: cfg.output.clone(),
            manifest: RunManifest {
                command: command.to_string(),
                cli_version: env!("CARGO_PKG_VERSION").to_string(),
                core_version: reifenberg::VERSION.to_string(),
                config_sha256: cfg.hash(),
                config: cfg.clone(),
                seeds,
                files: Vec::new(),
                constants: BTreeMap::new(),
                certificates: Vec::new(),
                stages: Vec::new(),
                failed_stage: None,
                error: None,
            },
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &RunManifest {
        &self.manifest
    }

    /// Writes `contents` to `rel` (a `/`-separated relative path).
    pub fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest.files.retain(|f| f.path != rel);
        self.manifest.files.push(FileEntry {
            path: rel.to_string(),
            bytes: contents.len(),
            sha256: hex::encode(Sha256::digest(contents.as_bytes())),
        });
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(rel, &s)
    }

    /// Two-column plot data with a comment header.
    pub fn plot(&mut self, rel: &str, header: &str, rows: &[(f64, f64)]) -> Result<()> {
        let mut s = format!("# {header}\n");
        for (x, y) in rows {
            s.push_str(&format!("{x:.10e} {y:.10e}\n"));
        }
        self.write(rel, &s)
    }

    pub fn seed(&mut self, name: &str, value: u64) {
        self.manifest.seeds.insert(name.to_string(), value);
    }

    pub fn constant(&mut self, name: &str, value: f64) {
        self.manifest.constants.insert(name.to_string(), value);
    }

    pub fn certify(&mut self, name: &str, pass: bool, detail: String) {
        log::info!("certificate {name}: {} ({detail})", if pass { "pass" } else { "FAIL" });
        self.manifest.certificates.push(CertificateEntry {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    /// Runs one stage; on error the partial manifest is written before the
    /// error propagates with the stage name.
    pub fn stage<T>(&mut self, name: &str, f: impl FnOnce(&mut Bundle) -> Result<T>) -> Result<T> {
        log::info!("stage {name}");
        match f(self) {
            Ok(v) => {
                self.manifest.stages.push(name.to_string());
                Ok(v)
            }
            Err(e) => {
                self.manifest.failed_stage = Some(name.to_string());
                self.manifest.error = Some(format!("{e:#}"));
                self.write_manifest()?;
                Err(e.context(format!("stage {name} failed")))
            }
        }
    }

    fn write_manifest(&mut self) -> Result<()> {
        self.manifest.files.sort_by(|a, b| a.path.cmp(&b.path));
        let mut s = serde_json::to_string_pretty(&self.manifest)?;
        s.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, s).with_context(|| format!("writing {}", path.display()))
    }

    pub fn finish(mut self) -> Result<RunManifest> {
        self.write_manifest()?;
        Ok(self.manifest)
    }
}
