//! Per-stage provenance manifests.
//!
//! `manifest-<stage>.txt` in the output directory lists the stage's inputs and
//! outputs with their SHA-256, the hash of the effective configuration and the
//! configuration hashes of the stages that produced the inputs. The
//! `timestamp` line is the only content that changes between identical runs.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use sha2::{Digest, Sha256};

pub const MANIFEST_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

pub fn manifest_path(dir: &Path, stage: &str) -> PathBuf {
    dir.join(format!("manifest-{stage}.txt"))
}

/// Parses key=value lines, skipping anything else.
pub fn parse(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn lookup<'a>(entries: &'a [(String, String)], key: &str) -> Option<&'a str> {
    entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
}

/// Stage and config hash of the manifest in `path`'s directory that lists
/// `path` among its outputs.
fn producer(path: &Path) -> Option<(String, String)> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name()?.to_str()?;
    let mut found: Vec<(String, String)> = Vec::new();
    for entry in fs::read_dir(dir).ok()?.flatten() {
        let fname = entry.file_name();
        let fname = fname.to_str().unwrap_or("");
        if !(fname.starts_with("manifest-") && fname.ends_with(".txt")) {
            continue;
        }
        let Ok(text) = fs::read_to_string(entry.path()) else { continue };
        let entries = parse(&text);
        let lists = entries.iter().any(|(k, v)| k.starts_with("output.") && !k.ends_with(".sha256") && v == name);
        if lists {
            if let (Some(stage), Some(hash)) = (lookup(&entries, "stage"), lookup(&entries, "config_hash")) {
                found.push((stage.to_string(), hash.to_string()));
            }
        }
    }
    found.sort();
    found.into_iter().next()
}

pub struct Manifest {
    stage: String,
    config: Vec<(String, String)>,
    inputs: Vec<(String, PathBuf)>,
    outputs: Vec<PathBuf>,
}

impl Manifest {
    pub fn new(stage: &str, config: Vec<(String, String)>) -> Self {
        Self {
            stage: stage.to_string(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> &mut Self {
        self.inputs.push((role.to_string(), path.to_path_buf()));
        self
    }

    pub fn output(&mut self, path: &Path) -> &mut Self {
        self.outputs.push(path.to_path_buf());
        self
    }

    pub fn config_hash(&self) -> String {
        let mut text = format!("stage={}\n", self.stage);
        for (k, v) in &self.config {
            text.push_str(&format!("{k}={v}\n"));
        }
        sha256_hex(text.as_bytes())
    }

    /// Writes the manifest into `dir` and returns its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let mut s = String::new();
        let mut line = |k: &str, v: &str| {
            s.push_str(k);
            s.push('=');
            s.push_str(v);
            s.push('\n');
        };
        line("manifest_version", &MANIFEST_VERSION.to_string());
        line("stage", &self.stage);
        line("config_hash", &self.config_hash());
        for (k, v) in &self.config {
            line(&format!("config.{k}"), v);
        }
        for (role, p) in &self.inputs {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            line(&format!("input.{role}"), name);
            line(&format!("input.{role}.sha256"), &file_sha256(p)?);
            if let Some((stage, hash)) = producer(p) {
                line(&format!("upstream.{role}.stage"), &stage);
                line(&format!("upstream.{role}.config_hash"), &hash);
            }
        }
        for p in &self.outputs {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or("");
            let key = name.replace(['.', '-'], "_");
            line(&format!("output.{key}"), name);
            line(&format!("output.{key}.sha256"), &file_sha256(p)?);
        }
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        line("timestamp", &secs.to_string());
        let path = manifest_path(dir, &self.stage);
        fs::write(&path, s).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Value of `key` in a manifest file.
pub fn read_value(path: &Path, key: &str) -> Result<Option<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(lookup(&parse(&text), key).map(str::to_string))
}
