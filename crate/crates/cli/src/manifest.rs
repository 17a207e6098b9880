//! Run provenance: a manifest recording, per stage, the hashes of every
//! input consumed and artifact produced, plus timings and warnings.
//! Downstream stages verify their inputs against the producing stage's
//! recorded hashes, so stale or hand-edited artifacts fail loudly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageRecord {
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub duration_ms: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_hash: String,
    pub stages: BTreeMap<String, StageRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

/// Write via a temp file in the same directory, then rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::Stage(format!("cannot create {}: {e}", parent.display())))?;
    }
    let tmp = tmp_path(path);
    std::fs::write(&tmp, bytes)
        .map_err(|e| CliError::Stage(format!("cannot write {}: {e}", tmp.display())))?;
    std::fs::rename(&tmp, path)
        .map_err(|e| CliError::Stage(format!("cannot move {} into place: {e}", tmp.display())))
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

pub fn load_manifest(out_dir: &Path) -> Result<RunManifest> {
    let path = out_dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Ok(RunManifest::default());
    }
    let raw = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&raw)
        .map_err(|e| CliError::Input(format!("bad manifest {}: {e}", path.display())))
}

pub fn save_manifest(out_dir: &Path, manifest: &RunManifest) -> Result<()> {
    let mut body = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Stage(format!("cannot serialize manifest: {e}")))?;
    body.push('\n');
    write_atomic(&out_dir.join(MANIFEST_FILE), body.as_bytes())
}

/// Working state of one stage run: tracks consumed inputs and emitted
/// artifacts, and folds them into the manifest on completion.
pub struct StageCtx<'a> {
    pub out_dir: &'a Path,
    manifest: RunManifest,
    record: StageRecord,
    started: Instant,
}

impl<'a> StageCtx<'a> {
    pub fn new(out_dir: &'a Path, manifest: RunManifest) -> Self {
        StageCtx {
            out_dir,
            manifest,
            record: StageRecord::default(),
            started: Instant::now(),
        }
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.record.warnings.push(message.into());
    }

    /// Register an external input file (corpus, word lists, packs): it must
    /// exist; its hash is recorded.
    pub fn consume_external(&mut self, path: &Path) -> Result<PathBuf> {
        if !path.exists() {
            return Err(CliError::Input(format!(
                "{} does not exist",
                path.display()
            )));
        }
        let hash = sha256_file(path)?;
        self.record.inputs.insert(path.display().to_string(), hash);
        Ok(path.to_owned())
    }

    /// Register an artifact produced by an upstream stage. Errors name the
    /// prerequisite stage when the artifact is missing and reject hash
    /// mismatches as stale.
    pub fn consume_artifact(&mut self, producer: &str, rel: &str) -> Result<PathBuf> {
        let path = self.out_dir.join(rel);
        let missing = || {
            CliError::Input(format!(
                "missing artifact {rel}: run the '{producer}' stage first"
            ))
        };
        if !path.exists() {
            return Err(missing());
        }
        let recorded = self
            .manifest
            .stages
            .get(producer)
            .and_then(|s| s.outputs.get(rel))
            .ok_or_else(missing)?;
        let actual = sha256_file(&path)?;
        if &actual != recorded {
            return Err(CliError::Input(format!(
                "stale input {rel}: contents changed since '{producer}' ran; rerun it"
            )));
        }
        self.record.inputs.insert(rel.to_owned(), actual);
        Ok(path)
    }

    /// Write an artifact atomically and record its hash.
    pub fn emit_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(rel);
        write_atomic(&path, bytes)?;
        self.record
            .outputs
            .insert(rel.to_owned(), sha256_hex(bytes));
        Ok(())
    }

    /// Emit an artifact produced by a writer that needs a path (binary model
    /// files). The writer targets a temp file which is hashed and renamed.
    pub fn emit_with(&mut self, rel: &str, writer: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
        let path = self.out_dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Stage(format!("cannot create {}: {e}", parent.display())))?;
        }
        let tmp = tmp_path(&path);
        writer(&tmp)?;
        let hash = sha256_file(&tmp)?;
        std::fs::rename(&tmp, &path).map_err(|e| {
            CliError::Stage(format!("cannot move {} into place: {e}", tmp.display()))
        })?;
        self.record.outputs.insert(rel.to_owned(), hash);
        Ok(())
    }

    pub fn recorded_inputs(&self) -> &BTreeMap<String, String> {
        &self.record.inputs
    }

    /// Finish the stage: fold the record into the manifest and return it.
    pub fn finish(mut self, stage: &str) -> RunManifest {
        self.record.duration_ms = self.started.elapsed().as_millis() as u64;
        self.manifest.stages.insert(stage.to_owned(), self.record);
        self.manifest
    }
}
