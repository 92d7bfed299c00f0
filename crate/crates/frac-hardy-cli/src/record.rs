//! Persistent run records: every invocation writes a `run_record.json` next
//! to its outputs, listing the command, the resolved parameters, the files it
//! emitted, and the error message if it failed. The record is the audit trail
//! that makes a directory of CSVs reproducible.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use frac_hardy::io::atomic_write;
use frac_hardy::{Params, Result};

/// What a single CLI invocation did: inputs, outputs, timing, outcome.
#[derive(Debug, Serialize)]
pub struct RunRecord {
    /// Subcommand name (`constants`, `exponent`, ...).
    pub command: String,
    /// Crate version that produced the record.
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    /// Problem parameters, once they were resolved (absent if the run failed
    /// before getting that far).
    pub params: Option<Params>,
    /// Snapshot of the effective configuration: parsed config file for
    /// `solve`, resolved flags for the other commands.
    pub config: Value,
    /// Every file this run wrote, relative to the output directory,
    /// including the record itself.
    pub outputs: Vec<String>,
    /// Error message when the run failed; `null` on success.
    pub error: Option<String>,
}

/// Current wall-clock time in RFC 3339 with second precision; the record is
/// the only output that carries timestamps, so CSV outputs stay byte-stable.
pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Accumulates output files and the config snapshot while a command runs, so
/// the record lists exactly what landed on disk even if the command errored
/// halfway through.
pub struct RunContext {
    out_dir: PathBuf,
    outputs: Vec<String>,
    pub params: Option<Params>,
    pub config: Value,
}

impl RunContext {
    pub fn new(out_dir: PathBuf) -> Self {
        RunContext {
            out_dir,
            outputs: Vec::new(),
            params: None,
            config: Value::Null,
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Resolve `name` inside the output directory and register it as emitted.
    /// The caller must actually write the file (via the returned path) before
    /// or right after registering; helpers below do both.
    pub fn register(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.out_dir.join(name)
    }

    /// Write `contents` atomically to `name` in the output directory.
    pub fn write_bytes(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        let path = self.register(name);
        atomic_write(&path, contents)
    }

    /// Serialize `value` as pretty JSON to `name` in the output directory.
    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| frac_hardy::Error::config(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Assemble and write the run record. Called exactly once, last, whether
    /// the command succeeded or failed.
    pub fn finish(
        mut self,
        command: &str,
        started_at: String,
        error: Option<String>,
    ) -> Result<()> {
        self.outputs.push("run_record.json".to_string());
        let record = RunRecord {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            started_at,
            finished_at: timestamp(),
            params: self.params,
            config: self.config,
            outputs: self.outputs,
            error,
        };
        let mut text = serde_json::to_string_pretty(&record)
            .map_err(|e| frac_hardy::Error::config(format!("serializing run record: {e}")))?;
        text.push('\n');
        atomic_write(&self.out_dir.join("run_record.json"), text.as_bytes())
    }
}
