use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::config::RunConfig;

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: RunConfig,
    pub seed: u64,
    pub code_version: String,
    pub wall_time_seconds: f64,
    pub dry_run: bool,
    pub outputs: Vec<PathBuf>,
    pub checks: Vec<CheckSummary>,
    pub passed: bool,
    pub exit_code: i32,
    pub error: Option<String>,
}

/// Collects outputs and checks while a command runs.
pub struct Recorder {
    pub command: String,
    pub config: RunConfig,
    pub dry_run: bool,
    start: Instant,
    pub outputs: Vec<PathBuf>,
    pub checks: Vec<CheckSummary>,
}

impl Recorder {
    pub fn new(command: impl Into<String>, config: RunConfig, dry_run: bool) -> Self {
        Self { command: command.into(), config, dry_run, start: Instant::now(), outputs: Vec::new(), checks: Vec::new() }
    }

    pub fn output(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    pub fn check(&mut self, name: impl Into<String>, passed: bool) {
        self.checks.push(CheckSummary { name: name.into(), passed });
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.config.out.join(name)
    }

    /// Writes `manifest_<label>.json` into the output directory.
    pub fn finish(self, exit_code: i32, error: Option<String>) -> std::io::Result<PathBuf> {
        std::fs::create_dir_all(&self.config.out)?;
        let label = self.command.replace(' ', "-");
        let path = self.config.out.join(format!("manifest_{label}.json"));
        let m = RunManifest {
            passed: self.checks.iter().all(|c| c.passed) && exit_code == 0,
            command: self.command,
            seed: self.config.seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: self.start.elapsed().as_secs_f64(),
            dry_run: self.dry_run,
            outputs: self.outputs,
            checks: self.checks,
            exit_code,
            error,
            config: self.config,
        };
        std::fs::write(&path, serde_json::to_string_pretty(&m)?)?;
        Ok(path)
    }
}
