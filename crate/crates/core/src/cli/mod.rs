//! Experiment runner behind the `ricci-lab` binary: configuration, run
//! directories with an atomically written manifest, and one function per
//! subcommand. Commands write human-readable output to the given writer and
//! return an [`ExitStatus`].

mod commands;
mod config;

pub use commands::{
    cmd_aperture, cmd_conjecture, cmd_decay_report, cmd_mp_lab, cmd_run, cmd_verify_exact, ApertureArgs,
    ConjectureArgs, DecayArgs, VerifyExactArgs,
};
pub use config::{
    default_decay_exponents, output_root, BcChoice, ChecksConfig, FlowConfig, GridConfig, OutputConfig, RunConfig,
    DEFAULT_OUTPUT_ROOT, OUTPUT_ROOT_ENV,
};

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::analysis::Verdict;
use crate::error::{Error, Result};

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitStatus {
    Pass = 0,
    CheckFailed = 1,
    ConfigError = 2,
    NumericalAbort = 3,
}

impl ExitStatus {
    pub fn code(self) -> i32 {
        self as i32
    }

    pub fn for_error(e: &Error) -> Self {
        if e.is_numerical() {
            ExitStatus::NumericalAbort
        } else {
            ExitStatus::ConfigError
        }
    }

    pub fn from_verdicts(verdicts: &[Verdict]) -> Self {
        if verdicts.iter().all(|v| v.passed) {
            ExitStatus::Pass
        } else {
            ExitStatus::CheckFailed
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestVerdict {
    pub check: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl From<&Verdict> for ManifestVerdict {
    fn from(v: &Verdict) -> Self {
        Self {
            check: v.check.clone(),
            passed: v.passed,
            value: v.value,
            tolerance: v.tolerance,
            detail: v.detail.clone(),
        }
    }
}

/// Record of one invocation, written as `manifest.toml` in the run directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub termination: String,
    pub exit_code: i32,
    pub wall_time_s: f64,
    pub steps: u64,
    pub t_final: f64,
    pub notes: Vec<String>,
    pub config: RunConfig,
    pub verdicts: Vec<ManifestVerdict>,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            termination: "not started".into(),
            exit_code: ExitStatus::ConfigError.code(),
            wall_time_s: 0.0,
            steps: 0,
            t_final: 0.0,
            notes: Vec::new(),
            config: config.clone(),
            verdicts: Vec::new(),
        }
    }
}

/// Directory holding the outputs of one run.
#[derive(Debug, Clone)]
pub struct RunDir {
    root: PathBuf,
}

impl RunDir {
    pub fn create(path: impl Into<PathBuf>) -> Result<Self> {
        let root = path.into();
        std::fs::create_dir_all(&root).map_err(|e| Error::io(&root, e))?;
        Ok(Self { root })
    }

    /// `<output root>/<config.output.name>`, or `out` when given.
    pub fn for_config(config: &RunConfig, out: Option<&Path>) -> Result<Self> {
        match out {
            Some(p) => Self::create(p),
            None => Self::create(output_root().join(&config.output.name)),
        }
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn snapshot_path(&self, t: f64) -> PathBuf {
        self.root.join("snapshots").join(format!("u_t{t}.csv"))
    }

    /// Writes via a temporary file and a rename, so readers never see a partial file.
    pub fn write_atomic(&self, name: &str, contents: &str) -> Result<PathBuf> {
        let target = self.file(name);
        let tmp = self.file(&format!(".{name}.tmp"));
        std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
        std::fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))?;
        Ok(target)
    }

    pub fn write_manifest(&self, manifest: &RunManifest) -> Result<PathBuf> {
        let text = toml::to_string(manifest).map_err(|e| Error::Parse(e.to_string()))?;
        self.write_atomic("manifest.toml", &text)
    }
}
