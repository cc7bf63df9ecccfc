//! `run.json`: the record of every command that wrote into an output
//! directory, and the lockfile that keeps two commands from writing at once.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::anyhow;
use deepjam_core::io::{read_json, write_json};
use deepjam_core::VarianceReport;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::{CliError, CliResult};

pub const RUN_MANIFEST: &str = "run.json";
pub const LOCK_FILE: &str = ".deepjam.lock";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub software_version: String,
    pub steps: Vec<RunStep>,
}

/// One command invocation. Paths are recorded as given on the command line.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunStep {
    pub command: String,
    pub config: Option<RunConfig>,
    pub seed: Option<u64>,
    pub dataset: Option<String>,
    pub subset: Option<String>,
    pub checkpoint: Option<String>,
    pub report: Option<VarianceReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loss_history: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variance_history: Vec<Vec<f64>>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    /// Appends `step` to `dir/run.json`, creating it if needed.
    pub fn append(dir: &Path, step: RunStep) -> CliResult<RunManifest> {
        let path = dir.join(RUN_MANIFEST);
        let mut manifest = if path.exists() {
            read_json::<RunManifest>(&path).map_err(|e| CliError::from(e).context("existing run manifest is unreadable"))?
        } else {
            RunManifest::default()
        };
        manifest.software_version = env!("CARGO_PKG_VERSION").to_string();
        manifest.steps.push(step);
        write_json(&path, &manifest)?;
        Ok(manifest)
    }

    pub fn read(dir: &Path) -> CliResult<RunManifest> {
        Ok(read_json(&dir.join(RUN_MANIFEST))?)
    }
}

/// Exclusive claim on an output directory, released on drop.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> CliResult<OutputLock> {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::runtime(anyhow!("cannot create {}: {e}", dir.display())))?;
        let path = dir.join(LOCK_FILE);
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(OutputLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(CliError::runtime(anyhow!(
                "{} is locked by another deepjam process; remove {} if that process is gone",
                dir.display(),
                path.display()
            ))),
            Err(e) => Err(CliError::runtime(anyhow!("cannot lock {}: {e}", dir.display()))),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps_accumulate() {
        let dir = tempfile::tempdir().unwrap();
        RunManifest::append(dir.path(), RunStep { command: "simulate".into(), seed: Some(1), ..Default::default() }).unwrap();
        RunManifest::append(dir.path(), RunStep { command: "train".into(), loss_history: vec![0.5, 0.25], ..Default::default() })
            .unwrap();
        let m = RunManifest::read(dir.path()).unwrap();
        assert_eq!(m.steps.len(), 2);
        assert_eq!(m.steps[1].loss_history, vec![0.5, 0.25]);
    }

    #[test]
    fn lock_is_exclusive_and_released() {
        let dir = tempfile::tempdir().unwrap();
        let lock = OutputLock::acquire(dir.path()).unwrap();
        assert_eq!(OutputLock::acquire(dir.path()).unwrap_err().exit_code(), crate::EXIT_RUNTIME);
        drop(lock);
        assert!(OutputLock::acquire(dir.path()).is_ok());
    }
}
