use std::path::{Path, PathBuf};
use std::time::Duration;

use drk_core::checksum::file_sha256;
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> drk_core::Result<Self> {
        Ok(Self {
            path: path.to_path_buf(),
            sha256: file_sha256(path)?,
        })
    }
}

/// Record of one CLI run, written next to its outputs.
#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub duration_s: f64,
}

impl RunManifest {
    pub fn new(config: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            command_line: std::env::args().collect(),
            config,
            seed,
            threads: drk_core::par::current_threads(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            duration_s: 0.0,
        }
    }

    pub fn input(&mut self, path: &Path) -> drk_core::Result<()> {
        self.inputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> drk_core::Result<()> {
        self.outputs.push(FileDigest::of(path)?);
        Ok(())
    }

    pub fn write(&mut self, path: &Path, elapsed: Duration) -> std::io::Result<()> {
        self.duration_s = elapsed.as_secs_f64();
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(path, json + "\n")
    }
}

/// `dir/run_manifest.json` for directory outputs, `<file>.run_manifest.json`
/// otherwise.
pub fn manifest_path(out: &Path, is_dir: bool) -> PathBuf {
    if is_dir {
        out.join("run_manifest.json")
    } else {
        let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".run_manifest.json");
        out.with_file_name(name)
    }
}
