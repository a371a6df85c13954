//! Run manifests: everything needed to re-run a command and check that it
//! reproduces the same bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use iapvq::imageio::Digest;
use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::error::{CliError, CliResult};
use crate::input::{read_bytes, write_bytes};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> CliResult<Self> {
        Ok(Self {
            path: absolute(path),
            sha256: Digest::of(&read_bytes(path)?).to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// The command with every option resolved.
    pub invocation: Command,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Headline numbers from the run, for reading rather than replaying.
    pub results: BTreeMap<String, String>,
}

impl Manifest {
    pub fn sidecar_path(out: &Path) -> PathBuf {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        out.with_file_name(name)
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut json = serde_json::to_string_pretty(self).expect("manifest serializes");
        json.push('\n');
        write_bytes(path, json.as_bytes())
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        serde_json::from_slice(&read_bytes(path)?).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

pub fn absolute(path: &Path) -> PathBuf {
    std::path::absolute(path).unwrap_or_else(|_| path.to_path_buf())
}
