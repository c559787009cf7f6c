//! Record of a run, sufficient to reproduce it.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use labelrefine::refinement::PipelineConfig;
use labelrefine::rng::fnv1a;

use crate::args::{AnalyzeArgs, RefineArgs};
use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "command", content = "args")]
pub enum RecordedCommand {
    Analyze(AnalyzeArgs),
    Refine(RefineArgs),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub bytes: u64,
    /// FNV-1a of the contents, hex.
    pub fnv1a: String,
}

impl FileRecord {
    pub fn of(path: &Path, contents: &[u8]) -> Self {
        Self {
            path: path.to_path_buf(),
            bytes: contents.len() as u64,
            fnv1a: format!("{:016x}", fnv1a(contents)),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub invocation: RecordedCommand,
    /// Resolved pipeline configuration, seed included.
    pub config: PipelineConfig,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
    pub started_at: String,
    pub finished_at: String,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| CliError::Manifest {
            path: path.display().to_string(),
            source,
        })
    }
}

/// `report.json` → `report.manifest.json`.
pub fn default_manifest_path(report: &Path) -> PathBuf {
    let stem = report.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    report.with_file_name(format!("{stem}.manifest.json"))
}
