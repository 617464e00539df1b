use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{GenerationConfig, PipelineError, TOOL_VERSION};
use crate::scenegen::SceneSpec;

pub const MANIFEST_FILE: &str = "manifest.jsonl";

/// A file of the dataset, relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

impl FileEntry {
    /// Hashes `root/rel`.
    pub fn for_file(root: &Path, rel: &str) -> Result<Self, PipelineError> {
        let path = root.join(rel);
        let (sha256, bytes) = sha256_file(&path)?;
        Ok(FileEntry {
            path: rel.to_string(),
            sha256,
            bytes,
        })
    }

    /// `None` when the file exists and matches, otherwise what went wrong.
    pub fn verify(&self, root: &Path) -> Option<String> {
        match sha256_file(&root.join(&self.path)) {
            Err(e) => Some(e.to_string()),
            Ok((sha, _)) if sha != self.sha256 => Some(format!("{}: checksum mismatch", self.path)),
            Ok(_) => None,
        }
    }
}

/// Hex SHA-256 and byte length of a file.
pub fn sha256_file(path: &Path) -> Result<(String, u64), PipelineError> {
    let mut f = File::open(path).map_err(|e| PipelineError::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    let mut total = 0u64;
    loop {
        let n = f.read(&mut buf).map_err(|e| PipelineError::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub frame_index: usize,
    /// Ascending ids of the objects that made the view valid.
    pub qualifying_ids: Vec<i32>,
    /// Depth PNG, id PNG, sidecar.
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneRecord {
    pub scene_index: usize,
    /// Regenerations needed before the scene was accepted.
    pub retries: usize,
    /// Includes the seed the accepted scene was assembled from.
    pub spec: SceneSpec,
    /// Object-set indices in placement order; placement `i` has object id `i`.
    pub object_refs: Vec<usize>,
    /// Multi-view cloud, when generated.
    pub cloud: Option<FileEntry>,
    pub n_points: Option<usize>,
    pub frames: Vec<FrameRecord>,
}

impl SceneRecord {
    pub fn files(&self) -> impl Iterator<Item = &FileEntry> {
        self.cloud.iter().chain(self.frames.iter().flat_map(|f| f.files.iter()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub tool: String,
    pub tool_version: String,
    /// Generation settings; execution-only settings are reset.
    pub config: GenerationConfig,
    pub object_files: Vec<FileEntry>,
    pub n_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Header(Box<ManifestHeader>),
    Scene(Box<SceneRecord>),
}

/// A dataset index: one header line, then one line per scene in scene order.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub header: ManifestHeader,
    pub records: Vec<SceneRecord>,
    /// Directory the relative file paths resolve against (not serialized).
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn new(config: &GenerationConfig, object_files: Vec<FileEntry>, records: Vec<SceneRecord>, root: PathBuf) -> Self {
        DatasetManifest {
            header: ManifestHeader {
                tool: "roomgen".into(),
                tool_version: TOOL_VERSION.into(),
                config: config.snapshot(),
                object_files,
                n_records: records.len(),
            },
            records,
            root,
        }
    }

    pub fn to_jsonl(&self) -> Result<String, PipelineError> {
        let mut out = serde_json::to_string(&Line::Header(Box::new(self.header.clone())))?;
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(&Line::Scene(Box::new(r.clone())))?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Writes `manifest.jsonl` into the dataset root and returns its path.
    pub fn write(&self) -> Result<PathBuf, PipelineError> {
        let path = self.root.join(MANIFEST_FILE);
        let text = self.to_jsonl()?;
        let mut f = BufWriter::new(File::create(&path).map_err(|e| PipelineError::io(&path, e))?);
        f.write_all(text.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| PipelineError::io(&path, e))?;
        Ok(path)
    }

    /// Reads a manifest file; the dataset root is its directory.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let f = File::open(path).map_err(|e| PipelineError::io(path, e))?;
        let mut header = None;
        let mut records = Vec::new();
        for (k, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| PipelineError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(&line)
                .map_err(|e| PipelineError::Manifest(format!("{} line {}: {e}", path.display(), k + 1)))?;
            match (parsed, k) {
                (Line::Header(h), 0) => header = Some(*h),
                (Line::Scene(r), _) if header.is_some() => records.push(*r),
                _ => {
                    return Err(PipelineError::Manifest(format!(
                        "{} line {}: header must come first and only once",
                        path.display(),
                        k + 1
                    )))
                }
            }
        }
        let header = header.ok_or_else(|| PipelineError::Manifest(format!("{}: empty manifest", path.display())))?;
        if header.tool_version != TOOL_VERSION {
            log::warn!(
                "manifest written by version {}, reading with {}",
                header.tool_version,
                TOOL_VERSION
            );
        }
        Ok(DatasetManifest {
            header,
            records,
            root: path.parent().map(Path::to_path_buf).unwrap_or_default(),
        })
    }
}
