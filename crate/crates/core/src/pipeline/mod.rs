//! Batch generation: configuration, the object set, per-scene jobs on a
//! worker pool, the JSONL manifest and dataset validation.
//!
//! Every random stream is derived from the master seed and the index of the
//! thing it produces, so outputs do not depend on the worker count or on the
//! order in which jobs finish.

mod config;
mod export;
mod manifest;
pub mod objects;
mod run;
mod validate;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use config::{GenerationConfig, HarmonicsSettings, ObjectSourceKind, ViewMode, OUTPUT_DIR_ENV};
pub use export::{export_crops, render_dataset_frames, CropMode};
pub use manifest::{sha256_file, DatasetManifest, FileEntry, FrameRecord, ManifestHeader, SceneRecord, MANIFEST_FILE};
pub use objects::ObjectSet;
pub use run::{
    prepare_objects, run_generation, run_with_options, scene_job, scene_seed, thread_pool, RunOptions, FRAMES_DIR,
    OBJECTS_DIR, RECORDS_DIR, SCENES_DIR,
};
pub use validate::{validate_dataset, ValidateOptions, ValidationReport, Violation};

use crate::fractal::FractalError;
use crate::harmonics::HarmonicsError;
use crate::raycast::RaycastError;
use crate::scenegen::SceneError;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("scene {index}: {source}")]
    Scene {
        index: usize,
        #[source]
        source: SceneError,
    },
    #[error("scene {index}: {source}")]
    Raycast {
        index: usize,
        #[source]
        source: RaycastError,
    },
    #[error("scene {index} rejected {attempts} times")]
    RetriesExhausted { index: usize, attempts: usize },
    #[error("manifest: {0}")]
    Manifest(String),
    #[error(transparent)]
    Fractal(#[from] FractalError),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
