use std::collections::HashSet;

use rayon::prelude::*;
use serde::Serialize;

use super::DatasetManifest;
use crate::meshio::ply::read_ply_file;
use crate::raycast::depth_io::{read_png16, ID_SHIFT};
use crate::scenegen::{is_object_id, voxel_index};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// Scene index, or `None` for dataset-level problems.
    pub scene: Option<usize>,
    pub message: String,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub records: usize,
    pub files_checked: usize,
    /// Scenes whose clouds were checked for one point per voxel.
    pub voxel_checked: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ValidateOptions {
    /// Evenly spaced scenes checked for voxel uniqueness.
    pub voxel_sample: usize,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        ValidateOptions { voxel_sample: 16 }
    }
}

/// Re-checks a generated dataset against its manifest: checksums, object
/// counts, cloud sizes, depth-frame object counts, and voxel uniqueness on a
/// subset of scenes.
pub fn validate_dataset(manifest: &DatasetManifest, opts: &ValidateOptions) -> ValidationReport {
    let cfg = &manifest.header.config;
    let root = &manifest.root;
    let mut report = ValidationReport {
        records: manifest.records.len(),
        ..Default::default()
    };
    let mut dataset = |m: String| report.violations.push(Violation { scene: None, message: m });
    if manifest.header.n_records != manifest.records.len() {
        dataset(format!(
            "header announces {} records, found {}",
            manifest.header.n_records,
            manifest.records.len()
        ));
    }
    for f in &manifest.header.object_files {
        if let Some(m) = f.verify(root) {
            dataset(m);
        }
    }
    let n = manifest.records.len();
    let step = n.div_ceil(opts.voxel_sample.max(1)).max(1);

    let per_scene: Vec<(usize, bool, Vec<Violation>)> = manifest
        .records
        .par_iter()
        .enumerate()
        .map(|(k, rec)| {
            let mut v = Vec::new();
            let mut bad = |m: String| {
                v.push(Violation {
                    scene: Some(rec.scene_index),
                    message: m,
                })
            };
            if rec.scene_index != k {
                bad(format!("record {k} carries scene index {}", rec.scene_index));
            }
            let mut files = 0;
            let mut intact = true;
            for f in rec.files() {
                files += 1;
                if let Some(m) = f.verify(root) {
                    intact = false;
                    bad(m);
                }
            }
            let count = rec.spec.placements.len();
            if !(cfg.scene.min_objects..=cfg.scene.max_objects).contains(&count) {
                bad(format!("{count} objects"));
            }
            let check_voxels = k % step == 0;
            let mut voxel_checked = false;
            if let (Some(entry), true) = (&rec.cloud, intact) {
                match read_ply_file(root.join(&entry.path)) {
                    Err(e) => bad(format!("{}: {e}", entry.path)),
                    Ok(ply) => {
                        let pc = ply.cloud;
                        if pc.len() != cfg.scene.scene_points {
                            bad(format!("{}: {} points, expected {}", entry.path, pc.len(), cfg.scene.scene_points));
                        }
                        if check_voxels {
                            voxel_checked = true;
                            let keys: HashSet<_> =
                                pc.positions.iter().map(|p| voxel_index(p, cfg.scene.voxel_size)).collect();
                            if keys.len() != pc.len() {
                                bad(format!("{}: {} points share voxels", entry.path, pc.len() - keys.len()));
                            }
                        }
                    }
                }
            }
            for fr in &rec.frames {
                if fr.qualifying_ids.len() < cfg.view.min_objects {
                    bad(format!("frame {}: {} qualifying objects", fr.frame_index, fr.qualifying_ids.len()));
                }
                let Some(ids) = fr.files.get(1) else {
                    bad(format!("frame {}: missing id image", fr.frame_index));
                    continue;
                };
                if !intact {
                    continue;
                }
                match read_png16(&root.join(&ids.path)) {
                    Err(e) => bad(format!("{}: {e}", ids.path)),
                    Ok((_, _, data)) => {
                        let mut counts = std::collections::BTreeMap::new();
                        for &s in &data {
                            let id = s as i32 - ID_SHIFT;
                            if is_object_id(id) {
                                *counts.entry(id).or_insert(0usize) += 1;
                            }
                        }
                        let seen: Vec<i32> = counts
                            .into_iter()
                            .filter(|&(_, c)| c >= cfg.view.min_pixels)
                            .map(|(id, _)| id)
                            .collect();
                        if seen != fr.qualifying_ids {
                            bad(format!("{}: visible objects {seen:?} disagree with the record", ids.path));
                        }
                    }
                }
            }
            (files, voxel_checked, v)
        })
        .collect();

    for (files, voxels, v) in per_scene {
        report.files_checked += files;
        report.voxel_checked += voxels as usize;
        report.violations.extend(v);
    }
    report
}
