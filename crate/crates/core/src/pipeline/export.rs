use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DatasetManifest, FileEntry, FrameRecord, ObjectSet, PipelineError, FRAMES_DIR};
use crate::crops::{crop_depth_rect, crop_knn, crop_pair_contrastive, pseudo_color, standard_augment, CropConfig};
use crate::meshio::ply::{read_ply_file, write_cloud};
use crate::meshio::PointCloud;
use crate::raycast::{build_accelerator, depth_io, sample_valid_view};
use crate::scenegen::{realize_scene, ObjectSource};
use crate::seed::derived_stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CropMode {
    /// One k-nearest-neighbor crop per scene cloud.
    Mae,
    /// Two overlapping crops per scene cloud.
    Contrastive,
    /// One window of the first depth frame of each scene.
    Depth,
}

fn write_ply(pc: &PointCloud, path: &Path) -> Result<PathBuf, PipelineError> {
    let f = std::fs::File::create(path).map_err(|e| PipelineError::io(path, e))?;
    write_cloud(pc, std::io::BufWriter::new(f)).map_err(|e| PipelineError::io(path, e))?;
    Ok(path.to_path_buf())
}

fn finish<R: rand::Rng + ?Sized>(pc: &PointCloud, rng: &mut R, cfg: &CropConfig) -> PointCloud {
    standard_augment(&pseudo_color(pc, rng, cfg), rng, &cfg.augment)
}

/// Writes pseudo-colored, augmented crops of the first `limit` scenes into
/// `out_dir`. Crops of scene `i` use the stream `(seed, "crop", i)`.
pub fn export_crops(
    manifest: &DatasetManifest,
    mode: CropMode,
    seed: u64,
    limit: Option<usize>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let cfg = manifest.header.config.crop;
    let n = limit.map_or(manifest.records.len(), |l| l.min(manifest.records.len()));
    let per_scene = manifest.records[..n]
        .par_iter()
        .map(|rec| -> Result<Vec<PathBuf>, PipelineError> {
            let i = rec.scene_index;
            let mut rng = derived_stream(seed, "crop", i as u64);
            let load_cloud = || -> Result<PointCloud, PipelineError> {
                let entry = rec
                    .cloud
                    .as_ref()
                    .ok_or_else(|| PipelineError::Manifest(format!("scene {i} has no point cloud")))?;
                let path = manifest.root.join(&entry.path);
                read_ply_file(&path)
                    .map(|d| d.cloud)
                    .map_err(|e| PipelineError::Manifest(format!("{}: {e}", path.display())))
            };
            let crop_err = |e: crate::crops::CropError| PipelineError::Manifest(format!("scene {i}: {e}"));
            match mode {
                CropMode::Mae => {
                    let c = crop_knn(&load_cloud()?, &mut rng, cfg.knn_count).map_err(crop_err)?;
                    Ok(vec![write_ply(&finish(&c, &mut rng, &cfg), &out_dir.join(format!("{i:06}_mae.ply")))?])
                }
                CropMode::Contrastive => {
                    let pair = crop_pair_contrastive(&load_cloud()?, &mut rng, &cfg).map_err(crop_err)?;
                    let a = finish(&pair.first, &mut rng, &cfg);
                    let b = finish(&pair.second, &mut rng, &cfg);
                    Ok(vec![
                        write_ply(&a, &out_dir.join(format!("{i:06}_a.ply")))?,
                        write_ply(&b, &out_dir.join(format!("{i:06}_b.ply")))?,
                    ])
                }
                CropMode::Depth => {
                    let stem = format!("{i:06}_00");
                    let (frame, _) = depth_io::read_frame(&manifest.root.join(FRAMES_DIR), &stem)
                        .map_err(|source| PipelineError::Raycast { index: i, source })?;
                    let c = crop_depth_rect(&frame, &mut rng, cfg.depth_ratio_range, cfg.max_attempts)
                        .map_err(crop_err)?;
                    Ok(vec![write_ply(&finish(&c.cloud, &mut rng, &cfg), &out_dir.join(format!("{i:06}_depth.ply")))?])
                }
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_scene.into_iter().flatten().collect())
}

/// Renders `frames` valid depth frames for each of the first `limit` scenes
/// of a dataset into `out_dir`. Frame `f` of a scene uses the same stream as
/// single-view generation, so the frames match a single-view run.
pub fn render_dataset_frames(
    manifest: &DatasetManifest,
    set: &ObjectSet,
    frames: usize,
    limit: Option<usize>,
    out_dir: &Path,
) -> Result<Vec<FrameRecord>, PipelineError> {
    std::fs::create_dir_all(out_dir).map_err(|e| PipelineError::io(out_dir, e))?;
    let view = manifest.header.config.view;
    let n = limit.map_or(manifest.records.len(), |l| l.min(manifest.records.len()));
    let per_scene = manifest.records[..n]
        .par_iter()
        .map(|rec| -> Result<Vec<FrameRecord>, PipelineError> {
            let i = rec.scene_index;
            let scene = realize_scene(&rec.spec, set as &dyn ObjectSource)
                .map_err(|source| PipelineError::Scene { index: i, source })?;
            let meshes = scene.meshes().map_err(|source| PipelineError::Scene { index: i, source })?;
            let bvh = build_accelerator(&meshes).map_err(|source| PipelineError::Raycast { index: i, source })?;
            (0..frames)
                .map(|f| {
                    let mut rng = derived_stream(rec.spec.seed, "view", f as u64);
                    let v = sample_valid_view(&scene, &bvh, &mut rng, &view)
                        .map_err(|source| PipelineError::Raycast { index: i, source })?;
                    let stem = format!("{i:06}_{f:02}");
                    let paths = depth_io::write_frame(&v.frame, &v.qualifying, out_dir, &stem)
                        .map_err(|source| PipelineError::Raycast { index: i, source })?;
                    let files = paths
                        .iter()
                        .map(|p| {
                            let name = p.file_name().and_then(|s| s.to_str()).unwrap_or_default();
                            FileEntry::for_file(out_dir, name)
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    Ok(FrameRecord {
                        frame_index: f,
                        qualifying_ids: v.qualifying,
                        files,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(per_scene.into_iter().flatten().collect())
}
