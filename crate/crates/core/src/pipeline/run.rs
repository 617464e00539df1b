use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::{
    DatasetManifest, FileEntry, FrameRecord, GenerationConfig, ObjectSet, ObjectSourceKind, PipelineError,
    SceneRecord, TOOL_VERSION,
};
use crate::meshio::ply::write_cloud;
use crate::raycast::{build_accelerator, depth_io, sample_valid_view, RaycastError, ViewSample};
use crate::scenegen::{assemble_scene, ObjectSource, Scene, SceneError};
use crate::seed::{derive_seed, derived_stream};

pub const OBJECTS_DIR: &str = "objects";
pub const SCENES_DIR: &str = "scenes";
pub const FRAMES_DIR: &str = "frames";
pub const RECORDS_DIR: &str = "records";
/// Generation settings of the dataset in a directory, used to refuse mixing runs.
pub const RUN_CONFIG_FILE: &str = "run_config.toml";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Generate only the first `limit` scenes.
    pub limit: Option<usize>,
}

/// Seed of scene `index` on regeneration `attempt` (0 = first try).
pub fn scene_seed(master: u64, index: usize, attempt: usize) -> u64 {
    let first = derive_seed(master, "scene", index as u64);
    if attempt == 0 {
        first
    } else {
        derive_seed(first, "retry", attempt as u64)
    }
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, PipelineError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| PipelineError::Config(format!("thread pool: {e}")))
}

fn write_atomic(path: &Path, write: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), PipelineError> {
    let tmp = path.with_extension("partial");
    let result = File::create(&tmp).and_then(|f| {
        let mut w = BufWriter::new(f);
        write(&mut w)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()
    });
    result
        .and_then(|_| std::fs::rename(&tmp, path))
        .map_err(|e| PipelineError::io(path, e))
}

fn ensure_dir(path: &Path) -> Result<(), PipelineError> {
    std::fs::create_dir_all(path).map_err(|e| PipelineError::io(path, e))
}

/// Loads the object set from `root/objects` when it was generated with the
/// same source, count and seed; otherwise generates and writes it.
pub fn prepare_objects(cfg: &GenerationConfig, root: &Path) -> Result<(ObjectSet, Vec<FileEntry>), PipelineError> {
    let dir = root.join(OBJECTS_DIR);
    let reusable = cfg.object_source != ObjectSourceKind::Cad && dir.join(super::objects::OBJECTS_META).exists();
    if reusable {
        if let Ok((set, meta)) = ObjectSet::load(&dir, cfg) {
            let same = meta.source == cfg.object_source
                && meta.count == cfg.object_count()
                && meta.master_seed == cfg.master_seed
                && meta.tool_version == TOOL_VERSION;
            if same {
                log::info!("reusing {} objects from {}", set.len(), dir.display());
                let files = object_entries(&set, root)?;
                return Ok((set, files));
            }
        }
    }
    log::info!("generating {} {:?} objects", cfg.object_count(), cfg.object_source);
    let set = ObjectSet::generate(cfg)?;
    if let Some(r) = set.fractal_rejections() {
        let rate = set.len() as f64 / (set.len() + r) as f64;
        log::info!("fractal acceptance rate {rate:.3}");
    }
    set.write(&dir, cfg.master_seed)?;
    let files = object_entries(&set, root)?;
    Ok((set, files))
}

fn object_entries(set: &ObjectSet, root: &Path) -> Result<Vec<FileEntry>, PipelineError> {
    use super::objects::*;
    let names: &[&str] = match set {
        ObjectSet::Harmonics { .. } => &[HARMONICS_FILE, OBJECTS_META],
        ObjectSet::Fractal { .. } => &[FRACTALS_FILE, FRACTAL_SEEDS_FILE, OBJECTS_META],
        ObjectSet::Cad { .. } => &[CAD_LIST_FILE, OBJECTS_META],
    };
    names
        .iter()
        .map(|n| FileEntry::for_file(root, &format!("{OBJECTS_DIR}/{n}")))
        .collect()
}

fn check_run_config(cfg: &GenerationConfig, root: &Path) -> Result<(), PipelineError> {
    let path = root.join(RUN_CONFIG_FILE);
    let snapshot = cfg.snapshot().to_toml_string();
    match std::fs::read_to_string(&path) {
        Ok(existing) if existing != snapshot => Err(PipelineError::Config(format!(
            "{} holds a dataset generated with a different configuration",
            root.display()
        ))),
        Ok(_) => Ok(()),
        Err(_) => write_atomic(&path, |w| std::io::Write::write_all(w, snapshot.as_bytes())),
    }
}

/// Generates the whole dataset described by `cfg`.
pub fn run_generation(cfg: &GenerationConfig) -> Result<DatasetManifest, PipelineError> {
    run_with_options(cfg, &RunOptions::default())
}

/// [`run_generation`] with a scene limit. Scenes whose record and files are
/// already on disk and intact are reused, so an interrupted run can be resumed.
pub fn run_with_options(cfg: &GenerationConfig, opts: &RunOptions) -> Result<DatasetManifest, PipelineError> {
    cfg.validate()?;
    let root = cfg.output_dir.clone();
    for d in [OBJECTS_DIR, SCENES_DIR, FRAMES_DIR, RECORDS_DIR] {
        ensure_dir(&root.join(d))?;
    }
    check_run_config(cfg, &root)?;
    let pool = thread_pool(cfg.workers)?;
    pool.install(|| {
        let (set, object_files) = prepare_objects(cfg, &root)?;
        let n = opts.limit.map_or(cfg.scene_count(), |l| l.min(cfg.scene_count()));
        let records = (0..n)
            .into_par_iter()
            .map(|i| scene_job(i, &set, cfg, &root))
            .collect::<Result<Vec<_>, _>>()?;
        let manifest = DatasetManifest::new(cfg, object_files, records, root.clone());
        manifest.write()?;
        Ok(manifest)
    })
}

fn record_path(root: &Path, index: usize) -> PathBuf {
    root.join(RECORDS_DIR).join(format!("{index:06}.json"))
}

/// The stored record of scene `index`, if it exists and all its files verify.
fn existing_record(root: &Path, index: usize) -> Option<SceneRecord> {
    let text = std::fs::read_to_string(record_path(root, index)).ok()?;
    let rec: SceneRecord = serde_json::from_str(&text).ok()?;
    (rec.scene_index == index && rec.files().all(|f| f.verify(root).is_none())).then_some(rec)
}

enum Outcome {
    Done(Box<SceneRecord>),
    Rejected(String),
}

/// Generates (or reuses) scene `index`, regenerating rejected scenes from derived seeds.
pub fn scene_job(index: usize, set: &ObjectSet, cfg: &GenerationConfig, root: &Path) -> Result<SceneRecord, PipelineError> {
    if let Some(rec) = existing_record(root, index) {
        return Ok(rec);
    }
    for attempt in 0..=cfg.max_scene_retries {
        let seed = scene_seed(cfg.master_seed, index, attempt);
        match build_scene(index, seed, attempt, set, cfg, root)? {
            Outcome::Done(rec) => {
                let text = serde_json::to_string_pretty(&rec)? + "\n";
                write_atomic(&record_path(root, index), |w| std::io::Write::write_all(w, text.as_bytes()))?;
                return Ok(*rec);
            }
            Outcome::Rejected(why) => log::info!("scene {index} attempt {attempt} rejected: {why}"),
        }
    }
    Err(PipelineError::RetriesExhausted {
        index,
        attempts: cfg.max_scene_retries + 1,
    })
}

fn build_scene(
    index: usize,
    seed: u64,
    attempt: usize,
    set: &ObjectSet,
    cfg: &GenerationConfig,
    root: &Path,
) -> Result<Outcome, PipelineError> {
    let scene_err = |source: SceneError| PipelineError::Scene { index, source };
    let ray_err = |source: RaycastError| PipelineError::Raycast { index, source };
    let scene = match assemble_scene(set as &dyn ObjectSource, seed, &cfg.scene) {
        Ok(s) => s,
        Err(e @ SceneError::Unplaceable(_)) => return Ok(Outcome::Rejected(e.to_string())),
        Err(e) => return Err(scene_err(e)),
    };

    let mut views = Vec::new();
    if cfg.view_mode.single() {
        let bvh = build_accelerator(&scene.meshes().map_err(scene_err)?).map_err(ray_err)?;
        for f in 0..cfg.frames_per_scene {
            let mut rng = derived_stream(seed, "view", f as u64);
            match sample_valid_view(&scene, &bvh, &mut rng, &cfg.view) {
                Ok(v) => views.push(v),
                Err(e @ RaycastError::NoValidView { .. }) => return Ok(Outcome::Rejected(e.to_string())),
                Err(e) => return Err(ray_err(e)),
            }
        }
    }

    let (cloud, n_points) = if cfg.view_mode.multi() {
        let (entry, n) = write_scene_cloud(&scene, index, cfg, root)?;
        (Some(entry), Some(n))
    } else {
        (None, None)
    };
    let frames = views
        .iter()
        .enumerate()
        .map(|(f, v)| write_view(v, index, f, root))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(Outcome::Done(Box::new(SceneRecord {
        scene_index: index,
        retries: attempt,
        object_refs: scene.spec.placements.iter().map(|p| p.object_ref).collect(),
        spec: scene.spec,
        cloud,
        n_points,
        frames,
    })))
}

fn write_scene_cloud(scene: &Scene, index: usize, cfg: &GenerationConfig, root: &Path) -> Result<(FileEntry, usize), PipelineError> {
    let pc = scene
        .multiview_cloud(&cfg.scene)
        .map_err(|source| PipelineError::Scene { index, source })?;
    let rel = format!("{SCENES_DIR}/{index:06}.ply");
    write_atomic(&root.join(&rel), |w| write_cloud(&pc, w))?;
    Ok((FileEntry::for_file(root, &rel)?, pc.len()))
}

fn write_view(v: &ViewSample, index: usize, f: usize, root: &Path) -> Result<FrameRecord, PipelineError> {
    let stem = format!("{index:06}_{f:02}");
    let dir = root.join(FRAMES_DIR);
    depth_io::write_frame(&v.frame, &v.qualifying, &dir, &stem)
        .map_err(|source| PipelineError::Raycast { index, source })?;
    let files = depth_io::frame_paths(&dir, &stem)
        .iter()
        .map(|p| {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            FileEntry::for_file(root, &format!("{FRAMES_DIR}/{name}"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FrameRecord {
        frame_index: f,
        qualifying_ids: v.qualifying.clone(),
        files,
    })
}
