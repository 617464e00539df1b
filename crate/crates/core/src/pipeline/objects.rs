use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{GenerationConfig, HarmonicsSettings, ObjectSourceKind, PipelineError};
use crate::fractal::{parse_systems, write_systems, FractalConfig, FractalObject};
use crate::harmonics::{parse_coefficient_set, write_coefficient_set, HarmonicCoefficients};
use crate::meshio::{load_mesh, normalize_unit_sphere};
use crate::scenegen::{ObjectGeometry, ObjectSource, SceneError};
use crate::seed::{derive_seed, derived_stream};

/// File names inside the `objects/` directory of a dataset.
pub const OBJECTS_META: &str = "objects.json";
pub const HARMONICS_FILE: &str = "harmonics.txt";
pub const FRACTALS_FILE: &str = "fractals.txt";
pub const FRACTAL_SEEDS_FILE: &str = "fractal_seeds.txt";
pub const CAD_LIST_FILE: &str = "cad_files.txt";

/// A compact object set: objects are rebuilt from their parameters on demand.
#[derive(Debug, Clone)]
pub enum ObjectSet {
    Harmonics {
        coefficients: Vec<HarmonicCoefficients>,
        grid: HarmonicsSettings,
    },
    Fractal {
        objects: Vec<FractalObject>,
        cfg: FractalConfig,
    },
    Cad {
        paths: Vec<PathBuf>,
    },
}

/// Identifies which object set a directory holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSetMeta {
    pub source: ObjectSourceKind,
    pub count: usize,
    pub master_seed: u64,
    pub tool_version: String,
}

/// Collects `.off` and `.obj` files under `roots`, sorted by path.
pub fn find_cad_files(roots: &[PathBuf]) -> Result<Vec<PathBuf>, PipelineError> {
    let mut out = Vec::new();
    let mut pending: Vec<PathBuf> = roots.to_vec();
    while let Some(p) = pending.pop() {
        if p.is_dir() {
            for entry in std::fs::read_dir(&p).map_err(|e| PipelineError::io(&p, e))? {
                pending.push(entry.map_err(|e| PipelineError::io(&p, e))?.path());
            }
        } else {
            let ext = p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
            if matches!(ext.as_deref(), Some("off") | Some("obj")) {
                out.push(p);
            }
        }
    }
    out.sort();
    Ok(out)
}

impl ObjectSet {
    /// Generates the set described by `cfg`. Object `i` depends only on the
    /// master seed and `i`, so a smaller set is a prefix of a larger one.
    pub fn generate(cfg: &GenerationConfig) -> Result<Self, PipelineError> {
        let n = cfg.object_count();
        let seed = cfg.master_seed;
        match cfg.object_source {
            ObjectSourceKind::Harmonics => Ok(ObjectSet::Harmonics {
                coefficients: (0..n)
                    .map(|i| HarmonicCoefficients::sample(&mut derived_stream(seed, "object", i as u64)))
                    .collect(),
                grid: cfg.harmonics,
            }),
            ObjectSourceKind::Fractal => {
                let objects = (0..n)
                    .into_par_iter()
                    .map(|i| FractalObject::generate(derive_seed(seed, "object", i as u64), &cfg.fractal))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(ObjectSet::Fractal {
                    objects,
                    cfg: cfg.fractal,
                })
            }
            ObjectSourceKind::Cad => {
                let mut paths = find_cad_files(&cfg.cad_paths)?;
                if paths.len() < cfg.scene.max_objects {
                    return Err(PipelineError::Config(format!(
                        "found {} CAD files, scenes need at least {}",
                        paths.len(),
                        cfg.scene.max_objects
                    )));
                }
                paths.truncate(n.max(cfg.scene.max_objects));
                Ok(ObjectSet::Cad { paths })
            }
        }
    }

    pub fn kind(&self) -> ObjectSourceKind {
        match self {
            ObjectSet::Harmonics { .. } => ObjectSourceKind::Harmonics,
            ObjectSet::Fractal { .. } => ObjectSourceKind::Fractal,
            ObjectSet::Cad { .. } => ObjectSourceKind::Cad,
        }
    }

    /// Objects rejected by the fractal acceptance test before each accepted one.
    pub fn fractal_rejections(&self) -> Option<usize> {
        match self {
            ObjectSet::Fractal { objects, .. } => Some(objects.iter().map(|o| o.rejected).sum()),
            _ => None,
        }
    }

    /// Writes the parameter files into `dir`; returns them in a fixed order.
    pub fn write(&self, dir: &Path, master_seed: u64) -> Result<Vec<PathBuf>, PipelineError> {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
        let mut files: Vec<(PathBuf, String)> = Vec::new();
        match self {
            ObjectSet::Harmonics { coefficients, .. } => {
                files.push((dir.join(HARMONICS_FILE), write_coefficient_set(coefficients)));
            }
            ObjectSet::Fractal { objects, .. } => {
                let systems: Vec<_> = objects.iter().map(|o| o.system.clone()).collect();
                files.push((dir.join(FRACTALS_FILE), write_systems(&systems)));
                let seeds: String = objects.iter().map(|o| format!("{} {}\n", o.chaos_seed, o.rejected)).collect();
                files.push((dir.join(FRACTAL_SEEDS_FILE), seeds));
            }
            ObjectSet::Cad { paths } => {
                let list: String = paths.iter().map(|p| format!("{}\n", p.display())).collect();
                files.push((dir.join(CAD_LIST_FILE), list));
            }
        }
        let meta = ObjectSetMeta {
            source: self.kind(),
            count: self.len(),
            master_seed,
            tool_version: super::TOOL_VERSION.to_string(),
        };
        files.push((dir.join(OBJECTS_META), serde_json::to_string_pretty(&meta)? + "\n"));
        for (path, text) in &files {
            std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))?;
        }
        Ok(files.into_iter().map(|(p, _)| p).collect())
    }

    /// Reads a set written by [`ObjectSet::write`]. The grid and fractal
    /// settings come from `cfg`, the parameters from the files.
    pub fn load(dir: &Path, cfg: &GenerationConfig) -> Result<(Self, ObjectSetMeta), PipelineError> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| PipelineError::io(&p, e))
        };
        let meta: ObjectSetMeta = serde_json::from_str(&read(OBJECTS_META)?)?;
        let set = match meta.source {
            ObjectSourceKind::Harmonics => ObjectSet::Harmonics {
                coefficients: parse_coefficient_set(&read(HARMONICS_FILE)?)?,
                grid: cfg.harmonics,
            },
            ObjectSourceKind::Fractal => {
                let systems = parse_systems(&read(FRACTALS_FILE)?)?;
                let seeds = read(FRACTAL_SEEDS_FILE)?;
                let mut objects = Vec::with_capacity(systems.len());
                for (k, (system, line)) in systems.into_iter().zip(seeds.lines()).enumerate() {
                    let mut it = line.split_whitespace().map(str::parse::<u64>);
                    match (it.next(), it.next()) {
                        (Some(Ok(chaos_seed)), Some(Ok(rejected))) => objects.push(FractalObject {
                            system,
                            chaos_seed,
                            rejected: rejected as usize,
                        }),
                        _ => return Err(PipelineError::Config(format!("{FRACTAL_SEEDS_FILE} line {}", k + 1))),
                    }
                }
                ObjectSet::Fractal {
                    objects,
                    cfg: cfg.fractal,
                }
            }
            ObjectSourceKind::Cad => ObjectSet::Cad {
                paths: read(CAD_LIST_FILE)?.lines().map(PathBuf::from).collect(),
            },
        };
        if set.len() != meta.count {
            return Err(PipelineError::Config(format!(
                "object files hold {} objects, metadata says {}",
                set.len(),
                meta.count
            )));
        }
        Ok((set, meta))
    }
}

impl ObjectSource for ObjectSet {
    fn len(&self) -> usize {
        match self {
            ObjectSet::Harmonics { coefficients, .. } => coefficients.len(),
            ObjectSet::Fractal { objects, .. } => objects.len(),
            ObjectSet::Cad { paths } => paths.len(),
        }
    }

    fn geometry(&self, index: usize) -> Result<ObjectGeometry, SceneError> {
        let wrap = |e: Box<dyn std::error::Error + Send + Sync>| SceneError::Object { index, source: e };
        match self {
            ObjectSet::Harmonics { coefficients, grid } => {
                let mesh = coefficients[index]
                    .mesh(grid.n_polar, grid.n_azimuth)
                    .map_err(|e| wrap(e.into()))?;
                Ok(ObjectGeometry::Mesh(normalize_unit_sphere(mesh).map_err(|e| wrap(e.into()))?))
            }
            ObjectSet::Fractal { objects, cfg } => Ok(ObjectGeometry::Points(
                objects[index].cloud(cfg).map_err(|e| wrap(e.into()))?,
            )),
            ObjectSet::Cad { paths } => {
                let mesh = load_mesh(&paths[index]).map_err(|e| wrap(e.into()))?;
                Ok(ObjectGeometry::Mesh(normalize_unit_sphere(mesh).map_err(|e| wrap(e.into()))?))
            }
        }
    }

    fn is_harmonic(&self, _index: usize) -> bool {
        matches!(self, ObjectSet::Harmonics { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(source: ObjectSourceKind, n: usize) -> GenerationConfig {
        GenerationConfig {
            object_source: source,
            n_objects: n,
            master_seed: 11,
            ..GenerationConfig::default()
        }
    }

    #[test]
    fn smaller_sets_are_prefixes() {
        let small = ObjectSet::generate(&cfg(ObjectSourceKind::Harmonics, 20)).unwrap();
        let big = ObjectSet::generate(&cfg(ObjectSourceKind::Harmonics, 50)).unwrap();
        match (small, big) {
            (ObjectSet::Harmonics { coefficients: a, .. }, ObjectSet::Harmonics { coefficients: b, .. }) => {
                assert_eq!(a[..], b[..20]);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn write_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for source in [ObjectSourceKind::Harmonics, ObjectSourceKind::Fractal] {
            let c = cfg(source, 16);
            let set = ObjectSet::generate(&c).unwrap();
            set.write(dir.path(), c.master_seed).unwrap();
            let (back, meta) = ObjectSet::load(dir.path(), &c).unwrap();
            assert_eq!(meta.count, 16);
            assert_eq!(meta.source, source);
            for i in [0, 7, 15] {
                assert_eq!(back.geometry(i).unwrap(), set.geometry(i).unwrap());
            }
        }
    }

    #[test]
    fn geometry_is_normalized() {
        let set = ObjectSet::generate(&cfg(ObjectSourceKind::Harmonics, 16)).unwrap();
        for i in 0..16 {
            let g = set.geometry(i).unwrap();
            let max = g.positions().iter().map(|p| p.norm()).fold(0.0, f64::max);
            assert!((max - 1.0).abs() < 1e-12);
        }
        assert!(set.is_harmonic(0));
    }
}
