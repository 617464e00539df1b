use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::analysis::DiversityConfig;
use crate::crops::CropConfig;
use crate::fractal::FractalConfig;
use crate::harmonics::{DEFAULT_AZIMUTH_STEPS, DEFAULT_POLAR_STEPS};
use crate::raycast::ViewConfig;
use crate::scenegen::SceneConfig;

/// Environment variable that overrides `output_dir`.
pub const OUTPUT_DIR_ENV: &str = "ROOMGEN_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ObjectSourceKind {
    #[default]
    Harmonics,
    Fractal,
    Cad,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ViewMode {
    /// Voxelized whole-scene point clouds.
    #[default]
    Multi,
    /// Ray-cast depth frames.
    Single,
    Both,
}

impl ViewMode {
    pub fn multi(self) -> bool {
        matches!(self, ViewMode::Multi | ViewMode::Both)
    }

    pub fn single(self) -> bool {
        matches!(self, ViewMode::Single | ViewMode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarmonicsSettings {
    pub n_polar: usize,
    pub n_azimuth: usize,
}

impl Default for HarmonicsSettings {
    fn default() -> Self {
        HarmonicsSettings {
            n_polar: DEFAULT_POLAR_STEPS,
            n_azimuth: DEFAULT_AZIMUTH_STEPS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub object_source: ObjectSourceKind,
    pub n_objects: usize,
    pub n_scenes: usize,
    /// Scales `n_objects` (object-count ablations).
    pub object_multiplier: f64,
    /// Scales `n_scenes`.
    pub scene_multiplier: f64,
    pub view_mode: ViewMode,
    pub frames_per_scene: usize,
    pub master_seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Times a rejected scene is regenerated from a derived seed.
    pub max_scene_retries: usize,
    /// CAD files or directories searched for `.off`/`.obj` files.
    pub cad_paths: Vec<PathBuf>,
    pub harmonics: HarmonicsSettings,
    pub fractal: FractalConfig,
    pub scene: SceneConfig,
    pub view: ViewConfig,
    pub crop: CropConfig,
    pub diversity: DiversityConfig,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            object_source: ObjectSourceKind::Harmonics,
            n_objects: 10_000,
            n_scenes: 78_000,
            object_multiplier: 1.0,
            scene_multiplier: 1.0,
            view_mode: ViewMode::Multi,
            frames_per_scene: 1,
            master_seed: 0,
            output_dir: PathBuf::from("roomgen-out"),
            workers: 0,
            max_scene_retries: 20,
            cad_paths: Vec::new(),
            harmonics: HarmonicsSettings::default(),
            fractal: FractalConfig::default(),
            scene: SceneConfig::default(),
            view: ViewConfig::default(),
            crop: CropConfig::default(),
            diversity: DiversityConfig::default(),
        }
    }
}

fn scaled(n: usize, m: f64) -> usize {
    (n as f64 * m).round() as usize
}

impl GenerationConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        let cfg: GenerationConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a TOML file, then applies the output-directory override from the environment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        cfg.apply_env();
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn apply_env(&mut self) {
        if let Some(dir) = std::env::var_os(OUTPUT_DIR_ENV) {
            if !dir.is_empty() {
                self.output_dir = PathBuf::from(dir);
            }
        }
    }

    /// Object count after the multiplier.
    pub fn object_count(&self) -> usize {
        scaled(self.n_objects, self.object_multiplier)
    }

    /// Scene count after the multiplier.
    pub fn scene_count(&self) -> usize {
        scaled(self.n_scenes, self.scene_multiplier)
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |m: String| Err(PipelineError::Config(m));
        if !(self.object_multiplier > 0.0 && self.scene_multiplier > 0.0) {
            return fail("multipliers must be positive".into());
        }
        if self.object_source != ObjectSourceKind::Cad && self.object_count() < self.scene.max_objects {
            return fail(format!(
                "{} objects cannot fill scenes of up to {}",
                self.object_count(),
                self.scene.max_objects
            ));
        }
        if self.scene_count() == 0 {
            return fail("scene count must be positive".into());
        }
        let s = &self.scene;
        if s.min_objects == 0 || s.min_objects > s.max_objects {
            return fail(format!("object range {}..={}", s.min_objects, s.max_objects));
        }
        if !(s.voxel_size > 0.0 && s.structure_spacing > 0.0 && s.heightmap_cell > 0.0) {
            return fail("voxel size, structure spacing and heightmap cell must be positive".into());
        }
        if s.scene_points == 0 || s.points_per_object == 0 {
            return fail("point counts must be positive".into());
        }
        if self.view_mode.single() {
            if self.object_source == ObjectSourceKind::Fractal {
                return fail("fractal objects are point clouds and cannot be ray-cast".into());
            }
            if self.frames_per_scene == 0 {
                return fail("frames_per_scene must be positive".into());
            }
            if self.view.min_objects > s.min_objects {
                return fail(format!(
                    "views need {} objects but scenes may hold only {}",
                    self.view.min_objects, s.min_objects
                ));
            }
            self.view
                .intrinsics
                .validate()
                .map_err(|e| PipelineError::Config(e.to_string()))?;
        }
        if self.harmonics.n_polar < 3 || self.harmonics.n_azimuth < 3 {
            return fail("harmonics grid needs at least 3 steps per angle".into());
        }
        self.crop.validate().map_err(|e| PipelineError::Config(e.to_string()))?;
        Ok(())
    }

    /// The configuration as recorded in manifests: execution-only settings
    /// (output directory, worker count) are reset so they cannot change the bytes.
    pub fn snapshot(&self) -> GenerationConfig {
        GenerationConfig {
            output_dir: PathBuf::from("."),
            workers: 0,
            ..self.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_reference_scale() {
        let cfg = GenerationConfig::default();
        assert_eq!(cfg.object_count(), 10_000);
        assert_eq!(cfg.scene_count(), 78_000);
        cfg.validate().unwrap();
    }

    #[test]
    fn multiplier_scales_objects() {
        let cfg = GenerationConfig::from_toml_str("object_multiplier = 0.2\nscene_multiplier = 0.5").unwrap();
        assert_eq!(cfg.object_count(), 2000);
        assert_eq!(cfg.scene_count(), 39_000);
    }

    #[test]
    fn toml_round_trip_and_nested_knobs() {
        let text = "
            n_scenes = 20
            view_mode = \"both\"
            [scene]
            voxel_size = 0.05
            [view.intrinsics]
            fx = 500.0
        ";
        let cfg = GenerationConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.view_mode, ViewMode::Both);
        assert_eq!(cfg.scene.voxel_size, 0.05);
        assert_eq!(cfg.scene.points_per_object, 3000);
        assert_eq!(cfg.view.intrinsics.fx, 500.0);
        assert_eq!(cfg.view.intrinsics.width, 640);
        let back = GenerationConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(GenerationConfig::from_toml_str("bogus = 1").is_err());
        assert!(GenerationConfig::from_toml_str("n_objects = 10").is_err());
        assert!(GenerationConfig::from_toml_str("object_source = \"fractal\"\nview_mode = \"single\"").is_err());
        assert!(GenerationConfig::from_toml_str("[crop]\ndepth_ratio_range = [0.9, 0.6]").is_err());
    }
}
