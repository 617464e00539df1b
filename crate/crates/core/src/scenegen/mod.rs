//! Room assembly: per-object augmentation, heightmap stacking, floor and
//! walls, and the voxelized multi-view point cloud.

mod assemble;
mod augment;
mod multiview;
mod voxel;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Aabb, Vec3};
use crate::meshio::{GeometryError, PointCloud, SurfaceMesh};

pub use assemble::{assemble_scene, place_objects, realize_scene, Heightmap, PlacementOutcome};
pub use augment::{augment_object, AugmentConfig, AugmentParams};
pub use multiview::{finalize_multiview, structure_points};
pub use voxel::{voxel_downsample, voxel_index};

/// Object id of the floor in meshes, point clouds and depth id maps.
pub const FLOOR_ID: i32 = -2;
/// Object id shared by the four walls.
pub const WALL_ID: i32 = -3;
/// Depth-frame id for pixels that hit nothing.
pub const NO_HIT_ID: i32 = -1;

/// True for ids that belong to placed objects rather than floor, walls or background.
pub fn is_object_id(id: i32) -> bool {
    id >= 0
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("object set has {have} objects, scenes need at least {need}")]
    ObjectSetTooSmall { have: usize, need: usize },
    #[error("object {0} could not be placed after all retries")]
    Unplaceable(usize),
    #[error("object {index}: {source}")]
    Object {
        index: usize,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

/// A normalized object ready for augmentation: a surface mesh (harmonics,
/// CAD) or a bare point cloud (fractals).
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectGeometry {
    Mesh(SurfaceMesh),
    Points(PointCloud),
}

impl ObjectGeometry {
    pub fn positions(&self) -> &[Vec3] {
        match self {
            ObjectGeometry::Mesh(m) => &m.vertices,
            ObjectGeometry::Points(p) => &p.positions,
        }
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_points(self.positions().iter())
    }

    pub fn map_positions(&mut self, f: impl Fn(&Vec3) -> Vec3) {
        match self {
            ObjectGeometry::Mesh(m) => m.map_vertices(f),
            ObjectGeometry::Points(p) => p.map_positions(f),
        }
    }

    pub fn set_object_id(&mut self, id: i32) {
        match self {
            ObjectGeometry::Mesh(m) => m.object_id = id,
            ObjectGeometry::Points(p) => {
                let n = p.len();
                p.object_ids = Some(vec![id; n]);
            }
        }
    }

    pub fn as_mesh(&self) -> Option<&SurfaceMesh> {
        match self {
            ObjectGeometry::Mesh(m) => Some(m),
            ObjectGeometry::Points(_) => None,
        }
    }
}

/// Random access to a normalized object set.
pub trait ObjectSource: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Object `index`, normalized into the unit sphere.
    fn geometry(&self, index: usize) -> Result<ObjectGeometry, SceneError>;

    /// Formula-driven harmonics get the extra Z/Y axis swap.
    fn is_harmonic(&self, index: usize) -> bool;
}

/// An in-memory object set.
#[derive(Debug, Clone, Default)]
pub struct ObjectList {
    pub objects: Vec<ObjectGeometry>,
    pub harmonic: bool,
}

impl ObjectSource for ObjectList {
    fn len(&self) -> usize {
        self.objects.len()
    }

    fn geometry(&self, index: usize) -> Result<ObjectGeometry, SceneError> {
        Ok(self.objects[index].clone())
    }

    fn is_harmonic(&self, _index: usize) -> bool {
        self.harmonic
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneConfig {
    pub min_objects: usize,
    pub max_objects: usize,
    /// Room floor area is this factor (drawn uniformly) times the summed
    /// X-Y footprint of the picked objects.
    pub room_area_factor: (f64, f64),
    /// Width / length ratio of the room.
    pub aspect_ratio: (f64, f64),
    pub wall_height: (f64, f64),
    /// Stacked objects may not reach above this height (meters).
    pub stack_limit: f64,
    pub placement_retries: usize,
    /// Extra attempts to find a free floor position once stacking failed.
    pub floor_retries: usize,
    pub heightmap_cell: f64,
    /// Surface samples added to mesh vertices when building stacking profiles.
    pub profile_samples: usize,
    pub augment: AugmentConfig,
    pub voxel_size: f64,
    pub points_per_object: usize,
    pub scene_points: usize,
    /// Grid pitch of the jittered floor and wall samples.
    pub structure_spacing: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        SceneConfig {
            min_objects: 12,
            max_objects: 16,
            room_area_factor: (3.0, 6.0),
            aspect_ratio: (0.5, 2.0),
            wall_height: (2.5, 3.0),
            stack_limit: 2.0,
            placement_retries: 50,
            floor_retries: 50,
            heightmap_cell: 0.05,
            profile_samples: 2000,
            augment: AugmentConfig::default(),
            voxel_size: 0.04,
            points_per_object: 3000,
            scene_points: 40000,
            structure_spacing: 0.03,
        }
    }
}

/// Where and how one object was placed. `position` is the translation
/// applied after the augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectPlacement {
    pub object_ref: usize,
    pub scale: f64,
    pub flip: bool,
    pub z_rotation: f64,
    pub zy_swap: bool,
    pub position: [f64; 3],
}

impl ObjectPlacement {
    pub fn params(&self) -> AugmentParams {
        AugmentParams {
            scale: self.scale,
            flip: self.flip,
            z_rotation: self.z_rotation,
            zy_swap: self.zy_swap,
        }
    }
}

/// Everything needed to rebuild a scene from its object set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub room_width: f64,
    pub room_length: f64,
    pub wall_height: f64,
    pub placements: Vec<ObjectPlacement>,
    pub seed: u64,
}

/// A realized scene. Object `i` carries object id `i`, the index of its placement.
#[derive(Debug, Clone)]
pub struct Scene {
    pub spec: SceneSpec,
    pub objects: Vec<ObjectGeometry>,
    pub floor: SurfaceMesh,
    pub walls: SurfaceMesh,
}

impl Scene {
    /// All triangle meshes of the scene (objects, floor, walls). Fails if any
    /// object is a bare point cloud.
    pub fn meshes(&self) -> Result<Vec<SurfaceMesh>, SceneError> {
        let mut out = Vec::with_capacity(self.objects.len() + 2);
        for (i, o) in self.objects.iter().enumerate() {
            match o {
                ObjectGeometry::Mesh(m) => out.push(m.clone()),
                ObjectGeometry::Points(_) => {
                    return Err(SceneError::Invalid(format!(
                        "object {i} is a point cloud and cannot be ray-cast"
                    )))
                }
            }
        }
        out.push(self.floor.clone());
        out.push(self.walls.clone());
        Ok(out)
    }

    pub fn object_count(&self) -> usize {
        self.objects.len()
    }
}

/// Floor rectangle at `z = 0` spanning `[0, width] x [0, length]`.
pub fn floor_mesh(width: f64, length: f64) -> SurfaceMesh {
    SurfaceMesh {
        vertices: vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(width, 0.0, 0.0),
            Vec3::new(width, length, 0.0),
            Vec3::new(0.0, length, 0.0),
        ],
        triangles: vec![[0, 1, 2], [0, 2, 3]],
        object_id: FLOOR_ID,
    }
}

/// The four perimeter walls as one mesh.
pub fn wall_mesh(width: f64, length: f64, height: f64) -> SurfaceMesh {
    let corners = [
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(width, 0.0, 0.0),
        Vec3::new(width, length, 0.0),
        Vec3::new(0.0, length, 0.0),
    ];
    let mut mesh = SurfaceMesh {
        vertices: Vec::with_capacity(16),
        triangles: Vec::with_capacity(8),
        object_id: WALL_ID,
    };
    for k in 0..4 {
        let a = corners[k];
        let b = corners[(k + 1) % 4];
        let up = Vec3::new(0.0, 0.0, height);
        let base = mesh.vertices.len() as u32;
        mesh.vertices.extend_from_slice(&[a, b, b + up, a + up]);
        mesh.triangles
            .extend_from_slice(&[[base, base + 1, base + 2], [base, base + 2, base + 3]]);
    }
    mesh
}

impl SceneSpec {
    /// Checks the structural rules every generated scene must satisfy.
    pub fn check(&self, cfg: &SceneConfig) -> Result<(), SceneError> {
        let k = self.placements.len();
        if !(cfg.min_objects..=cfg.max_objects).contains(&k) {
            return Err(SceneError::Invalid(format!(
                "{k} objects, expected {}..={}",
                cfg.min_objects, cfg.max_objects
            )));
        }
        let (lo, hi) = cfg.augment.scale_range;
        for (i, p) in self.placements.iter().enumerate() {
            if !(lo..=hi).contains(&p.scale) {
                return Err(SceneError::Invalid(format!("placement {i}: scale {}", p.scale)));
            }
            if !(0.0..std::f64::consts::TAU).contains(&p.z_rotation) {
                return Err(SceneError::Invalid(format!(
                    "placement {i}: rotation {}",
                    p.z_rotation
                )));
            }
        }
        if !(self.room_width > 0.0 && self.room_length > 0.0 && self.wall_height > 0.0) {
            return Err(SceneError::Invalid("non-positive room dimensions".into()));
        }
        Ok(())
    }
}
