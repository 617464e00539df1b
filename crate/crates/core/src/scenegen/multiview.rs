use rand::seq::index;
use rand::Rng;

use super::{
    realize_scene, voxel_downsample, ObjectGeometry, ObjectSource, Scene, SceneConfig, SceneError,
    SceneSpec, FLOOR_ID, WALL_ID,
};
use crate::geom::Vec3;
use crate::meshio::{sample_surface, PointCloud};
use crate::seed::derived_stream;

/// Jittered-grid samples of the floor and the four walls: one point per
/// `spacing`-sized cell, uniform within the cell.
pub fn structure_points<R: Rng + ?Sized>(spec: &SceneSpec, spacing: f64, rng: &mut R) -> PointCloud {
    let (w, l, h) = (spec.room_width, spec.room_length, spec.wall_height);
    let mut positions = Vec::new();
    let mut ids = Vec::new();
    let mut grid = |a_len: f64, b_len: f64, id: i32, rng: &mut R, to_world: &dyn Fn(f64, f64) -> Vec3| {
        let na = cells(a_len, spacing);
        let nb = cells(b_len, spacing);
        for i in 0..na {
            for j in 0..nb {
                let a = ((i as f64 + rng.random::<f64>()) * spacing).min(a_len);
                let b = ((j as f64 + rng.random::<f64>()) * spacing).min(b_len);
                positions.push(to_world(a, b));
                ids.push(id);
            }
        }
    };
    grid(w, l, FLOOR_ID, rng, &|x, y| Vec3::new(x, y, 0.0));
    grid(w, h, WALL_ID, rng, &|x, z| Vec3::new(x, 0.0, z));
    grid(w, h, WALL_ID, rng, &|x, z| Vec3::new(x, l, z));
    grid(l, h, WALL_ID, rng, &|y, z| Vec3::new(0.0, y, z));
    grid(l, h, WALL_ID, rng, &|y, z| Vec3::new(w, y, z));
    PointCloud {
        positions,
        colors: None,
        object_ids: Some(ids),
    }
}

/// Cells of size `spacing` needed to cover `len`, ignoring float noise in the ratio.
fn cells(len: f64, spacing: f64) -> usize {
    ((len / spacing - 1e-9).ceil().max(1.0)) as usize
}

impl Scene {
    /// Surface samples of every object (`points_per_object` from each mesh;
    /// point-cloud objects contribute their points).
    pub fn object_points(&self, cfg: &SceneConfig) -> Result<Vec<PointCloud>, SceneError> {
        self.objects
            .iter()
            .enumerate()
            .map(|(i, o)| match o {
                ObjectGeometry::Mesh(m) => {
                    let mut rng = derived_stream(self.spec.seed, "surface", i as u64);
                    Ok(sample_surface(m, cfg.points_per_object, &mut rng)?)
                }
                ObjectGeometry::Points(p) => Ok(p.clone()),
            })
            .collect()
    }

    /// Object samples, floor and walls merged and voxel-downsampled, before
    /// the final fixed-size subsample.
    pub fn voxelized_cloud(&self, cfg: &SceneConfig) -> Result<PointCloud, SceneError> {
        let mut parts = self.object_points(cfg)?;
        let mut rng = derived_stream(self.spec.seed, "structure", 0);
        parts.push(structure_points(&self.spec, cfg.structure_spacing, &mut rng));
        let merged = PointCloud::concat(&parts);
        Ok(voxel_downsample(&merged, cfg.voxel_size))
    }

    /// The exported multi-view cloud: exactly `cfg.scene_points` points.
    pub fn multiview_cloud(&self, cfg: &SceneConfig) -> Result<PointCloud, SceneError> {
        let voxelized = self.voxelized_cloud(cfg)?;
        let mut rng = derived_stream(self.spec.seed, "subsample", 0);
        Ok(fixed_size_subsample(&voxelized, cfg.scene_points, &mut rng))
    }
}

/// Draws exactly `target` points: without replacement when enough exist
/// (original order kept), otherwise every point plus random repeats.
pub fn fixed_size_subsample<R: Rng + ?Sized>(pc: &PointCloud, target: usize, rng: &mut R) -> PointCloud {
    let n = pc.len();
    if n == 0 {
        return pc.clone();
    }
    let picks: Vec<usize> = if n >= target {
        let mut v = index::sample(rng, n, target).into_vec();
        v.sort_unstable();
        v
    } else {
        let mut v: Vec<usize> = (0..n).collect();
        v.extend((n..target).map(|_| rng.random_range(0..n)));
        v
    };
    pc.select(&picks)
}

/// Rebuilds the scene from its spec and returns its multi-view cloud.
pub fn finalize_multiview(
    spec: &SceneSpec,
    source: &dyn ObjectSource,
    cfg: &SceneConfig,
) -> Result<PointCloud, SceneError> {
    realize_scene(spec, source)?.multiview_cloud(cfg)
}
