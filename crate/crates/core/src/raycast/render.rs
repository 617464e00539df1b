use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{Bvh, CameraIntrinsics, Ray};
use crate::geom::{RigidPose, Vec3};
use crate::meshio::PointCloud;
use crate::scenegen::{is_object_id, NO_HIT_ID};

/// One rendered depth image. Row-major, `depth[v * width + u]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    /// Camera-frame z of the nearest hit in meters, 0 where nothing was hit.
    pub depth: Vec<f64>,
    /// Object id of the nearest hit, [`NO_HIT_ID`] where nothing was hit.
    pub id_map: Vec<i32>,
    pub intrinsics: CameraIntrinsics,
    /// World-from-camera.
    pub pose: RigidPose,
}

/// Casts one ray per pixel center. Rows are rendered in parallel.
pub fn render_depth(bvh: &Bvh, intr: &CameraIntrinsics, pose: &RigidPose) -> DepthFrame {
    render_pixels(bvh, intr, pose, |_, _| true)
}

/// Like [`render_depth`] but only for pixels where `include(u, v)` holds;
/// the others are left empty. Rendered pixels equal those of a full render.
pub fn render_pixels(
    bvh: &Bvh,
    intr: &CameraIntrinsics,
    pose: &RigidPose,
    include: impl Fn(u32, u32) -> bool + Sync,
) -> DepthFrame {
    let mut frame = DepthFrame {
        depth: vec![0.0; intr.pixel_count()],
        id_map: vec![NO_HIT_ID; intr.pixel_count()],
        intrinsics: *intr,
        pose: *pose,
    };
    frame.fill_pixels(bvh, include);
    frame
}

impl DepthFrame {
    /// Re-casts the rays of every pixel where `include(u, v)` holds.
    pub fn fill_pixels(&mut self, bvh: &Bvh, include: impl Fn(u32, u32) -> bool + Sync) {
        let w = self.width() as usize;
        let (intr, pose) = (self.intrinsics, self.pose);
        self.depth
            .par_chunks_mut(w)
            .zip(self.id_map.par_chunks_mut(w))
            .enumerate()
            .for_each(|(v, (drow, irow))| {
                for u in 0..w {
                    if !include(u as u32, v as u32) {
                        continue;
                    }
                    let ray = Ray {
                        origin: pose.translation,
                        dir: pose.transform_vector(&intr.pixel_ray(u as u32, v as u32)),
                    };
                    (drow[u], irow[u]) = match bvh.nearest(&ray) {
                        Some(hit) => (hit.t, hit.object_id),
                        None => (0.0, NO_HIT_ID),
                    };
                }
            });
    }

    pub fn width(&self) -> u32 {
        self.intrinsics.width
    }

    pub fn height(&self) -> u32 {
        self.intrinsics.height
    }

    pub fn at(&self, u: u32, v: u32) -> (f64, i32) {
        let k = v as usize * self.width() as usize + u as usize;
        (self.depth[k], self.id_map[k])
    }

    /// True when depth is non-negative and ids are missing exactly where depth is 0.
    pub fn is_consistent(&self) -> bool {
        self.depth
            .iter()
            .zip(&self.id_map)
            .all(|(&d, &id)| d >= 0.0 && (d == 0.0) == (id == NO_HIT_ID))
    }

    /// Pixel count of every placed object that appears in the frame.
    pub fn object_pixel_counts(&self) -> BTreeMap<i32, usize> {
        let mut counts = BTreeMap::new();
        for &id in &self.id_map {
            if is_object_id(id) {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Placed objects covering at least `min_pixels` pixels, ascending.
    pub fn qualifying_objects(&self, min_pixels: usize) -> Vec<i32> {
        self.object_pixel_counts()
            .into_iter()
            .filter(|&(_, n)| n >= min_pixels)
            .map(|(id, _)| id)
            .collect()
    }

    /// World-frame point of a pixel with a hit.
    pub fn lift(&self, u: u32, v: u32) -> Option<Vec3> {
        let (d, _) = self.at(u, v);
        (d > 0.0).then(|| self.pose.transform_point(&self.intrinsics.unproject(u, v, d)))
    }

    /// Lifts every valid pixel of the window `[u0, u1) x [v0, v1)` to world
    /// coordinates, carrying the object ids along.
    pub fn lift_window(&self, u0: u32, v0: u32, u1: u32, v1: u32) -> PointCloud {
        let mut positions = Vec::new();
        let mut ids = Vec::new();
        for v in v0..v1.min(self.height()) {
            for u in u0..u1.min(self.width()) {
                if let Some(p) = self.lift(u, v) {
                    positions.push(p);
                    ids.push(self.at(u, v).1);
                }
            }
        }
        PointCloud {
            positions,
            colors: None,
            object_ids: Some(ids),
        }
    }

    /// All valid pixels as a world-frame cloud.
    pub fn back_project(&self) -> PointCloud {
        self.lift_window(0, 0, self.width(), self.height())
    }
}

/// Largest depth disagreement when every valid pixel is lifted to 3D,
/// projected back through the intrinsics and re-cast against the scene.
/// Also fails (returns infinity) if a lifted point projects to a different
/// pixel or its re-cast ray misses.
pub fn reprojection_error(frame: &DepthFrame, bvh: &Bvh) -> f64 {
    let intr = &frame.intrinsics;
    let cam_from_world = frame.pose.inverse();
    (0..frame.height())
        .into_par_iter()
        .map(|v| {
            let mut worst = 0.0f64;
            for u in 0..frame.width() {
                let Some(p) = frame.lift(u, v) else { continue };
                let pc = cam_from_world.transform_point(&p);
                let Some((pu, pv)) = intr.project(&pc) else {
                    return f64::INFINITY;
                };
                if pu.round() != u as f64 || pv.round() != v as f64 {
                    return f64::INFINITY;
                }
                let ray = Ray {
                    origin: frame.pose.translation,
                    dir: frame.pose.transform_vector(&(pc / pc.z)),
                };
                match bvh.nearest(&ray) {
                    Some(hit) => worst = worst.max((hit.t - pc.z).abs()),
                    None => return f64::INFINITY,
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshio::SurfaceMesh;
    use crate::raycast::look_along;

    /// A 20x20 m wall in the plane x = 2 facing a camera at the origin looking along +X.
    fn wall_scene() -> (Bvh, RigidPose) {
        let wall = SurfaceMesh {
            vertices: vec![
                Vec3::new(2.0, -10.0, -10.0),
                Vec3::new(2.0, 10.0, -10.0),
                Vec3::new(2.0, 10.0, 10.0),
                Vec3::new(2.0, -10.0, 10.0),
            ],
            triangles: vec![[0, 1, 2], [0, 2, 3]],
            object_id: 3,
        };
        let bvh = Bvh::build(&[wall]);
        (bvh, look_along(Vec3::zeros(), Vec3::x(), Vec3::z()))
    }

    #[test]
    fn flat_wall_depth_is_z_not_range() {
        let (bvh, pose) = wall_scene();
        let frame = render_depth(&bvh, &CameraIntrinsics::default(), &pose);
        assert!(frame.is_consistent());
        let (center, id) = frame.at(319, 239);
        assert!((center - 2.0).abs() < 1e-6);
        assert_eq!(id, 3);
        for &(u, v) in &[(0, 0), (639, 0), (0, 479), (639, 479)] {
            assert!((frame.at(u, v).0 - 2.0).abs() < 1e-6);
        }
        assert_eq!(frame.qualifying_objects(64), vec![3]);
        assert!(reprojection_error(&frame, &bvh) < 1e-9);
        for p in frame.back_project().positions.iter().step_by(97) {
            assert!((p.x - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn empty_scene_renders_nothing() {
        let frame = render_depth(&Bvh::build(&[]), &CameraIntrinsics::default(), &RigidPose::identity());
        assert!(frame.depth.iter().all(|&d| d == 0.0));
        assert!(frame.id_map.iter().all(|&i| i == NO_HIT_ID));
        assert!(frame.back_project().is_empty());
    }
}
