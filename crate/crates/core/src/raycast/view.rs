use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{render_depth, render_pixels, yaw_pitch_pose, Bvh, CameraIntrinsics, DepthFrame, RaycastError};
use crate::geom::{Aabb, RigidPose, Vec3};
use crate::scenegen::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ViewConfig {
    pub intrinsics: CameraIntrinsics,
    /// Minimum horizontal distance between camera and walls (meters).
    pub wall_margin: f64,
    pub height_range: (f64, f64),
    /// Camera tilt range in degrees; positive looks up.
    pub pitch_range_deg: (f64, f64),
    pub min_objects: usize,
    /// Pixels an object must cover to count as visible.
    pub min_pixels: usize,
    pub max_attempts: usize,
}

impl Default for ViewConfig {
    fn default() -> Self {
        ViewConfig {
            intrinsics: CameraIntrinsics::default(),
            wall_margin: 0.3,
            height_range: (1.2, 1.8),
            pitch_range_deg: (-30.0, 10.0),
            min_objects: 7,
            min_pixels: 64,
            max_attempts: 100,
        }
    }
}

/// An accepted frame and the objects that made it acceptable.
#[derive(Debug, Clone)]
pub struct ViewSample {
    pub frame: DepthFrame,
    /// Ascending ids of objects covering at least `min_pixels` pixels.
    pub qualifying: Vec<i32>,
    /// Poses drawn, including the accepted one.
    pub attempts: usize,
}

/// Renders `pose` and returns the frame with its qualifying object ids.
pub fn evaluate_view(bvh: &Bvh, pose: &RigidPose, cfg: &ViewConfig) -> (DepthFrame, Vec<i32>) {
    let frame = render_depth(bvh, &cfg.intrinsics, pose);
    let ids = frame.qualifying_objects(cfg.min_pixels);
    (frame, ids)
}

/// Pixel rectangle `[u0, u1) x [v0, v1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelWindow {
    pub u0: u32,
    pub v0: u32,
    pub u1: u32,
    pub v1: u32,
}

impl PixelWindow {
    pub fn full(intr: &CameraIntrinsics) -> Self {
        PixelWindow {
            u0: 0,
            v0: 0,
            u1: intr.width,
            v1: intr.height,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.u1.saturating_sub(self.u0) as usize * self.v1.saturating_sub(self.v0) as usize
    }

    pub fn contains(&self, u: u32, v: u32) -> bool {
        (self.u0..self.u1).contains(&u) && (self.v0..self.v1).contains(&v)
    }
}

/// Pixels whose center rays can hit the convex hull of `points`, as seen
/// through `cam_from_world`. `None` when the hull lies behind the camera; the
/// whole frame when it crosses the camera plane.
pub fn projected_window<'a>(
    points: impl IntoIterator<Item = &'a Vec3>,
    cam_from_world: &RigidPose,
    intr: &CameraIntrinsics,
) -> Option<PixelWindow> {
    let mut lo = (f64::INFINITY, f64::INFINITY);
    let mut hi = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let (mut front, mut behind) = (false, false);
    for p in points {
        let c = cam_from_world.transform_point(p);
        match intr.project(&c) {
            Some((u, v)) if c.z > 1e-6 => {
                front = true;
                lo = (lo.0.min(u), lo.1.min(v));
                hi = (hi.0.max(u), hi.1.max(v));
            }
            _ => behind = true,
        }
    }
    if !front {
        return None;
    }
    if behind {
        return Some(PixelWindow::full(intr));
    }
    let span = |a: f64, b: f64, n: u32| {
        let first = (a - 1e-6).ceil().max(0.0);
        let last = (b + 1e-6).floor().min(n as f64 - 1.0);
        if last < first {
            (0, 0)
        } else {
            (first as u32, last as u32 + 1)
        }
    };
    let (u0, u1) = span(lo.0, hi.0, intr.width);
    let (v0, v1) = span(lo.1, hi.1, intr.height);
    Some(PixelWindow { u0, v0, u1, v1 })
}

/// Upper bound on the number of boxes that can cover `min_pixels` pixel
/// centers in a frame taken from `pose`, ignoring occlusion.
pub fn visible_upper_bound(boxes: &[Aabb], pose: &RigidPose, intr: &CameraIntrinsics, min_pixels: usize) -> usize {
    let cam_from_world = pose.inverse();
    boxes
        .iter()
        .filter(|b| {
            let corners: Vec<Vec3> = (0..8)
                .map(|k| {
                    Vec3::new(
                        if k & 1 == 0 { b.min.x } else { b.max.x },
                        if k & 2 == 0 { b.min.y } else { b.max.y },
                        if k & 4 == 0 { b.min.z } else { b.max.z },
                    )
                })
                .collect();
            projected_window(&corners, &cam_from_world, intr).is_some_and(|w| w.pixel_count() >= min_pixels)
        })
        .count()
}

/// Draws a camera pose inside the room: away from the walls, at standing
/// height, any heading, tilted within the pitch range.
pub fn sample_pose<R: Rng + ?Sized>(width: f64, length: f64, rng: &mut R, cfg: &ViewConfig) -> RigidPose {
    let m = cfg.wall_margin;
    // rooms narrower than twice the margin get the center line
    let x = if width > 2.0 * m { rng.random_range(m..width - m) } else { width / 2.0 };
    let y = if length > 2.0 * m { rng.random_range(m..length - m) } else { length / 2.0 };
    let (h0, h1) = cfg.height_range;
    let z = rng.random_range(h0..=h1);
    let yaw = rng.random_range(0.0..TAU);
    let (p0, p1) = cfg.pitch_range_deg;
    let pitch = rng.random_range(p0..=p1).to_radians();
    yaw_pitch_pose(Vec3::new(x, y, z), yaw, pitch)
}

/// Samples poses until one sees at least `cfg.min_objects` qualifying
/// objects. Poses that put the camera inside an object's bounding box, or
/// from which too few objects could possibly qualify, are skipped without
/// rendering but still count as attempts. Candidate poses are first rendered
/// only where objects can appear; the accepted frame is then completed.
pub fn sample_valid_view<R: Rng + ?Sized>(
    scene: &Scene,
    bvh: &Bvh,
    rng: &mut R,
    cfg: &ViewConfig,
) -> Result<ViewSample, RaycastError> {
    cfg.intrinsics.validate()?;
    if scene.object_count() < cfg.min_objects {
        return Err(RaycastError::TooFewObjects {
            have: scene.object_count(),
            need: cfg.min_objects,
        });
    }
    let boxes: Vec<Aabb> = scene.objects.iter().map(|o| o.aabb()).collect();
    for attempt in 1..=cfg.max_attempts {
        let pose = sample_pose(scene.spec.room_width, scene.spec.room_length, rng, cfg);
        if boxes.iter().any(|b| b.contains(&pose.translation)) {
            continue;
        }
        // an object can only be hit inside the window of its projected vertices
        let cam_from_world = pose.inverse();
        let windows: Vec<PixelWindow> = scene
            .objects
            .iter()
            .filter_map(|o| projected_window(o.positions(), &cam_from_world, &cfg.intrinsics))
            .filter(|w| w.pixel_count() >= cfg.min_pixels)
            .collect();
        if windows.len() < cfg.min_objects {
            continue;
        }
        let in_windows = |u, v| windows.iter().any(|w| w.contains(u, v));
        let mut frame = render_pixels(bvh, &cfg.intrinsics, &pose, in_windows);
        let qualifying = frame.qualifying_objects(cfg.min_pixels);
        if qualifying.len() >= cfg.min_objects {
            frame.fill_pixels(bvh, |u, v| !in_windows(u, v));
            return Ok(ViewSample {
                frame,
                qualifying,
                attempts: attempt,
            });
        }
    }
    Err(RaycastError::NoValidView {
        attempts: cfg.max_attempts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raycast::look_along;
    use crate::scenegen::{wall_mesh, WALL_ID};
    use crate::seed::stream;

    #[test]
    fn poses_respect_ranges() {
        let cfg = ViewConfig::default();
        let mut rng = stream(5);
        for _ in 0..2000 {
            let pose = sample_pose(4.0, 3.0, &mut rng, &cfg);
            let t = pose.translation;
            assert!((0.3..=3.7).contains(&t.x) && (0.3..=2.7).contains(&t.y));
            assert!((1.2..=1.8).contains(&t.z));
            let f = pose.transform_vector(&Vec3::z());
            let pitch = f.z.asin().to_degrees();
            assert!((-30.0 - 1e-9..=10.0 + 1e-9).contains(&pitch));
            assert!(pose.is_rigid(1e-12));
        }
    }

    #[test]
    fn upper_bound_never_undercounts() {
        use crate::meshio::SurfaceMesh;
        let mut rng = stream(12);
        let cfg = ViewConfig {
            intrinsics: CameraIntrinsics {
                fx: 60.0,
                fy: 60.0,
                cx: 39.5,
                cy: 29.5,
                width: 80,
                height: 60,
            },
            ..ViewConfig::default()
        };
        for _ in 0..30 {
            let mut meshes = Vec::new();
            let mut boxes = Vec::new();
            for id in 0..10 {
                let c = Vec3::new(rng.random_range(0.0..5.0), rng.random_range(0.0..5.0), rng.random_range(0.0..2.0));
                let s = rng.random_range(0.05..0.6);
                let m = SurfaceMesh {
                    vertices: vec![c, c + Vec3::new(s, 0.0, 0.0), c + Vec3::new(0.0, s, s), c + Vec3::new(s, s, 0.3 * s)],
                    triangles: vec![[0, 1, 2], [1, 3, 2]],
                    object_id: id,
                };
                boxes.push(m.aabb());
                meshes.push(m);
            }
            let bvh = Bvh::build(&meshes);
            for _ in 0..20 {
                let pose = sample_pose(5.0, 5.0, &mut rng, &cfg);
                let frame = render_depth(&bvh, &cfg.intrinsics, &pose);
                for min_pixels in [1, 16, 64] {
                    let seen = frame.qualifying_objects(min_pixels).len();
                    assert!(visible_upper_bound(&boxes, &pose, &cfg.intrinsics, min_pixels) >= seen);
                }
                let cam_from_world = pose.inverse();
                for m in &meshes {
                    let window = projected_window(&m.vertices, &cam_from_world, &cfg.intrinsics);
                    for v in 0..frame.height() {
                        for u in 0..frame.width() {
                            if frame.at(u, v).1 == m.object_id {
                                assert!(window.is_some_and(|w| w.contains(u, v)), "object {} at ({u}, {v})", m.object_id);
                            }
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn bare_wall_view_is_rejected() {
        let walls = wall_mesh(4.0, 3.0, 2.5);
        let bvh = Bvh::build(&[walls]);
        let pose = look_along(Vec3::new(0.3, 1.5, 1.5), -Vec3::x(), Vec3::z());
        let cfg = ViewConfig::default();
        let (frame, ids) = evaluate_view(&bvh, &pose, &cfg);
        assert!(ids.is_empty());
        assert!(frame.id_map.iter().all(|&i| i == WALL_ID || i < 0));
        assert!(frame.id_map.iter().any(|&i| i == WALL_ID));
    }
}
