use rand::seq::index;
use rand::Rng;

use super::{
    floor_mesh, wall_mesh, AugmentParams, ObjectGeometry, ObjectPlacement, ObjectSource, Scene,
    SceneConfig, SceneError, SceneSpec,
};
use crate::geom::{Aabb, Vec3};
use crate::meshio::sample_surface;
use crate::seed::stream;

/// Bottom gaps below this are treated as resting on the floor.
const FLOOR_EPS: f64 = 1e-9;

/// Maximum occupied height over a regular grid covering the room floor.
#[derive(Debug, Clone)]
pub struct Heightmap {
    cell: f64,
    nx: usize,
    ny: usize,
    heights: Vec<f64>,
}

impl Heightmap {
    pub fn new(width: f64, length: f64, cell: f64) -> Self {
        let nx = ((width / cell).ceil() as usize).max(1);
        let ny = ((length / cell).ceil() as usize).max(1);
        Heightmap {
            cell,
            nx,
            ny,
            heights: vec![0.0; nx * ny],
        }
    }

    fn cell_index(&self, x: f64, y: f64) -> usize {
        let ix = ((x / self.cell).floor().max(0.0) as usize).min(self.nx - 1);
        let iy = ((y / self.cell).floor().max(0.0) as usize).min(self.ny - 1);
        iy * self.nx + ix
    }

    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        self.heights[self.cell_index(x, y)]
    }

    /// Vertical translation that rests `profile` (shifted by `dx, dy`) on the
    /// floor or on whatever already occupies its cells.
    pub fn rest_offset(&self, profile: &[Vec3], dx: f64, dy: f64) -> f64 {
        let zmin = profile.iter().map(|p| p.z).fold(f64::INFINITY, f64::min);
        profile
            .iter()
            .map(|p| self.height_at(p.x + dx, p.y + dy) - p.z)
            .fold(-zmin, f64::max)
    }

    pub fn stamp(&mut self, profile: &[Vec3], offset: &Vec3) {
        for p in profile {
            let c = self.cell_index(p.x + offset.x, p.y + offset.y);
            let top = p.z + offset.z;
            if top > self.heights[c] {
                self.heights[c] = top;
            }
        }
    }
}

/// Result of placing one object.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlacementOutcome {
    pub translation: Vec3,
    /// The object rests on another object rather than the floor.
    pub stacked: bool,
    /// Stacking failed `placement_retries` times and a free floor spot was used.
    pub forced_floor: bool,
    /// Positions tried, including the accepted one.
    pub attempts: usize,
}

/// Places objects in order on a heightmap.
///
/// `propose(i, aabb)` returns an X-Y translation for object `i`. A stacked
/// object whose top would exceed `cfg.stack_limit` is rejected and a new
/// position requested. After `placement_retries` rejections only positions
/// where the object rests directly on the floor are accepted, for up to
/// `floor_retries` more proposals.
pub fn place_objects<F>(
    profiles: &[Vec<Vec3>],
    room: (f64, f64),
    cfg: &SceneConfig,
    mut propose: F,
) -> Result<Vec<PlacementOutcome>, SceneError>
where
    F: FnMut(usize, &Aabb) -> (f64, f64),
{
    let mut map = Heightmap::new(room.0, room.1, cfg.heightmap_cell);
    let mut out = Vec::with_capacity(profiles.len());
    for (i, profile) in profiles.iter().enumerate() {
        let aabb = Aabb::from_points(profile.iter());
        let mut placed = None;
        for attempt in 0..cfg.placement_retries + cfg.floor_retries {
            let forced = attempt >= cfg.placement_retries;
            let (dx, dy) = propose(i, &aabb);
            let dz = map.rest_offset(profile, dx, dy);
            let bottom = aabb.min.z + dz;
            let top = aabb.max.z + dz;
            let stacked = bottom > FLOOR_EPS;
            let ok = if forced {
                !stacked
            } else {
                !stacked || top <= cfg.stack_limit
            };
            if ok {
                placed = Some(PlacementOutcome {
                    translation: Vec3::new(dx, dy, dz),
                    stacked,
                    forced_floor: forced,
                    attempts: attempt + 1,
                });
                break;
            }
        }
        let outcome = placed.ok_or(SceneError::Unplaceable(i))?;
        map.stamp(profile, &outcome.translation);
        out.push(outcome);
    }
    Ok(out)
}

fn place_geometry(mut g: ObjectGeometry, p: &ObjectPlacement, id: i32) -> ObjectGeometry {
    p.params().apply(&mut g);
    let t = Vec3::from(p.position);
    g.map_positions(|q| q + t);
    g.set_object_id(id);
    g
}

/// Rebuilds the geometry of a scene from its spec.
pub fn realize_scene(spec: &SceneSpec, source: &dyn ObjectSource) -> Result<Scene, SceneError> {
    let objects = spec
        .placements
        .iter()
        .enumerate()
        .map(|(i, p)| Ok(place_geometry(source.geometry(p.object_ref)?, p, i as i32)))
        .collect::<Result<Vec<_>, SceneError>>()?;
    Ok(Scene {
        spec: spec.clone(),
        objects,
        floor: floor_mesh(spec.room_width, spec.room_length),
        walls: wall_mesh(spec.room_width, spec.room_length, spec.wall_height),
    })
}

/// Generates one randomized room from `seed`.
///
/// Picks 12-16 distinct objects, augments each, sorts them by descending
/// X-Y footprint, sizes a rectangular room from the footprint sum, and
/// stacks the objects at uniform random positions on a heightmap.
pub fn assemble_scene(
    source: &dyn ObjectSource,
    seed: u64,
    cfg: &SceneConfig,
) -> Result<Scene, SceneError> {
    if source.len() < cfg.max_objects {
        return Err(SceneError::ObjectSetTooSmall {
            have: source.len(),
            need: cfg.max_objects,
        });
    }
    let mut rng = stream(seed);
    let k = rng.random_range(cfg.min_objects..=cfg.max_objects);
    let refs = index::sample(&mut rng, source.len(), k).into_vec();

    let mut picked = Vec::with_capacity(k);
    for &r in &refs {
        let mut g = source.geometry(r)?;
        let params = AugmentParams::sample(&mut rng, source.is_harmonic(r), &cfg.augment);
        params.apply(&mut g);
        let aabb = g.aabb();
        picked.push((r, params, g, aabb));
    }
    // stable: equal footprints keep pick order
    picked.sort_by(|a, b| b.3.xy_area().total_cmp(&a.3.xy_area()));

    let footprint: f64 = picked.iter().map(|o| o.3.xy_area()).sum();
    let factor = rng.random_range(cfg.room_area_factor.0..=cfg.room_area_factor.1);
    let aspect = rng.random_range(cfg.aspect_ratio.0..=cfg.aspect_ratio.1);
    let wall_height = rng.random_range(cfg.wall_height.0..=cfg.wall_height.1);
    let area = factor * footprint;
    let max_w = picked.iter().map(|o| o.3.extent().x).fold(0.0, f64::max);
    let max_l = picked.iter().map(|o| o.3.extent().y).fold(0.0, f64::max);
    let width = (area * aspect).sqrt().max(max_w);
    let length = (area / aspect).sqrt().max(max_l);

    let profiles: Vec<Vec<Vec3>> = picked
        .iter()
        .map(|(_, _, g, _)| match g {
            ObjectGeometry::Mesh(m) => {
                let mut pts = m.vertices.clone();
                if let Ok(s) = sample_surface(m, cfg.profile_samples, &mut rng) {
                    pts.extend(s.positions);
                }
                pts
            }
            ObjectGeometry::Points(p) => p.positions.clone(),
        })
        .collect();

    let outcomes = place_objects(&profiles, (width, length), cfg, |_, aabb| {
        let e = aabb.extent();
        let cx = uniform_or_mid(&mut rng, e.x / 2.0, width - e.x / 2.0);
        let cy = uniform_or_mid(&mut rng, e.y / 2.0, length - e.y / 2.0);
        let c = aabb.center();
        (cx - c.x, cy - c.y)
    })?;

    let mut placements = Vec::with_capacity(k);
    let mut objects = Vec::with_capacity(k);
    for (i, ((r, params, g, _), o)) in picked.into_iter().zip(&outcomes).enumerate() {
        let p = ObjectPlacement {
            object_ref: r,
            scale: params.scale,
            flip: params.flip,
            z_rotation: params.z_rotation,
            zy_swap: params.zy_swap,
            position: o.translation.into(),
        };
        let t = o.translation;
        let mut g = g;
        g.map_positions(|q| q + t);
        g.set_object_id(i as i32);
        objects.push(g);
        placements.push(p);
    }

    let spec = SceneSpec {
        room_width: width,
        room_length: length,
        wall_height,
        placements,
        seed,
    };
    Ok(Scene {
        floor: floor_mesh(width, length),
        walls: wall_mesh(width, length, wall_height),
        spec,
        objects,
    })
}

fn uniform_or_mid<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..=hi)
    } else {
        0.5 * (lo + hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harmonics::HarmonicCoefficients;
    use crate::meshio::normalize_unit_sphere;
    use crate::scenegen::ObjectList;
    use crate::seed::stream;

    /// Axis-aligned box `[0, w] x [0, w] x [0, h]` sampled on a grid.
    fn block(w: f64, h: f64) -> Vec<Vec3> {
        let mut pts = Vec::new();
        let n = 10;
        for i in 0..=n {
            for j in 0..=n {
                for k in 0..=n {
                    pts.push(Vec3::new(
                        w * i as f64 / n as f64,
                        w * j as f64 / n as f64,
                        h * k as f64 / n as f64,
                    ));
                }
            }
        }
        pts
    }

    #[test]
    fn tall_stack_is_resampled() {
        let cfg = SceneConfig::default();
        let profiles = vec![block(0.5, 1.2), block(0.5, 1.2)];
        let mut calls = 0;
        let out = place_objects(&profiles, (5.0, 5.0), &cfg, |i, _| {
            calls += 1;
            match (i, calls) {
                (0, _) => (1.0, 1.0),
                // first proposal for the second block lands on the first one
                (1, 2) => (1.0, 1.0),
                _ => (3.0, 3.0),
            }
        })
        .unwrap();
        assert_eq!(out[0].translation, Vec3::new(1.0, 1.0, 0.0));
        assert_eq!(out[1].attempts, 2);
        assert_eq!(out[1].translation, Vec3::new(3.0, 3.0, 0.0));
        assert!(!out[1].stacked);
    }

    #[test]
    fn low_stack_rests_on_top() {
        let cfg = SceneConfig::default();
        let profiles = vec![block(0.5, 0.8), block(0.3, 0.5)];
        let out = place_objects(&profiles, (5.0, 5.0), &cfg, |_, _| (1.0, 1.0)).unwrap();
        assert!(out[1].stacked);
        assert_eq!(out[1].attempts, 1);
        assert!((out[1].translation.z - 0.8).abs() < 1e-12);
    }

    #[test]
    fn forced_floor_after_retries() {
        let cfg = SceneConfig::default();
        let profiles = vec![block(0.5, 1.5), block(0.5, 1.5)];
        let mut n = 0;
        let out = place_objects(&profiles, (5.0, 5.0), &cfg, |i, _| {
            if i == 1 {
                n += 1;
            }
            if i == 1 && n > cfg.placement_retries + 3 {
                (3.0, 3.0)
            } else {
                (1.0, 1.0)
            }
        })
        .unwrap();
        assert!(out[1].forced_floor);
        assert_eq!(out[1].translation.z, 0.0);
    }

    #[test]
    fn unplaceable_reported() {
        let cfg = SceneConfig::default();
        let profiles = vec![block(0.5, 1.5), block(0.5, 1.5)];
        let err = place_objects(&profiles, (5.0, 5.0), &cfg, |_, _| (1.0, 1.0)).unwrap_err();
        assert!(matches!(err, SceneError::Unplaceable(1)));
    }

    fn harmonic_set(n: usize) -> ObjectList {
        let mut rng = stream(99);
        let objects = (0..n)
            .map(|i| {
                let c = HarmonicCoefficients::sample(&mut rng);
                let m = c.mesh(16, 32).unwrap().with_object_id(i as i32);
                ObjectGeometry::Mesh(normalize_unit_sphere(m).unwrap())
            })
            .collect();
        ObjectList {
            objects,
            harmonic: true,
        }
    }

    #[test]
    fn assembled_scene_rules() {
        let set = harmonic_set(30);
        let cfg = SceneConfig::default();
        for seed in 0..8 {
            let scene = match assemble_scene(&set, seed, &cfg) {
                Ok(s) => s,
                Err(SceneError::Unplaceable(_)) => continue,
                Err(e) => panic!("{e}"),
            };
            scene.spec.check(&cfg).unwrap();
            let areas: Vec<f64> = scene.objects.iter().map(|o| o.aabb().xy_area()).collect();
            assert!(areas.windows(2).all(|w| w[0] >= w[1]));
            for o in &scene.objects {
                let b = o.aabb();
                assert!(b.min.x >= -1e-9 && b.min.y >= -1e-9);
                assert!(b.max.x <= scene.spec.room_width + 1e-9);
                assert!(b.max.y <= scene.spec.room_length + 1e-9);
                assert!(b.min.z >= -1e-9);
                if b.min.z > 1e-6 {
                    assert!(b.max.z <= cfg.stack_limit + 1e-9);
                }
            }
            let again = realize_scene(&scene.spec, &set).unwrap();
            assert_eq!(again.objects, scene.objects);
        }
    }

    #[test]
    fn small_set_rejected() {
        let set = harmonic_set(10);
        assert!(matches!(
            assemble_scene(&set, 0, &SceneConfig::default()),
            Err(SceneError::ObjectSetTooSmall { have: 10, need: 16 })
        ));
    }

    #[test]
    fn deterministic() {
        let set = harmonic_set(20);
        let cfg = SceneConfig::default();
        let a = assemble_scene(&set, 5, &cfg).map(|s| s.spec);
        let b = assemble_scene(&set, 5, &cfg).map(|s| s.spec);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
