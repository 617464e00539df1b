use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ObjectGeometry;
use crate::geom::{rotation_z, Vec3};
use crate::meshio::SurfaceMesh;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentConfig {
    pub scale_range: (f64, f64),
    pub flip_probability: f64,
    /// Only applied to harmonics objects.
    pub swap_probability: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            scale_range: (0.7, 1.5),
            flip_probability: 0.5,
            swap_probability: 0.5,
        }
    }
}

/// Per-object augmentation, applied in field order: uniform scale,
/// left-right flip (negate X), rotation about +Z, then Z/Y swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentParams {
    pub scale: f64,
    pub flip: bool,
    pub z_rotation: f64,
    pub zy_swap: bool,
}

impl AugmentParams {
    pub fn identity() -> Self {
        AugmentParams {
            scale: 1.0,
            flip: false,
            z_rotation: 0.0,
            zy_swap: false,
        }
    }

    pub fn sample<R: Rng + ?Sized>(rng: &mut R, is_harmonic: bool, cfg: &AugmentConfig) -> Self {
        let (lo, hi) = cfg.scale_range;
        let scale = rng.random_range(lo..=hi);
        let flip = rng.random_bool(cfg.flip_probability);
        let z_rotation = rng.random_range(0.0..TAU);
        // always drawn so every object consumes the same amount of randomness
        let swap = rng.random_bool(cfg.swap_probability);
        AugmentParams {
            scale,
            flip,
            z_rotation,
            zy_swap: swap && is_harmonic,
        }
    }

    pub fn apply_point(&self, p: &Vec3) -> Vec3 {
        let mut q = p * self.scale;
        if self.flip {
            q.x = -q.x;
        }
        q = rotation_z(self.z_rotation) * q;
        if self.zy_swap {
            q = Vec3::new(q.x, q.z, q.y);
        }
        q
    }

    pub fn apply(&self, geometry: &mut ObjectGeometry) {
        let rot = rotation_z(self.z_rotation);
        let (scale, flip, swap) = (self.scale, self.flip, self.zy_swap);
        geometry.map_positions(move |p| {
            let mut q = p * scale;
            if flip {
                q.x = -q.x;
            }
            q = rot * q;
            if swap {
                q = Vec3::new(q.x, q.z, q.y);
            }
            q
        });
    }
}

/// Samples augmentation parameters and applies them to a normalized mesh.
pub fn augment_object<R: Rng + ?Sized>(obj: &SurfaceMesh, rng: &mut R, is_harmonic: bool) -> SurfaceMesh {
    let params = AugmentParams::sample(rng, is_harmonic, &AugmentConfig::default());
    let mut g = ObjectGeometry::Mesh(obj.clone());
    params.apply(&mut g);
    match g {
        ObjectGeometry::Mesh(m) => m,
        ObjectGeometry::Points(_) => unreachable!(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    fn probe() -> Vec<Vec3> {
        vec![
            Vec3::new(0.3, -0.2, 0.9),
            Vec3::new(-0.5, 0.1, 0.0),
            Vec3::new(0.0, 0.7, -0.4),
        ]
    }

    #[test]
    fn scale_statistics() {
        let mut rng = stream(17);
        let cfg = AugmentConfig::default();
        let n = 50_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let p = AugmentParams::sample(&mut rng, false, &cfg);
            assert!((0.7..=1.5).contains(&p.scale));
            assert!((0.0..TAU).contains(&p.z_rotation));
            assert!(!p.zy_swap);
            sum += p.scale;
        }
        let mean = sum / n as f64;
        assert!((mean - 1.1).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn flip_is_an_involution() {
        let flip = AugmentParams {
            flip: true,
            ..AugmentParams::identity()
        };
        for p in probe() {
            let back = flip.apply_point(&flip.apply_point(&p));
            assert!((back - p).norm() < 1e-12);
        }
    }

    #[test]
    fn swap_permutes_axes_exactly() {
        let swap = AugmentParams {
            zy_swap: true,
            ..AugmentParams::identity()
        };
        for p in probe() {
            assert_eq!(swap.apply_point(&p), Vec3::new(p.x, p.z, p.y));
        }
    }

    #[test]
    fn swap_only_for_harmonics() {
        let cfg = AugmentConfig {
            swap_probability: 1.0,
            ..AugmentConfig::default()
        };
        assert!(AugmentParams::sample(&mut stream(1), true, &cfg).zy_swap);
        assert!(!AugmentParams::sample(&mut stream(1), false, &cfg).zy_swap);
    }

    #[test]
    fn mesh_and_point_paths_agree() {
        let params = AugmentParams::sample(&mut stream(3), true, &AugmentConfig::default());
        let mut g = ObjectGeometry::Points(crate::meshio::PointCloud::from_positions(probe()));
        params.apply(&mut g);
        for (a, p) in g.positions().iter().zip(probe()) {
            assert_eq!(*a, params.apply_point(&p));
        }
    }
}
