//! Fractal point-cloud objects from random 3D iterated function systems.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{Mat3, Vec3};
use crate::meshio::{normalize_unit_sphere, PointCloud};
use crate::seed::{derive_seed, stream};

pub const MIN_MAPS: usize = 2;
pub const MAX_MAPS: usize = 8;
/// Iterates whose norm exceeds this are treated as divergence.
pub const DIVERGENCE_NORM: f64 = 1e6;
/// Floor applied to `|det|` before weights are normalized.
pub const WEIGHT_FLOOR: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum FractalError {
    #[error("an IFS needs {MIN_MAPS}..={MAX_MAPS} maps, got {0}")]
    MapCount(usize),
    #[error("IFS weights must be positive and sum to 1 (sum = {0})")]
    Weights(f64),
    #[error("chaos game diverged at iteration {0}")]
    Divergent(usize),
    #[error("no acceptable system after {0} attempts")]
    Exhausted(usize),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// One weighted affine map `x -> linear·x + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub linear: Mat3,
    pub offset: Vec3,
    pub weight: f64,
}

impl AffineMap {
    pub fn apply(&self, x: &Vec3) -> Vec3 {
        self.linear * x + self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IfsSystem {
    maps: Vec<AffineMap>,
}

impl IfsSystem {
    pub fn new(maps: Vec<AffineMap>) -> Result<Self, FractalError> {
        if !(MIN_MAPS..=MAX_MAPS).contains(&maps.len()) {
            return Err(FractalError::MapCount(maps.len()));
        }
        let sum: f64 = maps.iter().map(|m| m.weight).sum();
        if maps.iter().any(|m| !(m.weight > 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(FractalError::Weights(sum));
        }
        Ok(IfsSystem { maps })
    }

    /// Skips the map-count bound; used to probe single-map behaviour.
    #[cfg(test)]
    fn unchecked(maps: Vec<AffineMap>) -> Self {
        IfsSystem { maps }
    }

    pub fn maps(&self) -> &[AffineMap] {
        &self.maps
    }

    /// Matrix and offset entries uniform on `[-1, 1]`; weights proportional
    /// to `max(|det|, 0.01)`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, n_maps: usize) -> Result<Self, FractalError> {
        if !(MIN_MAPS..=MAX_MAPS).contains(&n_maps) {
            return Err(FractalError::MapCount(n_maps));
        }
        let mut maps: Vec<AffineMap> = (0..n_maps)
            .map(|_| {
                let linear = Mat3::from_fn(|_, _| rng.random_range(-1.0..=1.0));
                let offset = Vec3::from_fn(|_, _| rng.random_range(-1.0..=1.0));
                let weight = linear.determinant().abs().max(WEIGHT_FLOOR);
                AffineMap {
                    linear,
                    offset,
                    weight,
                }
            })
            .collect();
        let total: f64 = maps.iter().map(|m| m.weight).sum();
        for m in &mut maps {
            m.weight /= total;
        }
        IfsSystem::new(maps)
    }

    fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> &AffineMap {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for m in &self.maps {
            acc += m.weight;
            if u < acc {
                return m;
            }
        }
        self.maps.last().expect("IFS has at least one map")
    }

    /// Random iteration from the origin. The first `burn_in` iterates are
    /// dropped, the next `n_points` returned.
    pub fn chaos_game<R: Rng + ?Sized>(
        &self,
        n_points: usize,
        burn_in: usize,
        rng: &mut R,
    ) -> Result<PointCloud, FractalError> {
        let mut x = Vec3::zeros();
        let mut out = Vec::with_capacity(n_points);
        for it in 0..burn_in + n_points {
            x = self.pick(rng).apply(&x);
            if !(x.norm() <= DIVERGENCE_NORM) {
                return Err(FractalError::Divergent(it));
            }
            if it >= burn_in {
                out.push(x);
            }
        }
        Ok(PointCloud::from_positions(out))
    }
}

pub fn sample_ifs<R: Rng + ?Sized>(rng: &mut R, n_maps: usize) -> Result<IfsSystem, FractalError> {
    IfsSystem::sample(rng, n_maps)
}

pub fn chaos_game<R: Rng + ?Sized>(
    system: &IfsSystem,
    n_points: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<PointCloud, FractalError> {
    system.chaos_game(n_points, burn_in, rng)
}

/// Population variance of each axis.
pub fn axis_variance(points: &[Vec3]) -> Vec3 {
    let n = points.len() as f64;
    let mean = points.iter().fold(Vec3::zeros(), |a, p| a + p) / n;
    points
        .iter()
        .fold(Vec3::zeros(), |a, p| a + (p - mean).component_mul(&(p - mean)))
        / n
}

/// Accepts a cloud when, after unit-sphere normalization, every axis has
/// variance above `threshold`. Collapsed and near-planar or near-linear
/// attractors fail.
pub fn accept_system(cloud: &PointCloud, threshold: f64) -> bool {
    if cloud.is_empty() {
        return false;
    }
    match normalize_unit_sphere(cloud.clone()) {
        Ok(n) => axis_variance(&n.positions).iter().all(|&v| v > threshold),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FractalConfig {
    pub min_maps: usize,
    pub max_maps: usize,
    pub n_points: usize,
    pub burn_in: usize,
    pub variance_threshold: f64,
    pub max_attempts: usize,
}

impl Default for FractalConfig {
    fn default() -> Self {
        FractalConfig {
            min_maps: 2,
            max_maps: 8,
            n_points: 3000,
            burn_in: 100,
            variance_threshold: 0.05,
            max_attempts: 10_000,
        }
    }
}

/// An accepted system and the seed of the chaos game that produced its cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct FractalObject {
    pub system: IfsSystem,
    pub chaos_seed: u64,
    /// Number of rejected systems before this one.
    pub rejected: usize,
}

impl FractalObject {
    /// Resamples systems from `seed` until one passes [`accept_system`].
    pub fn generate(seed: u64, cfg: &FractalConfig) -> Result<Self, FractalError> {
        for attempt in 0..cfg.max_attempts {
            let mut rng = stream(derive_seed(seed, "ifs", attempt as u64));
            let n_maps = rng.random_range(cfg.min_maps..=cfg.max_maps);
            let system = IfsSystem::sample(&mut rng, n_maps)?;
            let chaos_seed = derive_seed(seed, "chaos", attempt as u64);
            let Ok(cloud) = system.chaos_game(cfg.n_points, cfg.burn_in, &mut stream(chaos_seed))
            else {
                continue;
            };
            if accept_system(&cloud, cfg.variance_threshold) {
                return Ok(FractalObject {
                    system,
                    chaos_seed,
                    rejected: attempt,
                });
            }
        }
        Err(FractalError::Exhausted(cfg.max_attempts))
    }

    /// The object's cloud, normalized into the unit sphere.
    pub fn cloud(&self, cfg: &FractalConfig) -> Result<PointCloud, FractalError> {
        let raw = self
            .system
            .chaos_game(cfg.n_points, cfg.burn_in, &mut stream(self.chaos_seed))?;
        // accepted clouds always have positive extent
        Ok(normalize_unit_sphere(raw).expect("accepted attractor has extent"))
    }
}

/// One map per line: nine matrix entries (row-major), three offsets, weight.
/// Systems are separated by a blank line.
pub fn write_systems(systems: &[IfsSystem]) -> String {
    let mut out = String::new();
    for (k, s) in systems.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        for m in &s.maps {
            let mut fields = Vec::with_capacity(13);
            for r in 0..3 {
                for c in 0..3 {
                    fields.push(format!("{:?}", m.linear[(r, c)]));
                }
            }
            for r in 0..3 {
                fields.push(format!("{:?}", m.offset[r]));
            }
            fields.push(format!("{:?}", m.weight));
            let _ = writeln!(out, "{}", fields.join(" "));
        }
    }
    out
}

pub fn parse_systems(text: &str) -> Result<Vec<IfsSystem>, FractalError> {
    let mut systems = Vec::new();
    let mut current: Vec<AffineMap> = Vec::new();
    let mut start_line = 1;
    let flush = |maps: &mut Vec<AffineMap>, out: &mut Vec<IfsSystem>, line: usize| {
        if maps.is_empty() {
            return Ok(());
        }
        let sys = IfsSystem::new(std::mem::take(maps)).map_err(|e| FractalError::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push(sys);
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() {
            flush(&mut current, &mut systems, start_line)?;
            start_line = line + 1;
            continue;
        }
        let vals: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| FractalError::Parse {
                line,
                message: format!("malformed map `{l}`"),
            })?;
        if vals.len() != 13 {
            return Err(FractalError::Parse {
                line,
                message: format!("expected 13 numbers, found {}", vals.len()),
            });
        }
        current.push(AffineMap {
            linear: Mat3::from_row_slice(&vals[..9]),
            offset: Vec3::new(vals[9], vals[10], vals[11]),
            weight: vals[12],
        });
    }
    flush(&mut current, &mut systems, start_line)?;
    Ok(systems)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    #[test]
    fn sampled_weights_normalized() {
        for seed in 0..50 {
            let s = IfsSystem::sample(&mut stream(seed), 2).unwrap();
            let sum: f64 = s.maps().iter().map(|m| m.weight).sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(s.maps().iter().all(|m| m.weight > 0.0));
        }
        assert_eq!(
            IfsSystem::sample(&mut stream(0), 9).unwrap_err(),
            FractalError::MapCount(9)
        );
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = IfsSystem::sample(&mut stream(4), 5).unwrap();
        let b = IfsSystem::sample(&mut stream(4), 5).unwrap();
        assert_eq!(a, b);
        let ca = a.chaos_game(500, 10, &mut stream(1));
        let cb = b.chaos_game(500, 10, &mut stream(1));
        assert_eq!(ca, cb);
    }

    #[test]
    fn single_contraction_closed_form() {
        let sys = IfsSystem::unchecked(vec![AffineMap {
            linear: Mat3::identity() * 0.5,
            offset: Vec3::zeros(),
            weight: 1.0,
        }]);
        // starting at the origin every iterate is the origin
        let cloud = sys.chaos_game(20, 5, &mut stream(0)).unwrap();
        assert!(cloud.positions.iter().all(|p| p.norm() == 0.0));
        // the closed form 0.5^k·p, checked by iterating the map directly
        let p = Vec3::new(3.0, -4.0, 12.0);
        let mut x = p;
        for k in 1..=30 {
            x = sys.maps()[0].apply(&x);
            assert!((x - p * 0.5f64.powi(k)).norm() <= 1e-15 * p.norm());
        }
    }

    #[test]
    fn divergence_detected() {
        let sys = IfsSystem::new(vec![
            AffineMap {
                linear: Mat3::identity() * 3.0,
                offset: Vec3::new(1.0, 0.0, 0.0),
                weight: 0.5,
            },
            AffineMap {
                linear: Mat3::identity() * 3.0,
                offset: Vec3::new(0.0, 1.0, 0.0),
                weight: 0.5,
            },
        ])
        .unwrap();
        assert!(matches!(
            sys.chaos_game(1000, 10, &mut stream(0)),
            Err(FractalError::Divergent(_))
        ));
    }

    #[test]
    fn acceptance_gate() {
        let same = PointCloud::from_positions(vec![Vec3::new(1.0, 1.0, 1.0); 100]);
        assert!(!accept_system(&same, 0.05));
        let line = PointCloud::from_positions((0..100).map(|i| Vec3::new(i as f64, 0.0, 0.0)).collect());
        assert!(!accept_system(&line, 0.05));
        let mut rng = stream(2);
        let cube = PointCloud::from_positions(
            (0..5000)
                .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
                .collect(),
        );
        assert!(accept_system(&cube, 0.05));
    }

    #[test]
    fn text_roundtrip() {
        let systems: Vec<_> = (0..4)
            .map(|s| IfsSystem::sample(&mut stream(s), 2 + s as usize).unwrap())
            .collect();
        let text = write_systems(&systems);
        assert_eq!(parse_systems(&text).unwrap(), systems);
    }

    #[test]
    fn generated_object_is_normalized() {
        let cfg = FractalConfig::default();
        let obj = FractalObject::generate(77, &cfg).unwrap();
        let cloud = obj.cloud(&cfg).unwrap();
        assert_eq!(cloud.len(), cfg.n_points);
        let max = cloud.positions.iter().map(|p| p.norm()).fold(0.0, f64::max);
        assert!((max - 1.0).abs() < 1e-12);
        assert!(axis_variance(&cloud.positions).iter().all(|&v| v > cfg.variance_threshold));
    }
}
