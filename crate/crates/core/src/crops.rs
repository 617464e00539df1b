//! Training crops: k-nearest-neighbor regions, overlapping pairs, depth
//! windows, pseudo-color and the usual geometric augmentation.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{rotation_z, Vec3};
use crate::meshio::PointCloud;
use crate::raycast::DepthFrame;

#[derive(Debug, Error, PartialEq)]
pub enum CropError {
    #[error("cloud has {have} points, crop needs {need}")]
    TooSmall { have: usize, need: usize },
    #[error("no depth window with valid pixels after {0} attempts")]
    EmptyWindow(usize),
    #[error("no pair reached the overlap floor after {0} attempts")]
    NoOverlap(usize),
    #[error("invalid crop config: {0}")]
    Config(String),
}

/// Geometric augmentation knobs. Every part can be switched off
/// independently by making it neutral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AugmentSettings {
    /// Probability of negating X.
    pub flip_probability: f64,
    /// Random rotation about +Z over the full circle.
    pub rotate: bool,
    pub scale_range: (f64, f64),
    /// Per-axis translation drawn from `[-t, t]` (meters).
    pub translation: f64,
    /// Per-coordinate Gaussian jitter (meters).
    pub jitter_sigma: f64,
    pub jitter_clip: f64,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        AugmentSettings {
            flip_probability: 0.5,
            rotate: true,
            scale_range: (0.9, 1.1),
            translation: 0.5,
            jitter_sigma: 0.01,
            jitter_clip: 0.05,
        }
    }
}

impl AugmentSettings {
    /// All parts neutral: applying it returns the input unchanged.
    pub fn disabled() -> Self {
        AugmentSettings {
            flip_probability: 0.0,
            rotate: false,
            scale_range: (1.0, 1.0),
            translation: 0.0,
            jitter_sigma: 0.0,
            jitter_clip: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CropConfig {
    pub knn_count: usize,
    /// Side ratio of depth windows, drawn per axis.
    pub depth_ratio_range: (f64, f64),
    /// Shared points over the size of the smaller crop.
    pub pair_overlap_min: f64,
    /// Second anchors are drawn within this distance of the first (meters).
    pub pair_anchor_radius: f64,
    pub color_constant: f64,
    pub color_dropout_p: f64,
    pub jitter_sigma: f64,
    pub max_attempts: usize,
    pub augment: AugmentSettings,
}

impl Default for CropConfig {
    fn default() -> Self {
        CropConfig {
            knn_count: 20000,
            depth_ratio_range: (0.6, 0.8),
            pair_overlap_min: 0.1,
            pair_anchor_radius: 1.0,
            color_constant: 0.5,
            color_dropout_p: 0.5,
            jitter_sigma: 0.05,
            max_attempts: 100,
            augment: AugmentSettings::default(),
        }
    }
}

impl CropConfig {
    pub fn validate(&self) -> Result<(), CropError> {
        let (lo, hi) = self.depth_ratio_range;
        let prob = |p: f64| (0.0..=1.0).contains(&p);
        if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
            return Err(CropError::Config(format!("depth ratio range {lo}..{hi}")));
        }
        if !prob(self.pair_overlap_min) || !prob(self.color_dropout_p) || !prob(self.augment.flip_probability) {
            return Err(CropError::Config("probabilities must lie in [0, 1]".into()));
        }
        if self.knn_count == 0 || self.max_attempts == 0 || self.jitter_sigma < 0.0 {
            return Err(CropError::Config("counts must be positive and sigma non-negative".into()));
        }
        Ok(())
    }
}

/// Indices of the `n` points nearest to point `anchor`, ties broken by the
/// lower index, returned in ascending index order.
pub fn knn_indices(pc: &PointCloud, anchor: usize, n: usize) -> Result<Vec<usize>, CropError> {
    if pc.len() < n {
        return Err(CropError::TooSmall { have: pc.len(), need: n });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let a = pc.positions[anchor];
    let mut keyed: Vec<(f64, usize)> = pc
        .positions
        .iter()
        .enumerate()
        .map(|(i, p)| ((p - a).norm_squared(), i))
        .collect();
    let cmp = |x: &(f64, usize), y: &(f64, usize)| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1));
    if n < keyed.len() {
        keyed.select_nth_unstable_by(n - 1, cmp);
    }
    let mut out: Vec<usize> = keyed[..n].iter().map(|&(_, i)| i).collect();
    out.sort_unstable();
    Ok(out)
}

/// The `n` points nearest to a uniformly drawn anchor point, in their original order.
pub fn crop_knn<R: Rng + ?Sized>(pc: &PointCloud, rng: &mut R, n: usize) -> Result<PointCloud, CropError> {
    if pc.len() < n || pc.is_empty() {
        return Err(CropError::TooSmall { have: pc.len(), need: n.max(1) });
    }
    let anchor = rng.random_range(0..pc.len());
    Ok(pc.select(&knn_indices(pc, anchor, n)?))
}

/// A depth-window crop and the window it came from.
#[derive(Debug, Clone)]
pub struct DepthCrop {
    pub cloud: PointCloud,
    /// `(u0, v0, width, height)` in pixels.
    pub window: (u32, u32, u32, u32),
}

/// Lifts the valid pixels of a random window to world coordinates. Side
/// ratios are drawn independently for width and height.
pub fn crop_depth_rect<R: Rng + ?Sized>(
    frame: &DepthFrame,
    rng: &mut R,
    ratio_range: (f64, f64),
    max_attempts: usize,
) -> Result<DepthCrop, CropError> {
    let (lo, hi) = ratio_range;
    if !(lo > 0.0 && lo <= hi && hi <= 1.0) {
        return Err(CropError::Config(format!("depth ratio range {lo}..{hi}")));
    }
    let (w, h) = (frame.width(), frame.height());
    for _ in 0..max_attempts {
        let rw = rng.random_range(lo..=hi);
        let rh = rng.random_range(lo..=hi);
        let cw = ((rw * w as f64).round() as u32).clamp(1, w);
        let ch = ((rh * h as f64).round() as u32).clamp(1, h);
        let u0 = rng.random_range(0..=w - cw);
        let v0 = rng.random_range(0..=h - ch);
        let cloud = frame.lift_window(u0, v0, u0 + cw, v0 + ch);
        if !cloud.is_empty() {
            return Ok(DepthCrop {
                cloud,
                window: (u0, v0, cw, ch),
            });
        }
    }
    Err(CropError::EmptyWindow(max_attempts))
}

/// Shared elements of two ascending index lists over the length of the shorter.
pub fn overlap_fraction(a: &[usize], b: &[usize]) -> f64 {
    let smaller = a.len().min(b.len());
    if smaller == 0 {
        return 0.0;
    }
    let (mut i, mut j, mut shared) = (0, 0, 0usize);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                shared += 1;
                i += 1;
                j += 1;
            }
        }
    }
    shared as f64 / smaller as f64
}

/// Two overlapping k-NN crops of one cloud.
#[derive(Debug, Clone)]
pub struct ContrastivePair {
    pub first: PointCloud,
    pub second: PointCloud,
    /// Point indices of the crops in the source cloud, ascending.
    pub first_indices: Vec<usize>,
    pub second_indices: Vec<usize>,
    pub anchors: (usize, usize),
    pub overlap: f64,
}

/// Crops around two given anchors, with their overlap.
pub fn crop_pair_at(pc: &PointCloud, first: usize, second: usize, n: usize) -> Result<ContrastivePair, CropError> {
    let a = knn_indices(pc, first, n)?;
    let b = knn_indices(pc, second, n)?;
    Ok(ContrastivePair {
        first: pc.select(&a),
        second: pc.select(&b),
        overlap: overlap_fraction(&a, &b),
        first_indices: a,
        second_indices: b,
        anchors: (first, second),
    })
}

/// First crop around a uniform anchor; second anchors are drawn among points
/// within `pair_anchor_radius` of it until the overlap floor is met.
pub fn crop_pair_contrastive<R: Rng + ?Sized>(
    pc: &PointCloud,
    rng: &mut R,
    cfg: &CropConfig,
) -> Result<ContrastivePair, CropError> {
    let n = cfg.knn_count;
    if pc.len() < n || pc.is_empty() {
        return Err(CropError::TooSmall { have: pc.len(), need: n.max(1) });
    }
    let first = rng.random_range(0..pc.len());
    let a = knn_indices(pc, first, n)?;
    let center = pc.positions[first];
    let r2 = cfg.pair_anchor_radius * cfg.pair_anchor_radius;
    let near: Vec<usize> = (0..pc.len())
        .filter(|&i| (pc.positions[i] - center).norm_squared() <= r2)
        .collect();
    for _ in 0..cfg.max_attempts {
        let second = near[rng.random_range(0..near.len())];
        let b = knn_indices(pc, second, n)?;
        let overlap = overlap_fraction(&a, &b);
        if overlap >= cfg.pair_overlap_min {
            return Ok(ContrastivePair {
                first: pc.select(&a),
                second: pc.select(&b),
                first_indices: a,
                second_indices: b,
                anchors: (first, second),
                overlap,
            });
        }
    }
    Err(CropError::NoOverlap(cfg.max_attempts))
}

/// Constant colors with clipped Gaussian jitter per channel; then, with
/// probability `color_dropout_p`, every color of the crop set to 0.
pub fn pseudo_color<R: Rng + ?Sized>(pc: &PointCloud, rng: &mut R, cfg: &CropConfig) -> PointCloud {
    let noise = Normal::new(0.0, cfg.jitter_sigma).expect("jitter sigma must be finite and non-negative");
    let mut colors: Vec<[f32; 3]> = (0..pc.len())
        .map(|_| [0; 3].map(|_| (cfg.color_constant + noise.sample(rng)).clamp(0.0, 1.0) as f32))
        .collect();
    if rng.random_bool(cfg.color_dropout_p) {
        colors.iter_mut().for_each(|c| *c = [0.0; 3]);
    }
    PointCloud {
        positions: pc.positions.clone(),
        colors: Some(colors),
        object_ids: pc.object_ids.clone(),
    }
}

/// Flip, rotation about +Z, uniform scale, translation, then per-point jitter.
pub fn standard_augment<R: Rng + ?Sized>(pc: &PointCloud, rng: &mut R, s: &AugmentSettings) -> PointCloud {
    let flip = rng.random_bool(s.flip_probability);
    let angle = if s.rotate { rng.random_range(0.0..TAU) } else { 0.0 };
    let scale = rng.random_range(s.scale_range.0..=s.scale_range.1);
    let t = s.translation;
    let shift = Vec3::new(
        rng.random_range(-t..=t),
        rng.random_range(-t..=t),
        rng.random_range(-t..=t),
    );
    let rot = rotation_z(angle);
    let mut out = pc.clone();
    out.map_positions(|p| {
        let mut q = *p;
        if flip {
            q.x = -q.x;
        }
        rot * q * scale + shift
    });
    if s.jitter_sigma > 0.0 {
        let noise = Normal::new(0.0, s.jitter_sigma).expect("jitter sigma must be finite");
        for p in &mut out.positions {
            for k in 0..3 {
                p[k] += noise.sample(rng).clamp(-s.jitter_clip, s.jitter_clip);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::stream;

    fn line(n: usize) -> PointCloud {
        PointCloud::from_positions((0..n).map(|i| Vec3::new(i as f64 * 0.1, 0.0, 0.0)).collect())
    }

    fn random_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = stream(seed);
        PointCloud::from_positions(
            (0..n)
                .map(|_| Vec3::new(rng.random_range(0.0..4.0), rng.random_range(0.0..4.0), rng.random_range(0.0..1.0)))
                .collect(),
        )
    }

    #[test]
    fn knn_from_line_end() {
        let pc = line(100);
        assert_eq!(knn_indices(&pc, 0, 10).unwrap(), (0..10).collect::<Vec<_>>());
        assert_eq!(knn_indices(&pc, 99, 3).unwrap(), vec![97, 98, 99]);
    }

    #[test]
    fn knn_ties_go_to_lower_index() {
        // anchor in the middle: 4 and 6 are equally far, as are 3 and 7
        let pc = line(11);
        assert_eq!(knn_indices(&pc, 5, 4).unwrap(), vec![3, 4, 5, 6]);
        let dup = PointCloud::from_positions(vec![Vec3::zeros(); 6]);
        assert_eq!(knn_indices(&dup, 4, 2).unwrap(), vec![0, 1]);
    }

    #[test]
    fn knn_whole_cloud_and_too_small() {
        let pc = random_cloud(50, 1);
        assert_eq!(crop_knn(&pc, &mut stream(0), 50).unwrap(), pc);
        assert_eq!(
            crop_knn(&pc, &mut stream(0), 51),
            Err(CropError::TooSmall { have: 50, need: 51 })
        );
    }

    #[test]
    fn overlap_counts_shared_indices() {
        assert_eq!(overlap_fraction(&[1, 2, 3, 4], &[3, 4, 5, 6]), 0.5);
        assert_eq!(overlap_fraction(&[1, 2], &[1, 2, 3, 4]), 1.0);
        assert_eq!(overlap_fraction(&[], &[1]), 0.0);
    }

    #[test]
    fn same_anchor_pair_is_identical() {
        let pc = random_cloud(2000, 2);
        let pair = crop_pair_at(&pc, 17, 17, 500).unwrap();
        assert_eq!(pair.first, pair.second);
        assert_eq!(pair.overlap, 1.0);
    }

    #[test]
    fn contrastive_pairs_meet_floor() {
        let pc = random_cloud(4000, 3);
        let cfg = CropConfig {
            knn_count: 1000,
            ..CropConfig::default()
        };
        let mut rng = stream(4);
        for _ in 0..50 {
            let pair = crop_pair_contrastive(&pc, &mut rng, &cfg).unwrap();
            assert!(pair.overlap >= 0.1);
            assert_eq!(pair.first.len(), 1000);
            assert!((pc.positions[pair.anchors.0] - pc.positions[pair.anchors.1]).norm() <= 1.0);
        }
    }

    #[test]
    fn pseudo_color_extremes() {
        let pc = line(200);
        let plain = CropConfig {
            jitter_sigma: 0.0,
            color_dropout_p: 0.0,
            ..CropConfig::default()
        };
        let c = pseudo_color(&pc, &mut stream(0), &plain);
        assert!(c.colors.unwrap().iter().all(|c| *c == [0.5; 3]));
        let dropped = CropConfig {
            color_dropout_p: 1.0,
            ..CropConfig::default()
        };
        let c = pseudo_color(&pc, &mut stream(0), &dropped);
        assert!(c.colors.unwrap().iter().all(|c| *c == [0.0; 3]));
        let wild = CropConfig {
            jitter_sigma: 2.0,
            color_dropout_p: 0.0,
            ..CropConfig::default()
        };
        let c = pseudo_color(&pc, &mut stream(0), &wild);
        assert!(c.colors.unwrap().iter().flatten().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn disabled_augment_is_identity() {
        let pc = random_cloud(100, 5);
        assert_eq!(standard_augment(&pc, &mut stream(1), &AugmentSettings::disabled()), pc);
    }

    #[test]
    fn flip_twice_is_identity() {
        let pc = random_cloud(100, 6);
        let flip = AugmentSettings {
            flip_probability: 1.0,
            ..AugmentSettings::disabled()
        };
        let twice = standard_augment(&standard_augment(&pc, &mut stream(1), &flip), &mut stream(2), &flip);
        for (a, b) in twice.positions.iter().zip(&pc.positions) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rigid_parts_keep_distances_and_scale_multiplies() {
        let pc = random_cloud(60, 7);
        let rigid = AugmentSettings {
            jitter_sigma: 0.0,
            scale_range: (1.0, 1.0),
            ..AugmentSettings::default()
        };
        let scaled = AugmentSettings {
            scale_range: (1.07, 1.07),
            ..rigid
        };
        let r = standard_augment(&pc, &mut stream(8), &rigid);
        let s = standard_augment(&pc, &mut stream(8), &scaled);
        for i in 0..pc.len() {
            for j in 0..i {
                let d = (pc.positions[i] - pc.positions[j]).norm();
                assert!(((r.positions[i] - r.positions[j]).norm() - d).abs() < 1e-9);
                assert!(((s.positions[i] - s.positions[j]).norm() - 1.07 * d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn jitter_is_clipped() {
        let pc = random_cloud(500, 9);
        let jitter = AugmentSettings {
            jitter_sigma: 1.0,
            jitter_clip: 0.05,
            ..AugmentSettings::disabled()
        };
        let j = standard_augment(&pc, &mut stream(3), &jitter);
        for (a, b) in j.positions.iter().zip(&pc.positions) {
            assert!((a - b).amax() <= 0.05 + 1e-15);
        }
    }
}
