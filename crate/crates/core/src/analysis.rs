//! Object-set diversity measured with the Chamfer distance.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::meshio::{sample_surface, PointCloud};
use crate::scenegen::{ObjectGeometry, ObjectSource, SceneError};
use crate::seed::derived_stream;
use crate::spatial::KdTree;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("chamfer distance of an empty cloud")]
    EmptyCloud,
    #[error("diversity needs at least 2 objects, got {0}")]
    TooFewObjects(usize),
    #[error(transparent)]
    Scene(#[from] SceneError),
}

/// Mean distance from each point of `from` to its nearest point in `to`.
pub fn directed_chamfer(from: &PointCloud, to: &KdTree) -> f64 {
    let sum: f64 = from
        .positions
        .iter()
        .map(|p| to.nearest(p).map_or(0.0, |(_, d2)| d2.sqrt()))
        .sum();
    sum / from.len() as f64
}

/// Symmetric Chamfer distance: the average of the two directed mean
/// nearest-neighbor distances (not squared).
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64, AnalysisError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalysisError::EmptyCloud);
    }
    let ta = KdTree::new(&a.positions);
    let tb = KdTree::new(&b.positions);
    Ok(0.5 * (directed_chamfer(a, &tb) + directed_chamfer(b, &ta)))
}

/// How object pairs are chosen for a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairStrategy {
    /// Distinct pairs drawn uniformly at random.
    #[default]
    Uniform,
    /// The pairs closest in a coarse occupancy descriptor. Estimates the
    /// smallest distance in the set far better than random pairs, at the
    /// cost of biasing the other statistics low.
    DescriptorNeighbors,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DiversityConfig {
    pub points_per_object: usize,
    pub strategy: PairStrategy,
    /// Descriptor neighbors gathered per object for [`PairStrategy::DescriptorNeighbors`].
    pub neighbors: usize,
}

impl Default for DiversityConfig {
    fn default() -> Self {
        DiversityConfig {
            points_per_object: 1024,
            strategy: PairStrategy::Uniform,
            neighbors: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub n_pairs: usize,
    pub chamfer_min: f64,
    pub chamfer_mean: f64,
    pub chamfer_p10: f64,
    pub chamfer_p50: f64,
}

impl DiversityReport {
    /// Summary of a list of pair distances (nearest-rank quantiles).
    pub fn from_distances(distances: &[f64]) -> Self {
        let mut d = distances.to_vec();
        d.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let rank = ((p * d.len() as f64).ceil() as usize).clamp(1, d.len());
            d[rank - 1]
        };
        DiversityReport {
            n_pairs: d.len(),
            chamfer_min: d[0],
            chamfer_mean: d.iter().sum::<f64>() / d.len() as f64,
            chamfer_p10: q(0.1),
            chamfer_p50: q(0.5),
        }
    }
}

/// `n` points on object `index`. Every object uses the same random stream,
/// so two identical objects get identical samples and distance 0.
pub fn object_points(
    source: &dyn ObjectSource,
    index: usize,
    n: usize,
    seed: u64,
) -> Result<PointCloud, AnalysisError> {
    let mut rng = derived_stream(seed, "points", 0);
    let pc = match source.geometry(index)? {
        ObjectGeometry::Mesh(m) => sample_surface(&m, n, &mut rng).map_err(SceneError::from)?,
        ObjectGeometry::Points(p) if p.len() >= n => {
            let mut pick = index::sample(&mut rng, p.len(), n).into_vec();
            pick.sort_unstable();
            p.select(&pick)
        }
        ObjectGeometry::Points(p) => {
            if p.is_empty() {
                return Err(AnalysisError::EmptyCloud);
            }
            let pick: Vec<usize> = (0..n).map(|_| rng.random_range(0..p.len())).collect();
            p.select(&pick)
        }
    };
    Ok(pc)
}

const GRID: usize = 4;
pub const DESCRIPTOR_LEN: usize = GRID * GRID * GRID;

/// Fraction of points in each cell of a 4x4x4 grid over `[-1, 1]^3`.
pub fn occupancy_descriptor(pc: &PointCloud) -> [f32; DESCRIPTOR_LEN] {
    let mut d = [0f32; DESCRIPTOR_LEN];
    let cell = |x: f64| (((x + 1.0) * 0.5 * GRID as f64).floor() as i64).clamp(0, GRID as i64 - 1) as usize;
    for p in &pc.positions {
        d[(cell(p.x) * GRID + cell(p.y)) * GRID + cell(p.z)] += 1.0;
    }
    let n = pc.len().max(1) as f32;
    d.iter_mut().for_each(|v| *v /= n);
    d
}

fn uniform_pairs<R: Rng + ?Sized>(n: usize, n_pairs: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let total = n * (n - 1) / 2;
    if n_pairs >= total {
        return (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    }
    let mut seen = HashSet::with_capacity(n_pairs);
    let mut out = Vec::with_capacity(n_pairs);
    while out.len() < n_pairs {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i == j {
            continue;
        }
        let key = (i.min(j), i.max(j));
        if seen.insert(key) {
            out.push(key);
        }
    }
    out
}

fn descriptor_pairs(descriptors: &[[f32; DESCRIPTOR_LEN]], n_pairs: usize, neighbors: usize) -> Vec<(usize, usize)> {
    let n = descriptors.len();
    // enough neighbors per object that the candidate pool can supply n_pairs
    let k = neighbors.max(2 * n_pairs / n + 1).min(n - 1);
    let dist = |a: &[f32; DESCRIPTOR_LEN], b: &[f32; DESCRIPTOR_LEN]| -> f32 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
    };
    let mut candidates: Vec<(f32, usize, usize)> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut row: Vec<(f32, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (dist(&descriptors[i], &descriptors[j]), j))
                .collect();
            row.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            row.truncate(k);
            row.into_iter().map(move |(d, j)| (d, i.min(j), i.max(j)))
        })
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));
    candidates.dedup_by_key(|c| (c.1, c.2));
    candidates.truncate(n_pairs);
    candidates.into_iter().map(|(_, i, j)| (i, j)).collect()
}

/// Chamfer statistics over `n_pairs` distinct object pairs (fewer if the set
/// has fewer pairs). Objects are expected to be normalized already.
pub fn diversity_report<R: Rng + ?Sized>(
    source: &dyn ObjectSource,
    n_pairs: usize,
    rng: &mut R,
    cfg: &DiversityConfig,
) -> Result<DiversityReport, AnalysisError> {
    let n = source.len();
    if n < 2 {
        return Err(AnalysisError::TooFewObjects(n));
    }
    let seed: u64 = rng.random();
    let pairs = match cfg.strategy {
        PairStrategy::Uniform => uniform_pairs(n, n_pairs.max(1), rng),
        PairStrategy::DescriptorNeighbors => {
            let descriptors = (0..n)
                .into_par_iter()
                .map(|i| Ok(occupancy_descriptor(&object_points(source, i, cfg.points_per_object, seed)?)))
                .collect::<Result<Vec<_>, AnalysisError>>()?;
            descriptor_pairs(&descriptors, n_pairs.max(1), cfg.neighbors.max(1))
        }
    };
    let distances = pairs
        .par_iter()
        .map(|&(i, j)| {
            let a = object_points(source, i, cfg.points_per_object, seed)?;
            let b = object_points(source, j, cfg.points_per_object, seed)?;
            chamfer(&a, &b)
        })
        .collect::<Result<Vec<f64>, AnalysisError>>()?;
    Ok(DiversityReport::from_distances(&distances))
}
