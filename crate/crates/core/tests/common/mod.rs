//! Independent oracles shared by the integration tests and the acceptance run.
#![allow(dead_code)]

use std::path::Path;

use roomgen::fractal::{AffineMap, IfsSystem};
use roomgen::geom::{Mat3, Vec3};
use roomgen::pipeline::GenerationConfig;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// `x^p` by repeated multiplication, with `x^0 = 1` for every `x`.
fn ipow(x: f64, p: u8) -> f64 {
    let mut acc = 1.0;
    for _ in 0..p {
        acc *= x;
    }
    acc
}

/// Radius written out term by term, without touching the library's evaluator.
pub fn radius_oracle(m: [f64; 4], p: [u8; 4], theta: f64, phi: f64) -> f64 {
    let terms = [
        ipow((m[0] * phi).sin(), p[0]),
        ipow((m[1] * phi).cos(), p[1]),
        ipow((m[2] * theta).sin(), p[2]),
        ipow((m[3] * theta).cos(), p[3]),
    ];
    terms.iter().sum()
}

/// p-value of Pearson's chi-square statistic against equal expected counts.
pub fn chi_square_uniform_p(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let expected = n as f64 / counts.len() as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("at least two bins");
    1.0 - dist.cdf(stat)
}

/// Bins values from `[lo, hi]` into `k` equal-width bins.
pub fn bin_counts(values: impl IntoIterator<Item = f64>, lo: f64, hi: f64, k: usize) -> Vec<u64> {
    let mut counts = vec![0u64; k];
    for v in values {
        let b = (((v - lo) / (hi - lo)) * k as f64).floor() as usize;
        counts[b.min(k - 1)] += 1;
    }
    counts
}

/// Vertices of a regular tetrahedron centered at the origin.
pub fn tetrahedron() -> [Vec3; 4] {
    [
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(1.0, -1.0, -1.0),
        Vec3::new(-1.0, 1.0, -1.0),
        Vec3::new(-1.0, -1.0, 1.0),
    ]
}

/// Four half-scale maps whose fixed points are the tetrahedron's corners.
pub fn sierpinski_system() -> IfsSystem {
    let maps = tetrahedron()
        .iter()
        .map(|v| AffineMap {
            linear: Mat3::identity() * 0.5,
            offset: v * 0.5,
            weight: 0.25,
        })
        .collect();
    IfsSystem::new(maps).expect("valid system")
}

/// True when `p` is on the inner side of every face plane of the tetrahedron
/// `corners`, with slack `tol`.
pub fn inside_tetrahedron(p: &Vec3, corners: &[Vec3; 4], tol: f64) -> bool {
    (0..4).all(|skip| {
        let face: Vec<Vec3> = (0..4).filter(|&k| k != skip).map(|k| corners[k]).collect();
        let n = (face[1] - face[0]).cross(&(face[2] - face[0]));
        let side = n.dot(&(corners[skip] - face[0])).signum();
        side * n.dot(&(p - face[0])) >= -tol * n.norm()
    })
}

/// A small multi-view run writing to `dir`.
pub fn desk_config(dir: &Path, n_objects: usize, n_scenes: usize, workers: usize) -> GenerationConfig {
    GenerationConfig {
        n_objects,
        n_scenes,
        master_seed: 7,
        workers,
        output_dir: dir.to_path_buf(),
        ..GenerationConfig::default()
    }
}

/// Every file under `root`, relative path and content, sorted by path.
pub fn tree_contents(root: &Path) -> Vec<(String, Vec<u8>)> {
    fn walk(dir: &Path, root: &Path, out: &mut Vec<(String, Vec<u8>)>) {
        for entry in std::fs::read_dir(dir).expect("readable dir") {
            let path = entry.expect("dir entry").path();
            if path.is_dir() {
                walk(&path, root, out);
            } else {
                let rel = path.strip_prefix(root).expect("under root").to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&path).expect("readable file")));
            }
        }
    }
    let mut out = Vec::new();
    walk(root, root, &mut out);
    out.sort_by(|a, b| a.0.cmp(&b.0));
    out
}
