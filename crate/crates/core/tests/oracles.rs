mod common;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use common::*;
use rand::Rng;
use roomgen::crops::{pseudo_color, CropConfig};
use roomgen::fractal::{accept_system, IfsSystem};
use roomgen::geom::Vec3;
use roomgen::harmonics::{eval_radius, HarmonicCoefficients};
use roomgen::meshio::{sample_surface, PointCloud, SurfaceMesh};
use roomgen::seed::stream;

const SIGNIFICANCE: f64 = 0.01;

#[test]
fn radius_matches_term_by_term_oracle() {
    let mut rng = stream(100);
    for _ in 0..500 {
        let c = HarmonicCoefficients::sample(&mut rng);
        let theta = rng.random_range(0.0..2.0 * PI);
        let phi = rng.random_range(0.0..=PI);
        let want = radius_oracle(c.m, c.p, theta, phi);
        assert!((eval_radius(&c, theta, phi) - want).abs() <= 1e-12, "{c:?} at ({theta}, {phi})");
    }
}

#[test]
fn figure_case_by_hand() {
    let c = HarmonicCoefficients::new([2.0, 1.0, 2.0, 2.0], [2, 2, 1, 2]).unwrap();
    // sin²(π/2) + cos²(π/4) + sin(π) + cos²(π) = 1 + 0.5 + 0 + 1
    assert!((eval_radius(&c, FRAC_PI_2, FRAC_PI_4) - 2.5).abs() <= 1e-12);
}

#[test]
fn coefficients_are_uniform() {
    let mut rng = stream(2024);
    let draws: Vec<HarmonicCoefficients> = (0..10_000).map(|_| HarmonicCoefficients::sample(&mut rng)).collect();
    for k in 0..4 {
        let m = bin_counts(draws.iter().map(|c| c.m[k]), -5.0, 5.0, 20);
        let p_m = chi_square_uniform_p(&m);
        assert!(p_m > SIGNIFICANCE, "m{} p-value {p_m}", k + 1);

        let mut p_counts = vec![0u64; 5];
        for c in &draws {
            p_counts[c.p[k] as usize] += 1;
        }
        let p_p = chi_square_uniform_p(&p_counts);
        assert!(p_p > SIGNIFICANCE, "p{} p-value {p_p}", k + 1);
    }
}

#[test]
fn ifs_entries_are_uniform() {
    let mut rng = stream(77);
    let mut entries = Vec::new();
    let mut offsets = Vec::new();
    for _ in 0..1000 {
        let n = rng.random_range(2..=8);
        let sys = IfsSystem::sample(&mut rng, n).unwrap();
        for m in sys.maps() {
            entries.extend(m.linear.iter().copied());
            offsets.extend(m.offset.iter().copied());
        }
    }
    assert!(entries.iter().chain(&offsets).all(|v| (-1.0..=1.0).contains(v)));
    let p = chi_square_uniform_p(&bin_counts(entries, -1.0, 1.0, 20));
    assert!(p > SIGNIFICANCE, "matrix entries p-value {p}");
    let p = chi_square_uniform_p(&bin_counts(offsets, -1.0, 1.0, 20));
    assert!(p > SIGNIFICANCE, "offsets p-value {p}");
}

#[test]
fn sierpinski_points_stay_in_hull() {
    let corners = tetrahedron();
    let pc = sierpinski_system().chaos_game(10_000, 100, &mut stream(3)).unwrap();
    assert_eq!(pc.len(), 10_000);
    for p in &pc.positions {
        assert!(inside_tetrahedron(p, &corners, 1e-12), "{p:?} escaped");
    }
    // the attractor spreads over the whole hull, so it also passes the gate
    assert!(accept_system(&pc, 0.05));
}

#[test]
fn uniform_cube_passes_variance_gate() {
    let mut rng = stream(8);
    let pts = (0..5000)
        .map(|_| Vec3::new(rng.random(), rng.random(), rng.random()))
        .collect();
    assert!(accept_system(&PointCloud::from_positions(pts), 0.05));
}

#[test]
fn area_weighted_sampling_counts() {
    // two disjoint triangles with areas 1.5 and 0.5
    let mesh = SurfaceMesh::new(
        vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(3.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 5.0),
            Vec3::new(1.0, 0.0, 5.0),
            Vec3::new(0.0, 1.0, 5.0),
        ],
        vec![[0, 1, 2], [3, 4, 5]],
        0,
    )
    .unwrap();
    let n = 40_000;
    let pc = sample_surface(&mesh, n, &mut stream(5)).unwrap();
    assert_eq!(pc.len(), n);
    let on_plane = |p: &Vec3, z: f64| (p.z - z).abs() <= 1e-9;
    assert!(pc.positions.iter().all(|p| on_plane(p, 0.0) || on_plane(p, 5.0)));
    let big = pc.positions.iter().filter(|p| on_plane(p, 0.0)).count() as f64;
    let sigma = (n as f64 * 0.75 * 0.25).sqrt();
    assert!((big - 30_000.0).abs() <= 3.0 * sigma, "big triangle got {big}");
}

#[test]
fn color_dropout_frequency() {
    let cfg = CropConfig::default();
    let pc = PointCloud::from_positions(vec![Vec3::zeros(); 4]);
    let mut rng = stream(41);
    let trials = 10_000;
    let dropped = (0..trials)
        .filter(|_| {
            let c = pseudo_color(&pc, &mut rng, &cfg);
            c.colors.unwrap().iter().all(|c| *c == [0.0; 3])
        })
        .count();
    let freq = dropped as f64 / trials as f64;
    assert!((freq - 0.5).abs() <= 0.02, "dropout frequency {freq}");
}
