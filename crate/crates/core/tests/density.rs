use roomgen::pipeline::{GenerationConfig, ObjectSet};
use roomgen::scenegen::{assemble_scene, ObjectGeometry, ObjectSource, SceneError};
use roomgen::seed::derive_seed;

/// Points per square meter of each object after voxel downsampling, over
/// `n_scenes` scenes.
fn object_densities(n_scenes: usize) -> Vec<f64> {
    let cfg = GenerationConfig {
        n_objects: 200,
        ..GenerationConfig::default()
    };
    let set = ObjectSet::generate(&cfg).unwrap();
    let mut out = Vec::new();
    let mut i = 0;
    while out.len() < n_scenes * 12 {
        let seed = derive_seed(cfg.master_seed, "density", i);
        i += 1;
        let scene = match assemble_scene(&set as &dyn ObjectSource, seed, &cfg.scene) {
            Ok(s) => s,
            Err(SceneError::Unplaceable(_)) => continue,
            Err(e) => panic!("{e}"),
        };
        let pc = scene.voxelized_cloud(&cfg.scene).unwrap();
        let ids = pc.object_ids.as_ref().unwrap();
        for (k, o) in scene.objects.iter().enumerate() {
            let ObjectGeometry::Mesh(m) = o else { unreachable!() };
            let count = ids.iter().filter(|&&id| id == k as i32).count();
            out.push(count as f64 / m.total_area());
        }
    }
    out
}

#[test]
#[ignore = "fails: 3000 samples per object cannot equalize density across objects whose areas differ by more than 2x"]
fn object_density_within_factor_two() {
    let d = object_densities(20);
    let lo = d.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = d.iter().copied().fold(0.0, f64::max);
    println!("{} objects, density {lo:.1}..{hi:.1} points/m², ratio {:.2}", d.len(), hi / lo);
    assert!(hi / lo < 2.0, "density ratio {:.2}", hi / lo);
}
