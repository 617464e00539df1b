//! The three kinds of training crops on one scene: a k-NN region, an
//! overlapping pair and a depth window, each pseudo-colored and augmented.
//!
//!     cargo run --release --example crops -- [seed]

use roomgen::crops::{crop_depth_rect, crop_knn, crop_pair_contrastive, pseudo_color, standard_augment, CropConfig};
use roomgen::pipeline::{GenerationConfig, ObjectSet};
use roomgen::raycast::{build_accelerator, sample_valid_view, ViewConfig};
use roomgen::scenegen::{assemble_scene, SceneConfig};
use roomgen::seed::{derived_stream, stream};
use roomgen::PointCloud;

fn describe(name: &str, pc: &PointCloud) {
    let dropped = pc.colors.as_ref().is_some_and(|c| c.iter().all(|c| *c == [0.0; 3]));
    let e = pc.aabb().extent();
    println!(
        "{name:>12}: {:6} points, extent {:.2} x {:.2} x {:.2} m, colors {}",
        pc.len(),
        e.x,
        e.y,
        e.z,
        if dropped { "dropped" } else { "kept" }
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let set = ObjectSet::generate(&GenerationConfig {
        n_objects: 200,
        ..GenerationConfig::default()
    })?;
    let scene_cfg = SceneConfig::default();
    let scene = assemble_scene(&set, seed, &scene_cfg)?;
    let cloud = scene.multiview_cloud(&scene_cfg)?;
    let cfg = CropConfig::default();
    let mut rng = stream(seed);
    let finish = |pc: &PointCloud, rng: &mut _| standard_augment(&pseudo_color(pc, rng, &cfg), rng, &cfg.augment);

    let mae = crop_knn(&cloud, &mut rng, cfg.knn_count)?;
    describe("mae", &finish(&mae, &mut rng));

    let pair = crop_pair_contrastive(&cloud, &mut rng, &cfg)?;
    println!("pair overlap {:.3}", pair.overlap);
    describe("pair first", &finish(&pair.first, &mut rng));
    describe("pair second", &finish(&pair.second, &mut rng));

    let bvh = build_accelerator(&scene.meshes()?)?;
    let view = sample_valid_view(&scene, &bvh, &mut derived_stream(seed, "view", 0), &ViewConfig::default())?;
    let window = crop_depth_rect(&view.frame, &mut rng, cfg.depth_ratio_range, cfg.max_attempts)?;
    println!("depth window {:?}", window.window);
    describe("depth", &finish(&window.cloud, &mut rng));
    Ok(())
}
