//! Assemble a harmonics room, find a valid camera view and write the depth
//! frame (depth PNG, id PNG, JSON sidecar) to a directory.
//!
//!     cargo run --release --example depth_render -- [out_dir] [seed]

use std::time::Instant;

use roomgen::pipeline::{GenerationConfig, ObjectSet};
use roomgen::raycast::{build_accelerator, depth_io, reprojection_error, sample_valid_view, ViewConfig};
use roomgen::scenegen::{assemble_scene, SceneConfig};
use roomgen::seed::{derive_seed, derived_stream};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let out = args.next().unwrap_or_else(|| "depth-out".into());
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1);

    let cfg = GenerationConfig {
        n_objects: 200,
        master_seed: seed,
        ..GenerationConfig::default()
    };
    let set = ObjectSet::generate(&cfg)?;
    let scene = assemble_scene(&set, derive_seed(seed, "scene", 0), &SceneConfig::default())?;

    let t = Instant::now();
    let bvh = build_accelerator(&scene.meshes()?)?;
    println!("bvh over {} triangles in {:.2?}", bvh.triangle_count(), t.elapsed());

    let t = Instant::now();
    let view = sample_valid_view(&scene, &bvh, &mut derived_stream(seed, "view", 0), &ViewConfig::default())?;
    println!(
        "accepted after {} poses in {:.2?}: objects {:?}",
        view.attempts,
        t.elapsed(),
        view.qualifying
    );
    println!("reprojection error {:.2e} m", reprojection_error(&view.frame, &bvh));

    std::fs::create_dir_all(&out)?;
    let paths = depth_io::write_frame(&view.frame, &view.qualifying, out.as_ref(), "frame")?;
    for p in paths {
        println!("wrote {}", p.display());
    }
    Ok(())
}
