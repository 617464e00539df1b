//! Turn an assembled room into the fixed-size, voxelized scene cloud.
//!
//!     cargo run --release --example multiview_cloud -- [seed] [out.ply]

use std::fs::File;
use std::io::BufWriter;

use roomgen::meshio::ply;
use roomgen::pipeline::{GenerationConfig, ObjectSet};
use roomgen::scenegen::{assemble_scene, is_object_id, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let out = args.next().unwrap_or_else(|| "scene.ply".into());

    let cfg = GenerationConfig {
        n_objects: 200,
        ..GenerationConfig::default()
    };
    let set = ObjectSet::generate(&cfg)?;
    let scene_cfg = SceneConfig::default();
    let scene = assemble_scene(&set, seed, &scene_cfg)?;

    let voxelized = scene.voxelized_cloud(&scene_cfg)?;
    let cloud = scene.multiview_cloud(&scene_cfg)?;
    let ids = cloud.object_ids.as_deref().unwrap_or_default();
    let on_objects = ids.iter().filter(|&&i| is_object_id(i)).count();
    println!(
        "{} points after {} m voxels, {} kept ({} on objects, {} on floor and walls)",
        voxelized.len(),
        scene_cfg.voxel_size,
        cloud.len(),
        on_objects,
        cloud.len() - on_objects
    );
    ply::write_cloud(&cloud, BufWriter::new(File::create(&out)?))?;
    println!("wrote {out}");
    Ok(())
}
