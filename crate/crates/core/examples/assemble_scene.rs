//! Build a room from 200 formula objects and print where everything went.
//!
//!     cargo run --release --example assemble_scene -- [seed]

use roomgen::pipeline::{GenerationConfig, ObjectSet};
use roomgen::scenegen::{assemble_scene, SceneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let cfg = GenerationConfig {
        n_objects: 200,
        ..GenerationConfig::default()
    };
    let set = ObjectSet::generate(&cfg)?;
    let scene_cfg = SceneConfig::default();
    let scene = assemble_scene(&set, seed, &scene_cfg)?;
    let s = &scene.spec;
    println!(
        "room {:.2} x {:.2} m, walls {:.2} m, {} objects",
        s.room_width,
        s.room_length,
        s.wall_height,
        s.placements.len()
    );
    for (p, o) in s.placements.iter().zip(&scene.objects) {
        let b = o.aabb();
        let rests = if b.min.z <= 1e-9 { "floor" } else { "stacked" };
        println!(
            "  object {:4}  scale {:.2}  flip {:5}  swap {:5}  z {:.2}..{:.2} m  {rests}",
            p.object_ref, p.scale, p.flip, p.zy_swap, b.min.z, b.max.z
        );
    }
    s.check(&scene_cfg)?;
    Ok(())
}
