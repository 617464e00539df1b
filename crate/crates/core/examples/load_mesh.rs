//! Load an OBJ, OFF or PLY mesh, normalize it into the unit sphere and draw
//! surface samples. Without an argument a small OFF cube is used.
//!
//!     cargo run --release --example load_mesh -- [mesh.obj|mesh.off|mesh.ply]

use roomgen::meshio::{load_mesh, normalize_unit_sphere, parse_off, sample_surface};
use roomgen::seed::stream;

const CUBE: &str = "OFF
8 6 0
0 0 0
2 0 0
2 2 0
0 2 0
0 0 2
2 0 2
2 2 2
0 2 2
4 0 3 2 1
4 4 5 6 7
4 0 1 5 4
4 1 2 6 5
4 2 3 7 6
4 3 0 4 7
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = match std::env::args().nth(1) {
        Some(path) => load_mesh(path)?,
        None => parse_off(CUBE)?,
    };
    let before = mesh.aabb();
    println!(
        "{} vertices, {} triangles, bounds {:?} .. {:?}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        before.min.as_slice(),
        before.max.as_slice()
    );

    let mesh = normalize_unit_sphere(mesh)?;
    let max_norm = mesh.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max);
    println!("normalized: max vertex norm {max_norm:.6}, center {:?}", mesh.aabb().center().as_slice());

    let pts = sample_surface(&mesh, 3000, &mut stream(0))?;
    println!("sampled {} surface points", pts.len());
    Ok(())
}
