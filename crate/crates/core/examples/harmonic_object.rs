//! Sample formula coefficients, mesh the surface and save it as PLY.
//!
//!     cargo run --release --example harmonic_object -- [seed] [out.ply]

use std::fs::File;
use std::io::BufWriter;

use roomgen::harmonics::{HarmonicCoefficients, DEFAULT_AZIMUTH_STEPS, DEFAULT_POLAR_STEPS};
use roomgen::meshio::{normalize_unit_sphere, ply};
use roomgen::seed::stream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let out = args.next().unwrap_or_else(|| "harmonic.ply".into());

    let c = HarmonicCoefficients::sample(&mut stream(seed));
    println!("coefficients: {c}");
    println!("r(θ=0, φ=π/2) = {:.4}", c.radius(0.0, std::f64::consts::FRAC_PI_2));

    let mesh = normalize_unit_sphere(c.mesh(DEFAULT_POLAR_STEPS, DEFAULT_AZIMUTH_STEPS)?)?;
    println!(
        "{} vertices, {} triangles, surface area {:.3}",
        mesh.vertices.len(),
        mesh.triangles.len(),
        mesh.total_area()
    );
    ply::write_mesh(&mesh, BufWriter::new(File::create(&out)?))?;
    println!("wrote {out}");
    Ok(())
}
