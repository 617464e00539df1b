//! Search for an acceptable random IFS and save its normalized attractor.
//!
//!     cargo run --release --example fractal_object -- [seed] [out.ply]

use std::fs::File;
use std::io::BufWriter;

use roomgen::fractal::{axis_variance, write_systems, FractalConfig, FractalObject};
use roomgen::meshio::ply;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let out = args.next().unwrap_or_else(|| "fractal.ply".into());

    let cfg = FractalConfig::default();
    let obj = FractalObject::generate(seed, &cfg)?;
    println!("accepted after {} rejected systems", obj.rejected);
    print!("{}", write_systems(std::slice::from_ref(&obj.system)));

    let cloud = obj.cloud(&cfg)?;
    let v = axis_variance(&cloud.positions);
    println!("{} points, axis variance ({:.3}, {:.3}, {:.3})", cloud.len(), v.x, v.y, v.z);
    ply::write_cloud(&cloud, BufWriter::new(File::create(&out)?))?;
    println!("wrote {out}");
    Ok(())
}
