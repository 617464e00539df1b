//! Chamfer-distance diversity of growing formula object sets.
//!
//!     cargo run --release --example diversity -- [pairs]

use roomgen::analysis::{diversity_report, DiversityConfig, PairStrategy};
use roomgen::pipeline::{GenerationConfig, ObjectSet};
use roomgen::seed::stream;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let pairs: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(500);
    for strategy in [PairStrategy::Uniform, PairStrategy::DescriptorNeighbors] {
        let dcfg = DiversityConfig {
            strategy,
            ..DiversityConfig::default()
        };
        for n in [250, 1000, 2500] {
            let set = ObjectSet::generate(&GenerationConfig {
                n_objects: n,
                ..GenerationConfig::default()
            })?;
            let r = diversity_report(&set, pairs, &mut stream(1), &dcfg)?;
            println!(
                "{strategy:?} n={n:5}: min {:.4}  p10 {:.4}  median {:.4}  mean {:.4}",
                r.chamfer_min, r.chamfer_p10, r.chamfer_p50, r.chamfer_mean
            );
        }
    }
    Ok(())
}
