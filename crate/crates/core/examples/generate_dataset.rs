//! A small end-to-end dataset: objects, scenes with clouds and depth
//! frames, the JSONL manifest, then a validation pass.
//!
//!     cargo run --release --example generate_dataset -- [out_dir]

use roomgen::pipeline::{run_generation, validate_dataset, GenerationConfig, ValidateOptions, ViewMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "dataset-out".into());
    let cfg = GenerationConfig {
        n_objects: 100,
        n_scenes: 8,
        view_mode: ViewMode::Both,
        output_dir: out.into(),
        ..GenerationConfig::default()
    };
    let manifest = run_generation(&cfg)?;
    for r in &manifest.records {
        println!(
            "scene {}: {} objects, {} points, {} frame(s), {} regeneration(s)",
            r.scene_index,
            r.spec.placements.len(),
            r.n_points.unwrap_or(0),
            r.frames.len(),
            r.retries
        );
    }
    let report = validate_dataset(&manifest, &ValidateOptions::default());
    println!(
        "validated {} records, {} files: {} violation(s)",
        report.records,
        report.files_checked,
        report.violations.len()
    );
    Ok(())
}
