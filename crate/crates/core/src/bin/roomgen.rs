use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roomgen::analysis::diversity_report;
use roomgen::pipeline::{
    export_crops, prepare_objects, render_dataset_frames, run_with_options, thread_pool, validate_dataset,
    CropMode, DatasetManifest, GenerationConfig, ObjectSet, PipelineError, RunOptions, ValidateOptions,
    MANIFEST_FILE, OBJECTS_DIR,
};
use roomgen::seed::stream;

/// Synthetic indoor scenes from formula-driven, fractal or CAD objects.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML generation config; defaults apply when omitted.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    workers: Option<usize>,
    /// Process only the first N scenes (or objects for gen-objects).
    #[arg(long)]
    limit: Option<usize>,
}

impl Common {
    fn config(&self) -> Result<GenerationConfig, PipelineError> {
        let mut cfg = match &self.config {
            Some(p) => GenerationConfig::load(p)?,
            None => {
                let mut c = GenerationConfig::default();
                c.apply_env();
                c
            }
        };
        if let Some(s) = self.seed {
            cfg.master_seed = s;
        }
        if let Some(w) = self.workers {
            cfg.workers = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn manifest(&self) -> Result<DatasetManifest, PipelineError> {
        DatasetManifest::read(self.config()?.output_dir.join(MANIFEST_FILE))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate (or reuse) the object set and write its parameter files.
    GenObjects(Common),
    /// Generate scenes, their files and the manifest.
    GenScenes(Common),
    /// Render depth frames for the scenes of an existing dataset.
    RenderDepth {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1)]
        frames: usize,
        /// Defaults to `<output_dir>/renders`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write training crops of an existing dataset as PLY files.
    Crop {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = CropMode::Mae)]
        mode: CropMode,
        /// Defaults to `<output_dir>/crops`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Chamfer diversity report of the object set, as JSON.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 2000)]
        pairs: usize,
    },
    /// Re-check an existing dataset; exits with status 1 on any violation.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Scenes checked for one point per voxel.
        #[arg(long, default_value_t = 16)]
        voxel_sample: usize,
    },
}

fn run(cli: Cli) -> Result<bool, PipelineError> {
    match cli.command {
        Command::GenObjects(c) => {
            let mut cfg = c.config()?;
            if let Some(l) = c.limit {
                cfg.n_objects = l;
                cfg.object_multiplier = 1.0;
            }
            let pool = thread_pool(cfg.workers)?;
            let (set, files) = pool.install(|| prepare_objects(&cfg, &cfg.output_dir))?;
            println!("{} objects, {} files in {}", roomgen::scenegen::ObjectSource::len(&set), files.len(), cfg.output_dir.display());
        }
        Command::GenScenes(c) => {
            let cfg = c.config()?;
            let m = run_with_options(&cfg, &RunOptions { limit: c.limit })?;
            let retries: usize = m.records.iter().map(|r| r.retries).sum();
            println!("{} scenes ({retries} regenerations) in {}", m.records.len(), cfg.output_dir.display());
        }
        Command::RenderDepth { common, frames, out } => {
            let cfg = common.config()?;
            let m = common.manifest()?;
            let (set, _) = ObjectSet::load(&cfg.output_dir.join(OBJECTS_DIR), &cfg)?;
            let out = out.unwrap_or_else(|| cfg.output_dir.join("renders"));
            let pool = thread_pool(cfg.workers)?;
            let recs = pool.install(|| render_dataset_frames(&m, &set, frames, common.limit, &out))?;
            println!("{} frames in {}", recs.len(), out.display());
        }
        Command::Crop { common, mode, out } => {
            let cfg = common.config()?;
            let m = common.manifest()?;
            let out = out.unwrap_or_else(|| cfg.output_dir.join("crops"));
            let pool = thread_pool(cfg.workers)?;
            let files = pool.install(|| export_crops(&m, mode, cfg.master_seed, common.limit, &out))?;
            for f in &files {
                println!("{}", f.display());
            }
        }
        Command::Stats { common, pairs } => {
            let mut cfg = common.config()?;
            if let Some(l) = common.limit {
                cfg.n_objects = l;
                cfg.object_multiplier = 1.0;
            }
            let pool = thread_pool(cfg.workers)?;
            let report = pool.install(|| -> Result<_, PipelineError> {
                let set = ObjectSet::generate(&cfg)?;
                diversity_report(&set, pairs, &mut stream(cfg.master_seed), &cfg.diversity)
                    .map_err(|e| PipelineError::Config(e.to_string()))
            })?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Validate { common, voxel_sample } => {
            let m = common.manifest()?;
            let report = validate_dataset(&m, &ValidateOptions { voxel_sample });
            println!("{}", serde_json::to_string_pretty(&report)?);
            return Ok(report.is_ok());
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(2)
        }
    }
}
