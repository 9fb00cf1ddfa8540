//! Generates the three-class procedural benchmark and runs the full SGWC-BoF
//! evaluation on it.
//!
//! cargo run --release --example synthetic_benchmark -- [out_dir] [per_class]

use sgwc::pipeline::{ExperimentConfig, Pipeline};
use sgwc::shapes;

fn main() -> sgwc::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = std::path::PathBuf::from(args.next().unwrap_or_else(|| "benchmark-out".into()));
    let per_class: usize = args.next().map_or(20, |s| s.parse().expect("per_class must be an integer"));

    let manifest = shapes::write_benchmark(&out.join("meshes"), per_class, 2024)?;
    let config = ExperimentConfig {
        manifest: Some(manifest),
        vocabulary_size: 32,
        output_dir: out.clone(),
        cache_dir: Some(out.join("cache")),
        ..Default::default()
    };
    let mut pipeline = Pipeline::new(config)?;
    let store = pipeline.describe()?;
    let report = pipeline.evaluate(&store)?;
    report.write_outputs(&out)?;
    print!("{}", report.summary());
    Ok(())
}
