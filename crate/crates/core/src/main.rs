use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sgwc::pipeline::{DescriptorKind, DescriptorStore, ExperimentConfig, Pipeline, RunReport};
use sgwc::Result;

#[derive(Parser)]
#[command(name = "sgwc", version, about = "Spectral graph wavelet shape classification")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
}

#[derive(Subcommand)]
enum Verb {
    /// Solve eigenbases and local descriptors for every shape in the manifest.
    Describe(Flags),
    /// Build the shared vocabulary and write `vocab.bin`.
    Vocab(Flags),
    /// Encode every shape and write `dataset.bin`.
    Encode(Flags),
    /// Fit one classifier on all encoded shapes and write `model.bin`.
    Train(Flags),
    /// Repeated stratified evaluation; writes report, confusion and accuracy files.
    Evaluate(Flags),
    /// Evaluate every vocabulary size and kernel width in the sweep grid.
    Sweep(Flags),
    /// Print the summary of a previous evaluation.
    Report {
        /// Report file, or a directory holding `report.json`.
        #[arg(default_value = "sgwc-out")]
        path: PathBuf,
    },
}

/// Mirrors the experiment config; flags override values from `--config`.
#[derive(Args)]
struct Flags {
    /// JSON file with experiment config fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `path,class` CSV or a directory with one subdirectory per class.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    eigen_count: Option<usize>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    vocabulary_size: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// sgwc-bof, ga-bof-hks, shape-dna, cshape-dna or gps-embedding.
    #[arg(long)]
    descriptor: Option<String>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated; more than one value selects by cross-validation.
    #[arg(long, value_delimiter = ',')]
    c_grid: Option<Vec<f64>>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    #[arg(long)]
    vocab_per_run: bool,
    #[arg(long)]
    vocab_training_only: bool,
    #[arg(long, value_delimiter = ',')]
    sweep_epsilons: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    sweep_vocabulary_sizes: Option<Vec<usize>>,
}

impl Flags {
    fn resolve(self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(path) => ExperimentConfig::from_json_file(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field {
                    c.$field = v;
                }
            )*};
        }
        set!(eigen_count, resolution, vocabulary_size, epsilon, test_fraction, repetitions, seed);
        set!(c_grid, output_dir, sweep_epsilons, sweep_vocabulary_sizes);
        if self.manifest.is_some() {
            c.manifest = self.manifest;
        }
        if self.cache_dir.is_some() {
            c.cache_dir = self.cache_dir;
        }
        if let Some(d) = self.descriptor {
            c.descriptor = d.parse::<DescriptorKind>()?;
        }
        c.vocab_per_run |= self.vocab_per_run;
        c.vocab_training_only |= self.vocab_training_only;
        c.validate()?;
        Ok(c)
    }
}

fn describe(flags: Flags) -> Result<(Pipeline, DescriptorStore)> {
    let mut pipeline = Pipeline::new(flags.resolve()?)?;
    let store = pipeline.describe()?;
    println!(
        "described {} shapes ({} failed); store at {}",
        store.entries.len(),
        store.failures.len(),
        pipeline.config.output_dir.join("store.json").display()
    );
    Ok((pipeline, store))
}

fn encode(flags: Flags) -> Result<(Pipeline, sgwc::classify::LabeledDataset)> {
    let (mut p, store) = describe(flags)?;
    let book = if p.config.descriptor.uses_vocabulary() {
        Some(p.vocab(&store, None, p.config.seed)?)
    } else {
        None
    };
    let eps = p.config.epsilon;
    let encoded = p.encode(&store, book.as_ref(), eps)?;
    Ok((p, encoded.dataset))
}

fn run(verb: Verb) -> Result<bool> {
    let pipeline = match verb {
        Verb::Describe(flags) => describe(flags)?.0,
        Verb::Vocab(flags) => {
            let (mut p, store) = describe(flags)?;
            let book = p.vocab(&store, None, p.config.seed)?;
            let path = p.config.output_dir.join("vocab.bin");
            book.write(&path)?;
            println!("{}x{} vocabulary, alpha {:.6e}, at {}", book.dim(), book.k(), book.alpha, path.display());
            p
        }
        Verb::Encode(flags) => {
            let (p, dataset) = encode(flags)?;
            let path = p.config.output_dir.join("dataset.bin");
            dataset.write(&path)?;
            println!("{}x{} data matrix at {}", dataset.dim(), dataset.len(), path.display());
            p
        }
        Verb::Train(flags) => {
            let (mut p, dataset) = encode(flags)?;
            let model = p.train(&dataset)?;
            let path = p.config.output_dir.join("model.bin");
            model.write(&path)?;
            println!("{} classifiers with C = {} at {}", model.class_count(), model.c, path.display());
            p
        }
        Verb::Evaluate(flags) => {
            let (mut p, store) = describe(flags)?;
            let report = p.evaluate(&store)?;
            report.write_outputs(&p.config.output_dir)?;
            print!("{}", report.summary());
            p
        }
        Verb::Sweep(flags) => {
            let (mut p, store) = describe(flags)?;
            for cell in p.sweep(&store)? {
                println!(
                    "k {:>4}  eps {:<6}  mean {:.4}  min {:.4}  max {:.4}",
                    cell.vocabulary_size, cell.epsilon, cell.mean_accuracy, cell.min_accuracy, cell.max_accuracy
                );
            }
            p
        }
        Verb::Report { path } => {
            let path = if path.is_dir() { path.join("report.json") } else { path };
            print!("{}", RunReport::read(&path)?.summary());
            return Ok(true);
        }
    };
    Ok(pipeline.failures().is_empty())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse().verb) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some shapes failed; see the failure list in the outputs");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
