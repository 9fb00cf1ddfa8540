//! End-to-end experiments: manifest ingestion, cached per-shape descriptors,
//! vocabulary, encoding, training and repeated stratified evaluation.
//!
//! Every stage reads and writes through a content-addressed cache, so a rerun
//! with a warm cache performs no eigensolves and yields bit-identical results.

mod config;
mod manifest;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{DescriptorKind, ExperimentConfig, CACHE_ENV};
pub use manifest::{DatasetManifest, ManifestEntry};
pub use report::{Failure, Repetition, RunReport, StageTiming};

use crate::baseline;
use crate::bof::{self, Codebook};
use crate::classify::{self, LabeledDataset, OvaSvmModel};
use crate::global::{self, GeodesicMatrix};
use crate::laplacian::{solve_eigs, EigenBasis, LaplacianPair};
use crate::sgw::{self, KernelBank};
use crate::{io, Error, Mesh, Result};

const SIGNATURE_MAGIC: &[u8; 8] = b"SGWSIGNS";

/// Per-shape cache pointers written by the describe stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreEntry {
    pub path: PathBuf,
    pub class: String,
    pub label: usize,
    pub mesh_hash: String,
    pub vertex_count: usize,
    pub eigen_count: usize,
    pub eigen_file: PathBuf,
    /// Local descriptor matrix, for the bag-of-features kinds.
    pub signature_file: Option<PathBuf>,
    pub lambda_max: f64,
    pub frame_lower: f64,
    pub frame_upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorStore {
    pub class_names: Vec<String>,
    pub descriptor: DescriptorKind,
    pub entries: Vec<StoreEntry>,
    pub failures: Vec<Failure>,
}

impl DescriptorStore {
    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        serde_json::from_str(&text).map_err(|e| Error::from(e).at(path))
    }
}

/// Encoded shapes; `entries[i]` is the store index behind dataset column `i`.
#[derive(Debug, Clone)]
pub struct Encoded {
    pub dataset: LabeledDataset,
    pub entries: Vec<usize>,
    pub failures: Vec<Failure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub epsilon: f64,
    pub vocabulary_size: usize,
    pub mean_accuracy: f64,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    pub report_dir: PathBuf,
}

pub struct Pipeline {
    pub config: ExperimentConfig,
    pub manifest: DatasetManifest,
    cache: PathBuf,
    stages: Vec<StageTiming>,
    failures: Vec<Failure>,
}

fn short_hash(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

fn failure(path: &Path, stage: &str, error: &Error) -> Failure {
    log::warn!("{}: {stage} failed: {error}", path.display());
    Failure {
        path: path.to_path_buf(),
        stage: stage.into(),
        error: error.to_string(),
    }
}

impl Pipeline {
    /// Loads the manifest named by the config.
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let path = config
            .manifest
            .clone()
            .ok_or_else(|| Error::InvalidArgument("no dataset manifest given".into()))?;
        let manifest = DatasetManifest::load(&path)?;
        Self::with_manifest(config, manifest)
    }

    pub fn with_manifest(config: ExperimentConfig, manifest: DatasetManifest) -> Result<Self> {
        config.validate()?;
        let cache = config.resolved_cache_dir();
        Ok(Self {
            config,
            manifest,
            cache,
            stages: Vec::new(),
            failures: Vec::new(),
        })
    }

    pub fn cache_dir(&self) -> &Path {
        &self.cache
    }

    pub fn stages(&self) -> &[StageTiming] {
        &self.stages
    }

    /// Per-shape failures collected so far across all stages.
    pub fn failures(&self) -> &[Failure] {
        &self.failures
    }

    fn record(&mut self, stage: &str, start: Instant, computed: usize, cached: usize) -> Result<()> {
        self.stages.push(StageTiming {
            stage: stage.into(),
            seconds: start.elapsed().as_secs_f64(),
            computed,
            cached,
        });
        report::write_json(&self.config.output_dir.join("stages.json"), &self.stages)
    }

    fn add_failures(&mut self, failures: &[Failure]) {
        for f in failures {
            if !self.failures.contains(f) {
                self.failures.push(f.clone());
            }
        }
    }

    fn local_dim(&self) -> usize {
        sgw::signature_dim(self.config.resolution)
    }

    /// Loads every mesh, solves (or reuses) its eigenbasis and local
    /// descriptors, and writes `store.json` and `frame_bounds.csv`.
    pub fn describe(&mut self) -> Result<DescriptorStore> {
        let start = Instant::now();
        let results: Vec<(std::result::Result<StoreEntry, Failure>, bool)> = self
            .manifest
            .entries
            .par_iter()
            .map(|entry| match self.describe_one(entry) {
                Ok((e, solved)) => (Ok(e), solved),
                Err(err) => (Err(failure(&entry.path, "describe", &err)), false),
            })
            .collect();
        let mut store = DescriptorStore {
            class_names: self.manifest.class_names.clone(),
            descriptor: self.config.descriptor,
            entries: Vec::new(),
            failures: Vec::new(),
        };
        let mut solved = 0;
        for (r, s) in results {
            solved += s as usize;
            match r {
                Ok(e) => store.entries.push(e),
                Err(f) => store.failures.push(f),
            }
        }
        self.add_failures(&store.failures);
        let out = &self.config.output_dir;
        report::write_json(&out.join("store.json"), &store)?;
        if let Some(first) = store.entries.first() {
            let bank = KernelBank::new(first.lambda_max, self.config.resolution)?;
            let samples = sgw::frame_samples(&bank, self.config.resolution, first.lambda_max);
            let path = out.join("frame_bounds.csv");
            let file = std::fs::File::create(&path).map_err(|e| Error::from(e).at(&path))?;
            sgw::write_frame_csv(&samples, std::io::BufWriter::new(file))?;
        }
        let cached = store.entries.len() - solved;
        self.record("describe", start, solved, cached)?;
        Ok(store)
    }

    fn describe_one(&self, entry: &ManifestEntry) -> Result<(StoreEntry, bool)> {
        let mesh = Mesh::from_path(&entry.path)?;
        let hash = mesh.content_hash();
        let m = mesh.vertex_count();
        let q = self.config.eigen_count.min(m);
        let eigen_file = self.cache.join("eigen").join(format!("{hash}-q{q}.bin"));
        let (basis, solved) = match EigenBasis::read(&eigen_file) {
            Ok(b) => (b, false),
            Err(_) => {
                let basis = solve_eigs(&LaplacianPair::assemble(&mesh), q)?;
                basis.write(&eigen_file)?;
                (basis, true)
            }
        };
        let r = self.config.resolution;
        let signature_file = match self.config.descriptor {
            DescriptorKind::SgwcBof => {
                let path = self.cache.join("sgws").join(format!("{hash}-q{q}-r{r}.bin"));
                if solved || !path.exists() {
                    io::write_matrix(&path, SIGNATURE_MAGIC, &sgw::sgws_matrix(&basis, r)?.values)?;
                }
                Some(path)
            }
            DescriptorKind::GaBofHks => {
                let p = self.local_dim();
                let path = self.cache.join("hks").join(format!("{hash}-q{q}-p{p}.bin"));
                if solved || !path.exists() {
                    let scales = baseline::hks_default_scales(&basis, p)?;
                    io::write_matrix(&path, SIGNATURE_MAGIC, &baseline::hks(&basis, &scales)?.values)?;
                }
                Some(path)
            }
            _ => None,
        };
        let lambda_max = basis.lambda_max();
        let bank = KernelBank::new(lambda_max, r)?;
        let (frame_lower, frame_upper) = sgw::frame_bounds(&bank, r, lambda_max)?;
        Ok((
            StoreEntry {
                path: entry.path.clone(),
                class: entry.class.clone(),
                label: self.manifest.label(&entry.class),
                mesh_hash: hash,
                vertex_count: m,
                eigen_count: q,
                eigen_file,
                signature_file,
                lambda_max,
                frame_lower,
                frame_upper,
            },
            solved,
        ))
    }

    fn signatures(entry: &StoreEntry) -> Result<DMatrix<f64>> {
        let path = entry
            .signature_file
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("store holds no local descriptors for this kind".into()))?;
        io::read_matrix(path, SIGNATURE_MAGIC)
    }

    /// K-means vocabulary over the local descriptors of the chosen store
    /// entries (all when `members` is `None`), cached by training content.
    pub fn vocab(&mut self, store: &DescriptorStore, members: Option<&[usize]>, seed: u64) -> Result<Codebook> {
        if !self.config.descriptor.uses_vocabulary() {
            return Err(Error::InvalidArgument(format!(
                "descriptor {} does not use a vocabulary",
                self.config.descriptor
            )));
        }
        let start = Instant::now();
        let chosen: Vec<usize> = members.map_or_else(|| (0..store.entries.len()).collect(), <[usize]>::to_vec);
        let matrices = chosen
            .iter()
            .map(|&i| Self::signatures(&store.entries[i]))
            .collect::<Result<Vec<_>>>()?;
        let refs: Vec<&DMatrix<f64>> = matrices.iter().collect();
        let data = bof::stack_columns(&refs)?;
        let k = self.config.vocabulary_size;
        if data.ncols() < k {
            return Err(Error::InsufficientData(format!(
                "{} descriptors cannot train {k} codewords",
                data.ncols()
            )));
        }
        let training_hash = bof::matrix_hash(&data);
        let key = short_hash(&[&training_hash, &k.to_string(), &seed.to_string()]);
        let path = self.cache.join("vocab").join(format!("{key}.bin"));
        let (book, computed) = match Codebook::read(&path) {
            Ok(b) if b.training_hash == training_hash => (b, false),
            _ => {
                let book = bof::kmeans(&data, k, seed)?;
                book.write(&path)?;
                (book, true)
            }
        };
        self.record("vocab", start, computed as usize, !computed as usize)?;
        Ok(book)
    }

    fn geodesics(&self, entry: &StoreEntry) -> Result<(GeodesicMatrix, bool)> {
        let path = self.cache.join("geodesic").join(format!("{}.bin", entry.mesh_hash));
        if let Ok(d) = GeodesicMatrix::read(&path) {
            if d.dim() == entry.vertex_count {
                return Ok((d, false));
            }
        }
        let mesh = Mesh::from_path(&entry.path)?;
        let d = global::geodesic_matrix(&mesh)?;
        d.write(&path)?;
        Ok((d, true))
    }

    fn encode_one(&self, entry: &StoreEntry, codebook: Option<&Codebook>, epsilon: f64) -> Result<(Vec<f64>, bool)> {
        let global_vector = |f: fn(&EigenBasis) -> Result<Vec<f64>>| -> Result<(Vec<f64>, bool)> {
            Ok((f(&EigenBasis::read(&entry.eigen_file)?)?, false))
        };
        match self.config.descriptor {
            DescriptorKind::SgwcBof | DescriptorKind::GaBofHks => {
                let book = codebook.ok_or_else(|| Error::InvalidArgument("encoding needs a vocabulary".into()))?;
                let codes = bof::soft_assign(&Self::signatures(entry)?, book)?;
                let (d, computed) = self.geodesics(entry)?;
                let kernel = global::geodesic_kernel(&d, epsilon)?;
                Ok((global::sgwc_bof(&codes, &kernel, epsilon)?.x, computed))
            }
            DescriptorKind::ShapeDna => {
                global_vector(|b| Ok(baseline::shape_dna(b, baseline::SHAPE_DNA_LEN)?.values))
            }
            DescriptorKind::CShapeDna => {
                global_vector(|b| Ok(baseline::cshape_dna(b, b.total_area(), baseline::CSHAPE_DNA_LEN)?.values))
            }
            DescriptorKind::GpsEmbedding => {
                global_vector(|b| Ok(baseline::gps_embedding(b, b.total_area(), baseline::GPS_LEN)?.values))
            }
        }
    }

    /// Global feature vector for every store entry; shapes that fail are
    /// reported and left out of the dataset.
    pub fn encode(&mut self, store: &DescriptorStore, codebook: Option<&Codebook>, epsilon: f64) -> Result<Encoded> {
        let start = Instant::now();
        let results: Vec<Result<(Vec<f64>, bool)>> = store
            .entries
            .par_iter()
            .map(|e| self.encode_one(e, codebook, epsilon))
            .collect();
        let mut columns = Vec::new();
        let mut entries = Vec::new();
        let mut failures = Vec::new();
        let mut computed = 0;
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok((x, c)) => {
                    computed += c as usize;
                    columns.push(DVector::from_vec(x));
                    entries.push(i);
                }
                Err(e) => failures.push(failure(&store.entries[i].path, "encode", &e)),
            }
        }
        self.add_failures(&failures);
        if columns.is_empty() {
            return Err(Error::InsufficientData("no shape could be encoded".into()));
        }
        let dim = columns[0].len();
        if let Some(c) = columns.iter().find(|c| c.len() != dim) {
            return Err(Error::DimensionMismatch { expected: dim, actual: c.len() });
        }
        let x = DMatrix::from_columns(&columns);
        let labels = entries.iter().map(|&i| store.entries[i].label).collect();
        let dataset = LabeledDataset::new(x, labels, store.class_names.clone())?;
        let cached = entries.len() - computed;
        self.record("encode", start, computed, cached)?;
        Ok(Encoded {
            dataset,
            entries,
            failures,
        })
    }

    fn choose_c(&self, train: &LabeledDataset, seed: u64) -> Result<f64> {
        match self.config.c_grid.as_slice() {
            [c] => Ok(*c),
            grid => Ok(classify::select_c(train, grid, classify::CV_FOLDS, seed)?.0),
        }
    }

    /// Fits one model on the whole dataset.
    pub fn train(&mut self, dataset: &LabeledDataset) -> Result<OvaSvmModel> {
        let start = Instant::now();
        let c = self.choose_c(dataset, self.config.seed)?;
        let model = classify::train_ova_svm(dataset, c, self.config.seed)?;
        self.record("train", start, 1, 0)?;
        Ok(model)
    }

    fn repetition(&self, dataset: &LabeledDataset, train: &[usize], test: &[usize], index: usize, seed: u64) -> Result<(Repetition, classify::ConfusionMatrix)> {
        let train_set = dataset.subset(train);
        let test_set = dataset.subset(test);
        let c = self.choose_c(&train_set, seed)?;
        let model = classify::train_ova_svm(&train_set, c, seed)?;
        let predicted = classify::predict_all(&model, &test_set)?;
        let cm = classify::confusion_matrix(&test_set.labels, &predicted, dataset.class_count())?;
        Ok((
            Repetition {
                index,
                seed,
                c,
                train_size: train.len(),
                test_size: test.len(),
                accuracy: classify::accuracy(&cm)?,
            },
            cm,
        ))
    }

    fn assemble_report(&self, dataset: &LabeledDataset, runs: Vec<(Repetition, classify::ConfusionMatrix)>) -> RunReport {
        let k = dataset.class_count();
        let mut confusion = vec![vec![0; k]; k];
        for (_, cm) in &runs {
            for (a, row) in cm.counts.iter().enumerate() {
                for (p, &c) in row.iter().enumerate() {
                    confusion[a][p] += c;
                }
            }
        }
        let repetitions: Vec<Repetition> = runs.into_iter().map(|r| r.0).collect();
        let acc: Vec<f64> = repetitions.iter().map(|r| r.accuracy).collect();
        RunReport {
            config: self.config.clone(),
            class_names: dataset.class_names.clone(),
            feature_dim: dataset.dim(),
            shape_count: dataset.len(),
            mean_accuracy: acc.iter().sum::<f64>() / acc.len() as f64,
            min_accuracy: acc.iter().copied().fold(f64::INFINITY, f64::min),
            max_accuracy: acc.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            repetitions,
            confusion,
            stages: self.stages.clone(),
            failures: self.failures.clone(),
        }
    }

    /// Repeated stratified train/test evaluation of a fixed dataset; run `r`
    /// (1-based) splits and trains with seed `seed + r`.
    pub fn evaluate_dataset(&mut self, dataset: &LabeledDataset) -> Result<RunReport> {
        let start = Instant::now();
        let mut runs = Vec::with_capacity(self.config.repetitions);
        for r in 1..=self.config.repetitions {
            let seed = self.config.seed.wrapping_add(r as u64);
            let (train, test) = classify::stratified_indices(dataset, self.config.test_fraction, seed)?;
            runs.push(self.repetition(dataset, &train, &test, r, seed)?);
        }
        self.record("evaluate", start, runs.len(), 0)?;
        Ok(self.assemble_report(dataset, runs))
    }

    /// Full evaluation from the store. With a shared vocabulary the dataset is
    /// encoded once; otherwise each run builds its own vocabulary (from its
    /// training split when so configured) and re-encodes.
    pub fn evaluate(&mut self, store: &DescriptorStore) -> Result<RunReport> {
        let per_run = self.config.descriptor.uses_vocabulary()
            && (self.config.vocab_per_run || self.config.vocab_training_only);
        if !per_run {
            let book = if self.config.descriptor.uses_vocabulary() {
                Some(self.vocab(store, None, self.config.seed)?)
            } else {
                None
            };
            let encoded = self.encode(store, book.as_ref(), self.config.epsilon)?;
            return self.evaluate_dataset(&encoded.dataset);
        }

        let labels = store.labels();
        let shapes = LabeledDataset::new(DMatrix::zeros(0, labels.len()), labels, store.class_names.clone())?;
        let mut runs = Vec::with_capacity(self.config.repetitions);
        let mut last = None;
        for r in 1..=self.config.repetitions {
            let seed = self.config.seed.wrapping_add(r as u64);
            let (train, _) = classify::stratified_indices(&shapes, self.config.test_fraction, seed)?;
            let members = self.config.vocab_training_only.then_some(train.as_slice());
            let book = self.vocab(store, members, seed)?;
            let encoded = self.encode(store, Some(&book), self.config.epsilon)?;
            let start = Instant::now();
            let in_train: Vec<bool> = {
                let mut mask = vec![false; store.entries.len()];
                for &i in &train {
                    mask[i] = true;
                }
                mask
            };
            let (train_cols, test_cols): (Vec<usize>, Vec<usize>) =
                (0..encoded.entries.len()).partition(|&c| in_train[encoded.entries[c]]);
            runs.push(self.repetition(&encoded.dataset, &train_cols, &test_cols, r, seed)?);
            self.record("evaluate", start, 1, 0)?;
            last = Some(encoded.dataset);
        }
        let dataset = last.expect("at least one repetition");
        Ok(self.assemble_report(&dataset, runs))
    }

    /// One evaluation per (vocabulary size, ε) cell, each written under
    /// `sweep/` in the output directory along with a `sweep.csv` summary.
    pub fn sweep(&mut self, store: &DescriptorStore) -> Result<Vec<SweepCell>> {
        if !self.config.descriptor.uses_vocabulary() {
            return Err(Error::InvalidArgument(format!(
                "descriptor {} has no vocabulary size or kernel width to sweep",
                self.config.descriptor
            )));
        }
        let base_k = self.config.vocabulary_size;
        let mut cells = Vec::new();
        for k in self.config.sweep_vocabulary_sizes.clone() {
            self.config.vocabulary_size = k;
            let book = self.vocab(store, None, self.config.seed);
            let book = match book {
                Ok(b) => b,
                Err(e @ Error::InsufficientData(_)) => {
                    log::warn!("skipping vocabulary size {k}: {e}");
                    continue;
                }
                Err(e) => return Err(e),
            };
            for eps in self.config.sweep_epsilons.clone() {
                let encoded = self.encode(store, Some(&book), eps)?;
                let mut report = self.evaluate_dataset(&encoded.dataset)?;
                report.config.epsilon = eps;
                let dir = self.config.output_dir.join("sweep").join(format!("k{k}_eps{eps}"));
                report.write_outputs(&dir)?;
                cells.push(SweepCell {
                    epsilon: eps,
                    vocabulary_size: k,
                    mean_accuracy: report.mean_accuracy,
                    min_accuracy: report.min_accuracy,
                    max_accuracy: report.max_accuracy,
                    report_dir: dir,
                });
            }
        }
        self.config.vocabulary_size = base_k;
        let path = self.config.output_dir.join("sweep.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::from(e).at(&path))?;
        w.write_record(["vocabulary_size", "epsilon", "mean_accuracy", "min_accuracy", "max_accuracy"])?;
        for c in &cells {
            w.write_record([
                c.vocabulary_size.to_string(),
                c.epsilon.to_string(),
                c.mean_accuracy.to_string(),
                c.min_accuracy.to_string(),
                c.max_accuracy.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(cells)
    }
}
