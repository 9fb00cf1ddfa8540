use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentConfig;
use crate::{Error, Result};

/// Wall-clock of one pipeline stage with how many items were computed or
/// served from the cache.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
    pub computed: usize,
    pub cached: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub path: PathBuf,
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Repetition {
    pub index: usize,
    pub seed: u64,
    pub c: f64,
    pub train_size: usize,
    pub test_size: usize,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: ExperimentConfig,
    pub class_names: Vec<String>,
    pub feature_dim: usize,
    pub shape_count: usize,
    pub repetitions: Vec<Repetition>,
    pub mean_accuracy: f64,
    pub min_accuracy: f64,
    pub max_accuracy: f64,
    /// Summed over repetitions; rows are actual classes.
    pub confusion: Vec<Vec<usize>>,
    pub stages: Vec<StageTiming>,
    pub failures: Vec<Failure>,
}

impl RunReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.repetitions.iter().map(|r| r.accuracy).collect()
    }

    /// Writes `report.json`, `confusion.csv` and `accuracy.csv` into `dir`.
    pub fn write_outputs(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::from(e).at(dir))?;
        write_json(&dir.join("report.json"), self)?;

        let path = dir.join("confusion.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::from(e).at(&path))?;
        w.write_record(&self.class_names)?;
        for row in &self.confusion {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;

        let path = dir.join("accuracy.csv");
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::from(e).at(&path))?;
        w.write_record(["repetition", "seed", "c", "train_size", "test_size", "accuracy"])?;
        for r in &self.repetitions {
            w.write_record([
                r.index.to_string(),
                r.seed.to_string(),
                r.c.to_string(),
                r.train_size.to_string(),
                r.test_size.to_string(),
                r.accuracy.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        serde_json::from_str(&text).map_err(|e| Error::from(e).at(path))
    }

    /// Human-readable summary.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} on {} shapes in {} classes, {} features",
            self.config.descriptor,
            self.shape_count,
            self.class_names.len(),
            self.feature_dim
        );
        let _ = writeln!(
            s,
            "accuracy over {} runs: mean {:.4}, min {:.4}, max {:.4}",
            self.repetitions.len(),
            self.mean_accuracy,
            self.min_accuracy,
            self.max_accuracy
        );
        let width = self.class_names.iter().map(|n| n.len()).max().unwrap_or(0).max(6);
        let _ = write!(s, "{:width$}", "");
        for name in &self.class_names {
            let _ = write!(s, " {name:>width$}");
        }
        let _ = writeln!(s);
        for (name, row) in self.class_names.iter().zip(&self.confusion) {
            let _ = write!(s, "{name:width$}");
            for c in row {
                let _ = write!(s, " {c:>width$}");
            }
            let _ = writeln!(s);
        }
        for t in &self.stages {
            let _ = writeln!(
                s,
                "stage {:<10} {:>9.3} s  computed {:>5}  cached {:>5}",
                t.stage, t.seconds, t.computed, t.cached
            );
        }
        if !self.failures.is_empty() {
            let _ = writeln!(s, "{} failures:", self.failures.len());
            for f in &self.failures {
                let _ = writeln!(s, "  {} ({}): {}", f.path.display(), f.stage, f.error);
            }
        }
        s
    }
}

pub(crate) fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    crate::io::write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        Ok(())
    })
}
