use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Environment variable naming the cache root when the config leaves it unset.
pub const CACHE_ENV: &str = "SGWC_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DescriptorKind {
    #[serde(rename = "sgwc-bof")]
    SgwcBof,
    /// Same bag-of-features pipeline with heat kernel signatures as the local descriptor.
    #[serde(rename = "ga-bof-hks")]
    GaBofHks,
    #[serde(rename = "shape-dna")]
    ShapeDna,
    #[serde(rename = "cshape-dna")]
    CShapeDna,
    #[serde(rename = "gps-embedding")]
    GpsEmbedding,
}

impl DescriptorKind {
    pub const ALL: [DescriptorKind; 5] = [
        DescriptorKind::SgwcBof,
        DescriptorKind::GaBofHks,
        DescriptorKind::ShapeDna,
        DescriptorKind::CShapeDna,
        DescriptorKind::GpsEmbedding,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DescriptorKind::SgwcBof => "sgwc-bof",
            DescriptorKind::GaBofHks => "ga-bof-hks",
            DescriptorKind::ShapeDna => "shape-dna",
            DescriptorKind::CShapeDna => "cshape-dna",
            DescriptorKind::GpsEmbedding => "gps-embedding",
        }
    }

    /// Whether the kind goes through a vocabulary and the geodesic kernel.
    pub fn uses_vocabulary(self) -> bool {
        matches!(self, DescriptorKind::SgwcBof | DescriptorKind::GaBofHks)
    }
}

impl fmt::Display for DescriptorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DescriptorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DescriptorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = DescriptorKind::ALL.iter().map(|k| k.name()).collect();
                Error::InvalidArgument(format!("unknown descriptor {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifest: Option<PathBuf>,
    pub eigen_count: usize,
    pub resolution: usize,
    pub vocabulary_size: usize,
    pub epsilon: f64,
    pub descriptor: DescriptorKind,
    pub test_fraction: f64,
    pub repetitions: usize,
    pub seed: u64,
    /// A single value trains with that `C`; several are chosen between by
    /// stratified cross-validation on each training split.
    pub c_grid: Vec<f64>,
    pub cache_dir: Option<PathBuf>,
    pub output_dir: PathBuf,
    /// Rebuild the vocabulary for every repetition, seeded per repetition.
    pub vocab_per_run: bool,
    /// Train each repetition's vocabulary on its training split only.
    pub vocab_training_only: bool,
    pub sweep_epsilons: Vec<f64>,
    pub sweep_vocabulary_sizes: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            eigen_count: crate::laplacian::DEFAULT_EIGEN_COUNT,
            resolution: 2,
            vocabulary_size: crate::bof::DEFAULT_VOCABULARY_SIZE,
            epsilon: crate::global::DEFAULT_EPSILON,
            descriptor: DescriptorKind::SgwcBof,
            test_fraction: 0.5,
            repetitions: 10,
            seed: 0,
            c_grid: vec![crate::classify::DEFAULT_C],
            cache_dir: None,
            output_dir: PathBuf::from("sgwc-out"),
            vocab_per_run: false,
            vocab_training_only: false,
            sweep_epsilons: vec![0.01, 0.05, 0.1, 0.5, 1.0],
            sweep_vocabulary_sizes: vec![16, 32, 64, 128, 256, 512],
        }
    }
}

impl ExperimentConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).at(path))?;
        serde_json::from_str(&text).map_err(|e| Error::from(e).at(path))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("eigen_count", self.eigen_count),
            ("resolution", self.resolution),
            ("vocabulary_size", self.vocabulary_size),
            ("repetitions", self.repetitions),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive")));
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "test_fraction must lie in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.c_grid.is_empty() || self.c_grid.iter().any(|c| !(*c > 0.0)) {
            return Err(Error::InvalidArgument("c_grid must hold positive values".into()));
        }
        if self.sweep_epsilons.iter().any(|e| !(*e > 0.0)) || self.sweep_vocabulary_sizes.contains(&0) {
            return Err(Error::InvalidArgument("sweep values must be positive".into()));
        }
        Ok(())
    }

    /// Cache root: the configured directory, then the environment, then
    /// `cache/` under the output directory.
    pub fn resolved_cache_dir(&self) -> PathBuf {
        if let Some(dir) = &self.cache_dir {
            return dir.clone();
        }
        match std::env::var_os(CACHE_ENV) {
            Some(dir) if !dir.is_empty() => PathBuf::from(dir),
            _ => self.output_dir.join("cache"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_uses_field_names_and_defaults() {
        let c: ExperimentConfig =
            serde_json::from_str(r#"{"vocabulary_size": 32, "descriptor": "ga-bof-hks", "epsilon": 0.2}"#).unwrap();
        assert_eq!(c.vocabulary_size, 32);
        assert_eq!(c.descriptor, DescriptorKind::GaBofHks);
        assert_eq!(c.eigen_count, 201);
        assert_eq!(c.resolution, 2);
        assert_eq!(c.repetitions, 10);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"vocab": 3}"#).is_err());
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn validation() {
        assert!(ExperimentConfig::default().validate().is_ok());
        let bad = ExperimentConfig { epsilon: 0.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { test_fraction: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = ExperimentConfig { vocabulary_size: 0, ..Default::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in DescriptorKind::ALL {
            assert_eq!(k.name().parse::<DescriptorKind>().unwrap(), k);
        }
        assert!("sift".parse::<DescriptorKind>().is_err());
    }
}
