use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::mesh::MeshFormat;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub class: String,
}

/// Mesh files with class names; labels index the sorted class list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub class_names: Vec<String>,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let class_names: Vec<String> = entries
            .iter()
            .map(|e| e.class.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if class_names.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a dataset needs at least 2 classes, found {}",
                class_names.len()
            )));
        }
        Ok(Self { entries, class_names })
    }

    /// Loads either a `path,class` CSV (paths relative to the file) or a
    /// directory whose subdirectories are classes holding `.off`/`.obj` files.
    pub fn load(path: &Path) -> Result<Self> {
        if path.is_dir() {
            Self::from_directory(path)
        } else {
            Self::from_csv(path)
        }
    }

    pub fn from_csv(path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new(""));
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(path)
            .map_err(|e| Error::from(e).at(path))?;
        let mut entries = Vec::new();
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::from(e).at(path))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            if i == 0 && record.get(0) == Some("path") && record.get(1) == Some("class") {
                continue;
            }
            let line = record.position().map_or(i + 1, |p| p.line() as usize);
            if record.len() != 2 || record[0].is_empty() || record[1].is_empty() {
                return Err(Error::Parse {
                    line,
                    msg: "expected `path,class`".into(),
                }
                .at(path));
            }
            entries.push(ManifestEntry {
                path: base.join(&record[0]),
                class: record[1].to_string(),
            });
        }
        Self::new(entries).map_err(|e| e.at(path))
    }

    pub fn from_directory(root: &Path) -> Result<Self> {
        let mut entries = Vec::new();
        for class_dir in sorted_children(root)? {
            if !class_dir.is_dir() {
                continue;
            }
            let class = class_dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            for file in sorted_children(&class_dir)? {
                if file.is_file() && MeshFormat::from_path(&file).is_ok() {
                    entries.push(ManifestEntry {
                        path: file,
                        class: class.clone(),
                    });
                }
            }
        }
        Self::new(entries).map_err(|e| e.at(root))
    }

    pub fn label(&self, class: &str) -> usize {
        self.class_names.binary_search_by(|c| c.as_str().cmp(class)).expect("class from this manifest")
    }

    pub fn labels(&self) -> Vec<usize> {
        self.entries.iter().map(|e| self.label(&e.class)).collect()
    }
}

fn sorted_children(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut paths = std::fs::read_dir(dir)
        .map_err(|e| Error::from(e).at(dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::from(e).at(dir))?;
    paths.sort();
    Ok(paths)
}
