//! One-vs-all linear SVMs trained by dual coordinate descent, stratified
//! splits, cross-validated selection of `C`, and confusion-matrix metrics.

use std::path::Path;

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{io, Error, Result};

pub const DEFAULT_C: f64 = 1.0;
pub const C_GRID: [f64; 3] = [0.1, 1.0, 10.0];
pub const CV_FOLDS: usize = 5;

/// Feature columns with 0-based class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    /// `d × n`, one descriptor per column.
    pub x: DMatrix<f64>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(x: DMatrix<f64>, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if x.ncols() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: x.ncols(),
                actual: labels.len(),
            });
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "label {l} out of range for {} classes",
                class_names.len()
            )));
        }
        Ok(Self { x, labels, class_names })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.x.nrows()
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            x: self.x.select_columns(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        }
    }

    fn members(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.class_count()];
        for (i, &l) in self.labels.iter().enumerate() {
            by_class[l].push(i);
        }
        by_class
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, |w| {
            io::write_header(w, DATASET_MAGIC)?;
            io::write_u64(w, self.dim() as u64)?;
            io::write_u64(w, self.len() as u64)?;
            io::write_u64(w, self.class_count() as u64)?;
            io::write_f64s(w, self.x.as_slice())?;
            for &l in &self.labels {
                io::write_u64(w, l as u64)?;
            }
            for name in &self.class_names {
                io::write_string(w, name)?;
            }
            Ok(())
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let read = || -> Result<Self> {
            let mut r = io::open(path)?;
            io::read_header(&mut r, DATASET_MAGIC)?;
            let d = io::read_len(&mut r)?;
            let n = io::read_len(&mut r)?;
            let classes = io::read_len(&mut r)?;
            let x = DMatrix::from_vec(d, n, io::read_f64s(&mut r, d * n)?);
            let labels = (0..n).map(|_| io::read_len(&mut r)).collect::<Result<_>>()?;
            let names = (0..classes).map(|_| io::read_string(&mut r)).collect::<Result<_>>()?;
            Self::new(x, labels, names)
        };
        read().map_err(|e| match e {
            e @ Error::File { .. } => e,
            e => e.at(path),
        })
    }
}

const DATASET_MAGIC: &[u8; 8] = b"SGWDATAS";
const MODEL_MAGIC: &[u8; 8] = b"SGWMODEL";

/// Per-class random split holding out `round(test_fraction × class size)` items.
pub fn stratified_indices(dataset: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (class, mut members) in dataset.members().into_iter().enumerate() {
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "class {:?} has a single member and cannot be stratified",
                dataset.class_names[class]
            )));
        }
        members.shuffle(&mut rng);
        let n_test = (test_fraction * members.len() as f64).round() as usize;
        test.extend_from_slice(&members[..n_test]);
        train.extend_from_slice(&members[n_test..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn stratified_split(dataset: &LabeledDataset, test_fraction: f64, seed: u64) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, test) = stratified_indices(dataset, test_fraction, seed)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmOptions {
    /// Stop once the projected-gradient spread falls below this.
    pub tolerance: f64,
    pub max_epochs: usize,
}

impl Default for SvmOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_epochs: 1000,
        }
    }
}

/// One binary classifier per class, class `i` positive against the rest.
#[derive(Debug, Clone, PartialEq)]
pub struct OvaSvmModel {
    /// `d × K`, one hyperplane normal per column.
    pub weights: DMatrix<f64>,
    pub bias: Vec<f64>,
    pub c: f64,
    pub seed: u64,
    /// Epochs used by each binary problem.
    pub epochs: Vec<usize>,
    pub class_names: Vec<String>,
}

impl OvaSvmModel {
    pub fn class_count(&self) -> usize {
        self.bias.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.len(),
            });
        }
        Ok(self
            .weights
            .column_iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b)
            .collect())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, |w| {
            io::write_header(w, MODEL_MAGIC)?;
            io::write_u64(w, self.class_count() as u64)?;
            io::write_u64(w, self.dim() as u64)?;
            io::write_f64(w, self.c)?;
            io::write_u64(w, self.seed)?;
            for (col, &b) in self.weights.column_iter().zip(&self.bias) {
                io::write_f64s(w, col.as_slice())?;
                io::write_f64(w, b)?;
            }
            for &e in &self.epochs {
                io::write_u64(w, e as u64)?;
            }
            for name in &self.class_names {
                io::write_string(w, name)?;
            }
            Ok(())
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let read = || -> Result<Self> {
            let mut r = io::open(path)?;
            io::read_header(&mut r, MODEL_MAGIC)?;
            let k = io::read_len(&mut r)?;
            let d = io::read_len(&mut r)?;
            let c = io::read_f64(&mut r)?;
            let seed = io::read_u64(&mut r)?;
            let mut weights = DMatrix::zeros(d, k);
            let mut bias = Vec::with_capacity(k);
            for i in 0..k {
                weights.set_column(i, &nalgebra::DVector::from_vec(io::read_f64s(&mut r, d)?));
                bias.push(io::read_f64(&mut r)?);
            }
            let epochs = (0..k).map(|_| io::read_len(&mut r)).collect::<Result<_>>()?;
            let class_names = (0..k).map(|_| io::read_string(&mut r)).collect::<Result<_>>()?;
            Ok(Self {
                weights,
                bias,
                c,
                seed,
                epochs,
                class_names,
            })
        };
        read().map_err(|e| match e {
            e @ Error::File { .. } => e,
            e => e.at(path),
        })
    }
}

/// Hinge-loss SVM `min ½‖w‖² + C Σ max(0, 1 - y_i (wᵀx_i + b))` with the bias
/// regularised through a constant feature, solved in the dual.
/// Returns `(w, b, epochs)`.
fn train_binary(x: &DMatrix<f64>, y: &[f64], c: f64, seed: u64, opts: &SvmOptions) -> (Vec<f64>, f64, usize) {
    let (d, n) = x.shape();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut alpha = vec![0.0; n];
    let diag: Vec<f64> = (0..n).map(|i| x.column(i).norm_squared() + 1.0).collect();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut epochs = 0;
    while epochs < opts.max_epochs {
        epochs += 1;
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let xi = x.column(i);
            let g = y[i] * (xi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() + b) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let step = (alpha[i] - old) * y[i];
                if step != 0.0 {
                    for (wj, xj) in w.iter_mut().zip(xi.iter()) {
                        *wj += step * xj;
                    }
                    b += step;
                }
            }
        }
        if pg_max - pg_min < opts.tolerance {
            break;
        }
    }
    (w, b, epochs)
}

pub fn train_ova_svm(train: &LabeledDataset, c: f64, seed: u64) -> Result<OvaSvmModel> {
    train_ova_svm_with(train, c, seed, &SvmOptions::default())
}

pub fn train_ova_svm_with(train: &LabeledDataset, c: f64, seed: u64, opts: &SvmOptions) -> Result<OvaSvmModel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
    }
    if train.x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("training features contain non-finite values".into()));
    }
    let present = train.members().iter().filter(|m| !m.is_empty()).count();
    if present < 2 {
        return Err(Error::InsufficientData(format!(
            "training data needs at least 2 classes, found {present}"
        )));
    }
    let k = train.class_count();
    let solved: Vec<(Vec<f64>, f64, usize)> = (0..k)
        .into_par_iter()
        .map(|class| {
            let y: Vec<f64> = train.labels.iter().map(|&l| if l == class { 1.0 } else { -1.0 }).collect();
            train_binary(&train.x, &y, c, seed.wrapping_add(class as u64), opts)
        })
        .collect();
    let mut weights = DMatrix::zeros(train.dim(), k);
    let mut bias = Vec::with_capacity(k);
    let mut epochs = Vec::with_capacity(k);
    for (i, (w, b, e)) in solved.into_iter().enumerate() {
        weights.set_column(i, &nalgebra::DVector::from_vec(w));
        bias.push(b);
        epochs.push(e);
    }
    Ok(OvaSvmModel {
        weights,
        bias,
        c,
        seed,
        epochs,
        class_names: train.class_names.clone(),
    })
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

pub fn predict(model: &OvaSvmModel, x: &[f64]) -> Result<usize> {
    Ok(argmax(&model.decision_values(x)?))
}

pub fn predict_all(model: &OvaSvmModel, dataset: &LabeledDataset) -> Result<Vec<usize>> {
    (0..dataset.len())
        .map(|i| predict(model, dataset.x.column(i).as_slice()))
        .collect()
}

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<usize>>,
}

impl ConfusionMatrix {
    pub fn class_count(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> usize {
        (0..self.class_count()).map(|i| self.counts[i][i]).sum()
    }
}

pub fn confusion_matrix(actual: &[usize], predicted: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: actual.len(),
            actual: predicted.len(),
        });
    }
    let mut counts = vec![vec![0; classes]; classes];
    for (&a, &p) in actual.iter().zip(predicted) {
        if a >= classes || p >= classes {
            return Err(Error::InvalidArgument(format!(
                "label {} out of range for {classes} classes",
                a.max(p)
            )));
        }
        counts[a][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::InsufficientData("empty confusion matrix".into()));
    }
    Ok(cm.correct() as f64 / total as f64)
}

pub fn error_rate(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(1.0 - accuracy(cm)?)
}

/// Stratified `folds`-fold cross-validation accuracy for each candidate `C`;
/// returns the first best candidate and all mean accuracies.
pub fn select_c(train: &LabeledDataset, grid: &[f64], folds: usize, seed: u64) -> Result<(f64, Vec<f64>)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("empty C grid".into()));
    }
    if folds < 2 {
        return Err(Error::InvalidArgument("cross-validation needs at least 2 folds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0; train.len()];
    for mut members in train.members() {
        members.shuffle(&mut rng);
        for (pos, i) in members.into_iter().enumerate() {
            fold_of[i] = pos % folds;
        }
    }
    let mut scores = Vec::with_capacity(grid.len());
    for &c in grid {
        let mut total = 0.0;
        let mut used = 0;
        for fold in 0..folds {
            let (held, kept): (Vec<usize>, Vec<usize>) = (0..train.len()).partition(|&i| fold_of[i] == fold);
            if held.is_empty() {
                continue;
            }
            let fit = train.subset(&kept);
            let test = train.subset(&held);
            let model = train_ova_svm(&fit, c, seed)?;
            let predicted = predict_all(&model, &test)?;
            total += accuracy(&confusion_matrix(&test.labels, &predicted, train.class_count())?)?;
            used += 1;
        }
        scores.push(total / used as f64);
    }
    let best = argmax(&scores);
    Ok((grid[best], scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(per_class: usize, spread: f64, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, spread).unwrap();
        let centers = [[0.0, 0.0], [4.0, 0.0], [0.0, 4.0]];
        let n = 3 * per_class;
        let labels: Vec<usize> = (0..n).map(|i| i % 3).collect();
        let x = DMatrix::from_fn(2, n, |r, c| centers[labels[c]][r] + noise.sample(&mut rng));
        LabeledDataset::new(x, labels, vec!["a".into(), "b".into(), "c".into()]).unwrap()
    }

    fn model(values: &[(f64, f64)]) -> OvaSvmModel {
        let k = values.len();
        OvaSvmModel {
            weights: DMatrix::from_fn(1, k, |_, c| values[c].0),
            bias: values.iter().map(|v| v.1).collect(),
            c: 1.0,
            seed: 0,
            epochs: vec![0; k],
            class_names: (0..k).map(|i| i.to_string()).collect(),
        }
    }

    #[test]
    fn separable_blobs_train_accurately() {
        let data = blobs(100, 0.5, 1);
        let m = train_ova_svm(&data, 1.0, 3).unwrap();
        assert_eq!(m.class_count(), 3);
        let predicted = predict_all(&m, &data).unwrap();
        let acc = accuracy(&confusion_matrix(&data.labels, &predicted, 3).unwrap()).unwrap();
        assert!(acc >= 0.99, "{acc}");
        assert_eq!(train_ova_svm(&data, 1.0, 3).unwrap(), m);
    }

    #[test]
    fn two_classes_two_classifiers() {
        let data = blobs(10, 0.3, 2);
        let keep: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] < 2).collect();
        let mut two = data.subset(&keep);
        two.class_names.truncate(2);
        assert_eq!(train_ova_svm(&two, 1.0, 0).unwrap().class_count(), 2);
        let one: Vec<usize> = (0..data.len()).filter(|&i| data.labels[i] == 0).collect();
        assert!(train_ova_svm(&data.subset(&one), 1.0, 0).is_err());
    }

    #[test]
    fn duplicated_points_keep_hard_margin_boundary() {
        let data = blobs(20, 0.3, 5);
        let twice = data.subset(&(0..data.len()).chain(0..data.len()).collect::<Vec<_>>());
        let a = train_ova_svm(&data, 1e4, 1).unwrap();
        let b = train_ova_svm(&twice, 1e4, 1).unwrap();
        for k in 0..3 {
            let scale = a.weights.column(k).norm();
            assert!((a.weights.column(k) - b.weights.column(k)).norm() < 1e-6 * scale.max(1.0));
            assert!((a.bias[k] - b.bias[k]).abs() < 1e-6 * scale.max(1.0));
        }
    }

    #[test]
    fn prediction_rules() {
        assert_eq!(predict(&model(&[(0.0, 0.2), (0.0, 0.9), (0.0, -1.0)]), &[1.0]).unwrap(), 1);
        assert_eq!(predict(&model(&[(0.0, 0.5), (0.0, 0.5)]), &[3.0]).unwrap(), 0);
        assert_eq!(predict(&model(&[(0.0, 0.0); 4]), &[-2.0]).unwrap(), 0);
        assert!(predict(&model(&[(0.0, 0.0)]), &[1.0, 2.0]).is_err());
    }

    #[test]
    fn confusion_and_accuracy() {
        let cm = confusion_matrix(&[0, 0, 1], &[0, 1, 1], 2).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(cm.total(), 3);
        let perfect = confusion_matrix(&[0, 1, 1, 2], &[0, 1, 1, 2], 3).unwrap();
        assert_eq!(perfect.counts, vec![vec![1, 0, 0], vec![0, 2, 0], vec![0, 0, 1]]);
        assert_eq!(accuracy(&perfect).unwrap(), 1.0);
        let half = confusion_matrix(&[0, 1], &[0, 0], 2).unwrap();
        assert_eq!(accuracy(&half).unwrap(), 0.5);
        assert_eq!(error_rate(&half).unwrap(), 0.5);
        assert!(confusion_matrix(&[0, 3], &[0, 0], 2).is_err());
        assert!(accuracy(&confusion_matrix(&[], &[], 2).unwrap()).is_err());
    }

    #[test]
    fn stratified_split_counts() {
        let names: Vec<String> = (0..10).map(|i| format!("c{i}")).collect();
        let labels: Vec<usize> = (0..200).map(|i| i / 20).collect();
        let data = LabeledDataset::new(DMatrix::zeros(1, 200), labels, names).unwrap();
        let (train, test) = stratified_split(&data, 0.5, 9).unwrap();
        assert_eq!(test.len(), 100);
        assert_eq!(train.len(), 100);
        for class in 0..10 {
            assert_eq!(test.labels.iter().filter(|&&l| l == class).count(), 10);
        }
        assert_eq!(stratified_indices(&data, 0.5, 9).unwrap(), stratified_indices(&data, 0.5, 9).unwrap());

        let pairs = LabeledDataset::new(DMatrix::zeros(1, 4), vec![0, 0, 1, 1], vec!["a".into(), "b".into()]).unwrap();
        let (tr, te) = stratified_indices(&pairs, 0.5, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (2, 2));
        let lonely = LabeledDataset::new(DMatrix::zeros(1, 3), vec![0, 0, 1], vec!["a".into(), "b".into()]).unwrap();
        assert!(stratified_split(&lonely, 0.5, 1).is_err());
    }

    #[test]
    fn cross_validation_picks_from_grid() {
        let data = blobs(15, 0.5, 4);
        let (c, scores) = select_c(&data, &C_GRID, CV_FOLDS, 2).unwrap();
        assert!(C_GRID.contains(&c));
        assert_eq!(scores.len(), 3);
        assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
    }

    #[test]
    fn model_and_dataset_round_trip() {
        let data = blobs(10, 0.5, 6);
        let m = train_ova_svm(&data, 1.0, 0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        m.write(&dir.path().join("m.bin")).unwrap();
        assert_eq!(OvaSvmModel::read(&dir.path().join("m.bin")).unwrap(), m);
        data.write(&dir.path().join("d.bin")).unwrap();
        assert_eq!(LabeledDataset::read(&dir.path().join("d.bin")).unwrap(), data);
    }
}
