//! One-vs-all linear SVM on three Gaussian blobs: cross-validated choice of
//! `C`, a stratified split, and the confusion matrix.
//!
//! cargo run --release --example classifier

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use sgwc::classify::{
    accuracy, confusion_matrix, predict_all, select_c, stratified_split, train_ova_svm, LabeledDataset, CV_FOLDS, C_GRID,
};

fn main() -> sgwc::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let noise = Normal::new(0.0, 0.8).expect("valid deviation");
    let centers = [[0.0, 0.0], [3.0, 0.0], [1.5, 2.5]];
    let labels: Vec<usize> = (0..300).map(|i| i % 3).collect();
    let x = DMatrix::from_fn(2, 300, |r, c| centers[labels[c]][r] + noise.sample(&mut rng));
    let data = LabeledDataset::new(x, labels, vec!["left".into(), "right".into(), "top".into()])?;

    let (train, test) = stratified_split(&data, 0.5, 1)?;
    let (c, scores) = select_c(&train, &C_GRID, CV_FOLDS, 1)?;
    println!("cross-validation accuracy per C {C_GRID:?}: {scores:.3?}; chose C = {c}");
    let model = train_ova_svm(&train, c, 1)?;
    let cm = confusion_matrix(&test.labels, &predict_all(&model, &test)?, 3)?;
    println!("test accuracy {:.3}", accuracy(&cm)?);
    for (name, row) in data.class_names.iter().zip(&cm.counts) {
        println!("{name:>6} {row:?}");
    }
    Ok(())
}
