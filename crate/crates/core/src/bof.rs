//! Bag-of-features coding: a K-means vocabulary over signature columns,
//! soft assignment of signatures to codewords and histogram pooling.

use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::{io, Error, Result};

pub const DEFAULT_VOCABULARY_SIZE: usize = 128;

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansOptions {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Lloyd stops once no center moves farther than this.
    pub movement_tolerance: f64,
}

impl Default for KmeansOptions {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_iterations: 100,
            movement_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterStats {
    pub count: usize,
    /// Mean Euclidean distance from members to the center.
    pub mean_distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    /// `p × k`, one codeword per column.
    pub centers: DMatrix<f64>,
    pub alpha: f64,
    pub seed: u64,
    pub stats: Vec<ClusterStats>,
    /// Hex SHA-256 of the training matrix.
    pub training_hash: String,
}

impl Codebook {
    /// Builds a codebook from given centers; `alpha` must be positive.
    pub fn from_centers(centers: DMatrix<f64>, alpha: f64) -> Result<Self> {
        if centers.ncols() == 0 || centers.nrows() == 0 {
            return Err(Error::InvalidArgument("codebook needs at least one codeword".into()));
        }
        if centers.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("codebook centers must be finite".into()));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        let k = centers.ncols();
        Ok(Self {
            centers,
            alpha,
            seed: 0,
            stats: vec![ClusterStats { count: 0, mean_distance: 0.0 }; k],
            training_hash: String::new(),
        })
    }

    pub fn k(&self) -> usize {
        self.centers.ncols()
    }

    pub fn dim(&self) -> usize {
        self.centers.nrows()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, |w| {
            io::write_header(w, CODEBOOK_MAGIC)?;
            io::write_u64(w, self.dim() as u64)?;
            io::write_u64(w, self.k() as u64)?;
            io::write_f64(w, self.alpha)?;
            io::write_u64(w, self.seed)?;
            io::write_f64s(w, self.centers.as_slice())?;
            for s in &self.stats {
                io::write_u64(w, s.count as u64)?;
                io::write_f64(w, s.mean_distance)?;
            }
            io::write_string(w, &self.training_hash)
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let read = || -> Result<Self> {
            let mut r = io::open(path)?;
            io::read_header(&mut r, CODEBOOK_MAGIC)?;
            let p = io::read_len(&mut r)?;
            let k = io::read_len(&mut r)?;
            let alpha = io::read_f64(&mut r)?;
            let seed = io::read_u64(&mut r)?;
            let centers = DMatrix::from_vec(p, k, io::read_f64s(&mut r, p * k)?);
            let mut stats = Vec::with_capacity(k);
            for _ in 0..k {
                let count = io::read_len(&mut r)?;
                let mean_distance = io::read_f64(&mut r)?;
                stats.push(ClusterStats { count, mean_distance });
            }
            let training_hash = io::read_string(&mut r)?;
            let mut book = Self::from_centers(centers, alpha)?;
            book.seed = seed;
            book.stats = stats;
            book.training_hash = training_hash;
            Ok(book)
        };
        read().map_err(|e| match e {
            e @ Error::File { .. } => e,
            e => e.at(path),
        })
    }
}

const CODEBOOK_MAGIC: &[u8; 8] = b"SGWCODEB";

/// Concatenates signature matrices with a common row count side by side.
pub fn stack_columns(parts: &[&DMatrix<f64>]) -> Result<DMatrix<f64>> {
    let p = parts
        .first()
        .map(|m| m.nrows())
        .ok_or_else(|| Error::InsufficientData("no signature matrices to stack".into()))?;
    let mut data = Vec::new();
    for m in parts {
        if m.nrows() != p {
            return Err(Error::DimensionMismatch { expected: p, actual: m.nrows() });
        }
        data.extend_from_slice(m.as_slice());
    }
    let n = data.len() / p;
    Ok(DMatrix::from_vec(p, n, data))
}

pub fn matrix_hash(data: &DMatrix<f64>) -> String {
    let mut h = Sha256::new();
    h.update((data.nrows() as u64).to_le_bytes());
    h.update((data.ncols() as u64).to_le_bytes());
    for x in data.iter() {
        h.update(x.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Outcome of one Lloyd run.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub centers: DMatrix<f64>,
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares after each assignment step.
    pub objective: Vec<f64>,
}

impl LloydRun {
    pub fn final_objective(&self) -> f64 {
        *self.objective.last().unwrap_or(&f64::INFINITY)
    }
}

fn kmeans_pp(data: &DMatrix<f64>, k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let (p, n) = data.shape();
    let mut centers = DMatrix::zeros(p, k);
    let first = rng.random_range(0..n);
    centers.set_column(0, &data.column(first));
    let mut nearest: Vec<f64> = (0..n)
        .map(|i| squared_distance(data.column(i).as_slice(), data.column(first).as_slice()))
        .collect();
    for c in 1..k {
        let total: f64 = nearest.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            nearest
                .iter()
                .position(|&d| {
                    acc += d;
                    acc > target
                })
                .unwrap_or_else(|| nearest.iter().rposition(|&d| d > 0.0).unwrap_or(n - 1))
        } else {
            rng.random_range(0..n)
        };
        centers.set_column(c, &data.column(pick));
        let chosen = data.column(pick).clone_owned();
        nearest.par_iter_mut().enumerate().for_each(|(i, d)| {
            *d = d.min(squared_distance(data.column(i).as_slice(), chosen.as_slice()));
        });
    }
    centers
}

/// Nearest center and squared distance for every column of `data`.
fn assign(data: &DMatrix<f64>, centers: &DMatrix<f64>) -> Vec<(usize, f64)> {
    (0..data.ncols())
        .into_par_iter()
        .map(|i| {
            let x = data.column(i);
            let mut best = (0, f64::INFINITY);
            for (c, center) in centers.column_iter().enumerate() {
                let d = squared_distance(x.as_slice(), center.as_slice());
                if d < best.1 {
                    best = (c, d);
                }
            }
            best
        })
        .collect()
}

/// Lloyd iterations from the given initial centers.
pub fn lloyd(data: &DMatrix<f64>, initial: DMatrix<f64>, opts: &KmeansOptions) -> LloydRun {
    let (p, n) = data.shape();
    let k = initial.ncols();
    let mut centers = initial;
    let mut objective = Vec::new();
    let mut nearest = assign(data, &centers);
    for _ in 0..opts.max_iterations.max(1) {
        objective.push(nearest.iter().map(|a| a.1).sum());

        let mut sums = DMatrix::zeros(p, k);
        let mut counts = vec![0usize; k];
        for (i, &(c, _)) in nearest.iter().enumerate() {
            counts[c] += 1;
            let mut col = sums.column_mut(c);
            col += data.column(i);
        }
        let mut updated = centers.clone();
        let mut taken = vec![false; n];
        for c in 0..k {
            if counts[c] > 0 {
                updated.set_column(c, &(sums.column(c) / counts[c] as f64));
            } else {
                // Re-seed an empty cluster at the point farthest from its center.
                let far = (0..n)
                    .filter(|&i| !taken[i])
                    .max_by(|&a, &b| nearest[a].1.total_cmp(&nearest[b].1).then(b.cmp(&a)))
                    .unwrap_or(0);
                taken[far] = true;
                updated.set_column(c, &data.column(far));
            }
        }
        let movement = (0..k)
            .map(|c| squared_distance(updated.column(c).as_slice(), centers.column(c).as_slice()).sqrt())
            .fold(0.0, f64::max);
        centers = updated;
        nearest = assign(data, &centers);
        if movement < opts.movement_tolerance {
            break;
        }
    }
    objective.push(nearest.iter().map(|a| a.1).sum());
    LloydRun {
        centers,
        assignment: nearest.into_iter().map(|a| a.0).collect(),
        objective,
    }
}

/// K-means vocabulary over the columns of `data` with default options.
pub fn kmeans(data: &DMatrix<f64>, k: usize, seed: u64) -> Result<Codebook> {
    kmeans_with(data, k, seed, &KmeansOptions::default())
}

pub fn kmeans_with(data: &DMatrix<f64>, k: usize, seed: u64, opts: &KmeansOptions) -> Result<Codebook> {
    let n = data.ncols();
    if k == 0 {
        return Err(Error::InvalidArgument("vocabulary size must be at least 1".into()));
    }
    if n < k {
        return Err(Error::InsufficientData(format!("{n} points for {k} clusters")));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("training data contains non-finite values".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<LloydRun> = None;
    for _ in 0..opts.restarts.max(1) {
        let run = lloyd(data, kmeans_pp(data, k, &mut rng), opts);
        if best.as_ref().is_none_or(|b| run.final_objective() < b.final_objective()) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");

    let mut stats = vec![ClusterStats { count: 0, mean_distance: 0.0 }; k];
    for (i, &c) in best.assignment.iter().enumerate() {
        stats[c].count += 1;
        stats[c].mean_distance += squared_distance(data.column(i).as_slice(), best.centers.column(c).as_slice()).sqrt();
    }
    for s in &mut stats {
        if s.count > 0 {
            s.mean_distance /= s.count as f64;
        }
    }
    let alpha = compute_alpha(&stats)?;
    Ok(Codebook {
        centers: best.centers,
        alpha,
        seed,
        stats,
        training_hash: matrix_hash(data),
    })
}

/// `α = 1/(8μ²)` with `μ` the median over clusters of the mean member-to-center distance.
pub fn compute_alpha(stats: &[ClusterStats]) -> Result<f64> {
    let mut sizes: Vec<f64> = stats.iter().filter(|s| s.count > 0).map(|s| s.mean_distance).collect();
    if sizes.is_empty() {
        return Err(Error::DegenerateVocabulary("no populated clusters".into()));
    }
    sizes.sort_by(f64::total_cmp);
    let n = sizes.len();
    let mu = if n % 2 == 1 {
        sizes[n / 2]
    } else {
        0.5 * (sizes[n / 2 - 1] + sizes[n / 2])
    };
    if !(mu > 0.0) {
        return Err(Error::DegenerateVocabulary(
            "median cluster size is zero; training points coincide with their centers".into(),
        ));
    }
    Ok(1.0 / (8.0 * mu * mu))
}

/// Soft assignment codes, one stochastic column per signature.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeMatrix {
    /// `k × m`.
    pub codes: DMatrix<f64>,
}

pub fn soft_assign(signatures: &DMatrix<f64>, codebook: &Codebook) -> Result<CodeMatrix> {
    if signatures.nrows() != codebook.dim() {
        return Err(Error::DimensionMismatch {
            expected: codebook.dim(),
            actual: signatures.nrows(),
        });
    }
    let k = codebook.k();
    let columns: Vec<Vec<f64>> = (0..signatures.ncols())
        .into_par_iter()
        .map(|i| {
            let s = signatures.column(i);
            let logits: Vec<f64> = codebook
                .centers
                .column_iter()
                .map(|v| -codebook.alpha * squared_distance(s.as_slice(), v.as_slice()))
                .collect();
            let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = logits.iter().map(|l| (l - top).exp()).collect();
            let total: f64 = weights.iter().sum();
            weights.into_iter().map(|w| w / total).collect()
        })
        .collect();
    let data: Vec<f64> = columns.into_iter().flatten().collect();
    Ok(CodeMatrix {
        codes: DMatrix::from_vec(k, signatures.ncols(), data),
    })
}

/// Row sums of the code matrix.
pub fn pool_histogram(codes: &CodeMatrix) -> Result<Vec<f64>> {
    if codes.codes.ncols() == 0 {
        return Err(Error::InvalidArgument("cannot pool an empty code matrix".into()));
    }
    Ok(codes.codes.column_sum().iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, Normal};

    fn blobs(seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 0.1).unwrap();
        let centers = [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]];
        DMatrix::from_fn(2, 90, |r, c| centers[c % 3][r] + noise.sample(&mut rng))
    }

    #[test]
    fn k_equals_n_reproduces_points() {
        let data = DMatrix::from_column_slice(2, 4, &[0.0, 0.0, 1.0, 0.0, 0.0, 2.0, 3.0, 3.0]);
        let run = lloyd(&data, kmeans_pp(&data, 4, &mut ChaCha8Rng::seed_from_u64(1)), &KmeansOptions::default());
        assert_eq!(run.final_objective(), 0.0);
        let mut seen: Vec<usize> = run.assignment.clone();
        seen.sort();
        assert_eq!(seen, vec![0, 1, 2, 3]);
        for (i, &c) in run.assignment.iter().enumerate() {
            assert_eq!(run.centers.column(c), data.column(i));
        }
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let data = blobs(3);
        let book = kmeans(&data, 1, 7).unwrap();
        let mean = data.column_mean();
        assert!((book.centers.column(0) - mean).norm() < 1e-12);
    }

    #[test]
    fn objective_never_increases() {
        let data = blobs(4);
        let run = lloyd(&data, kmeans_pp(&data, 5, &mut ChaCha8Rng::seed_from_u64(2)), &KmeansOptions::default());
        assert!(run.objective.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn finds_blobs_deterministically() {
        let data = blobs(5);
        let a = kmeans(&data, 3, 11).unwrap();
        let b = kmeans(&data, 3, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.stats.iter().all(|s| s.count == 30));
        assert!(a.alpha > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let data = blobs(6);
        assert!(kmeans(&data, 91, 0).is_err());
        assert!(kmeans(&data, 0, 0).is_err());
        let mut bad = data.clone();
        bad[(0, 0)] = f64::NAN;
        assert!(kmeans(&bad, 2, 0).is_err());
    }

    #[test]
    fn alpha_formula() {
        let stats = |d: &[f64]| -> Vec<ClusterStats> {
            d.iter().map(|&m| ClusterStats { count: 1, mean_distance: m }).collect()
        };
        assert_eq!(compute_alpha(&stats(&[0.5])).unwrap(), 0.5);
        assert_eq!(compute_alpha(&stats(&[1.0, 0.2, 3.0])).unwrap(), 0.125);
        assert!(compute_alpha(&stats(&[0.0, 0.0])).is_err());
        let data = blobs(8);
        let a1 = kmeans(&data, 3, 1).unwrap().alpha;
        let a2 = kmeans(&(data * 2.0), 3, 1).unwrap().alpha;
        assert!((a1 / 4.0 - a2).abs() < 1e-12 * a1);
    }

    #[test]
    fn coincident_points_are_degenerate() {
        let data = DMatrix::from_element(2, 10, 1.5);
        assert!(matches!(kmeans(&data, 2, 0), Err(Error::DegenerateVocabulary(_))));
    }

    #[test]
    fn soft_assignment_cases() {
        let centers = DMatrix::from_column_slice(2, 2, &[-1.0, 0.0, 1.0, 0.0]);
        let book = Codebook::from_centers(centers, 2.0).unwrap();
        let s = DMatrix::from_column_slice(2, 2, &[0.0, 3.0, 0.9, 0.1]);
        let u = soft_assign(&s, &book).unwrap();
        assert!((u.codes[(0, 0)] - 0.5).abs() < 1e-15);

        let single = Codebook::from_centers(DMatrix::from_column_slice(2, 1, &[4.0, 4.0]), 1e6).unwrap();
        let u1 = soft_assign(&s, &single).unwrap();
        assert!(u1.codes.iter().all(|&x| x == 1.0));

        let sharp = Codebook::from_centers(book.centers.clone(), 1e6).unwrap();
        let hard = soft_assign(&s, &sharp).unwrap();
        assert_eq!(hard.codes.column(1).as_slice(), &[0.0, 1.0]);
        assert!(soft_assign(&DMatrix::zeros(3, 1), &book).is_err());
    }

    #[test]
    fn histogram_totals_vertex_count() {
        let data = blobs(9);
        let book = kmeans(&data, 4, 2).unwrap();
        let u = soft_assign(&data, &book).unwrap();
        for col in u.codes.column_iter() {
            assert!((col.sum() - 1.0).abs() < 1e-12);
        }
        let h = pool_histogram(&u).unwrap();
        assert!((h.iter().sum::<f64>() - 90.0).abs() < 1e-10);
        assert!(pool_histogram(&CodeMatrix { codes: DMatrix::zeros(4, 0) }).is_err());
    }

    #[test]
    fn codebook_round_trip() {
        let book = kmeans(&blobs(10), 3, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vocab.bin");
        book.write(&path).unwrap();
        assert_eq!(Codebook::read(&path).unwrap(), book);
    }
}
