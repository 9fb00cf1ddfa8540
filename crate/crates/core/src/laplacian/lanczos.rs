//! Shift-invert block Lanczos for the generalized problem `W φ = λ A φ`.
//!
//! The Krylov basis is built from `(W - σA)⁻¹ A` with full A-orthogonalisation
//! (classical Gram-Schmidt, two passes), so the basis vectors are
//! A-orthonormal. Ritz pairs are extracted by a Rayleigh-Ritz projection of
//! `W` itself onto the basis, which keeps eigenvalues near zero accurate even
//! though the shifted operator is nearly singular there. Blocks of several
//! vectors let the solver resolve repeated eigenvalues up to the block size.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::cholesky::EnvelopeCholesky;
use super::symmetric::SymmetricEigen;
use super::LaplacianPair;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct EigenOptions {
    /// Spectral shift `σ`; slightly negative keeps `W - σA` positive definite.
    pub shift: f64,
    /// Lanczos block size; defaults to `min(q, 16)`.
    pub block_size: Option<usize>,
    /// Convergence threshold on `‖Wφ - λAφ‖ / (‖W‖∞ ‖φ‖)`.
    pub tolerance: f64,
    /// Largest Krylov dimension before giving up; defaults to the vertex count.
    pub max_dimension: Option<usize>,
    pub seed: u64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            shift: -1e-8,
            block_size: None,
            tolerance: 1e-10,
            max_dimension: None,
            seed: 0x5eed_1a9c,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub subspace_dimension: usize,
    pub projections: usize,
    /// Worst residual, relative as in [`EigenOptions::tolerance`].
    pub max_relative_residual: f64,
    /// Worst `‖Wφ - λAφ‖ / max(1, ‖Wφ‖)`.
    pub max_scaled_residual: f64,
}

pub(super) struct RitzPairs {
    pub values: Vec<f64>,
    /// Column-major `m × q`.
    pub vectors: Vec<f64>,
    pub stats: SolveStats,
}

fn a_dot(x: &[f64], y: &[f64], mass: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .zip(mass)
        .map(|((a, b), w)| a * b * w)
        .sum()
}

fn random_vector(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Removes the A-projection of `z` onto every vector of `basis`.
fn project_out(z: &mut [f64], basis: &[Vec<f64>], mass: &[f64]) {
    if basis.is_empty() {
        return;
    }
    let coeffs: Vec<f64> = basis.par_iter().map(|v| a_dot(z, v, mass)).collect();
    z.par_chunks_mut(512).enumerate().for_each(|(c, chunk)| {
        let off = c * 512;
        for (v, &cv) in basis.iter().zip(&coeffs) {
            for (zi, vi) in chunk.iter_mut().zip(&v[off..]) {
                *zi -= cv * vi;
            }
        }
    });
}

struct Krylov<'a> {
    pair: &'a LaplacianPair,
    basis: Vec<Vec<f64>>,
    w_basis: Vec<Vec<f64>>,
    /// Row-major projection `Vᵀ W V`, grown one row/column per basis vector.
    gram: Vec<Vec<f64>>,
}

impl Krylov<'_> {
    /// A-orthonormalises `block` against the basis and appends what survives.
    fn extend(&mut self, block: Vec<Vec<f64>>, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let m = self.pair.dim();
        let mass = &self.pair.mass;
        let mut added = Vec::new();
        for mut z in block {
            if self.basis.len() >= m {
                break;
            }
            let mut accepted = false;
            for _attempt in 0..4 {
                let before = a_dot(&z, &z, mass).sqrt();
                project_out(&mut z, &self.basis, mass);
                project_out(&mut z, &self.basis, mass);
                let after = a_dot(&z, &z, mass).sqrt();
                if before > 0.0 && after > 1e-10 * before && after.is_finite() {
                    z.iter_mut().for_each(|x| *x /= after);
                    accepted = true;
                    break;
                }
                // The block direction is already spanned; restart it randomly.
                z = random_vector(rng, m);
            }
            if !accepted {
                continue;
            }
            let wz = self.pair.stiffness.mul_vec(&z);
            let new_col: Vec<f64> = self.basis.par_iter().map(|v| v.iter().zip(&wz).map(|(a, b)| a * b).sum()).collect();
            let diag: f64 = z.iter().zip(&wz).map(|(a, b)| a * b).sum();
            for (row, &g) in self.gram.iter_mut().zip(&new_col) {
                row.push(g);
            }
            let mut last = new_col;
            last.push(diag);
            self.gram.push(last);
            added.push(self.basis.len());
            self.basis.push(z);
            self.w_basis.push(wz);
        }
        added
    }

    fn rayleigh_ritz(&self, q: usize, w_norm: f64) -> Result<RitzPairs> {
        let n = self.basis.len();
        let m = self.pair.dim();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                // Symmetrise the accumulated projection.
                let v = 0.5 * (self.gram[i][j] + self.gram[j][i]);
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        let eig = SymmetricEigen::new(&g, n)?;
        let q = q.min(n);
        let mass = &self.pair.mass;
        let pairs: Vec<(Vec<f64>, f64, f64)> = (0..q)
            .into_par_iter()
            .map(|k| {
                let z = eig.vector(k);
                let theta = eig.values[k];
                let mut y = vec![0.0; m];
                let mut wy = vec![0.0; m];
                for ((v, wv), &zi) in self.basis.iter().zip(&self.w_basis).zip(&z) {
                    for i in 0..m {
                        y[i] += zi * v[i];
                        wy[i] += zi * wv[i];
                    }
                }
                let r: f64 = (0..m)
                    .map(|i| (wy[i] - theta * mass[i] * y[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let y_norm = y.iter().map(|x| x * x).sum::<f64>().sqrt();
                let wy_norm = wy.iter().map(|x| x * x).sum::<f64>().sqrt();
                let rel = r / (w_norm * y_norm).max(f64::MIN_POSITIVE);
                let scaled = r / wy_norm.max(1.0);
                (y, rel, scaled)
            })
            .collect();

        let mut vectors = Vec::with_capacity(m * q);
        let mut max_rel: f64 = 0.0;
        let mut max_scaled: f64 = 0.0;
        for (y, rel, scaled) in pairs {
            vectors.extend_from_slice(&y);
            max_rel = max_rel.max(rel);
            max_scaled = max_scaled.max(scaled);
        }
        Ok(RitzPairs {
            values: eig.values[..q].to_vec(),
            vectors,
            stats: SolveStats {
                subspace_dimension: n,
                projections: 0,
                max_relative_residual: max_rel,
                max_scaled_residual: max_scaled,
            },
        })
    }
}

/// A-normalised indicator vectors of the connected components of the stiffness graph.
fn null_space(pair: &LaplacianPair) -> Vec<Vec<f64>> {
    let m = pair.dim();
    let mut component = vec![usize::MAX; m];
    let mut count = 0;
    for root in 0..m {
        if component[root] != usize::MAX {
            continue;
        }
        component[root] = count;
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            for (w, _) in pair.stiffness.row(v) {
                if component[w] == usize::MAX {
                    component[w] = count;
                    stack.push(w);
                }
            }
        }
        count += 1;
    }
    (0..count)
        .map(|c| {
            let area: f64 = (0..m).filter(|&i| component[i] == c).map(|i| pair.mass[i]).sum();
            let value = 1.0 / area.sqrt();
            (0..m).map(|i| if component[i] == c { value } else { 0.0 }).collect()
        })
        .collect()
}

pub(super) fn lanczos(pair: &LaplacianPair, q: usize, opts: &EigenOptions) -> Result<RitzPairs> {
    let m = pair.dim();
    let mass = &pair.mass;
    let shifted = pair.stiffness.add_diagonal(-opts.shift, mass);
    let chol = EnvelopeCholesky::factor(&shifted)?;
    let w_norm = pair.stiffness.norm_inf().max(f64::MIN_POSITIVE);

    let block_size = opts.block_size.unwrap_or(q.min(16)).clamp(1, m);
    let max_dim = opts.max_dimension.unwrap_or(m).clamp(q, m);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut krylov = Krylov {
        pair,
        basis: Vec::new(),
        w_basis: Vec::new(),
        gram: Vec::new(),
    };

    // The kernel of W (constants on each connected component) goes in first and
    // is projected out of every right-hand side, so the near-singular shifted
    // solve never amplifies round-off along it.
    let null = null_space(pair);
    krylov.extend(null.clone(), &mut rng);

    let mut block: Vec<Vec<f64>> = (0..block_size).map(|_| random_vector(&mut rng, m)).collect();
    let mut next_check = (q + block_size).min(max_dim);
    let mut projections = 0;
    loop {
        let added = krylov.extend(block, &mut rng);
        let n = krylov.basis.len();
        let exhausted = added.is_empty() || n >= max_dim;
        if n >= next_check || exhausted {
            let mut ritz = krylov.rayleigh_ritz(q, w_norm)?;
            projections += 1;
            ritz.stats.projections = projections;
            let full_space = n >= m;
            if ritz.values.len() == q
                && (full_space || ritz.stats.max_relative_residual <= opts.tolerance)
            {
                return Ok(ritz);
            }
            if exhausted {
                if ritz.values.len() == q && ritz.stats.max_scaled_residual <= 1e-6 {
                    log::warn!(
                        "eigensolver stopped at dimension {n} with relative residual {:e}",
                        ritz.stats.max_relative_residual
                    );
                    return Ok(ritz);
                }
                return Err(Error::NoConvergence {
                    wanted: q,
                    converged: ritz.values.len(),
                    dimension: n,
                    worst_residual: ritz.stats.max_relative_residual,
                });
            }
            next_check = (n + block_size.max(n / 4)).min(max_dim);
            // Projections cost O(n³); once most of the space is needed anyway,
            // a single projection at the end is cheaper than several on the way.
            if 5 * next_check > 3 * max_dim {
                next_check = max_dim;
            }
        }
        block = added
            .iter()
            .map(|&i| {
                let mut v = krylov.basis[i].clone();
                project_out(&mut v, &null, mass);
                let rhs: Vec<f64> = v.iter().zip(mass).map(|(v, a)| v * a).collect();
                chol.solve(&rhs)
            })
            .collect();
        while block.len() < block_size {
            block.push(random_vector(&mut rng, m));
        }
    }
}
