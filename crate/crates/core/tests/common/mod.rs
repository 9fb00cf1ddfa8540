//! Independent oracles and fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sgwc::{shapes, LaplacianPair, Mesh};

/// Dense solve of `W φ = λ A φ` through `A^{-1/2} W A^{-1/2}`; eigenvalues
/// ascending, eigenvectors A-orthonormal in the columns.
pub fn dense_generalized(pair: &LaplacianPair) -> (Vec<f64>, DMatrix<f64>) {
    let w = pair.stiffness.to_dense();
    let inv_sqrt = DVector::from_iterator(pair.mass.len(), pair.mass.iter().map(|a| 1.0 / a.sqrt()));
    let m = w.nrows();
    let b = DMatrix::from_fn(m, m, |i, j| inv_sqrt[i] * w[(i, j)] * inv_sqrt[j]);
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(m, m, |r, c| inv_sqrt[r] * eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Planar `n × n` grid on the unit square with jittered interior vertices; has a boundary.
pub fn jittered_grid(n: usize, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = 1.0 / (n - 1) as f64;
    let mut vertices = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let interior = i > 0 && j > 0 && i < n - 1 && j < n - 1;
            let d = if interior { 0.2 * h } else { 0.0 };
            vertices.push([
                i as f64 * h + rng.random_range(-d..=d),
                j as f64 * h + rng.random_range(-d..=d),
                0.0,
            ]);
        }
    }
    let mut triangles = Vec::new();
    for i in 0..n - 1 {
        for j in 0..n - 1 {
            let (a, b, c, d) = (i * n + j, (i + 1) * n + j, (i + 1) * n + j + 1, i * n + j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::new(vertices, triangles).unwrap()
}

/// Small test meshes, all with at most 200 vertices.
pub fn small_meshes() -> Vec<(&'static str, Mesh)> {
    vec![
        ("icosphere", shapes::jitter(&shapes::icosphere(2, 1.0), 0.01, 1)),
        ("torus", shapes::jitter(&shapes::torus(1.0, 0.35, 12, 8), 0.01, 2)),
        ("bumpy", shapes::bumped_sphere(2, 4, 0.3, 0.4, 3)),
        ("grid", jittered_grid(10, 4)),
        ("scaled", shapes::scaled(&shapes::jitter(&shapes::icosphere(1, 1.0), 0.02, 5), 3.0)),
        ("subdivided", shapes::jitter(&shapes::subdivide(&shapes::torus(2.0, 0.6, 6, 4)), 0.02, 6)),
    ]
}

/// A random grid whose every edge has integer length: cells are `a × b` with
/// `(a, b, c)` a Pythagorean triple, diagonals run either way per cell, and
/// the vertex order is shuffled.
pub fn integer_length_mesh(seed: u64) -> Mesh {
    const TRIPLES: [(f64, f64); 4] = [(3.0, 4.0), (5.0, 12.0), (8.0, 15.0), (6.0, 8.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = TRIPLES[rng.random_range(0..TRIPLES.len())];
    let (nx, ny) = (rng.random_range(2..7), rng.random_range(2..7));
    let mut vertices = Vec::new();
    for i in 0..=nx {
        for j in 0..=ny {
            vertices.push([i as f64 * a, j as f64 * b, 0.0]);
        }
    }
    let idx = |i: usize, j: usize| i * (ny + 1) + j;
    let mut triangles = Vec::new();
    for i in 0..nx {
        for j in 0..ny {
            let (p, q, r, s) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            if rng.random::<bool>() {
                triangles.extend([[p, q, r], [p, r, s]]);
            } else {
                triangles.extend([[p, q, s], [q, r, s]]);
            }
        }
    }
    let mesh = Mesh::new(vertices, triangles).unwrap();
    let mut perm: Vec<usize> = (0..mesh.vertex_count()).collect();
    for i in (1..perm.len()).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    mesh.permute_vertices(&perm).unwrap()
}

/// All-pairs shortest paths by Floyd-Warshall over Euclidean edge lengths.
pub fn floyd_warshall(mesh: &Mesh) -> DMatrix<f64> {
    let m = mesh.vertex_count();
    let mut d = DMatrix::from_element(m, m, f64::INFINITY);
    for i in 0..m {
        d[(i, i)] = 0.0;
    }
    for &[i, j] in mesh.edges() {
        let p = mesh.vertices()[i];
        let q = mesh.vertices()[j];
        let len = ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt();
        d[(i, j)] = len;
        d[(j, i)] = len;
    }
    for k in 0..m {
        for i in 0..m {
            for j in 0..m {
                let via = d[(i, k)] + d[(k, j)];
                if via < d[(i, j)] {
                    d[(i, j)] = via;
                }
            }
        }
    }
    d
}

/// `p × N` uniform random matrix in `[-scale, scale]`.
pub fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..=scale))
}
