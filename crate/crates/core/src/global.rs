//! Geodesic distances on the edge graph, the geodesic exponential kernel and
//! the global descriptor `F = U K Uᵀ`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::path::Path;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::bof::CodeMatrix;
use crate::{io, Error, Mesh, Result};

pub const DEFAULT_EPSILON: f64 = 0.1;

/// Symmetric all-pairs geodesic distances divided by their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicMatrix {
    pub d: DMatrix<f64>,
}

#[derive(Clone, Copy, PartialEq)]
struct Frontier {
    dist: f64,
    vertex: usize,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then(other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Weighted adjacency lists with Euclidean edge lengths.
pub fn edge_graph(mesh: &Mesh) -> Vec<Vec<(usize, f64)>> {
    let mut adj = vec![Vec::new(); mesh.vertex_count()];
    for &[i, j] in mesh.edges() {
        let len = mesh.edge_length(i, j);
        adj[i].push((j, len));
        adj[j].push((i, len));
    }
    adj
}

/// Single-source shortest path lengths; unreachable vertices stay infinite.
pub fn dijkstra(graph: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.len()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Frontier { dist: 0.0, vertex: source });
    while let Some(Frontier { dist: d, vertex: v }) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, len) in &graph[v] {
            let nd = d + len;
            if nd < dist[w] {
                dist[w] = nd;
                heap.push(Frontier { dist: nd, vertex: w });
            }
        }
    }
    dist
}

/// Unnormalised all-pairs distances, symmetrised with the smaller of the two
/// directed values.
pub fn raw_geodesics(mesh: &Mesh) -> Result<DMatrix<f64>> {
    let graph = edge_graph(mesh);
    let m = graph.len();
    let rows: Vec<Vec<f64>> = (0..m).into_par_iter().map(|s| dijkstra(&graph, s)).collect();
    if let Some(v) = rows[0].iter().position(|d| d.is_infinite()) {
        return Err(Error::Disconnected(v));
    }
    Ok(DMatrix::from_fn(m, m, |i, j| rows[i][j].min(rows[j][i])))
}

pub fn geodesic_matrix(mesh: &Mesh) -> Result<GeodesicMatrix> {
    let mut d = raw_geodesics(mesh)?;
    let max = d.max();
    if max > 0.0 {
        d /= max;
    }
    Ok(GeodesicMatrix { d })
}

impl GeodesicMatrix {
    pub fn dim(&self) -> usize {
        self.d.nrows()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, |w| {
            io::write_header(w, GEODESIC_MAGIC)?;
            io::write_u64(w, self.dim() as u64)?;
            // Symmetric, so the column-major storage is also row-major.
            io::write_f64s(w, self.d.as_slice())
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let read = || -> Result<Self> {
            let mut r = io::open(path)?;
            io::read_header(&mut r, GEODESIC_MAGIC)?;
            let m = io::read_len(&mut r)?;
            let values = io::read_f64s(&mut r, m * m)?;
            Ok(Self {
                d: DMatrix::from_row_slice(m, m, &values),
            })
        };
        read().map_err(|e| match e {
            e @ Error::File { .. } => e,
            e => e.at(path),
        })
    }
}

const GEODESIC_MAGIC: &[u8; 8] = b"SGWGEODE";

/// `κ_ij = exp(-d_ij / ε)`.
pub fn geodesic_kernel(d: &GeodesicMatrix, epsilon: f64) -> Result<DMatrix<f64>> {
    check_epsilon(epsilon)?;
    Ok(d.d.map(|x| (-x / epsilon).exp()))
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    Ok(())
}

/// `F / ‖F‖_F` and its column stacking `x`, so `x` has unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalDescriptor {
    pub f: DMatrix<f64>,
    pub x: Vec<f64>,
    pub epsilon: f64,
}

impl GlobalDescriptor {
    fn from_raw(raw: DMatrix<f64>, epsilon: f64) -> Self {
        let norm = raw.norm();
        let f = if norm > 0.0 { raw / norm } else { raw };
        let x = f.as_slice().to_vec();
        Self { f, x, epsilon }
    }
}

/// Unnormalised `U K Uᵀ`.
pub fn sgwc_matrix(codes: &CodeMatrix, kernel: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let u = &codes.codes;
    if kernel.nrows() != u.ncols() || kernel.ncols() != u.ncols() {
        return Err(Error::DimensionMismatch {
            expected: u.ncols(),
            actual: kernel.nrows(),
        });
    }
    let uk = u * kernel;
    Ok(symmetrized(uk * u.transpose()))
}

/// `(F + Fᵀ) / 2`, exactly symmetric in floating point.
fn symmetrized(f: DMatrix<f64>) -> DMatrix<f64> {
    let t = f.transpose();
    (f + t) * 0.5
}

pub fn sgwc_bof(codes: &CodeMatrix, kernel: &DMatrix<f64>, epsilon: f64) -> Result<GlobalDescriptor> {
    Ok(GlobalDescriptor::from_raw(sgwc_matrix(codes, kernel)?, epsilon))
}

/// Same descriptor as [`sgwc_bof`] over [`geodesic_matrix`], accumulating
/// `F += u_i (κ_i Uᵀ)` one kernel row at a time so the `m × m` kernel is never
/// held in memory. Each source is solved twice: once for the normalising
/// maximum, once for the accumulation.
pub fn sgwc_bof_streaming(mesh: &Mesh, codes: &CodeMatrix, epsilon: f64) -> Result<GlobalDescriptor> {
    check_epsilon(epsilon)?;
    let u = &codes.codes;
    let m = mesh.vertex_count();
    if u.ncols() != m {
        return Err(Error::DimensionMismatch { expected: m, actual: u.ncols() });
    }
    let graph = edge_graph(mesh);
    let max = (0..m)
        .into_par_iter()
        .map(|s| dijkstra(&graph, s).into_iter().fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max);
    if max.is_infinite() {
        return Err(Error::Disconnected(
            dijkstra(&graph, 0).iter().position(|d| d.is_infinite()).unwrap_or(0),
        ));
    }
    let scale = if max > 0.0 { max } else { 1.0 };
    let ut = u.transpose();
    let k = u.nrows();
    let raw = (0..m)
        .into_par_iter()
        .fold(
            || DMatrix::zeros(k, k),
            |mut acc: DMatrix<f64>, i| {
                let row = dijkstra(&graph, i);
                let kappa = DMatrix::from_iterator(1, m, row.iter().map(|d| (-d / scale / epsilon).exp()));
                let projected = kappa * &ut;
                acc += u.column(i) * projected;
                acc
            },
        )
        .reduce(|| DMatrix::zeros(k, k), |a, b| a + b);
    Ok(GlobalDescriptor::from_raw(symmetrized(raw), epsilon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn codes(k: usize, m: usize, seed: u64) -> CodeMatrix {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut u = DMatrix::from_fn(k, m, |_, _| rng.random::<f64>());
        for mut c in u.column_iter_mut() {
            let s = c.sum();
            c /= s;
        }
        CodeMatrix { codes: u }
    }

    #[test]
    fn collinear_path() {
        let mesh = Mesh::new(vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]], vec![[0, 1, 2]]).unwrap();
        assert_eq!(raw_geodesics(&mesh).unwrap()[(0, 2)], 2.0);
        let d = geodesic_matrix(&mesh).unwrap();
        assert_eq!(d.d, DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 1.0, 0.5, 0.0, 0.5, 1.0, 0.5, 0.0]));
    }

    #[test]
    fn geodesic_invariants() {
        let d = geodesic_matrix(&shapes::icosphere(1, 1.0)).unwrap();
        let m = d.dim();
        assert_eq!(d.d.max(), 1.0);
        for i in 0..m {
            assert_eq!(d.d[(i, i)], 0.0);
            for j in 0..m {
                assert_eq!(d.d[(i, j)], d.d[(j, i)]);
                for k in (0..m).step_by(7) {
                    assert!(d.d[(i, j)] <= d.d[(i, k)] + d.d[(k, j)] + 1e-9);
                }
            }
        }
    }

    #[test]
    fn disconnected_mesh_is_rejected() {
        let mesh = Mesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [5.0, 0.0, 0.0], [6.0, 0.0, 0.0], [5.0, 1.0, 0.0]],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        assert!(matches!(geodesic_matrix(&mesh), Err(Error::Disconnected(_))));
    }

    #[test]
    fn kernel_values() {
        let d = GeodesicMatrix {
            d: DMatrix::from_row_slice(2, 2, &[0.0, 0.1, 0.1, 0.0]),
        };
        let k = geodesic_kernel(&d, 0.1).unwrap();
        assert_eq!(k[(0, 0)], 1.0);
        assert!((k[(0, 1)] - 0.36787944117144233).abs() < 1e-15);
        let wide = geodesic_kernel(&d, 1e12).unwrap();
        assert!(wide.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        assert!(geodesic_kernel(&d, 0.0).is_err());
    }

    #[test]
    fn identity_kernel_and_single_codeword() {
        let u = codes(3, 5, 1);
        let f = sgwc_matrix(&u, &DMatrix::identity(5, 5)).unwrap();
        assert!((f - &u.codes * u.codes.transpose()).norm() < 1e-14);
        let ones = CodeMatrix { codes: DMatrix::from_element(1, 4, 1.0) };
        assert_eq!(sgwc_matrix(&ones, &DMatrix::identity(4, 4)).unwrap()[(0, 0)], 4.0);
        assert!(sgwc_matrix(&ones, &DMatrix::identity(3, 3)).is_err());
    }

    #[test]
    fn matches_double_loop_and_stacks_columns() {
        let mesh = shapes::icosphere(1, 1.0);
        let m = mesh.vertex_count();
        let u = codes(4, m, 2);
        let kernel = geodesic_kernel(&geodesic_matrix(&mesh).unwrap(), 0.1).unwrap();
        let f = sgwc_matrix(&u, &kernel).unwrap();
        for r in 0..4 {
            for s in 0..4 {
                let mut brute = 0.0;
                for i in 0..m {
                    for j in 0..m {
                        brute += u.codes[(r, i)] * kernel[(i, j)] * u.codes[(s, j)];
                    }
                }
                assert!((f[(r, s)] - brute).abs() < 1e-10 * brute.abs().max(1.0));
            }
        }
        let g = sgwc_bof(&u, &kernel, 0.1).unwrap();
        assert!((g.f.clone() - g.f.transpose()).norm() <= 1e-10 * g.f.norm());
        assert!(g.f.iter().all(|&x| x >= 0.0));
        assert_eq!(DMatrix::from_column_slice(4, 4, &g.x), g.f);
        assert!((g.x.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn streaming_agrees_with_dense() {
        let mesh = shapes::torus(2.0, 0.7, 12, 8);
        let u = codes(5, mesh.vertex_count(), 3);
        let kernel = geodesic_kernel(&geodesic_matrix(&mesh).unwrap(), 0.1).unwrap();
        let dense = sgwc_bof(&u, &kernel, 0.1).unwrap();
        let streamed = sgwc_bof_streaming(&mesh, &u, 0.1).unwrap();
        assert_eq!(dense.f, dense.f.transpose());
        assert_eq!(streamed.f, streamed.f.transpose());
        assert!((dense.f - streamed.f).amax() < 1e-12);
    }

    #[test]
    fn cache_round_trip() {
        let d = geodesic_matrix(&shapes::icosphere(1, 1.0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("geo.bin");
        d.write(&path).unwrap();
        assert_eq!(GeodesicMatrix::read(&path).unwrap(), d);
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, 16 + 8 + 8 * 42 * 42);
    }
}
