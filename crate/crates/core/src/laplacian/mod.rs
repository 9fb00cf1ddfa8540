//! Stiffness/mass assembly, the truncated generalized eigenproblem
//! `W φ = λ A φ`, and the graph Fourier transform over its eigenbasis.

mod cholesky;
mod lanczos;
mod sparse;
mod symmetric;

use std::path::Path;

use nalgebra::DMatrix;

pub use cholesky::{reverse_cuthill_mckee, EnvelopeCholesky};
pub use lanczos::{EigenOptions, SolveStats};
pub use sparse::CsrMatrix;
pub use symmetric::SymmetricEigen;

use crate::io;
use crate::mesh::{cotangent_weights, vertex_areas, Mesh};
use crate::{Error, Result};

/// Default eigenpair count, capped for tiny meshes by [`default_eigen_count`].
pub const DEFAULT_EIGEN_COUNT: usize = 201;

pub fn default_eigen_count(vertex_count: usize) -> usize {
    DEFAULT_EIGEN_COUNT.min(vertex_count.saturating_sub(1)).max(1)
}

/// Stiffness matrix `W = diag(Σ c_ik) - (c_ij)` and lumped mass `A = diag(a_i)`.
#[derive(Debug, Clone)]
pub struct LaplacianPair {
    pub stiffness: CsrMatrix,
    pub mass: Vec<f64>,
}

impl LaplacianPair {
    pub fn assemble(mesh: &Mesh) -> Self {
        let m = mesh.vertex_count();
        let weights = cotangent_weights(mesh);
        let mut diag = vec![0.0; m];
        let mut trip = Vec::with_capacity(4 * mesh.edges().len() + m);
        for (i, j, c) in weights.iter() {
            trip.push((i, j, -c));
            trip.push((j, i, -c));
            diag[i] += c;
            diag[j] += c;
        }
        trip.extend(diag.iter().enumerate().map(|(i, &d)| (i, i, d)));
        let stiffness = CsrMatrix::from_triplets(m, trip);

        let mut mass = vertex_areas(mesh).0;
        let mean = mass.iter().sum::<f64>() / m as f64;
        let floor = if mean > 0.0 { 1e-12 * mean } else { 1e-300 };
        for a in &mut mass {
            if *a < floor {
                *a = floor;
            }
        }
        Self { stiffness, mass }
    }

    pub fn dim(&self) -> usize {
        self.mass.len()
    }
}

/// The `q` smallest generalized eigenpairs, A-orthonormal, eigenvalues ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    eigenvalues: Vec<f64>,
    /// `m × q`, column `ℓ` is `φ_ℓ`.
    eigenfunctions: DMatrix<f64>,
    vertex_areas: Vec<f64>,
}

impl EigenBasis {
    pub fn new(eigenvalues: Vec<f64>, eigenfunctions: DMatrix<f64>, vertex_areas: Vec<f64>) -> Result<Self> {
        if eigenfunctions.ncols() != eigenvalues.len() {
            return Err(Error::DimensionMismatch {
                expected: eigenvalues.len(),
                actual: eigenfunctions.ncols(),
            });
        }
        if eigenfunctions.nrows() != vertex_areas.len() {
            return Err(Error::DimensionMismatch {
                expected: vertex_areas.len(),
                actual: eigenfunctions.nrows(),
            });
        }
        if eigenvalues.is_empty() {
            return Err(Error::InvalidArgument("eigenbasis needs at least one pair".into()));
        }
        Ok(Self {
            eigenvalues,
            eigenfunctions,
            vertex_areas,
        })
    }

    pub fn count(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_areas.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &DMatrix<f64> {
        &self.eigenfunctions
    }

    pub fn eigenfunction(&self, l: usize) -> &[f64] {
        let m = self.vertex_count();
        &self.eigenfunctions.as_slice()[l * m..(l + 1) * m]
    }

    pub fn vertex_areas(&self) -> &[f64] {
        &self.vertex_areas
    }

    /// Sum of the (floored) vertex areas.
    pub fn total_area(&self) -> f64 {
        self.vertex_areas.iter().sum()
    }

    /// Largest computed eigenvalue.
    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }

    /// Keeps the first `q` pairs.
    pub fn truncated(&self, q: usize) -> Result<Self> {
        if q == 0 || q > self.count() {
            return Err(Error::InvalidArgument(format!(
                "cannot truncate {} pairs to {q}",
                self.count()
            )));
        }
        Self::new(
            self.eigenvalues[..q].to_vec(),
            self.eigenfunctions.columns(0, q).into_owned(),
            self.vertex_areas.clone(),
        )
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        io::write_atomic(path, |w| {
            io::write_header(w, EIGEN_MAGIC)?;
            io::write_u64(w, self.vertex_count() as u64)?;
            io::write_u64(w, self.count() as u64)?;
            io::write_f64s(w, &self.eigenvalues)?;
            io::write_f64s(w, self.eigenfunctions.as_slice())?;
            io::write_f64s(w, &self.vertex_areas)
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let read = || -> Result<Self> {
            let mut r = io::open(path)?;
            io::read_header(&mut r, EIGEN_MAGIC)?;
            let m = io::read_len(&mut r)?;
            let q = io::read_len(&mut r)?;
            let values = io::read_f64s(&mut r, q)?;
            let funcs = io::read_f64s(&mut r, m * q)?;
            let areas = io::read_f64s(&mut r, m)?;
            Self::new(values, DMatrix::from_vec(m, q, funcs), areas)
        };
        read().map_err(|e| match e {
            e @ Error::File { .. } => e,
            e => e.at(path),
        })
    }
}

const EIGEN_MAGIC: &[u8; 8] = b"SGWEIGEN";

pub fn solve_eigs(pair: &LaplacianPair, q: usize) -> Result<EigenBasis> {
    solve_eigs_with(pair, q, &EigenOptions::default()).map(|(basis, _)| basis)
}

pub fn solve_eigs_with(pair: &LaplacianPair, q: usize, opts: &EigenOptions) -> Result<(EigenBasis, SolveStats)> {
    let m = pair.dim();
    if q == 0 || q > m {
        return Err(Error::InvalidArgument(format!(
            "eigenpair count {q} outside 1..={m}"
        )));
    }
    let ritz = lanczos::lanczos(pair, q, opts)?;
    let mut values = ritz.values;
    let mut funcs = DMatrix::from_vec(m, q, ritz.vectors);

    // W is positive semidefinite; round-off around the zero mode is clamped.
    let top = values.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    for v in &mut values {
        if *v < 0.0 && *v >= -1e-12 * top.max(1.0) {
            *v = 0.0;
        }
    }
    for mut col in funcs.column_iter_mut() {
        if let Some(&lead) = col.iter().find(|x| x.abs() > 1e-8) {
            if lead < 0.0 {
                col.neg_mut();
            }
        }
    }
    let basis = EigenBasis::new(values, funcs, pair.mass.clone())?;
    Ok((basis, ritz.stats))
}

/// Forward transform `f̂ = Φᵀ A f`.
pub fn gft(basis: &EigenBasis, f: &[f64]) -> Result<Vec<f64>> {
    let m = basis.vertex_count();
    if f.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            actual: f.len(),
        });
    }
    let weighted: Vec<f64> = f.iter().zip(basis.vertex_areas()).map(|(x, a)| x * a).collect();
    Ok((0..basis.count())
        .map(|l| basis.eigenfunction(l).iter().zip(&weighted).map(|(p, w)| p * w).sum())
        .collect())
}

/// Inverse transform `f = Φ f̂`.
pub fn igft(basis: &EigenBasis, fhat: &[f64]) -> Result<Vec<f64>> {
    if fhat.len() != basis.count() {
        return Err(Error::DimensionMismatch {
            expected: basis.count(),
            actual: fhat.len(),
        });
    }
    let v = basis.eigenfunctions() * nalgebra::DVector::from_column_slice(fhat);
    Ok(v.as_slice().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    const S3: f64 = 1.7320508075688772;

    fn strip() -> Mesh {
        Mesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.5, S3 / 2.0, 0.0],
                [0.5, -S3 / 2.0, 0.0],
            ],
            vec![[0, 1, 2], [1, 0, 3]],
        )
        .unwrap()
    }

    #[test]
    fn stiffness_rows_sum_to_zero() {
        for mesh in [strip(), shapes::icosphere(1, 1.0), shapes::torus(1.0, 0.4, 10, 6)] {
            let pair = LaplacianPair::assemble(&mesh);
            let ones = vec![1.0; pair.dim()];
            for r in pair.stiffness.mul_vec(&ones) {
                assert!(r.abs() < 1e-12);
            }
            for i in 0..pair.dim() {
                for (j, v) in pair.stiffness.row(i) {
                    assert_eq!(v, pair.stiffness.get(j, i));
                }
            }
        }
    }

    #[test]
    fn single_triangle_stiffness() {
        let mesh = Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, S3 / 2.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let w = LaplacianPair::assemble(&mesh).stiffness;
        let off = -(1.0 / S3) / 2.0;
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { -2.0 * off } else { off };
                assert!((w.get(i, j) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_area_vertices_are_floored() {
        // Vertex 3 belongs only to a degenerate triangle.
        let mesh = Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [2.0, 0.0, 0.0]],
            vec![[0, 1, 2], [0, 1, 3]],
        )
        .unwrap();
        let pair = LaplacianPair::assemble(&mesh);
        assert!(pair.mass.iter().all(|&a| a > 0.0));
    }

    #[test]
    fn first_eigenfunction_is_constant() {
        let pair = LaplacianPair::assemble(&shapes::icosphere(2, 1.0));
        let basis = solve_eigs(&pair, 10).unwrap();
        let c = 1.0 / basis.total_area().sqrt();
        assert!(basis.eigenvalues()[0] <= 1e-8 * basis.lambda_max());
        for &x in basis.eigenfunction(0) {
            assert!((x - c).abs() < 1e-8, "{x} vs {c}");
        }
    }

    #[test]
    fn rejects_bad_counts() {
        let pair = LaplacianPair::assemble(&strip());
        assert!(solve_eigs(&pair, 0).is_err());
        assert!(solve_eigs(&pair, 5).is_err());
    }

    #[test]
    fn full_basis_is_a_orthonormal() {
        let mesh = shapes::torus(1.0, 0.35, 8, 5);
        let pair = LaplacianPair::assemble(&mesh);
        let m = pair.dim();
        let basis = solve_eigs(&pair, m).unwrap();
        let phi = basis.eigenfunctions();
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(pair.mass.clone()));
        let gram = phi.transpose() * a * phi;
        let err = (gram - DMatrix::identity(m, m)).amax();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn transforms() {
        let mesh = shapes::torus(1.0, 0.35, 8, 5);
        let pair = LaplacianPair::assemble(&mesh);
        let m = pair.dim();
        let basis = solve_eigs(&pair, m).unwrap();

        // delta function
        let j = 7;
        let mut delta = vec![0.0; m];
        delta[j] = 1.0;
        let dhat = gft(&basis, &delta).unwrap();
        for l in 0..m {
            assert!((dhat[l] - pair.mass[j] * basis.eigenfunction(l)[j]).abs() < 1e-15);
        }

        // an eigenfunction maps to a unit vector
        let fhat = gft(&basis, basis.eigenfunction(1)).unwrap();
        for (l, &x) in fhat.iter().enumerate() {
            let e = if l == 1 { 1.0 } else { 0.0 };
            assert!((x - e).abs() < 1e-8);
        }

        // constants live in the zero eigenspace
        let fhat = gft(&basis, &vec![2.5; m]).unwrap();
        assert!(fhat[1..].iter().all(|x| x.abs() < 1e-8));
        assert!(fhat[0].abs() > 1.0);

        // e_1 inverts to the constant eigenfunction, zero to zero
        let mut e1 = vec![0.0; m];
        e1[0] = 1.0;
        let c = 1.0 / basis.total_area().sqrt();
        assert!(igft(&basis, &e1).unwrap().iter().all(|x| (x - c).abs() < 1e-8));
        assert!(igft(&basis, &vec![0.0; m]).unwrap().iter().all(|&x| x == 0.0));

        // full-basis round trip
        let f: Vec<f64> = (0..m).map(|i| (i as f64 * 0.37).sin()).collect();
        let back = igft(&basis, &gft(&basis, &f).unwrap()).unwrap();
        for (x, y) in f.iter().zip(&back) {
            assert!((x - y).abs() < 1e-8);
        }

        assert!(gft(&basis, &[1.0]).is_err());
        assert!(igft(&basis, &[1.0]).is_err());
    }

    #[test]
    fn cache_round_trip() {
        let pair = LaplacianPair::assemble(&shapes::icosphere(1, 1.0));
        let basis = solve_eigs(&pair, 6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eig.bin");
        basis.write(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], b"SGWEIGEN");
        assert_eq!(bytes.len(), 16 + 16 + 8 * (6 + 42 * 6 + 42));
        assert_eq!(EigenBasis::read(&path).unwrap(), basis);
    }
}
