//! Triangle meshes and the per-element geometry used by the cotangent
//! discretisation of the Laplace-Beltrami operator.

mod format;
mod geometry;

use std::collections::VecDeque;
use std::path::Path;

use sha2::{Digest, Sha256};

pub use format::{load_mesh, read_mesh, write_off, MeshFormat};
pub use geometry::{cotangent_weights, vertex_areas, CotanWeights, VertexAreas, COT_CLAMP};

use crate::{Error, Result};

pub type Point3 = [f64; 3];

/// An indexed triangle mesh. Immutable once constructed; the edge set is
/// derived from the triangles and kept sorted as `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Point3>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
}

impl Mesh {
    pub fn new(vertices: Vec<Point3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let m = vertices.len();
        if m < 3 {
            return Err(Error::InvalidMesh(format!(
                "need at least 3 vertices, got {m}"
            )));
        }
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("mesh has no triangles".into()));
        }
        if let Some(i) = vertices
            .iter()
            .position(|v| v.iter().any(|c| !c.is_finite()))
        {
            return Err(Error::InvalidMesh(format!(
                "vertex {i} has a non-finite coordinate"
            )));
        }
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&i| i >= m) {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} references vertex {bad}, but the mesh has {m} vertices"
                )));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::InvalidMesh(format!(
                    "triangle {t} repeats a vertex index: {tri:?}"
                )));
            }
        }

        let mut edges: Vec<[usize; 2]> = triangles
            .iter()
            .flat_map(|&[a, b, c]| [[a, b], [b, c], [c, a]])
            .map(|[i, j]| if i < j { [i, j] } else { [j, i] })
            .collect();
        edges.sort_unstable();
        edges.dedup();

        Ok(Self {
            vertices,
            triangles,
            edges,
        })
    }

    /// Loads an OFF or OBJ file, choosing the parser from the extension.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let format = MeshFormat::from_path(path)?;
        let file = std::fs::File::open(path).map_err(|e| Error::from(e).at(path))?;
        load_mesh(std::io::BufReader::new(file), format).map_err(|e| e.at(path))
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        let (p, q, r) = (self.vertices[a], self.vertices[b], self.vertices[c]);
        0.5 * norm(cross(sub(q, p), sub(r, p)))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn edge_length(&self, i: usize, j: usize) -> f64 {
        norm(sub(self.vertices[i], self.vertices[j]))
    }

    /// Sorted adjacency lists.
    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &[i, j] in &self.edges {
            adj[i].push(j);
            adj[j].push(i);
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        adj
    }

    /// Returns the first vertex not reachable from vertex 0, if any.
    pub fn unreachable_vertex(&self) -> Option<usize> {
        let adj = self.neighbors();
        let mut seen = vec![false; adj.len()];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        seen.iter().position(|s| !s)
    }

    /// Same connectivity, vertices mapped through `f`.
    pub fn map_vertices(&self, f: impl Fn(Point3) -> Point3) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(|&v| f(v)).collect(),
            triangles: self.triangles.clone(),
            edges: self.edges.clone(),
        }
    }

    /// Relabels vertices so that old vertex `i` becomes `perm[i]`.
    pub fn permute_vertices(&self, perm: &[usize]) -> Result<Mesh> {
        let m = self.vertices.len();
        if perm.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                actual: perm.len(),
            });
        }
        let mut vertices = vec![[0.0; 3]; m];
        for (old, &new) in perm.iter().enumerate() {
            vertices[new] = self.vertices[old];
        }
        let triangles = self
            .triangles
            .iter()
            .map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]])
            .collect();
        Mesh::new(vertices, triangles)
    }

    /// SHA-256 over the little-endian vertex coordinates and triangle indices.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.vertices.len() as u64).to_le_bytes());
        hasher.update((self.triangles.len() as u64).to_le_bytes());
        for v in &self.vertices {
            for c in v {
                hasher.update(c.to_le_bytes());
            }
        }
        for t in &self.triangles {
            for &i in t {
                hasher.update((i as u64).to_le_bytes());
            }
        }
        hex::encode(hasher.finalize())
    }
}

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tetrahedron() -> Mesh {
        Mesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [0.0, 0.0, 1.0],
            ],
            vec![[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]],
        )
        .unwrap()
    }

    #[test]
    fn tetrahedron_satisfies_euler() {
        let mesh = tetrahedron();
        let (v, e, f) = (
            mesh.vertex_count() as i64,
            mesh.edges().len() as i64,
            mesh.triangles().len() as i64,
        );
        assert_eq!(e, 6);
        assert_eq!(v - e + f, 2);
    }

    #[test]
    fn rejects_repeated_vertex_in_triangle() {
        let err = Mesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![[0, 1, 1]]);
        assert!(matches!(err, Err(Error::InvalidMesh(_))));
    }

    #[test]
    fn rejects_too_few_vertices_or_faces() {
        assert!(Mesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0]], vec![]).is_err());
        assert!(Mesh::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], vec![]).is_err());
    }

    #[test]
    fn permutation_preserves_hash_only_when_identity() {
        let mesh = tetrahedron();
        let same = mesh.permute_vertices(&[0, 1, 2, 3]).unwrap();
        assert_eq!(mesh.content_hash(), same.content_hash());
        let other = mesh.permute_vertices(&[1, 0, 2, 3]).unwrap();
        assert_ne!(mesh.content_hash(), other.content_hash());
        assert_eq!(other.edges().len(), 6);
    }

    #[test]
    fn detects_disconnected_components() {
        let mesh = Mesh::new(
            vec![
                [0.0, 0.0, 0.0],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [5.0, 0.0, 0.0],
                [6.0, 0.0, 0.0],
                [5.0, 1.0, 0.0],
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        assert_eq!(mesh.unreachable_vertex(), Some(3));
        assert_eq!(tetrahedron().unreachable_vertex(), None);
    }
}
