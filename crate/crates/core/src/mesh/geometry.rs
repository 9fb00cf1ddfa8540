use log::warn;

use super::{cross, dot, norm, sub, Mesh};

/// Cotangents are clamped to `[-COT_CLAMP, COT_CLAMP]` so sliver triangles
/// cannot overflow the stiffness matrix.
pub const COT_CLAMP: f64 = 1e6;

/// Mixed Voronoi vertex areas, the diagonal of the mass matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexAreas(pub Vec<f64>);

impl VertexAreas {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }
}

/// Symmetric cotangent edge weights `c_ij`, stored once per undirected edge in
/// the mesh's sorted edge order, so `(i, j)` and `(j, i)` read the same value.
#[derive(Debug, Clone, PartialEq)]
pub struct CotanWeights {
    vertex_count: usize,
    edges: Vec<[usize; 2]>,
    weights: Vec<f64>,
}

impl CotanWeights {
    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// `(i, j, c_ij)` with `i < j`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges
            .iter()
            .zip(&self.weights)
            .map(|(&[i, j], &c)| (i, j, c))
    }

    /// Zero for non-adjacent pairs and on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let key = if i < j { [i, j] } else { [j, i] };
        match self.edges.binary_search(&key) {
            Ok(pos) if i != j => self.weights[pos],
            _ => 0.0,
        }
    }
}

/// Cotangent of the angle at `apex` in the triangle `(apex, p, q)`.
fn corner_cot(apex: [f64; 3], p: [f64; 3], q: [f64; 3]) -> f64 {
    let (u, v) = (sub(p, apex), sub(q, apex));
    let c = dot(u, v);
    let s = norm(cross(u, v));
    if s <= f64::MIN_POSITIVE {
        return if c == 0.0 { 0.0 } else { COT_CLAMP.copysign(c) };
    }
    (c / s).clamp(-COT_CLAMP, COT_CLAMP)
}

pub fn vertex_areas(mesh: &Mesh) -> VertexAreas {
    let verts = mesh.vertices();
    let mut areas = vec![0.0; mesh.vertex_count()];
    let mut degenerate = 0usize;
    for (t, &tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        if area <= 0.0 {
            degenerate += 1;
            continue;
        }
        let p = tri.map(|i| verts[i]);
        // Corner k sits opposite the edge (k+1, k+2).
        let dots: [f64; 3] =
            std::array::from_fn(|k| dot(sub(p[(k + 1) % 3], p[k]), sub(p[(k + 2) % 3], p[k])));
        if let Some(obtuse) = dots.iter().position(|&d| d < 0.0) {
            for k in 0..3 {
                areas[tri[k]] += if k == obtuse { area / 2.0 } else { area / 4.0 };
            }
            continue;
        }
        let cots: [f64; 3] =
            std::array::from_fn(|k| corner_cot(p[k], p[(k + 1) % 3], p[(k + 2) % 3]));
        for k in 0..3 {
            let (j, l) = ((k + 1) % 3, (k + 2) % 3);
            let len2 = |a: usize, b: usize| {
                let d = sub(p[a], p[b]);
                dot(d, d)
            };
            // Voronoi sector: edges k-j and k-l weighted by the cotangent of the opposite corner.
            areas[tri[k]] += (len2(k, j) * cots[l] + len2(k, l) * cots[j]) / 8.0;
        }
    }
    if degenerate > 0 {
        warn!("{degenerate} zero-area triangle(s) contribute no vertex area");
    }
    VertexAreas(areas)
}

pub fn cotangent_weights(mesh: &Mesh) -> CotanWeights {
    let verts = mesh.vertices();
    let edges = mesh.edges().to_vec();
    let mut weights = vec![0.0; edges.len()];
    for &tri in mesh.triangles() {
        for k in 0..3 {
            let (i, j) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let cot = corner_cot(verts[tri[k]], verts[i], verts[j]);
            let key = if i < j { [i, j] } else { [j, i] };
            let pos = edges
                .binary_search(&key)
                .expect("triangle edge missing from the mesh edge set");
            weights[pos] += cot / 2.0;
        }
    }
    CotanWeights {
        vertex_count: mesh.vertex_count(),
        edges,
        weights,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S3: f64 = 1.7320508075688772;

    fn equilateral_pair() -> Mesh {
        // Two unit equilateral triangles sharing the edge (0, 1).
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

    /// Voronoi region of one corner computed directly from the circumcentre.
    fn voronoi_sector_oracle(a: [f64; 3], b: [f64; 3], c: [f64; 3]) -> f64 {
        // Planar triangles in z = 0 only.
        let d = 2.0 * (a[0] * (b[1] - c[1]) + b[0] * (c[1] - a[1]) + c[0] * (a[1] - b[1]));
        let sq = |p: [f64; 3]| p[0] * p[0] + p[1] * p[1];
        let ux = (sq(a) * (b[1] - c[1]) + sq(b) * (c[1] - a[1]) + sq(c) * (a[1] - b[1])) / d;
        let uy = (sq(a) * (c[0] - b[0]) + sq(b) * (a[0] - c[0]) + sq(c) * (b[0] - a[0])) / d;
        let mab = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
        let mac = [(a[0] + c[0]) / 2.0, (a[1] + c[1]) / 2.0];
        // Quadrilateral a, mab, circumcentre, mac via the shoelace formula.
        let poly = [[a[0], a[1]], mab, [ux, uy], mac];
        let mut s = 0.0;
        for k in 0..4 {
            let (p, q) = (poly[k], poly[(k + 1) % 4]);
            s += p[0] * q[1] - q[0] * p[1];
        }
        s.abs() / 2.0
    }

    #[test]
    fn equilateral_triangle_areas_are_thirds() {
        let mesh = Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.5, S3 / 2.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let a = vertex_areas(&mesh);
        let oracle = voronoi_sector_oracle(mesh.vertices()[0], mesh.vertices()[1], mesh.vertices()[2]);
        for &ai in a.as_slice() {
            assert!((ai - S3 / 12.0).abs() < 1e-15);
            assert!((ai - oracle).abs() < 1e-15);
        }
    }

    #[test]
    fn acute_scalene_matches_circumcentre_oracle() {
        let p = [[0.0, 0.0, 0.0], [1.0, 0.1, 0.0], [0.4, 0.9, 0.0]];
        let mesh = Mesh::new(p.to_vec(), vec![[0, 1, 2]]).unwrap();
        let a = vertex_areas(&mesh);
        for k in 0..3 {
            let oracle = voronoi_sector_oracle(p[k], p[(k + 1) % 3], p[(k + 2) % 3]);
            assert!((a.0[k] - oracle).abs() < 1e-14, "{k}: {} vs {oracle}", a.0[k]);
        }
    }

    #[test]
    fn obtuse_triangle_uses_half_and_quarter() {
        let mesh = Mesh::new(
            vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [1.0, 0.2, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let a = vertex_areas(&mesh);
        let area = mesh.total_area();
        assert!((a.0[2] - area / 2.0).abs() < 1e-15);
        assert!((a.0[0] - area / 4.0).abs() < 1e-15);
        assert!((a.0[1] - area / 4.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_triangle_contributes_nothing() {
        let mesh = Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        assert_eq!(vertex_areas(&mesh).0, vec![0.0; 3]);
        let w = cotangent_weights(&mesh);
        assert!(w.iter().all(|(_, _, c)| c.abs() <= COT_CLAMP));
    }

    #[test]
    fn shared_equilateral_edge_weight() {
        let w = cotangent_weights(&equilateral_pair());
        assert!((w.get(0, 1) - 1.0 / S3).abs() < 1e-15);
        assert!((w.get(1, 0) - 1.0 / S3).abs() < 1e-15);
        // Boundary edge with a single 60 degree opposite angle.
        assert!((w.get(0, 2) - 0.5 / S3).abs() < 1e-15);
        assert_eq!(w.get(2, 3), 0.0);
        assert_eq!(w.get(1, 1), 0.0);
    }

    #[test]
    fn right_angles_cancel() {
        // Unit square split along the diagonal (0, 2): both opposite angles are 90 degrees.
        let mesh = Mesh::new(
            vec![[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2], [0, 2, 3]],
        )
        .unwrap();
        assert!(cotangent_weights(&mesh).get(0, 2).abs() < 1e-15);
    }
}
