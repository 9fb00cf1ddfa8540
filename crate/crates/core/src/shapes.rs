//! Procedural meshes: icospheres, tori, bumped spheres, plus jitter, rigid
//! motions and 1-to-4 subdivision.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, UnitSphere};

use crate::mesh::{cross, dot, norm, write_off, Mesh, Point3};
use crate::{Error, Result};

fn normalize(p: Point3) -> Point3 {
    let n = norm(p);
    [p[0] / n, p[1] / n, p[2] / n]
}

fn midpoint_subdivide(
    vertices: &mut Vec<Point3>,
    triangles: &[[usize; 3]],
    project: impl Fn(Point3) -> Point3,
) -> Vec<[usize; 3]> {
    let mut cache: HashMap<(usize, usize), usize> = HashMap::new();
    let mut mid = |a: usize, b: usize, vertices: &mut Vec<Point3>| -> usize {
        let key = (a.min(b), a.max(b));
        *cache.entry(key).or_insert_with(|| {
            let (p, q) = (vertices[a], vertices[b]);
            vertices.push(project([(p[0] + q[0]) / 2.0, (p[1] + q[1]) / 2.0, (p[2] + q[2]) / 2.0]));
            vertices.len() - 1
        })
    };
    let mut out = Vec::with_capacity(triangles.len() * 4);
    for &[a, b, c] in triangles {
        let ab = mid(a, b, vertices);
        let bc = mid(b, c, vertices);
        let ca = mid(c, a, vertices);
        out.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
    }
    out
}

/// Geodesic icosphere with `10·4ⁿ + 2` vertices.
pub fn icosphere(subdivisions: u32, radius: f64) -> Mesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Point3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let mut triangles = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        triangles = midpoint_subdivide(&mut vertices, &triangles, normalize);
    }
    let vertices = vertices
        .into_iter()
        .map(|p| [p[0] * radius, p[1] * radius, p[2] * radius])
        .collect();
    Mesh::new(vertices, triangles).expect("icosphere is a valid mesh")
}

/// Torus around the z axis with `major × minor` vertices.
pub fn torus(major_radius: f64, minor_radius: f64, major_segments: usize, minor_segments: usize) -> Mesh {
    assert!(major_segments >= 3 && minor_segments >= 3);
    let mut vertices = Vec::with_capacity(major_segments * minor_segments);
    for i in 0..major_segments {
        let u = 2.0 * PI * i as f64 / major_segments as f64;
        for j in 0..minor_segments {
            let v = 2.0 * PI * j as f64 / minor_segments as f64;
            let r = major_radius + minor_radius * v.cos();
            vertices.push([r * u.cos(), r * u.sin(), minor_radius * v.sin()]);
        }
    }
    let idx = |i: usize, j: usize| (i % major_segments) * minor_segments + (j % minor_segments);
    let mut triangles = Vec::with_capacity(2 * vertices.len());
    for i in 0..major_segments {
        for j in 0..minor_segments {
            let (a, b, c, d) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    Mesh::new(vertices, triangles).expect("torus is a valid mesh")
}

/// Unit icosphere with `bumps` Gaussian radial bumps at random directions.
pub fn bumped_sphere(subdivisions: u32, bumps: usize, amplitude: f64, width: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<Point3> = (0..bumps).map(|_| UnitSphere.sample(&mut rng)).collect();
    icosphere(subdivisions, 1.0).map_vertices(|p| {
        let dir = normalize(p);
        let r = 1.0
            + centers
                .iter()
                .map(|c| {
                    let angle = dot(dir, *c).clamp(-1.0, 1.0).acos();
                    amplitude * (-(angle / width).powi(2)).exp()
                })
                .sum::<f64>();
        [dir[0] * r, dir[1] * r, dir[2] * r]
    })
}

/// Adds isotropic Gaussian noise of standard deviation `sigma` to every vertex.
pub fn jitter(mesh: &Mesh, sigma: f64, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma must be finite and nonnegative");
    let offsets: Vec<Point3> = (0..mesh.vertex_count())
        .map(|_| [noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng)])
        .collect();
    let mut k = 0;
    let verts: Vec<Point3> = mesh
        .vertices()
        .iter()
        .map(|p| {
            let o = offsets[k];
            k += 1;
            [p[0] + o[0], p[1] + o[1], p[2] + o[2]]
        })
        .collect();
    Mesh::new(verts, mesh.triangles().to_vec()).expect("jitter keeps connectivity")
}

/// Rotation about `axis` by `angle` radians, followed by a translation.
pub fn rigid_transform(mesh: &Mesh, axis: Point3, angle: f64, translation: Point3) -> Mesh {
    let k = normalize(axis);
    let (s, c) = angle.sin_cos();
    mesh.map_vertices(|p| {
        // Rodrigues' rotation formula.
        let kxp = cross(k, p);
        let kdp = dot(k, p);
        let mut out = [0.0; 3];
        for i in 0..3 {
            out[i] = p[i] * c + kxp[i] * s + k[i] * kdp * (1.0 - c) + translation[i];
        }
        out
    })
}

/// Random rigid motion drawn from `seed`.
pub fn random_rigid_transform(mesh: &Mesh, seed: u64) -> Mesh {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let axis: Point3 = UnitSphere.sample(&mut rng);
    let angle = rng.random_range(0.0..2.0 * PI);
    let t = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
    rigid_transform(mesh, axis, angle, t)
}

/// Splits every triangle into four at the edge midpoints (no smoothing).
pub fn subdivide(mesh: &Mesh) -> Mesh {
    let mut vertices = mesh.vertices().to_vec();
    let triangles = midpoint_subdivide(&mut vertices, mesh.triangles(), |p| p);
    Mesh::new(vertices, triangles).expect("subdivision keeps validity")
}

/// Uniform scaling about the origin.
pub fn scaled(mesh: &Mesh, s: f64) -> Mesh {
    mesh.map_vertices(|p| [p[0] * s, p[1] * s, p[2] * s])
}

/// Three procedural classes (spheres, tori, randomly bumped spheres) of
/// roughly 640 vertices each, with random proportions, vertex jitter and a
/// random rigid motion per instance.
pub fn benchmark_meshes(per_class: usize, seed: u64) -> Vec<(&'static str, Mesh)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(3 * per_class);
    for _ in 0..per_class {
        let sphere = icosphere(3, 1.0);
        let torus = torus(rng.random_range(0.9..1.1), rng.random_range(0.3..0.45), 32, 20);
        let bumps = rng.random_range(4..9);
        let bumped = bumped_sphere(3, bumps, rng.random_range(0.25..0.4), 0.3, rng.random());
        for (class, mesh) in [("sphere", sphere), ("torus", torus), ("bumpy", bumped)] {
            let noisy = jitter(&mesh, 0.005, rng.random());
            out.push((class, random_rigid_transform(&noisy, rng.random())));
        }
    }
    out
}

/// Writes [`benchmark_meshes`] as OFF files plus a `manifest.csv` into `dir`
/// and returns the manifest path.
pub fn write_benchmark(dir: &std::path::Path, per_class: usize, seed: u64) -> Result<std::path::PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| Error::from(e).at(dir))?;
    let mut manifest = String::from("path,class\n");
    for (i, (class, mesh)) in benchmark_meshes(per_class, seed).into_iter().enumerate() {
        let name = format!("{class}_{i:03}.off");
        let path = dir.join(&name);
        let file = std::fs::File::create(&path).map_err(|e| Error::from(e).at(&path))?;
        write_off(&mesh, std::io::BufWriter::new(file)).map_err(|e| Error::from(e).at(&path))?;
        manifest.push_str(&format!("{name},{class}\n"));
    }
    let path = dir.join("manifest.csv");
    std::fs::write(&path, manifest).map_err(|e| Error::from(e).at(&path))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_counts() {
        for (n, v) in [(0, 12), (1, 42), (2, 162), (3, 642), (4, 2562)] {
            let mesh = icosphere(n, 1.0);
            assert_eq!(mesh.vertex_count(), v);
            let (e, f) = (mesh.edges().len() as i64, mesh.triangles().len() as i64);
            assert_eq!(v as i64 - e + f, 2);
        }
    }

    #[test]
    fn torus_is_closed_genus_one() {
        let mesh = torus(1.0, 0.3, 12, 8);
        let (v, e, f) = (96i64, mesh.edges().len() as i64, mesh.triangles().len() as i64);
        assert_eq!(v - e + f, 0);
        assert_eq!(mesh.unreachable_vertex(), None);
    }

    #[test]
    fn subdivision_keeps_area_for_planar_input() {
        let mesh = Mesh::new(
            vec![[0.0, 0.0, 0.0], [2.0, 0.0, 0.0], [0.3, 1.7, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let fine = subdivide(&subdivide(&mesh));
        assert_eq!(fine.triangles().len(), 16);
        assert!((fine.total_area() - mesh.total_area()).abs() < 1e-14);
    }

    #[test]
    fn rigid_motion_preserves_lengths() {
        let mesh = bumped_sphere(1, 3, 0.3, 0.5, 1);
        let moved = random_rigid_transform(&mesh, 9);
        for &[i, j] in mesh.edges() {
            assert!((mesh.edge_length(i, j) - moved.edge_length(i, j)).abs() < 1e-12);
        }
    }
}
