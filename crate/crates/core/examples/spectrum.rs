//! Laplace-Beltrami spectrum of a mesh file, or of a unit icosphere when no
//! file is given, with solver statistics.
//!
//! cargo run --release --example spectrum -- [mesh.off|subdivisions] [q]

use std::time::Instant;

use sgwc::laplacian::{solve_eigs_with, EigenOptions};
use sgwc::{shapes, LaplacianPair, Mesh};

fn main() -> sgwc::Result<()> {
    let mut args = std::env::args().skip(1);
    let source = args.next().unwrap_or_else(|| "3".into());
    let mesh = match source.parse::<u32>() {
        Ok(subdivisions) => shapes::icosphere(subdivisions, 1.0),
        Err(_) => Mesh::from_path(&source)?,
    };
    let q: usize = args.next().map_or(20, |s| s.parse().expect("q must be an integer"));
    let q = q.min(mesh.vertex_count());

    let start = Instant::now();
    let pair = LaplacianPair::assemble(&mesh);
    let (basis, stats) = solve_eigs_with(&pair, q, &EigenOptions::default())?;
    println!(
        "{} vertices, {q} eigenpairs in {:.3} s (subspace {}, {} projections, max relative residual {:.2e})",
        mesh.vertex_count(),
        start.elapsed().as_secs_f64(),
        stats.subspace_dimension,
        stats.projections,
        stats.max_relative_residual
    );
    println!("total area {:.6}", basis.total_area());
    for (l, lambda) in basis.eigenvalues().iter().enumerate().take(25) {
        println!("{:>4} {lambda:.10}", l + 1);
    }
    Ok(())
}
