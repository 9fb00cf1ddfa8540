//! The `F = U K Uᵀ` global descriptor of a torus and of a rotated, translated
//! copy, showing that the descriptor is unchanged by rigid motion.
//!
//! The torus is jittered: a perfectly symmetric torus has repeated
//! eigenvalues, and a truncated eigenbasis that cuts through such a cluster
//! picks an arbitrary, orientation-dependent subspace of it.
//!
//! cargo run --release --example global_descriptor -- [epsilon]

use sgwc::bof::{kmeans, soft_assign};
use sgwc::global::{geodesic_kernel, geodesic_matrix, sgwc_bof};
use sgwc::laplacian::solve_eigs;
use sgwc::sgw::sgws_matrix;
use sgwc::{shapes, LaplacianPair, Mesh};

fn signatures(mesh: &Mesh) -> sgwc::Result<nalgebra::DMatrix<f64>> {
    Ok(sgws_matrix(&solve_eigs(&LaplacianPair::assemble(mesh), 120)?, 2)?.values)
}

fn main() -> sgwc::Result<()> {
    let epsilon: f64 = std::env::args().nth(1).map_or(0.1, |s| s.parse().expect("epsilon must be a number"));
    let torus = shapes::jitter(&shapes::torus(1.0, 0.4, 24, 12), 0.005, 3);
    let moved = shapes::random_rigid_transform(&torus, 5);
    let book = kmeans(&signatures(&torus)?, 8, 1)?;

    let mut descriptors = Vec::new();
    for (name, mesh) in [("torus", &torus), ("moved", &moved)] {
        let codes = soft_assign(&signatures(mesh)?, &book)?;
        let d = geodesic_matrix(mesh)?;
        let g = sgwc_bof(&codes, &geodesic_kernel(&d, epsilon)?, epsilon)?;
        println!("{name}: F is {}x{}, first row {:.4?}", g.f.nrows(), g.f.ncols(), g.f.row(0).iter().collect::<Vec<_>>());
        descriptors.push(g.x);
    }
    let diff = descriptors[0]
        .iter()
        .zip(&descriptors[1])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("largest entry difference after rigid motion: {diff:.2e}");
    Ok(())
}
