//! Builds a k-means vocabulary over the wavelet signatures of a few shapes,
//! soft-assigns one shape's signatures and pools the codes into a histogram.
//!
//! cargo run --release --example codebook -- [k]

use sgwc::bof::{kmeans, pool_histogram, soft_assign, stack_columns};
use sgwc::laplacian::solve_eigs;
use sgwc::sgw::sgws_matrix;
use sgwc::{shapes, LaplacianPair};

fn main() -> sgwc::Result<()> {
    let k: usize = std::env::args().nth(1).map_or(16, |s| s.parse().expect("k must be an integer"));
    let meshes = [
        shapes::icosphere(2, 1.0),
        shapes::torus(1.0, 0.4, 20, 10),
        shapes::bumped_sphere(2, 5, 0.3, 0.4, 3),
    ];
    let signatures = meshes
        .iter()
        .map(|m| Ok(sgws_matrix(&solve_eigs(&LaplacianPair::assemble(m), 100)?, 2)?.values))
        .collect::<sgwc::Result<Vec<_>>>()?;
    let data = stack_columns(&signatures.iter().collect::<Vec<_>>())?;
    let book = kmeans(&data, k, 42)?;
    println!("vocabulary {}x{} from {} descriptors, alpha {:.4e}", book.dim(), book.k(), data.ncols(), book.alpha);
    let sizes: Vec<usize> = book.stats.iter().map(|s| s.count).collect();
    println!("cluster sizes {sizes:?}");

    for (name, s) in ["sphere", "torus", "bumpy"].iter().zip(&signatures) {
        let codes = soft_assign(s, &book)?;
        let h = pool_histogram(&codes)?;
        let total: f64 = h.iter().sum();
        println!("{name:>6}: histogram sums to {total:.6} over {} vertices", s.ncols());
        println!("        {:.1?}", h);
    }
    Ok(())
}
