//! Multiresolution spectral graph wavelet signatures of a bumped sphere, with
//! the wavelet coefficients of a delta impulse at one vertex.
//!
//! cargo run --release --example wavelet_signatures -- [resolution]

use sgwc::laplacian::solve_eigs;
use sgwc::sgw::{sgws_matrix_with, signature_dim, wavelet_coefficients, KernelBank};
use sgwc::{shapes, LaplacianPair};

fn main() -> sgwc::Result<()> {
    let resolution: usize = std::env::args().nth(1).map_or(2, |s| s.parse().expect("resolution must be an integer"));
    let mesh = shapes::bumped_sphere(3, 6, 0.3, 0.3, 7);
    let basis = solve_eigs(&LaplacianPair::assemble(&mesh), 201)?;
    let bank = KernelBank::new(basis.lambda_max(), resolution)?;
    for level in 1..=resolution {
        println!("level {level}: scales {:?}", bank.scales(level));
    }

    let sgws = sgws_matrix_with(&basis, &bank)?;
    println!(
        "signature matrix {}x{} (p = {})",
        sgws.values.nrows(),
        sgws.values.ncols(),
        signature_dim(resolution)
    );
    for (row, values) in sgws.values.row_iter().enumerate() {
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        println!("row {row:>2}: min {lo:.4e} max {hi:.4e} mean {:.4e}", values.mean());
    }

    let mut delta = vec![0.0; mesh.vertex_count()];
    delta[0] = 1.0;
    let t = *bank.scales(resolution).last().expect("nonempty level");
    let w = wavelet_coefficients(&basis, &delta, t)?;
    let spread = w.iter().filter(|x| x.abs() > 1e-3 * w[0].abs()).count();
    println!("wavelet at vertex 0, scale {t:.4}: centre {:.4e}, {spread} vertices above 0.1% of it", w[0]);
    Ok(())
}
