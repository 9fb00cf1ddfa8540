//! Frame bounds of the wavelet and scaling kernels on a torus spectrum, and
//! the sampled frame function written as CSV.
//!
//! cargo run --release --example frame_bounds -- [out.csv]

use sgwc::laplacian::solve_eigs;
use sgwc::sgw::{frame_bounds, frame_samples, write_frame_csv, KernelBank};
use sgwc::{shapes, LaplacianPair};

fn main() -> sgwc::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "frame_bounds.csv".into());
    let mesh = shapes::torus(1.0, 0.4, 32, 20);
    let basis = solve_eigs(&LaplacianPair::assemble(&mesh), 201)?;
    let lambda_max = basis.lambda_max();
    println!("lambda_max {lambda_max:.4}");
    for r in 1..=4 {
        let bank = KernelBank::new(lambda_max, r)?;
        let (lower, upper) = frame_bounds(&bank, r, lambda_max)?;
        println!("R = {r}: A = {lower:.5}, B = {upper:.5}, B/A = {:.3}", upper / lower);
    }
    let bank = KernelBank::new(lambda_max, 2)?;
    write_frame_csv(&frame_samples(&bank, 2, lambda_max), std::fs::File::create(&out)?)?;
    println!("wrote {out}");
    Ok(())
}
