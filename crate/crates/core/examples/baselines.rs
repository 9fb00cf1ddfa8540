//! Baseline spectral descriptors on a sphere and a torus: heat and wave
//! kernel signatures at one vertex, Shape-DNA, compact Shape-DNA and the GPS
//! embedding.
//!
//! cargo run --release --example baselines

use sgwc::baseline::{
    cshape_dna, gps_embedding, hks, hks_default_scales, shape_dna, wks, wks_default_energies,
    CSHAPE_DNA_LEN, GPS_LEN, SHAPE_DNA_LEN,
};
use sgwc::laplacian::solve_eigs;
use sgwc::{shapes, LaplacianPair};

fn sci(values: &[f64]) -> String {
    values.iter().map(|x| format!("{x:.4e}")).collect::<Vec<_>>().join(" ")
}

fn main() -> sgwc::Result<()> {
    for (name, mesh) in [("sphere", shapes::icosphere(3, 1.0)), ("torus", shapes::torus(1.0, 0.4, 32, 20))] {
        let basis = solve_eigs(&LaplacianPair::assemble(&mesh), 100)?;
        let area = basis.total_area();
        println!("{name}: {} vertices, area {area:.4}", mesh.vertex_count());

        let h = hks(&basis, &hks_default_scales(&basis, 5)?)?;
        let (energies, sigma) = wks_default_energies(&basis, 5)?;
        let w = wks(&basis, &energies, sigma)?;
        println!("  HKS at vertex 0: {}", sci(h.values.column(0).as_slice()));
        println!("  WKS at vertex 0: {}", sci(w.values.column(0).as_slice()));
        println!("  Shape-DNA:  {:.3?}", shape_dna(&basis, SHAPE_DNA_LEN)?.values);
        let c = cshape_dna(&basis, area, CSHAPE_DNA_LEN)?.values;
        println!("  cShape-DNA: {:.1?} ...", &c[..6]);
        println!("  GPS:        {:.4?}", gps_embedding(&basis, area, GPS_LEN)?.values);
    }
    Ok(())
}
