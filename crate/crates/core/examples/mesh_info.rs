//! Loads an OFF or OBJ mesh (or writes a demo torus when given none) and
//! prints its size, area, Euler characteristic and connectivity.
//!
//! cargo run --release --example mesh_info -- [mesh.off|mesh.obj]

use sgwc::mesh::{vertex_areas, write_off};
use sgwc::{shapes, Mesh};

fn main() -> sgwc::Result<()> {
    let mesh = match std::env::args().nth(1) {
        Some(path) => Mesh::from_path(&path)?,
        None => {
            let torus = shapes::torus(1.0, 0.4, 24, 12);
            let path = std::env::temp_dir().join("sgwc_demo_torus.off");
            write_off(&torus, std::io::BufWriter::new(std::fs::File::create(&path)?))?;
            println!("wrote demo mesh to {}", path.display());
            Mesh::from_path(&path)?
        }
    };
    let (v, e, f) = (mesh.vertex_count(), mesh.edges().len(), mesh.triangles().len());
    println!("vertices {v}, edges {e}, triangles {f}");
    println!("euler characteristic {}", v as i64 - e as i64 + f as i64);
    println!("surface area {:.6}", mesh.total_area());
    let areas = vertex_areas(&mesh);
    let (lo, hi) = areas
        .as_slice()
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &a| (lo.min(a), hi.max(a)));
    println!("vertex areas in [{lo:.3e}, {hi:.3e}], sum {:.6}", areas.total());
    match mesh.unreachable_vertex() {
        None => println!("connected"),
        Some(i) => println!("disconnected: vertex {i} unreachable from vertex 0"),
    }
    println!("content hash {}", mesh.content_hash());
    Ok(())
}
