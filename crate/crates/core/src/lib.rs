//! Multiresolution spectral graph wavelet descriptors for triangle meshes,
//! bag-of-features encoding with a geodesic exponential kernel, and one-vs-all
//! linear SVM shape classification.
//!
//! The crate is organised along the processing chain:
//!
//! - [`mesh`]: loading, validation and the per-vertex geometry (mixed Voronoi
//!   areas, cotangent weights) behind the discrete Laplace-Beltrami operator.
//! - [`laplacian`]: stiffness/mass assembly, the shift-invert block Lanczos
//!   eigensolver and the graph Fourier transform.
//! - [`sgw`]: wavelet and scaling kernels, scale grids, wavelet coefficients
//!   and the multiresolution signature matrix.
//! - [`baseline`]: HKS, WKS, Shape-DNA, compact Shape-DNA and GPS embedding.
//! - [`bof`]: k-means codebooks, soft-assignment coding and pooling.
//! - [`global`]: geodesic distances, the geodesic exponential kernel and the
//!   `F = U K Uᵀ` global descriptor.
//! - [`classify`]: stratified splits, the one-vs-all SVM and evaluation.
//! - [`pipeline`]: dataset manifests, caching and the end-to-end experiment.
//! - [`shapes`]: procedural meshes used by tests, examples and benchmarks.

pub mod baseline;
pub mod bof;
pub mod classify;
mod error;
pub mod global;
pub mod io;
pub mod laplacian;
pub mod mesh;
pub mod pipeline;
pub mod sgw;
pub mod shapes;

pub use error::{Error, Result};
pub use laplacian::{EigenBasis, LaplacianPair};
pub use mesh::Mesh;
