//! Baseline spectral descriptors: heat and wave kernel point signatures and
//! the eigenvalue-based global vectors Shape-DNA, cShape-DNA and GPS-embedding.

use nalgebra::DMatrix;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::laplacian::EigenBasis;
use crate::{Error, Result};

/// Eigenvalues at or below this are treated as the zero mode.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

/// Number of area-normalised eigenvalues fed to the cShape-DNA transform.
pub const CSHAPE_WINDOW: usize = 64;

pub const SHAPE_DNA_LEN: usize = 10;
pub const CSHAPE_DNA_LEN: usize = 33;
pub const GPS_LEN: usize = 10;

/// Width of the WKS log-energy Gaussian in units of the energy grid spacing.
pub const WKS_SIGMA_FACTOR: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointSignatureKind {
    Hks,
    Wks,
}

/// `p × m` point signatures, one column per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSignatureBank {
    pub values: DMatrix<f64>,
    pub scales: Vec<f64>,
    pub kind: PointSignatureKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalKind {
    ShapeDna,
    CShapeDna,
    GpsEmbedding,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSpectralVector {
    pub values: Vec<f64>,
    pub kind: GlobalKind,
}

/// Evaluates `Σ_ℓ w(k, ℓ) φ_ℓ(j)²` for every scale `k` and vertex `j`.
fn weighted_squares(basis: &EigenBasis, weights: &DMatrix<f64>) -> DMatrix<f64> {
    let squared = basis.eigenfunctions().map(|x| x * x);
    (squared * weights).transpose()
}

/// Heat kernel signature `Σ_ℓ e^{-λ_ℓ t} φ_ℓ(j)²` at each scale.
pub fn hks(basis: &EigenBasis, scales: &[f64]) -> Result<PointSignatureBank> {
    if scales.is_empty() {
        return Err(Error::InvalidArgument("empty scale list".into()));
    }
    if let Some(t) = scales.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::InvalidArgument(format!("scales must be positive, got {t}")));
    }
    let lambdas = basis.eigenvalues();
    let weights = DMatrix::from_fn(lambdas.len(), scales.len(), |l, k| (-lambdas[l] * scales[k]).exp());
    Ok(PointSignatureBank {
        values: weighted_squares(basis, &weights),
        scales: scales.to_vec(),
        kind: PointSignatureKind::Hks,
    })
}

/// `p` heat times log-spaced from `4 ln 10 / λ_max` to `4 ln 10 / λ_2`.
pub fn hks_default_scales(basis: &EigenBasis, p: usize) -> Result<Vec<f64>> {
    let (first, last) = nonzero_range(basis)?;
    let c = 4.0 * std::f64::consts::LN_10;
    Ok(log_grid((c / last).ln(), (c / first).ln(), p))
}

/// Wave kernel signature with normalised log-Gaussian energy windows.
pub fn wks(basis: &EigenBasis, energies: &[f64], sigma: f64) -> Result<PointSignatureBank> {
    if energies.is_empty() {
        return Err(Error::InvalidArgument("empty energy list".into()));
    }
    if let Some(e) = energies.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument(format!("energies must be positive, got {e}")));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
    }
    let lambdas = basis.eigenvalues();
    if lambdas.iter().all(|&l| l <= ZERO_EIGENVALUE) {
        return Err(Error::InvalidArgument("all eigenvalues are zero".into()));
    }
    let mut weights = DMatrix::zeros(lambdas.len(), energies.len());
    for (k, &e) in energies.iter().enumerate() {
        let log_e = e.ln();
        let raw: Vec<f64> = lambdas
            .iter()
            .map(|&l| {
                if l <= ZERO_EIGENVALUE {
                    0.0
                } else {
                    (-((log_e - l.ln()) / sigma).powi(2)).exp()
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            for (l, w) in raw.into_iter().enumerate() {
                weights[(l, k)] = w / total;
            }
        }
    }
    Ok(PointSignatureBank {
        values: weighted_squares(basis, &weights),
        scales: energies.to_vec(),
        kind: PointSignatureKind::Wks,
    })
}

/// `p` energies log-spaced over `[λ_2, λ_q]` and the matching window width.
pub fn wks_default_energies(basis: &EigenBasis, p: usize) -> Result<(Vec<f64>, f64)> {
    let (first, last) = nonzero_range(basis)?;
    let (lo, hi) = (first.ln(), last.ln());
    let grid = log_grid(lo, hi, p);
    let spacing = if p > 1 { (hi - lo) / (p - 1) as f64 } else { 0.0 };
    let sigma = if spacing > 0.0 { WKS_SIGMA_FACTOR * spacing } else { 1.0 };
    Ok((grid, sigma))
}

fn nonzero_range(basis: &EigenBasis) -> Result<(f64, f64)> {
    let mut nonzero = basis.eigenvalues().iter().copied().filter(|&l| l > ZERO_EIGENVALUE);
    let first = nonzero
        .next()
        .ok_or_else(|| Error::InvalidArgument("all eigenvalues are zero".into()))?;
    let last = nonzero.next_back().unwrap_or(first);
    Ok((first, last))
}

fn log_grid(lo: f64, hi: f64, p: usize) -> Vec<f64> {
    if p == 1 {
        return vec![lo.exp()];
    }
    (0..p)
        .map(|k| (lo + (hi - lo) * k as f64 / (p - 1) as f64).exp())
        .collect()
}

/// The `d` eigenvalues after the zero mode.
fn skip_zero_mode(basis: &EigenBasis, d: usize) -> Result<&[f64]> {
    let lambdas = basis.eigenvalues();
    if lambdas.len() < d + 1 {
        return Err(Error::InsufficientData(format!(
            "need {} eigenpairs, have {}",
            d + 1,
            lambdas.len()
        )));
    }
    Ok(&lambdas[1..=d])
}

/// `(λ_2, …, λ_{d+1})`.
pub fn shape_dna(basis: &EigenBasis, d: usize) -> Result<GlobalSpectralVector> {
    Ok(GlobalSpectralVector {
        values: skip_zero_mode(basis, d)?.to_vec(),
        kind: GlobalKind::ShapeDna,
    })
}

/// DFT magnitudes of the first [`CSHAPE_WINDOW`] area-normalised eigenvalues
/// past the zero mode, truncated to `d` coefficients.
pub fn cshape_dna(basis: &EigenBasis, total_area: f64, d: usize) -> Result<GlobalSpectralVector> {
    if d > CSHAPE_WINDOW {
        return Err(Error::InvalidArgument(format!(
            "at most {CSHAPE_WINDOW} coefficients available, asked for {d}"
        )));
    }
    let window = skip_zero_mode(basis, CSHAPE_WINDOW)?;
    let normalized: Vec<f64> = window.iter().map(|l| l * total_area).collect();
    Ok(GlobalSpectralVector {
        values: dft_magnitudes(&normalized, d),
        kind: GlobalKind::CShapeDna,
    })
}

fn dft_magnitudes(sequence: &[f64], d: usize) -> Vec<f64> {
    let mut buffer: Vec<Complex<f64>> = sequence.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(buffer.len()).process(&mut buffer);
    buffer.iter().take(d).map(|c| c.norm()).collect()
}

/// `(1/√(area·λ_2), …, 1/√(area·λ_{d+1}))`.
pub fn gps_embedding(basis: &EigenBasis, total_area: f64, d: usize) -> Result<GlobalSpectralVector> {
    let lambdas = skip_zero_mode(basis, d)?;
    if let Some(l) = lambdas.iter().find(|&&l| l <= ZERO_EIGENVALUE) {
        return Err(Error::InvalidArgument(format!(
            "zero eigenvalue {l} past the first; is the mesh disconnected?"
        )));
    }
    Ok(GlobalSpectralVector {
        values: lambdas.iter().map(|l| 1.0 / (total_area * l).sqrt()).collect(),
        kind: GlobalKind::GpsEmbedding,
    })
}
