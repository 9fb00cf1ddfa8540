//! Spectral graph wavelets on the eigenbasis of the mesh Laplacian: the
//! band-pass generating kernel, the low-pass scaling kernel, per-level scale
//! grids, wavelet/scaling coefficients, the multiresolution signature matrix
//! and frame-bound diagnostics.

use std::io::Write;

use nalgebra::DMatrix;

use crate::laplacian::{gft, EigenBasis};
use crate::{Error, Result};

/// `λ_min = λ_max / LAMBDA_RATIO`.
pub const LAMBDA_RATIO: f64 = 20.0;

/// Maximum of [`kernel_g`], attained at `x = 1`.
pub const G_MAX: f64 = 0.36787944117144233;

/// Mexican-hat style band-pass kernel `g(x) = x e^{-x}`.
pub fn kernel_g(x: f64) -> f64 {
    x * (-x).exp()
}

/// Low-pass scaling kernel `h(x) = γ exp(-(x / 0.6 λ_min)⁴)`.
pub fn kernel_h(x: f64, lambda_min: f64, gamma: f64) -> f64 {
    gamma * (-(x / (0.6 * lambda_min)).powi(4)).exp()
}

/// Signature length for resolution `R`: `(R+1)(R+2)/2 - 1`.
pub fn signature_dim(resolution: usize) -> usize {
    (resolution + 1) * (resolution + 2) / 2 - 1
}

/// Scale grids for every resolution level `1..=R`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelBank {
    pub resolution: usize,
    pub lambda_max: f64,
    pub lambda_min: f64,
    pub gamma: f64,
    /// `levels[L - 1]` holds the `L` strictly decreasing scales of level `L`.
    levels: Vec<Vec<f64>>,
}

impl KernelBank {
    pub fn new(lambda_max: f64, resolution: usize) -> Result<Self> {
        if !(lambda_max > 0.0 && lambda_max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda_max must be positive, got {lambda_max}"
            )));
        }
        if resolution == 0 {
            return Err(Error::InvalidArgument("resolution must be at least 1".into()));
        }
        let lambda_min = lambda_max / LAMBDA_RATIO;
        let coarse = 2.0 / lambda_min;
        let fine = 2.0 / lambda_max;
        let levels = (1..=resolution)
            .map(|level| {
                if level == 1 {
                    return vec![fine];
                }
                let (lo, hi) = (coarse.ln(), fine.ln());
                (0..level)
                    .map(|k| {
                        let s = k as f64 / (level - 1) as f64;
                        (lo + s * (hi - lo)).exp()
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            resolution,
            lambda_max,
            lambda_min,
            gamma: G_MAX,
            levels,
        })
    }

    /// Scales of level `level` (1-based).
    pub fn scales(&self, level: usize) -> &[f64] {
        &self.levels[level - 1]
    }

    pub fn h(&self, x: f64) -> f64 {
        kernel_h(x, self.lambda_min, self.gamma)
    }

    /// `G(λ) = h(λ)² + Σ_k g(t_k λ)²` over the scales of `level`.
    pub fn frame_function(&self, level: usize, lambda: f64) -> f64 {
        self.h(lambda).powi(2)
            + self
                .scales(level)
                .iter()
                .map(|&t| kernel_g(t * lambda).powi(2))
                .sum::<f64>()
    }
}

fn check_len(basis: &EigenBasis, f: &[f64]) -> Result<()> {
    if f.len() != basis.vertex_count() {
        return Err(Error::DimensionMismatch {
            expected: basis.vertex_count(),
            actual: f.len(),
        });
    }
    Ok(())
}

/// Applies the spectral filter `filter(λ_ℓ)` to `f` and weights vertex `j` by `a_j`.
fn filtered(basis: &EigenBasis, f: &[f64], filter: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    check_len(basis, f)?;
    let fhat = gft(basis, f)?;
    let mut out = vec![0.0; basis.vertex_count()];
    for (l, (&lambda, &c)) in basis.eigenvalues().iter().zip(&fhat).enumerate() {
        let w = filter(lambda) * c;
        if w == 0.0 {
            continue;
        }
        for (o, &p) in out.iter_mut().zip(basis.eigenfunction(l)) {
            *o += w * p;
        }
    }
    for (o, &a) in out.iter_mut().zip(basis.vertex_areas()) {
        *o *= a;
    }
    Ok(out)
}

/// `W_f(t, j) = Σ_ℓ a_j g(tλ_ℓ) f̂(ℓ) φ_ℓ(j)` for every vertex `j`.
pub fn wavelet_coefficients(basis: &EigenBasis, f: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {t}")));
    }
    filtered(basis, f, |lambda| kernel_g(t * lambda))
}

/// `S_f(j) = Σ_ℓ a_j h(λ_ℓ) f̂(ℓ) φ_ℓ(j)` for every vertex `j`.
pub fn scaling_coefficients(basis: &EigenBasis, f: &[f64], bank: &KernelBank) -> Result<Vec<f64>> {
    filtered(basis, f, |lambda| bank.h(lambda))
}

/// Multiresolution wavelet signatures, one column per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct SgwsMatrix {
    pub values: DMatrix<f64>,
    pub resolution: usize,
}

/// Builds the `p × m` signature matrix. Column `j` stacks, for each level
/// `L = 1..=R`, the delta-impulse wavelet coefficients at the level's scales
/// followed by the scaling coefficient.
pub fn sgws_matrix(basis: &EigenBasis, resolution: usize) -> Result<SgwsMatrix> {
    let bank = KernelBank::new(basis.lambda_max(), resolution)?;
    sgws_matrix_with(basis, &bank)
}

pub fn sgws_matrix_with(basis: &EigenBasis, bank: &KernelBank) -> Result<SgwsMatrix> {
    let lambdas = basis.eigenvalues();
    let q = lambdas.len();
    let p = signature_dim(bank.resolution);

    // Filter responses, one column per signature row.
    let mut filters = DMatrix::zeros(q, p);
    let mut row = 0;
    for level in 1..=bank.resolution {
        for &t in bank.scales(level) {
            for (l, &lambda) in lambdas.iter().enumerate() {
                filters[(l, row)] = kernel_g(t * lambda);
            }
            row += 1;
        }
        for (l, &lambda) in lambdas.iter().enumerate() {
            filters[(l, row)] = bank.h(lambda);
        }
        row += 1;
    }

    let squared = basis.eigenfunctions().map(|x| x * x);
    // (m × q)(q × p), then transpose into p × m with the a_j² weights.
    let per_vertex = squared * filters;
    let mut values = per_vertex.transpose();
    for (mut col, &a) in values.column_iter_mut().zip(basis.vertex_areas()) {
        col *= a * a;
    }
    Ok(SgwsMatrix {
        values,
        resolution: bank.resolution,
    })
}

/// One grid point of the frame diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSample {
    pub lambda: f64,
    pub g_total: f64,
    pub h2: f64,
    pub g2: Vec<f64>,
}

pub const FRAME_GRID_POINTS: usize = 1000;

pub fn frame_samples(bank: &KernelBank, level: usize, lambda_max: f64) -> Vec<FrameSample> {
    (0..FRAME_GRID_POINTS)
        .map(|i| {
            let lambda = lambda_max * i as f64 / (FRAME_GRID_POINTS - 1) as f64;
            let h2 = bank.h(lambda).powi(2);
            let g2: Vec<f64> = bank
                .scales(level)
                .iter()
                .map(|&t| kernel_g(t * lambda).powi(2))
                .collect();
            FrameSample {
                lambda,
                g_total: h2 + g2.iter().sum::<f64>(),
                h2,
                g2,
            }
        })
        .collect()
}

/// `(min, max)` of `G` on a uniform grid over `[0, λ_max]`.
pub fn frame_bounds(bank: &KernelBank, level: usize, lambda_max: f64) -> Result<(f64, f64)> {
    if level == 0 || level > bank.resolution {
        return Err(Error::InvalidArgument(format!(
            "level {level} outside 1..={}",
            bank.resolution
        )));
    }
    Ok(frame_samples(bank, level, lambda_max)
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.g_total), hi.max(s.g_total))
        }))
}

/// CSV with columns `lambda,G,h2,g2_1..g2_L`.
pub fn write_frame_csv(samples: &[FrameSample], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let scales = samples.first().map_or(0, |s| s.g2.len());
    let mut header = vec!["lambda".to_string(), "G".to_string(), "h2".to_string()];
    header.extend((1..=scales).map(|k| format!("g2_{k}")));
    w.write_record(&header)?;
    for s in samples {
        let mut rec = vec![s.lambda.to_string(), s.g_total.to_string(), s.h2.to_string()];
        rec.extend(s.g2.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
