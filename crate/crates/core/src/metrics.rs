//! Scalar diagnostics of density matrices and decay fits.

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::hilbert::{eigvalsh, hermiticity_defect, max_abs, trace, CMat};
use crate::kernels;
use ndarray::Array1;
use num_complex::Complex64 as C64;

/// Eigenvalues in (−NEGATIVITY_CUTOFF, 0) are treated as roundoff.
pub const NEGATIVITY_CUTOFF: f64 = 1e-12;

fn check_same(a: &CMat, b: &CMat) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    Ok(())
}

/// ‖A‖₁; eigenvalues for Hermitian input, singular values otherwise.
pub fn trace_norm(a: &CMat) -> Result<f64> {
    if hermiticity_defect(a.view()) <= 1e-13 * max_abs(a).max(1e-300) {
        Ok(eigvalsh(a)?.iter().map(|x| x.abs()).sum())
    } else {
        kernels::trace_norm(a)
    }
}

/// ½‖ρ1 − ρ2‖₁.
pub fn trace_distance(a: &CMat, b: &CMat) -> Result<f64> {
    check_same(a, b)?;
    Ok(0.5 * trace_norm(&(a - b))?)
}

/// Tr ρ².
pub fn purity(rho: &CMat) -> f64 {
    rho.iter().map(|z| z.norm_sqr()).sum()
}

/// Sum of the negative eigenvalues of a Hermitian matrix.
pub fn negativity_sum(rho: &CMat) -> Result<f64> {
    Ok(eigvalsh(rho)?.iter().filter(|&&x| x <= -NEGATIVITY_CUTOFF).sum())
}

pub fn min_eigenvalue(rho: &CMat) -> Result<f64> {
    Ok(eigvalsh(rho)?.iter().cloned().fold(f64::INFINITY, f64::min))
}

pub fn trace_deviation(rho: &CMat) -> f64 {
    (trace(rho) - 1.0).norm()
}

/// 1/τ_r = ‖dϱ/dt‖₁ in the interaction picture of the diagonal H0. The
/// frame rotation is unitary, so this equals ‖𝓛(ρ) + i[H0,ρ]‖₁.
pub fn relaxation_rate(g: &dyn Generator, energies: &Array1<f64>, t: f64, rho: &CMat) -> Result<f64> {
    let mut d = g.apply(t, rho)?;
    let n = energies.len();
    for i in 0..n {
        for j in 0..n {
            d[[i, j]] += C64::new(0.0, energies[i] - energies[j]) * rho[[i, j]];
        }
    }
    trace_norm(&d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub rate: f64,
    pub amplitude: f64,
    /// rms of the residuals of ln y.
    pub residual: f64,
}

/// Least-squares line through (t, ln y); rate = −slope.
pub fn fit_exponential(t: &[f64], y: &[f64]) -> Result<FitResult> {
    if t.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: t.len(), got: y.len() });
    }
    if t.len() < 2 {
        return Err(Error::InvalidArgument("at least two samples are needed for a fit".into()));
    }
    if let Some(bad) = y.iter().find(|v| !(**v > 0.0)) {
        return Err(Error::NonPositiveData(*bad));
    }
    let n = t.len() as f64;
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let tm = t.iter().sum::<f64>() / n;
    let lm = ly.iter().sum::<f64>() / n;
    let sxx: f64 = t.iter().map(|x| (x - tm).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("fit abscissae are all equal".into()));
    }
    let sxy: f64 = t.iter().zip(&ly).map(|(x, l)| (x - tm) * (l - lm)).sum();
    let slope = sxy / sxx;
    let intercept = lm - slope * tm;
    let ss: f64 = t.iter().zip(&ly).map(|(x, l)| (l - intercept - slope * x).powi(2)).sum();
    Ok(FitResult { rate: -slope, amplitude: intercept.exp(), residual: (ss / n).sqrt() })
}

/// Fit over the samples between the first crossing of 90% and the first
/// crossing of 10% of the initial value.
pub fn fit_decay_window(t: &[f64], y: &[f64]) -> Result<FitResult> {
    if t.len() != y.len() || t.is_empty() {
        return Err(Error::DimensionMismatch { expected: t.len(), got: y.len() });
    }
    let y0 = y[0];
    if !(y0 > 0.0) {
        return Err(Error::NonPositiveData(y0));
    }
    let start = y.iter().position(|v| *v <= 0.9 * y0).unwrap_or(0);
    let stop = y.iter().position(|v| *v <= 0.1 * y0).map(|k| k + 1).unwrap_or(y.len());
    let (start, stop) = if stop - start.min(stop) < 2 { (0, y.len()) } else { (start, stop) };
    fit_exponential(&t[start..stop], &y[start..stop])
}
