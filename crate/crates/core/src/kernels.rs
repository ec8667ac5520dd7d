//! Scalar kernels built from γ and S, their coarse-grained forms and the
//! norm-ratio scan of the coarse-grained detuning function.

use crate::bath::{BathModel, Horizon};
use crate::error::Result;
use crate::quad::Quad;
use crate::special::sinc;
use ndarray::{Array1, Array2};
use ndarray_linalg::SVD;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// G(ω,ω') = ½[γ(ω)+γ(ω')] − i[S(ω')−S(ω)].
pub fn dissipative_kernel(bath: &BathModel, w: f64, wp: f64) -> C64 {
    let (g1, g2) = (bath.spectral_density(w), bath.spectral_density(wp));
    let (s1, s2) = (bath.principal_density(w), bath.principal_density(wp));
    C64::new(0.5 * (g1 + g2), -(s2 - s1))
}

/// ℋ(ω,ω') = ½[S(ω)+S(ω') + i(γ(ω)−γ(ω'))/2].
pub fn unitary_kernel(bath: &BathModel, w: f64, wp: f64) -> C64 {
    let (g1, g2) = (bath.spectral_density(w), bath.spectral_density(wp));
    let (s1, s2) = (bath.principal_density(w), bath.principal_density(wp));
    C64::new(0.5 * (s1 + s2), 0.25 * (g1 - g2))
}

/// f(ω,ω') = ½[√γ(ω) − √γ(ω')]² + i[S(ω)−S(ω')].
pub fn detuning_function(bath: &BathModel, w: f64, wp: f64) -> C64 {
    let d = bath.spectral_density(w).sqrt() - bath.spectral_density(wp).sqrt();
    C64::new(0.5 * d * d, bath.principal_density(w) - bath.principal_density(wp))
}

/// √(γ(ω)γ(ω')).
pub fn geometric_mean(bath: &BathModel, w: f64, wp: f64) -> f64 {
    (bath.spectral_density(w) * bath.spectral_density(wp)).sqrt()
}

/// Coarse-grained geometric mean and detuning function (g̃, f̃).
pub fn cg_kernels(bath: &BathModel, w: f64, wp: f64, t0: f64) -> (C64, C64) {
    let s = sinc((w - wp) * t0 / 2.0);
    (C64::new(geometric_mean(bath, w, wp) * s, 0.0), detuning_function(bath, w, wp) * s)
}

/// Values of a two-frequency kernel on a frequency sample.
#[derive(Debug, Clone)]
pub struct KernelGrid {
    pub omegas: Array1<f64>,
    pub values: Array2<C64>,
}

impl KernelGrid {
    pub fn build<F: Fn(f64, f64) -> C64>(omegas: Array1<f64>, k: F) -> Self {
        let n = omegas.len();
        let values = Array2::from_shape_fn((n, n), |(i, j)| k(omegas[i], omegas[j]));
        KernelGrid { omegas, values }
    }

    /// Sum of singular values.
    pub fn trace_norm(&self) -> Result<f64> {
        trace_norm(&self.values)
    }
}

pub fn trace_norm(a: &Array2<C64>) -> Result<f64> {
    let (_, s, _) = a.svd(false, false)?;
    Ok(s.sum())
}

pub fn uniform_grid(lo: f64, hi: f64, count: usize) -> Array1<f64> {
    if count == 1 {
        return Array1::from_elem(1, 0.5 * (lo + hi));
    }
    Array1::from_shape_fn(count, |i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
}

/// ‖f̃‖₁ / ‖g̃‖₁ for each coarse-graining time.
pub fn norm_ratio_scan(bath: &BathModel, omegas: &Array1<f64>, t0_values: &[f64]) -> Result<Vec<(f64, f64)>> {
    let n = omegas.len();
    let gam: Vec<f64> = omegas.iter().map(|&w| bath.spectral_density(w)).collect();
    let s: Vec<f64> = omegas.iter().map(|&w| bath.principal_density(w)).collect();
    let mut out = Vec::with_capacity(t0_values.len());
    for &t0 in t0_values {
        let mut gm = Array2::<C64>::zeros((n, n));
        let mut fm = Array2::<C64>::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                let c = sinc((omegas[i] - omegas[j]) * t0 / 2.0);
                gm[[i, j]] = C64::new((gam[i] * gam[j]).sqrt() * c, 0.0);
                let d = gam[i].sqrt() - gam[j].sqrt();
                fm[[i, j]] = C64::new(0.5 * d * d, s[i] - s[j]) * c;
            }
        }
        out.push((t0, trace_norm(&fm)? / trace_norm(&gm)?));
    }
    Ok(out)
}

/// Single-frequency data of the dynamically coarse-grained kernels at a
/// coarse-graining time τ: γ_τ, S_τ and their frequency derivatives.
#[derive(Debug, Clone, Copy)]
pub struct DcgPoint {
    pub omega: f64,
    pub gamma: f64,
    pub s: f64,
    pub dgamma: f64,
    pub ds: f64,
}

pub fn dcg_point(bath: &BathModel, w: f64, tau: f64) -> Result<DcgPoint> {
    let g = bath.half_fourier(w, Horizon::Finite(tau))?;
    let d = bath.half_fourier_derivative(w, tau)?;
    Ok(DcgPoint { omega: w, gamma: 2.0 * g.re, s: g.im, dgamma: 2.0 * d.re, ds: d.im })
}

/// (G_dc, ℋ_dc) from single-frequency data. `close` is the separation below
/// which difference quotients are replaced by derivatives.
pub fn dcg_pair(p: &DcgPoint, q: &DcgPoint, tau: f64, close: f64) -> (C64, C64) {
    let dw = q.omega - p.omega;
    let half = dw * tau / 2.0;
    let (dq_s, dq_g) = if dw.abs() < close {
        (0.5 * (p.ds + q.ds) * 2.0 / tau, 0.5 * (p.dgamma + q.dgamma) * 2.0 / tau)
    } else {
        ((q.s - p.s) / half, (q.gamma - p.gamma) / half)
    };
    let sc = sinc(half);
    let cs = half.cos();
    let phase = C64::from_polar(1.0, -(p.omega - q.omega) * tau / 2.0);
    let g = phase * (0.5 * (q.gamma + p.gamma) * sc - dq_s * cs);
    let h = phase.conj() * (0.5 * (q.s + p.s) * sc + 0.25 * dq_g * cs);
    (g, h)
}

/// DCG dissipative and unitary kernels at (ω, ω') for coarse-graining time τ.
pub fn dcg_kernels(bath: &BathModel, w: f64, wp: f64, tau: f64) -> Result<(C64, C64)> {
    let p = dcg_point(bath, w, tau)?;
    let q = dcg_point(bath, wp, tau)?;
    Ok(dcg_pair(&p, &q, tau, 1e-6 * bath.omega_c))
}

/// Unitary kernel of the universal Lindblad equation,
/// −(1/2π) P∫ dΩ/Ω √(γ(Ω+ω)γ(Ω+ω')).
pub fn ule_unitary_kernel(bath: &BathModel, w: f64, wp: f64) -> Result<f64> {
    if bath.g == 0.0 {
        return Ok(0.0);
    }
    let f = |x: f64| (bath.spectral_density(x + w) * bath.spectral_density(x + wp)).sqrt();
    let a = -w.min(wp);
    let q = Quad::new(1e-10 * bath.g * bath.omega_c, 1e-10);
    let value = if a >= 0.0 {
        // x = a + s² removes the square-root endpoint singularity when a = 0
        q.integrate_to_infinity(
            |s: f64| {
                let x = a + s * s;
                if x == 0.0 {
                    0.0
                } else {
                    2.0 * s * f(x) / x
                }
            },
            0.0,
        )?
    } else {
        let l = -a;
        let folded = q.integrate(|x: f64| (f(x) - f(-x)) / x, 0.0, l)?;
        folded + q.integrate_to_infinity(|x: f64| f(x) / x, l)?
    };
    Ok(-value / (2.0 * PI))
}

/// Kernel used by the coarse-grained Redfield equation: G·sinc((ω−ω')T0/2).
pub fn cg_dissipative_kernel(bath: &BathModel, w: f64, wp: f64, t0: f64) -> C64 {
    dissipative_kernel(bath, w, wp) * sinc((w - wp) * t0 / 2.0)
}

pub fn cg_unitary_kernel(bath: &BathModel, w: f64, wp: f64, t0: f64) -> C64 {
    unitary_kernel(bath, w, wp) * sinc((w - wp) * t0 / 2.0)
}
