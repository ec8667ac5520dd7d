//! Zero-temperature bosonic baths: spectral density γ, principal density S,
//! correlation function C(t) and the finite-time half-range transform Γ_t.

use crate::error::{Error, Result};
use crate::quad::Quad;
use crate::special::{e1_complex_scaled, exp_neg_ei, sinc};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BathKind {
    OhmicExp,
    OhmicDrudeLorentz,
    SuperOhmicExp,
}

impl BathKind {
    pub fn name(self) -> &'static str {
        match self {
            BathKind::OhmicExp => "ohmic-exp",
            BathKind::OhmicDrudeLorentz => "ohmic-drude-lorentz",
            BathKind::SuperOhmicExp => "super-ohmic-exp",
        }
    }

    pub fn parse(s: &str) -> Option<BathKind> {
        match s {
            "ohmic-exp" | "ohmic" => Some(BathKind::OhmicExp),
            "ohmic-drude-lorentz" | "drude-lorentz" => Some(BathKind::OhmicDrudeLorentz),
            "super-ohmic-exp" | "super-ohmic" => Some(BathKind::SuperOhmicExp),
            _ => None,
        }
    }
}

/// Upper limit of a finite-time transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BathModel {
    pub kind: BathKind,
    pub g: f64,
    pub omega_c: f64,
    pub temperature: f64,
}

impl BathModel {
    /// g = 0 is accepted and describes a decoupled bath.
    pub fn new(kind: BathKind, g: f64, omega_c: f64) -> Result<Self> {
        if !(g >= 0.0 && g.is_finite()) {
            return Err(Error::InvalidBath(format!("coupling g must be non-negative, got {g}")));
        }
        if !(omega_c > 0.0 && omega_c.is_finite()) {
            return Err(Error::InvalidBath(format!("cutoff omega_c must be positive, got {omega_c}")));
        }
        Ok(BathModel { kind, g, omega_c, temperature: 0.0 })
    }

    pub fn with_coupling(&self, g: f64) -> Self {
        BathModel { g, ..*self }
    }

    /// γ(ω).
    pub fn spectral_density(&self, omega: f64) -> f64 {
        if omega <= 0.0 || omega == f64::INFINITY {
            return 0.0;
        }
        let x = omega / self.omega_c;
        let tp = 2.0 * PI * self.g;
        if x > 800.0 && self.kind != BathKind::OhmicDrudeLorentz {
            return 0.0;
        }
        match self.kind {
            BathKind::OhmicExp => tp * omega * (-x).exp(),
            BathKind::OhmicDrudeLorentz => tp * omega / (1.0 + x * x),
            BathKind::SuperOhmicExp => tp * omega * x * x * (-x).exp(),
        }
    }

    /// dγ/dω, one-sided at ω = 0 (taken as 0 for ω ≤ 0).
    pub fn spectral_density_derivative(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let x = omega / self.omega_c;
        let tp = 2.0 * PI * self.g;
        match self.kind {
            BathKind::OhmicExp => tp * (1.0 - x) * (-x).exp(),
            BathKind::OhmicDrudeLorentz => tp * (1.0 - x * x) / ((1.0 + x * x) * (1.0 + x * x)),
            BathKind::SuperOhmicExp => tp * x * x * (3.0 - x) * (-x).exp(),
        }
    }

    /// S(ω) = (1/2π) P∫ γ(Ω)/(ω-Ω) dΩ from the closed forms.
    pub fn principal_density(&self, omega: f64) -> f64 {
        let x = omega / self.omega_c;
        let scale = self.g * self.omega_c;
        match self.kind {
            BathKind::OhmicExp => {
                if x == 0.0 {
                    -scale
                } else if x.abs() > 40.0 {
                    scale * asymptotic_tail(x, 1)
                } else {
                    -scale * (1.0 - x * exp_neg_ei(x))
                }
            }
            BathKind::OhmicDrudeLorentz => {
                if x == 0.0 {
                    -scale * PI / 2.0
                } else {
                    -scale * (PI / 2.0 - x * x.abs().ln()) / (1.0 + x * x)
                }
            }
            BathKind::SuperOhmicExp => {
                if x == 0.0 {
                    -2.0 * scale
                } else if x.abs() > 40.0 {
                    scale * asymptotic_tail(x, 3)
                } else {
                    -scale * (2.0 + x + x * x - x * x * x * exp_neg_ei(x))
                }
            }
        }
    }

    /// C(t) in closed form.
    pub fn correlation_function(&self, t: f64) -> Result<C64> {
        let d = C64::new(1.0, self.omega_c * t);
        let w2 = self.g * self.omega_c * self.omega_c;
        match self.kind {
            BathKind::OhmicExp => Ok(w2 / (d * d)),
            BathKind::SuperOhmicExp => Ok(6.0 * w2 / (d * d * d * d)),
            BathKind::OhmicDrudeLorentz => Err(Error::UnsupportedBathKind(self.kind.name())),
        }
    }

    /// Γ_t(ω) = ∫_0^t C(τ) e^{iωτ} dτ = γ_t/2 + i S_t.
    pub fn half_fourier(&self, omega: f64, t: Horizon) -> Result<C64> {
        match t {
            Horizon::Infinite => Ok(C64::new(0.5 * self.spectral_density(omega), self.principal_density(omega))),
            Horizon::Finite(t) => {
                if t < 0.0 {
                    return Err(Error::InvalidArgument(format!("negative time {t}")));
                }
                if t == 0.0 || self.g == 0.0 {
                    return Ok(C64::new(0.0, 0.0));
                }
                match self.kind {
                    BathKind::OhmicExp => Ok(self.ohmic_half_fourier(omega, t)),
                    _ => {
                        let (gt, st) = self.td_spectral(omega, t)?;
                        Ok(C64::new(0.5 * gt, st))
                    }
                }
            }
        }
    }

    fn ohmic_half_fourier(&self, omega: f64, t: f64) -> C64 {
        let wc = self.omega_c;
        let x = omega / wc;
        let y = omega * t;
        let i = C64::new(0.0, 1.0);
        let mut term = C64::new(1.0, 0.0) - C64::new(0.0, y).exp() / C64::new(1.0, wc * t);
        if x != 0.0 {
            // e^{-x}[Ei(x) - Ei(x+iy) - iπΘ(-x)] written through E1(-z), z = x + iy
            let z = C64::new(x, y);
            let shifted = e1_complex_scaled(-z, -x);
            let bracket = if x < 0.0 {
                exp_neg_ei(x) + shifted
            } else {
                C64::new(exp_neg_ei(x), 0.0) + shifted - i * PI * y.signum() * (-x).exp()
            };
            term -= x * bracket;
        }
        -i * self.g * wc * term
    }

    /// ∂Γ_t(ω)/∂ω for finite t.
    pub fn half_fourier_derivative(&self, omega: f64, t: f64) -> Result<C64> {
        if t == 0.0 || self.g == 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        match self.kind {
            BathKind::OhmicExp => Ok(self.ohmic_half_fourier_derivative(omega, t)),
            _ => {
                let h = |w: f64| self.spectral_density_derivative(w);
                let tol = self.transform_tolerance() / self.omega_c;
                let dg = sinc_transform(&h, omega, t, self.omega_c, tol)?;
                let ds = sin2_transform(&h, omega, t, self.omega_c, tol)?;
                Ok(C64::new(0.5 * dg, ds))
            }
        }
    }

    fn ohmic_half_fourier_derivative(&self, omega: f64, t: f64) -> C64 {
        let wc = self.omega_c;
        let i = C64::new(0.0, 1.0);
        let a = C64::new(1.0, wc * t);
        if omega == 0.0 {
            return -i * self.g * (a.ln() + 1.0 / a - 1.0);
        }
        let x = omega / wc;
        let y = omega * t;
        let z = C64::new(x, y);
        let shifted = e1_complex_scaled(-z, -x);
        let d = if x < 0.0 {
            exp_neg_ei(x) + shifted
        } else {
            C64::new(exp_neg_ei(x), 0.0) + shifted - i * PI * y.signum() * (-x).exp()
        };
        let phase = C64::new(0.0, y).exp();
        let dterm = -i * t * phase / a - d / wc + x * d / wc - (1.0 - phase) / wc;
        -i * self.g * wc * dterm
    }

    /// (γ_t(ω), S_t(ω)) by frequency-domain quadrature of γ.
    pub fn td_spectral(&self, omega: f64, t: f64) -> Result<(f64, f64)> {
        if t == 0.0 || self.g == 0.0 {
            return Ok((0.0, 0.0));
        }
        let h = |w: f64| self.spectral_density(w);
        let tol = self.transform_tolerance();
        Ok((sinc_transform(&h, omega, t, self.omega_c, tol)?, sin2_transform(&h, omega, t, self.omega_c, tol)?))
    }

    /// (R_t(ω), W_t(ω)): the same transforms applied to S instead of γ.
    pub fn td_unitary_coeffs(&self, omega: f64, t: f64) -> Result<(f64, f64)> {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument(format!("td_unitary_coeffs needs t > 0, got {t}")));
        }
        if self.g == 0.0 {
            return Ok((0.0, 0.0));
        }
        let h = |w: f64| self.principal_density(w);
        let tol = self.transform_tolerance();
        Ok((sinc_transform(&h, omega, t, self.omega_c, tol)?, sin2_transform(&h, omega, t, self.omega_c, tol)?))
    }

    fn transform_tolerance(&self) -> f64 {
        1e-11 * self.g * self.omega_c
    }

    /// S(ω) by direct Kramers–Kronig quadrature of γ; an independent route to the closed forms.
    pub fn principal_density_numeric(&self, omega: f64) -> Result<f64> {
        let k = 50.0 * self.omega_c;
        let lo = 1e-8 * self.omega_c;
        let q = Quad::new(1e-11 * self.g * self.omega_c, 1e-12);
        let quotient = |u: f64| (self.spectral_density(omega - u) - self.spectral_density(omega + u)) / u;
        let mut pts = vec![lo];
        if omega.abs() > lo && omega.abs() < k {
            pts.push(omega.abs());
        }
        pts.push(k);
        let body = q.integrate_points(quotient, &pts)?;
        // beyond u = K only γ(ω+u) survives (ω - u < 0 there when |ω| < K)
        let tail = if omega - k < 0.0 {
            q.integrate_to_infinity(|u: f64| -self.spectral_density(omega + u) / u, k)?
        } else {
            q.integrate_to_infinity(quotient, k)?
        };
        Ok((body + tail) / (2.0 * PI))
    }
}

/// Σ_{k≥m} k!/x^{k-m+1}, the large-|x| expansion shared by the exponential-cutoff densities.
fn asymptotic_tail(x: f64, m: u32) -> f64 {
    let mut fact = 1.0;
    for k in 2..=m {
        fact *= k as f64;
    }
    let mut term = fact / x;
    let mut sum = term;
    let mut k = m;
    loop {
        k += 1;
        let next = term * k as f64 / x;
        if next.abs() >= term.abs() || next.abs() < 1e-17 * sum.abs() {
            break;
        }
        term = next;
        sum += term;
    }
    sum
}

fn window(omega: f64, t: f64, omega_c: f64) -> f64 {
    (2.0 * PI * 64.0).max(t * (omega.abs() + 40.0 * omega_c))
}

fn breakpoints(omega: f64, t: f64, x_max: f64) -> Vec<f64> {
    let step = 8.0 * PI;
    let n = (2.0 * x_max / step).ceil() as usize;
    let mut pts: Vec<f64> = (0..=n).map(|i| -x_max + 2.0 * x_max * i as f64 / n as f64).collect();
    let kink = -omega * t;
    if kink.abs() < x_max {
        pts.push(kink);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
    }
    pts
}

/// Tail of ∫_X^∞ φ(x) sin x dx by repeated integration by parts.
fn sin_tail<F: Fn(f64) -> f64>(phi: &F, x: f64) -> f64 {
    let d = 1e-3 * x;
    let (fm, f0, fp) = (phi(x - d), phi(x), phi(x + d));
    let d1 = (fp - fm) / (2.0 * d);
    let d2 = (fp - 2.0 * f0 + fm) / (d * d);
    f0 * x.cos() - d1 * x.sin() - d2 * x.cos()
}

/// Tail of ∫_X^∞ φ(x) cos x dx by repeated integration by parts.
fn cos_tail<F: Fn(f64) -> f64>(phi: &F, x: f64) -> f64 {
    let d = 1e-3 * x;
    let (fm, f0, fp) = (phi(x - d), phi(x), phi(x + d));
    let d1 = (fp - fm) / (2.0 * d);
    let d2 = (fp - 2.0 * f0 + fm) / (d * d);
    -f0 * x.sin() - d1 * x.cos() + d2 * x.sin()
}

/// (1/π) ∫ h(ω + x/t) sinc(x) dx.
pub fn sinc_transform<H: Fn(f64) -> f64>(h: &H, omega: f64, t: f64, omega_c: f64, tol: f64) -> Result<f64> {
    let xm = window(omega, t, omega_c);
    let q = Quad { abs_tol: tol, rel_tol: 1e-12, max_segments: 200_000 };
    let pts = breakpoints(omega, t, xm);
    let body = q.integrate_points(|x: f64| h(omega + x / t) * sinc(x), &pts)?;
    let right = |x: f64| h(omega + x / t) / x;
    let left = |x: f64| h(omega - x / t) / x;
    let tails = sin_tail(&right, xm) + sin_tail(&left, xm);
    Ok((body + tails) / PI)
}

/// -(1/π) ∫ h(ω + x/t) sin²(x/2)/x dx.
pub fn sin2_transform<H: Fn(f64) -> f64>(h: &H, omega: f64, t: f64, omega_c: f64, tol: f64) -> Result<f64> {
    let xm = window(omega, t, omega_c);
    let q = Quad { abs_tol: tol, rel_tol: 1e-12, max_segments: 200_000 };
    let pts = breakpoints(omega, t, xm);
    let kernel = |x: f64| {
        let s = (0.5 * x).sin();
        if x.abs() < 1e-8 {
            0.25 * x
        } else {
            s * s / x
        }
    };
    let body = q.integrate_points(|x: f64| h(omega + x / t) * kernel(x), &pts)?;
    // |x| > X: sin²(x/2)/x = 1/(2x) - cos(x)/(2x)
    let qt = Quad::new(tol, 1e-12);
    let w_hi = omega + xm / t;
    let w_lo = omega - xm / t;
    let mono_hi = qt.integrate_to_infinity(|w: f64| h(w) / (w - omega), w_hi)?;
    let mono_lo = qt.integrate_to_infinity(|u: f64| h(-u) / (-u - omega), -w_lo)?;
    let right = |x: f64| h(omega + x / t) / x;
    let left = |x: f64| h(omega - x / t) / x;
    // ∫_{-∞}^{-X} h(ω+x/t) cos x/x dx = -∫_X^∞ h(ω-y/t) cos y/y dy
    let osc = cos_tail(&right, xm) - cos_tail(&left, xm);
    let tails = 0.5 * (mono_hi + mono_lo) - 0.5 * osc;
    Ok(-(body + tails) / PI)
}

/// Finite-time spectral pair (γ_t, S_t) of a bath.
#[derive(Debug, Clone, Copy)]
pub struct TdSpectralPair {
    pub bath: BathModel,
}

impl TdSpectralPair {
    pub fn gamma_t(&self, omega: f64, t: f64) -> Result<f64> {
        Ok(2.0 * self.bath.half_fourier(omega, Horizon::Finite(t))?.re)
    }

    pub fn s_t(&self, omega: f64, t: f64) -> Result<f64> {
        Ok(self.bath.half_fourier(omega, Horizon::Finite(t))?.im)
    }
}
