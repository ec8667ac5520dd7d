//! Exponential integrals and the sinc function.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// sin(x)/x with the removable point handled by its Taylor series.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// E1(y) for y > 0.
pub fn e1(y: f64) -> f64 {
    assert!(y > 0.0, "e1 requires a positive argument");
    if y <= 1.0 {
        e1_series(y)
    } else {
        (-y).exp() * e1_cf_scaled(y)
    }
}

fn e1_series(y: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..200 {
        term *= -y / k as f64;
        let add = term / k as f64;
        sum += add;
        if add.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    -EULER_GAMMA - y.ln() - sum
}

/// e^y E1(y) for y > 1 by the modified Lentz continued fraction.
fn e1_cf_scaled(y: f64) -> f64 {
    let tiny = 1e-300;
    let mut b = y + 1.0;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..1000 {
        let an = -((i * i) as f64);
        b += 2.0;
        d = 1.0 / (an * d + b);
        c = b + an / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Ei(x), the principal-value exponential integral. Ei(0) = -inf.
pub fn ei(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x < 0.0 {
        -e1(-x)
    } else if x <= 40.0 {
        ei_series(x)
    } else {
        x.exp() * ei_asymptotic_scaled(x)
    }
}

/// e^{-x} Ei(x), finite for all x != 0 and free of overflow.
pub fn exp_neg_ei(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x < -1.0 {
        -e1_cf_scaled(-x)
    } else if x < 0.0 {
        -(-x).exp() * e1_series(-x)
    } else if x <= 40.0 {
        (-x).exp() * ei_series(x)
    } else {
        ei_asymptotic_scaled(x)
    }
}

fn ei_series(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..400 {
        term *= x / k as f64;
        let add = term / k as f64;
        sum += add;
        if add < 1e-17 * sum.abs() {
            break;
        }
    }
    EULER_GAMMA + x.ln() + sum
}

fn ei_asymptotic_scaled(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..100 {
        let next = term * k as f64 / x;
        if next > term {
            break;
        }
        term = next;
        sum += term;
        if term < 1e-17 {
            break;
        }
    }
    sum / x
}

/// Complex E1(z) on the principal branch (cut along the negative real axis).
pub fn e1_complex(z: C64) -> C64 {
    let a0 = z.norm();
    let (x, y) = (z.re, z.im);
    if a0 == 0.0 {
        return C64::new(f64::INFINITY, 0.0);
    }
    if in_series_region(z) {
        let mut ce1 = C64::new(1.0, 0.0);
        let mut cr = C64::new(1.0, 0.0);
        for k in 1..=500 {
            let kf = k as f64;
            cr = -cr * kf * z / ((kf + 1.0) * (kf + 1.0));
            ce1 += cr;
            if cr.norm() <= ce1.norm() * 1e-16 {
                break;
            }
        }
        if x <= 0.0 && y == 0.0 {
            -EULER_GAMMA - (-z).ln() + z * ce1 - C64::new(0.0, PI)
        } else {
            -EULER_GAMMA - z.ln() + z * ce1
        }
    } else {
        let mut ce1 = (-z).exp() * e1_complex_cf(z);
        if x <= 0.0 && y == 0.0 {
            ce1 -= C64::new(0.0, PI);
        }
        ce1
    }
}

fn in_series_region(z: C64) -> bool {
    let a0 = z.norm();
    a0 <= 2.0 || (z.re < 0.0 && a0 <= 5.0) || (z.re < -2.0 * z.im.abs() && a0 < 40.0)
}

/// e^{z} E1(z) from the continued fraction, valid away from the origin.
fn e1_complex_cf(z: C64) -> C64 {
    let one = C64::new(1.0, 0.0);
    let mut zd = one / z;
    let mut zdc = zd;
    let mut zc = zdc;
    for k in 1..=1000 {
        let kf = k as f64;
        zd = one / (zd * kf + one);
        zdc *= zd - one;
        zc += zdc;
        zd = one / (zd * kf + z);
        zdc *= z * zd - one;
        zc += zdc;
        if zdc.norm() <= zc.norm() * 1e-16 && k > 20 {
            break;
        }
    }
    zc
}

/// e^{s} E1(w), evaluated without forming e^{-w} separately where that would overflow.
pub fn e1_complex_scaled(w: C64, s: f64) -> C64 {
    let a0 = w.norm();
    let on_cut = w.re <= 0.0 && w.im == 0.0;
    if a0 == 0.0 || in_series_region(w) || on_cut {
        e1_complex(w) * s.exp()
    } else {
        (C64::new(s, 0.0) - w).exp() * e1_complex_cf(w)
    }
}

/// e^{-Re z} Ei(z) with Ei continued off the real axis as
/// γ + ln z - Ein(-z), i.e. Ei(z) = -E1(-z) + iπ·sign(Im z).
pub fn ei_complex_scaled(z: C64) -> C64 {
    if z.im == 0.0 {
        return C64::new(exp_neg_ei(z.re), 0.0);
    }
    -e1_complex_scaled(-z, -z.re) + C64::new(0.0, PI * z.im.signum() * (-z.re).exp())
}
