//! Globally adaptive 21-point Gauss–Kronrod quadrature.

use crate::error::{Error, Result};
use num_complex::Complex64 as C64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_729_949_483_930,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

/// Values the integrator can accumulate.
pub trait QuadValue: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(self) -> f64;
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn magnitude(self) -> f64 {
        self.norm()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult<T> {
    pub value: T,
    pub error: f64,
}

struct Segment<T> {
    a: f64,
    b: f64,
    value: T,
    error: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<T: QuadValue, F: FnMut(f64) -> T>(f: &mut F, a: f64, b: f64) -> (T, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut resk = fc * WGK[10];
    let mut resg = T::zero();
    for j in 0..10 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        resk = resk + pair * WGK[j];
        if j % 2 == 1 {
            resg = resg + pair * WG[j / 2];
        }
    }
    let value = resk * h;
    let err = ((resk - resg) * h).magnitude();
    (value, err)
}

/// Tolerances and limits for adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quad {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_segments: usize,
}

impl Default for Quad {
    fn default() -> Self {
        Quad { abs_tol: 1e-12, rel_tol: 1e-12, max_segments: 20_000 }
    }
}

impl Quad {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Quad { abs_tol, rel_tol, ..Default::default() }
    }

    pub fn integrate<T: QuadValue, F: FnMut(f64) -> T>(&self, f: F, a: f64, b: f64) -> Result<T> {
        self.integrate_points(f, &[a, b])
    }

    /// Integrates over [points[0], points.last()] with the interior points as forced breaks.
    pub fn integrate_points<T: QuadValue, F: FnMut(f64) -> T>(&self, f: F, points: &[f64]) -> Result<T> {
        self.integrate_detailed(f, points).map(|r| r.value)
    }

    pub fn integrate_detailed<T: QuadValue, F: FnMut(f64) -> T>(
        &self,
        mut f: F,
        points: &[f64],
    ) -> Result<QuadResult<T>> {
        let mut heap = BinaryHeap::new();
        let mut total = T::zero();
        let mut total_err = 0.0;
        for w in points.windows(2) {
            if w[1] == w[0] {
                continue;
            }
            let (v, e) = kronrod(&mut f, w[0], w[1]);
            total = total + v;
            total_err += e;
            heap.push(Segment { a: w[0], b: w[1], value: v, error: e });
        }
        let mut count = heap.len();
        loop {
            let tol = self.abs_tol.max(self.rel_tol * total.magnitude());
            if total_err <= tol {
                return Ok(QuadResult { value: total, error: total_err });
            }
            if count >= self.max_segments {
                return Err(Error::QuadratureFailure { value: total.magnitude(), error: total_err, tolerance: tol });
            }
            let seg = match heap.pop() {
                Some(s) => s,
                None => return Ok(QuadResult { value: total, error: total_err }),
            };
            let mid = 0.5 * (seg.a + seg.b);
            if mid <= seg.a || mid >= seg.b {
                // interval exhausted at machine resolution
                return Err(Error::QuadratureFailure { value: total.magnitude(), error: total_err, tolerance: tol });
            }
            let (v1, e1) = kronrod(&mut f, seg.a, mid);
            let (v2, e2) = kronrod(&mut f, mid, seg.b);
            total = total - seg.value + v1 + v2;
            total_err += e1 + e2 - seg.error;
            heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
            heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
            count += 1;
        }
    }

    /// ∫_a^∞ f(x) dx through the map x = a + (1-u)/u.
    pub fn integrate_to_infinity<T: QuadValue, F: FnMut(f64) -> T>(&self, mut f: F, a: f64) -> Result<T> {
        self.integrate(
            |u: f64| {
                let x = a + (1.0 - u) / u;
                f(x) * (1.0 / (u * u))
            },
            0.0,
            1.0,
        )
    }
}
