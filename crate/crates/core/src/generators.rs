//! Right-hand sides of the master equations: Redfield in filtered-operator
//! and kernel form, GAME, the RWA, partial RWA, coarse-grained Redfield,
//! dynamical coarse graining, PERLind variants, ULE, and the forms with
//! time-dependent coefficients.
//!
//! Conventions. Couplings C are stored in the system eigenbasis and enter as
//! H_sb = C⊗B + C†⊗B†, which reduces to A⊗B for Hermitian A. The filtered
//! operator is C_f = C∘Γ*, with Γ_nm = Γ(ω_nm) and ω_nm = E_n − E_m. Every
//! kernel-type generator has the structure
//!
//!   dρ_nm/dt = −i[H,ρ]_nm + Σ_ij C*_in C_jm K(ω_in, ω_jm) ρ_ij − ½{Q,ρ}_nm,
//!   Q_nm = Σ_i C_ni C*_mi K(ω_mi, ω_ni),
//!
//! and the Lamb shift is H_L,nm = Σ_i 𝒦(ω_ni, ω_mi) C_ni C*_mi.

use crate::bath::{BathModel, Horizon};
use crate::error::{Error, Result};
use crate::hilbert::{dagger, hermiticity_defect, max_abs, zeros, CMat, EigenSystem};
use crate::kernels::{dcg_pair, dcg_point, dissipative_kernel, ule_unitary_kernel, unitary_kernel, DcgPoint};
use crate::ops::Op;
use crate::special::sinc;
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };
const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Largest dimension for which N²×N² superoperators are built.
pub const MAX_SUPEROPERATOR_DIM: usize = 64;

/// A master-equation right-hand side dρ/dt = 𝓛_t(ρ).
pub trait Generator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, t: f64, rho: &CMat) -> Result<CMat>;
    fn is_time_dependent(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone)]
pub struct Coupling {
    pub op: CMat,
    pub bath: BathModel,
    pub hermitian: bool,
}

/// System operators coupled to independent baths.
#[derive(Debug, Clone, Default)]
pub struct CouplingSet {
    pub couplings: Vec<Coupling>,
    /// Segment bounds (starts followed by n) such that every coupling maps
    /// each segment into a few others, used for block storage.
    pub sectors: Option<Vec<usize>>,
}

impl CouplingSet {
    pub fn new() -> Self {
        CouplingSet::default()
    }

    pub fn single(op: CMat, bath: BathModel) -> Self {
        let mut cs = CouplingSet::new();
        cs.push(op, bath);
        cs
    }

    pub fn push(&mut self, op: CMat, bath: BathModel) {
        let hermitian = hermiticity_defect(op.view()) <= 1e-12 * max_abs(&op).max(1.0);
        self.couplings.push(Coupling { op, bath, hermitian });
    }

    pub fn len(&self) -> usize {
        self.couplings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.couplings.is_empty()
    }

    pub fn check(&self, n: usize) -> Result<()> {
        for c in &self.couplings {
            if c.op.nrows() != n || c.op.ncols() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.op.nrows() });
            }
        }
        Ok(())
    }

    /// Same operators with every bath coupling multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> CouplingSet {
        let couplings = self
            .couplings
            .iter()
            .map(|c| Coupling { op: c.op.clone(), bath: c.bath.with_coupling(c.bath.g * factor), hermitian: c.hermitian })
            .collect();
        CouplingSet { couplings, sectors: self.sectors.clone() }
    }

    pub fn with_sectors(mut self, bounds: Vec<usize>) -> Self {
        self.sectors = Some(bounds);
        self
    }

    fn bounds(&self) -> Option<&[usize]> {
        self.sectors.as_deref()
    }

    /// Indices of couplings grouped by identical bath.
    fn bath_groups(&self) -> Vec<(BathModel, Vec<usize>)> {
        let mut groups: Vec<(BathModel, Vec<usize>)> = Vec::new();
        for (k, c) in self.couplings.iter().enumerate() {
            match groups.iter_mut().find(|(b, _)| *b == c.bath) {
                Some((_, v)) => v.push(k),
                None => groups.push((c.bath, vec![k])),
            }
        }
        groups
    }
}

fn freq_key(w: f64) -> u64 {
    if w == 0.0 {
        0
    } else {
        w.to_bits()
    }
}

/// f(ω_nm) on the nonzero pattern of `a`, evaluating f once per distinct frequency.
fn on_pattern<F>(es: &EigenSystem, a: &CMat, cache: &mut HashMap<u64, C64>, mut f: F) -> Result<CMat>
where
    F: FnMut(f64) -> Result<C64>,
{
    let n = es.dim();
    let mut out = zeros(n);
    for i in 0..n {
        for j in 0..n {
            if a[[i, j]] == ZERO {
                continue;
            }
            let w = es.bohr[[i, j]];
            let v = match cache.get(&freq_key(w)) {
                Some(v) => *v,
                None => {
                    let v = f(w)?;
                    cache.insert(freq_key(w), v);
                    v
                }
            };
            out[[i, j]] = v;
        }
    }
    Ok(out)
}

/// Γ_t(ω_nm) on the pattern of each coupling, sharing evaluations between couplings with the same bath.
fn gamma_masks(cs: &CouplingSet, es: &EigenSystem, t: Horizon) -> Result<Vec<CMat>> {
    let mut caches: Vec<(BathModel, HashMap<u64, C64>)> = Vec::new();
    let mut out = Vec::with_capacity(cs.len());
    for c in &cs.couplings {
        let idx = match caches.iter().position(|(b, _)| *b == c.bath) {
            Some(i) => i,
            None => {
                caches.push((c.bath, HashMap::new()));
                caches.len() - 1
            }
        };
        let bath = c.bath;
        out.push(on_pattern(es, &c.op, &mut caches[idx].1, |w| bath.half_fourier(w, t))?);
    }
    Ok(out)
}

/// A_f = A∘Γ*(t).
pub fn filtered_operator(a: &CMat, es: &EigenSystem, bath: &BathModel, t: Horizon) -> Result<CMat> {
    if a.nrows() != es.dim() {
        return Err(Error::DimensionMismatch { expected: es.dim(), got: a.nrows() });
    }
    let gam = on_pattern(es, a, &mut HashMap::new(), |w| bath.half_fourier(w, t))?;
    Ok(a * &gam.mapv(|z| z.conj()))
}

/// Lamb-shift flavours.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambVariant {
    /// Implicit Lamb shift of the Redfield equation (also used by GAME).
    Redfield,
    /// Secular shift: only frequency-matched index pairs.
    Rwa,
    /// Principal-value kernel of the universal Lindblad equation.
    Ule,
    /// Dynamically coarse-grained unitary kernel at coarse-graining time τ.
    Dcg(f64),
    /// Redfield shift with finite-time coefficients Γ_t.
    Tdc(f64),
    /// Redfield unitary kernel weighted by sinc((ω−ω')T0/2).
    CoarseGrained(f64),
}

/// H_L,nm = Σ_k Σ_i 𝒦(ω_ni, ω_mi) C_ni C*_mi for an arbitrary kernel.
pub fn lamb_shift_by_kernel<K>(cs: &CouplingSet, es: &EigenSystem, kernel: K) -> Result<CMat>
where
    K: Fn(&BathModel, f64, f64) -> Result<C64>,
{
    let n = es.dim();
    cs.check(n)?;
    let mut h = zeros(n);
    for c in &cs.couplings {
        let a = &c.op;
        for nn in 0..n {
            for m in 0..n {
                let mut acc = ZERO;
                for i in 0..n {
                    let p = a[[nn, i]] * a[[m, i]].conj();
                    if p != ZERO {
                        acc += kernel(&c.bath, es.bohr[[nn, i]], es.bohr[[m, i]])? * p;
                    }
                }
                h[[nn, m]] += acc;
            }
        }
    }
    Ok(h)
}

/// H_L = (i/2)(C_f C† − C C_f†) summed over couplings, with C_f built from Γ at `t`.
fn redfield_shift_fast(cs: &CouplingSet, es: &EigenSystem, masks: &[CMat]) -> CMat {
    let n = es.dim();
    let mut h = zeros(n);
    for (c, gam) in cs.couplings.iter().zip(masks) {
        let cf = &c.op * &gam.mapv(|z| z.conj());
        let cd = dagger(&c.op);
        let cfd = dagger(&cf);
        Op::new(&cf).left_mul_add(&cd, C64::new(0.0, 0.5), &mut h);
        Op::new(&c.op).left_mul_add(&cfd, C64::new(0.0, -0.5), &mut h);
    }
    h
}

pub fn lamb_shift(cs: &CouplingSet, es: &EigenSystem, variant: LambVariant) -> Result<CMat> {
    let n = es.dim();
    cs.check(n)?;
    match variant {
        LambVariant::Redfield => Ok(redfield_shift_fast(cs, es, &gamma_masks(cs, es, Horizon::Infinite)?)),
        LambVariant::Tdc(t) => {
            if !(t >= 0.0) {
                return Err(Error::InvalidArgument(format!("TDC time must be non-negative, got {t}")));
            }
            Ok(redfield_shift_fast(cs, es, &gamma_masks(cs, es, Horizon::Finite(t))?))
        }
        LambVariant::CoarseGrained(t0) => {
            lamb_shift_by_kernel(cs, es, |b, w, wp| Ok(unitary_kernel(b, w, wp) * sinc((w - wp) * t0 / 2.0)))
        }
        LambVariant::Rwa => {
            let tol = degeneracy_tolerance(es);
            let mut h = zeros(n);
            for c in &cs.couplings {
                for class in frequency_classes(es, &c.op, tol) {
                    for e in &class {
                        for f in &class {
                            if e.col == f.col {
                                let k = 0.5 * (c.bath.principal_density(e.omega) + c.bath.principal_density(f.omega));
                                h[[e.row, f.row]] += e.value * f.value.conj() * k;
                            }
                        }
                    }
                }
            }
            Ok(h)
        }
        LambVariant::Dcg(tau) => {
            if !(tau > 0.0) {
                return Err(Error::InvalidArgument(format!("DCG coarse-graining time must be positive, got {tau}")));
            }
            let tables = DcgTables::build(cs, es, tau)?;
            lamb_shift_by_kernel(cs, es, |b, w, wp| Ok(tables.get(b).pair(w, wp).1))
        }
        LambVariant::Ule => ule_shift(cs, es),
    }
}

fn ule_shift(cs: &CouplingSet, es: &EigenSystem) -> Result<CMat> {
    let n = es.dim();
    // distinct (bath, ω, ω') triples with ω ≤ ω'; the kernel is real and symmetric
    let mut wanted: Vec<(usize, f64, f64)> = Vec::new();
    let mut seen: HashMap<(usize, u64, u64), ()> = HashMap::new();
    let groups = cs.bath_groups();
    let group_of: Vec<usize> = (0..cs.len()).map(|k| groups.iter().position(|(_, v)| v.contains(&k)).unwrap()).collect();
    for (k, c) in cs.couplings.iter().enumerate() {
        let a = &c.op;
        for nn in 0..n {
            for m in 0..n {
                for i in 0..n {
                    if a[[nn, i]] == ZERO || a[[m, i]] == ZERO {
                        continue;
                    }
                    let (w1, w2) = (es.bohr[[nn, i]], es.bohr[[m, i]]);
                    let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
                    let key = (group_of[k], freq_key(lo), freq_key(hi));
                    if seen.insert(key, ()).is_none() {
                        wanted.push((group_of[k], lo, hi));
                    }
                }
            }
        }
    }
    let values: Vec<Result<f64>> =
        wanted.par_iter().map(|&(g, lo, hi)| ule_unitary_kernel(&groups[g].0, lo, hi)).collect();
    let mut table = HashMap::with_capacity(wanted.len());
    for (&(g, lo, hi), v) in wanted.iter().zip(values) {
        table.insert((g, freq_key(lo), freq_key(hi)), v?);
    }
    let mut h = zeros(n);
    for (k, c) in cs.couplings.iter().enumerate() {
        let a = &c.op;
        for nn in 0..n {
            for m in 0..n {
                for i in 0..n {
                    let p = a[[nn, i]] * a[[m, i]].conj();
                    if p == ZERO {
                        continue;
                    }
                    let (w1, w2) = (es.bohr[[nn, i]], es.bohr[[m, i]]);
                    let (lo, hi) = if w1 <= w2 { (w1, w2) } else { (w2, w1) };
                    h[[nn, m]] += p * table[&(group_of[k], freq_key(lo), freq_key(hi))];
                }
            }
        }
    }
    Ok(h)
}

/// Frequency-matching tolerance used by the secular approximation.
pub fn degeneracy_tolerance(es: &EigenSystem) -> f64 {
    let wmax = es.bohr.iter().fold(0.0f64, |m, w| m.max(w.abs()));
    1e-9 * wmax.max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    row: usize,
    col: usize,
    value: C64,
    omega: f64,
}

/// Nonzero entries of `a` grouped by Bohr frequency; frequencies closer than
/// `tol` are linked into one class.
fn frequency_classes(es: &EigenSystem, a: &CMat, tol: f64) -> Vec<Vec<Entry>> {
    let n = es.dim();
    let mut entries: Vec<Entry> = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if a[[i, j]] != ZERO {
                entries.push(Entry { row: i, col: j, value: a[[i, j]], omega: es.bohr[[i, j]] });
            }
        }
    }
    entries.sort_by(|x, y| x.omega.total_cmp(&y.omega).then((x.row, x.col).cmp(&(y.row, y.col))));
    let mut classes: Vec<Vec<Entry>> = Vec::new();
    for e in entries {
        match classes.last_mut() {
            Some(last) if e.omega - last.last().unwrap().omega < tol => last.push(e),
            _ => classes.push(vec![e]),
        }
    }
    classes
}

/// X(ρ) = −i H ρ − K ρ + s Σ left·ρ·right, with dρ/dt = X(ρ) + X(ρ†)†.
/// Covers both the filtered-operator Redfield form (K = Σ C C_f†,
/// gains C_f†ρC, s = 1) and the GKSL form (K = ½ Σ L L†, gains L†ρL, s = ½).
#[derive(Debug, Clone)]
struct SplitForm {
    energies: Array1<f64>,
    h_extra: Option<Op>,
    loss: Option<Op>,
    gains: Vec<(Op, Op)>,
    gain_scale: f64,
}

impl SplitForm {
    fn dim(&self) -> usize {
        self.energies.len()
    }

    fn half(&self, rho: &CMat) -> CMat {
        let n = self.dim();
        let mut x = Array2::from_shape_fn((n, n), |(i, j)| -I * self.energies[i] * rho[[i, j]]);
        if let Some(h) = &self.h_extra {
            h.left_mul_add(rho, -I, &mut x);
        }
        if let Some(k) = &self.loss {
            k.left_mul_add(rho, -ONE, &mut x);
        }
        let s = C64::new(self.gain_scale, 0.0);
        for (l, r) in &self.gains {
            let tmp = l.left_mul(rho);
            r.right_mul_add(&tmp, s, &mut x);
        }
        x
    }

    fn apply(&self, rho: &CMat) -> CMat {
        let x = self.half(rho);
        if is_exactly_hermitian(rho) {
            &x + &dagger(&x)
        } else {
            let y = self.half(&dagger(rho));
            &x + &dagger(&y)
        }
    }
}

fn is_exactly_hermitian(a: &CMat) -> bool {
    let n = a.nrows();
    (0..n).all(|i| (i..n).all(|j| a[[i, j]] == a[[j, i]].conj()))
}

fn check_dim(rho: &CMat, n: usize) -> Result<()> {
    if rho.nrows() != n || rho.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: rho.nrows() });
    }
    Ok(())
}

fn split_energies(h: &CMat, bounds: Option<&[usize]>) -> (Array1<f64>, Option<Op>) {
    let energies = h.diag().mapv(|z| z.re);
    let mut rest = h.clone();
    for i in 0..h.nrows() {
        rest[[i, i]] = C64::new(0.0, rest[[i, i]].im);
    }
    let op = Op::partitioned(&rest, bounds);
    (energies, if op.is_zero() { None } else { Some(op) })
}

/// The filtered-operator Redfield equation
/// dρ/dt = −i[H0,ρ] + Σ_k (−C C_f†ρ − ρ C_f C† + C_f†ρC + C†ρC_f).
#[derive(Debug, Clone)]
pub struct RedfieldForm {
    pub h0: Array1<f64>,
    pub pairs: Vec<(CMat, CMat)>,
    split: SplitForm,
}

impl RedfieldForm {
    /// From H0 energies and (C, C_f) pairs.
    pub fn new(h0: Array1<f64>, pairs: Vec<(CMat, CMat)>) -> Result<Self> {
        RedfieldForm::partitioned(h0, pairs, None)
    }

    pub fn partitioned(h0: Array1<f64>, pairs: Vec<(CMat, CMat)>, bounds: Option<&[usize]>) -> Result<Self> {
        let n = h0.len();
        let mut m = zeros(n);
        let mut gains = Vec::with_capacity(pairs.len());
        for (c, cf) in &pairs {
            if c.nrows() != n || cf.nrows() != n {
                return Err(Error::DimensionMismatch { expected: n, got: c.nrows() });
            }
            let cfd = dagger(cf);
            let op = Op::partitioned(c, bounds);
            op.left_mul_add(&cfd, ONE, &mut m);
            gains.push((Op::partitioned(&cfd, bounds), op));
        }
        let loss = Op::partitioned(&m, bounds);
        let split = SplitForm {
            energies: h0.clone(),
            h_extra: None,
            loss: if loss.is_zero() { None } else { Some(loss) },
            gains,
            gain_scale: 1.0,
        };
        Ok(RedfieldForm { h0, pairs, split })
    }

    pub fn dim(&self) -> usize {
        self.h0.len()
    }
}

impl Generator for RedfieldForm {
    fn dim(&self) -> usize {
        self.h0.len()
    }

    fn apply(&self, _t: f64, rho: &CMat) -> Result<CMat> {
        check_dim(rho, self.dim())?;
        Ok(self.split.apply(rho))
    }
}

/// GKSL form dρ/dt = −i[H,ρ] + Σ_k (L_k†ρL_k − ½{L_k L_k†, ρ}).
#[derive(Debug, Clone)]
pub struct LindbladForm {
    h_eff: CMat,
    lindblad_ops: Vec<CMat>,
    split: SplitForm,
}

impl LindbladForm {
    pub fn new(h_eff: CMat, lindblad_ops: Vec<CMat>) -> Result<Self> {
        LindbladForm::partitioned(h_eff, lindblad_ops, None)
    }

    pub fn partitioned(h_eff: CMat, lindblad_ops: Vec<CMat>, bounds: Option<&[usize]>) -> Result<Self> {
        let n = h_eff.nrows();
        let defect = hermiticity_defect(h_eff.view());
        if defect > 1e-10 * max_abs(&h_eff).max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        let mut k = zeros(n);
        let mut gains = Vec::with_capacity(lindblad_ops.len());
        for l in &lindblad_ops {
            if l.nrows() != n {
                return Err(Error::DimensionMismatch { expected: n, got: l.nrows() });
            }
            let ld = dagger(l);
            let op = Op::partitioned(l, bounds);
            op.left_mul_add(&ld, C64::new(0.5, 0.0), &mut k);
            gains.push((Op::partitioned(&ld, bounds), op));
        }
        let (energies, h_extra) = split_energies(&crate::hilbert::hermitian_part(&h_eff), bounds);
        let loss = Op::partitioned(&k, bounds);
        let split = SplitForm {
            energies,
            h_extra,
            loss: if loss.is_zero() { None } else { Some(loss) },
            gains,
            gain_scale: 0.5,
        };
        Ok(LindbladForm { h_eff, lindblad_ops, split })
    }

    pub fn h_eff(&self) -> &CMat {
        &self.h_eff
    }

    pub fn lindblad_ops(&self) -> &[CMat] {
        &self.lindblad_ops
    }
}

impl Generator for LindbladForm {
    fn dim(&self) -> usize {
        self.h_eff.nrows()
    }

    fn apply(&self, _t: f64, rho: &CMat) -> Result<CMat> {
        check_dim(rho, self.h_eff.nrows())?;
        Ok(self.split.apply(rho))
    }
}

/// Redfield equation with coefficients Γ at the given horizon (asymptotic or finite time).
pub fn redfield_generator(es: &EigenSystem, cs: &CouplingSet, t: Horizon) -> Result<RedfieldForm> {
    cs.check(es.dim())?;
    let masks = gamma_masks(cs, es, t)?;
    let pairs = cs.couplings.iter().zip(&masks).map(|(c, g)| (c.op.clone(), &c.op * &g.mapv(|z| z.conj()))).collect();
    RedfieldForm::partitioned(es.energies.clone(), pairs, cs.bounds())
}

/// √x for real x, continued as i√|x| for negative arguments.
pub fn signed_sqrt(x: f64) -> C64 {
    if x >= 0.0 {
        C64::new(x.sqrt(), 0.0)
    } else {
        C64::new(0.0, (-x).sqrt())
    }
}

fn sqrt_gamma_ops(cs: &CouplingSet, masks: &[CMat]) -> Vec<CMat> {
    cs.couplings
        .iter()
        .zip(masks)
        .map(|(c, g)| &c.op * &g.mapv(|z| signed_sqrt(2.0 * z.re)))
        .filter(|l| l.iter().any(|z| *z != ZERO))
        .collect()
}

/// GAME: L_k = C_k∘√γ and the Redfield Lamb shift. A finite horizon gives
/// the TDC-GAME generator frozen at that time.
pub fn game_generator(es: &EigenSystem, cs: &CouplingSet, t: Horizon) -> Result<LindbladForm> {
    cs.check(es.dim())?;
    let masks = gamma_masks(cs, es, t)?;
    let h = es.hamiltonian() + redfield_shift_fast(cs, es, &masks);
    LindbladForm::partitioned(crate::hilbert::hermitian_part(&h), sqrt_gamma_ops(cs, &masks), cs.bounds())
}

/// GAME dissipator with a chosen Hamiltonian: PERLind (no shift), PERLind
/// with the secular shift, or ULE.
pub fn sqrt_sd_generator(es: &EigenSystem, cs: &CouplingSet, shift: Option<LambVariant>) -> Result<LindbladForm> {
    cs.check(es.dim())?;
    let masks = gamma_masks(cs, es, Horizon::Infinite)?;
    let mut h = es.hamiltonian();
    if let Some(v) = shift {
        h = h + lamb_shift(cs, es, v)?;
    }
    LindbladForm::partitioned(crate::hilbert::hermitian_part(&h), sqrt_gamma_ops(cs, &masks), cs.bounds())
}

pub fn perlind_generator(es: &EigenSystem, cs: &CouplingSet) -> Result<LindbladForm> {
    sqrt_sd_generator(es, cs, None)
}

pub fn perlind_rwa_shift_generator(es: &EigenSystem, cs: &CouplingSet) -> Result<LindbladForm> {
    sqrt_sd_generator(es, cs, Some(LambVariant::Rwa))
}

pub fn ule_generator(es: &EigenSystem, cs: &CouplingSet) -> Result<LindbladForm> {
    sqrt_sd_generator(es, cs, Some(LambVariant::Ule))
}

/// Uniform-width binning of all Bohr frequencies.
#[derive(Debug, Clone)]
pub struct Binning {
    pub lo: f64,
    pub width: f64,
    pub count: usize,
    /// Mean of the member frequencies of each bin (NaN for empty bins).
    pub centers: Vec<f64>,
}

impl Binning {
    pub fn new(es: &EigenSystem, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidArgument("bin count must be at least 1".into()));
        }
        if es.dim() == 0 {
            return Err(Error::EmptySpectrum);
        }
        let lo = es.bohr.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = es.bohr.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let width = (hi - lo) / count as f64;
        let mut b = Binning { lo, width, count, centers: vec![0.0; count] };
        let mut sums = vec![0.0; count];
        let mut counts = vec![0usize; count];
        for &w in es.bohr.iter() {
            let k = b.bin(w);
            sums[k] += w;
            counts[k] += 1;
        }
        b.centers = sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN }).collect();
        Ok(b)
    }

    pub fn bin(&self, w: f64) -> usize {
        if !(self.width > 0.0) {
            return 0;
        }
        let k = ((w - self.lo) / self.width).floor();
        (k.max(0.0) as usize).min(self.count - 1)
    }
}

/// Partial RWA: one Lindblad operator per (coupling, bin), C masked to the
/// bin and scaled by √γ at the bin's mean frequency; full Redfield Lamb shift.
pub fn prwa_generator(es: &EigenSystem, cs: &CouplingSet, n_bins: usize) -> Result<LindbladForm> {
    cs.check(es.dim())?;
    let bins = Binning::new(es, n_bins)?;
    let n = es.dim();
    let mut ops = Vec::new();
    for c in &cs.couplings {
        let mut per_bin: Vec<CMat> = vec![zeros(n); n_bins];
        for i in 0..n {
            for j in 0..n {
                if c.op[[i, j]] != ZERO {
                    per_bin[bins.bin(es.bohr[[i, j]])][[i, j]] = c.op[[i, j]];
                }
            }
        }
        for (k, m) in per_bin.into_iter().enumerate() {
            let g = c.bath.spectral_density(bins.centers[k]);
            if g > 0.0 && m.iter().any(|z| *z != ZERO) {
                ops.push(m * C64::new(g.sqrt(), 0.0));
            }
        }
    }
    let h = es.hamiltonian() + lamb_shift(cs, es, LambVariant::Redfield)?;
    LindbladForm::partitioned(crate::hilbert::hermitian_part(&h), ops, cs.bounds())
}

#[derive(Debug, Clone)]
struct RwaClass {
    entries: Vec<Entry>,
    gammas: Vec<f64>,
}

/// Davies–Lindblad (secular) equation evaluated class by class, so that its
/// cost grows with the number of frequency-matched entry pairs.
#[derive(Debug, Clone)]
pub struct RwaForm {
    h_eff: CMat,
    classes: Vec<RwaClass>,
    split: SplitForm,
}

impl RwaForm {
    pub fn h_eff(&self) -> &CMat {
        &self.h_eff
    }

    fn gain(&self, rho: &CMat) -> CMat {
        let n = self.h_eff.nrows();
        let mut out = zeros(n);
        for class in &self.classes {
            for (e, ge) in class.entries.iter().zip(&class.gammas) {
                let ce = e.value.conj();
                for (f, gf) in class.entries.iter().zip(&class.gammas) {
                    out[[e.col, f.col]] += ce * f.value * (0.5 * (ge + gf)) * rho[[e.row, f.row]];
                }
            }
        }
        out
    }
}

impl Generator for RwaForm {
    fn dim(&self) -> usize {
        self.h_eff.nrows()
    }

    fn apply(&self, _t: f64, rho: &CMat) -> Result<CMat> {
        check_dim(rho, self.dim())?;
        let x = self.split.half(rho);
        let y = if is_exactly_hermitian(rho) { x.clone() } else { self.split.half(&dagger(rho)) };
        Ok(&x + &dagger(&y) + self.gain(rho))
    }
}

pub fn rwa_generator(es: &EigenSystem, cs: &CouplingSet) -> Result<RwaForm> {
    let n = es.dim();
    cs.check(n)?;
    let tol = degeneracy_tolerance(es);
    let mut classes = Vec::new();
    let mut q = zeros(n);
    for c in &cs.couplings {
        for entries in frequency_classes(es, &c.op, tol) {
            let gammas: Vec<f64> = entries.iter().map(|e| c.bath.spectral_density(e.omega)).collect();
            if gammas.iter().all(|g| *g == 0.0) {
                continue;
            }
            for (e, ge) in entries.iter().zip(&gammas) {
                for (f, gf) in entries.iter().zip(&gammas) {
                    if e.col == f.col {
                        q[[e.row, f.row]] += e.value * f.value.conj() * (0.5 * (ge + gf));
                    }
                }
            }
            classes.push(RwaClass { entries, gammas });
        }
    }
    let h_eff = crate::hilbert::hermitian_part(&(es.hamiltonian() + lamb_shift(cs, es, LambVariant::Rwa)?));
    let (energies, h_extra) = split_energies(&h_eff, cs.bounds());
    let loss = Op::partitioned(&(q * C64::new(0.5, 0.0)), cs.bounds());
    let split = SplitForm {
        energies,
        h_extra,
        loss: if loss.is_zero() { None } else { Some(loss) },
        gains: Vec::new(),
        gain_scale: 0.0,
    };
    Ok(RwaForm { h_eff, classes, split })
}

/// A two-frequency kernel K(ω, ω').
pub trait PairKernel: Sync {
    fn eval(&self, w: f64, wp: f64) -> C64;
}

impl<F: Fn(f64, f64) -> C64 + Sync> PairKernel for F {
    fn eval(&self, w: f64, wp: f64) -> C64 {
        self(w, wp)
    }
}

/// Dense superoperator on row-major vec(ρ), index n·N + m.
#[derive(Debug, Clone)]
pub struct Superoperator {
    n: usize,
    pub mat: Array2<C64>,
}

impl Superoperator {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Matrix of a generator at time t, column by column.
    pub fn from_generator(g: &dyn Generator, t: f64) -> Result<Self> {
        let n = g.dim();
        if n > MAX_SUPEROPERATOR_DIM {
            return Err(Error::TooLarge(format!("superoperator of dimension {n} exceeds {MAX_SUPEROPERATOR_DIM}")));
        }
        let mut mat = Array2::zeros((n * n, n * n));
        for i in 0..n {
            for j in 0..n {
                let mut e = zeros(n);
                e[[i, j]] = ONE;
                let col = g.apply(t, &e)?;
                for a in 0..n {
                    for b in 0..n {
                        mat[[a * n + b, i * n + j]] = col[[a, b]];
                    }
                }
            }
        }
        Ok(Superoperator { n, mat })
    }

    /// −i[H,ρ] plus the kernel dissipator of every coupling.
    pub fn from_kernels(
        es: &EigenSystem,
        cs: &CouplingSet,
        h_eff: &CMat,
        make_kernel: &dyn Fn(&BathModel) -> Result<Box<dyn PairKernel>>,
    ) -> Result<Self> {
        let n = es.dim();
        cs.check(n)?;
        if n > MAX_SUPEROPERATOR_DIM {
            return Err(Error::TooLarge(format!("superoperator of dimension {n} exceeds {MAX_SUPEROPERATOR_DIM}")));
        }
        let nn = n * n;
        let mut mat = Array2::<C64>::zeros((nn, nn));
        let mut q = zeros(n);
        for (bath, members) in cs.bath_groups() {
            let kernel = make_kernel(&bath)?;
            // P[(a,b),(c,d)] = Σ_k conj(C_k[a,b]) C_k[c,d]
            let mut v = Array2::<C64>::zeros((members.len(), nn));
            for (r, &k) in members.iter().enumerate() {
                for (idx, z) in cs.couplings[k].op.iter().enumerate() {
                    v[[r, idx]] = *z;
                }
            }
            let p = v.t().mapv(|z| z.conj()).dot(&v);
            let w: Vec<f64> = es.bohr.iter().cloned().collect();
            for i in 0..n {
                for nrow in 0..n {
                    let a = i * n + nrow;
                    for j in 0..n {
                        for m in 0..n {
                            let c = j * n + m;
                            let pv = p[[a, c]];
                            if pv != ZERO {
                                mat[[nrow * n + m, i * n + j]] += pv * kernel.eval(w[a], w[c]);
                            }
                        }
                    }
                }
            }
            for r in 0..n {
                for m in 0..n {
                    let mut acc = ZERO;
                    for i in 0..n {
                        let pv = p[[r * n + i, m * n + i]].conj();
                        if pv != ZERO {
                            acc += pv * kernel.eval(w[m * n + i], w[r * n + i]);
                        }
                    }
                    q[[r, m]] += acc;
                }
            }
        }
        let half = C64::new(0.5, 0.0);
        for r in 0..n {
            for m in 0..n {
                for j in 0..n {
                    // (−iH − ½Q)ρ and ρ(iH − ½Q)
                    mat[[r * n + m, j * n + m]] += -I * h_eff[[r, j]] - half * q[[r, j]];
                    mat[[r * n + m, r * n + j]] += I * h_eff[[j, m]] - half * q[[j, m]];
                }
            }
        }
        Ok(Superoperator { n, mat })
    }

    pub fn apply_vec(&self, rho: &CMat) -> CMat {
        let n = self.n;
        let v = Array1::from_iter(rho.iter().cloned());
        let out = self.mat.dot(&v);
        Array2::from_shape_vec((n, n), out.to_vec()).expect("shape")
    }
}

impl Generator for Superoperator {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, _t: f64, rho: &CMat) -> Result<CMat> {
        check_dim(rho, self.n)?;
        Ok(self.apply_vec(&rho.as_standard_layout().to_owned()))
    }
}

fn boxed<K: PairKernel + 'static>(k: K) -> Box<dyn PairKernel> {
    Box::new(k)
}

/// Redfield equation in renormalized kernel form: Hamiltonian H0 + H_L
/// assembled from the unitary kernel, dissipator from G(ω,ω').
pub fn redfield_kernel_form(es: &EigenSystem, cs: &CouplingSet) -> Result<Superoperator> {
    let h = es.hamiltonian() + lamb_shift_by_kernel(cs, es, |b, w, wp| Ok(unitary_kernel(b, w, wp)))?;
    Superoperator::from_kernels(es, cs, &h, &|b: &BathModel| {
        let b = *b;
        Ok(boxed(move |w: f64, wp: f64| dissipative_kernel(&b, w, wp)))
    })
}

/// GAME in kernel form, with the geometric mean √(γγ') as kernel.
pub fn game_kernel_form(es: &EigenSystem, cs: &CouplingSet) -> Result<Superoperator> {
    let h = es.hamiltonian() + lamb_shift_by_kernel(cs, es, |b, w, wp| Ok(unitary_kernel(b, w, wp)))?;
    Superoperator::from_kernels(es, cs, &h, &|b: &BathModel| {
        let b = *b;
        Ok(boxed(move |w: f64, wp: f64| C64::new((b.spectral_density(w) * b.spectral_density(wp)).sqrt(), 0.0)))
    })
}

/// Coarse-grained Redfield equation: kernels G and 𝒦 weighted by sinc((ω−ω')T0/2).
pub fn cg_redfield_generator(es: &EigenSystem, cs: &CouplingSet, t0: f64) -> Result<Superoperator> {
    if !(t0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("coarse-graining time must be non-negative, got {t0}")));
    }
    let h = es.hamiltonian() + lamb_shift(cs, es, LambVariant::CoarseGrained(t0))?;
    Superoperator::from_kernels(es, cs, &h, &|b: &BathModel| {
        let b = *b;
        Ok(boxed(move |w: f64, wp: f64| dissipative_kernel(&b, w, wp) * sinc((w - wp) * t0 / 2.0)))
    })
}

/// Secular equation in kernel form: K = δ(ω,ω')·½[γ(ω)+γ(ω')].
pub fn rwa_kernel_form(es: &EigenSystem, cs: &CouplingSet) -> Result<Superoperator> {
    let tol = degeneracy_tolerance(es);
    let h = es.hamiltonian() + lamb_shift(cs, es, LambVariant::Rwa)?;
    Superoperator::from_kernels(es, cs, &h, &|b: &BathModel| {
        let b = *b;
        Ok(boxed(move |w: f64, wp: f64| {
            if (w - wp).abs() < tol {
                C64::new(0.5 * (b.spectral_density(w) + b.spectral_density(wp)), 0.0)
            } else {
                ZERO
            }
        }))
    })
}

/// Partial RWA in kernel form: γ at the bin center when both frequencies share a bin.
pub fn prwa_kernel_form(es: &EigenSystem, cs: &CouplingSet, n_bins: usize) -> Result<Superoperator> {
    let bins = Binning::new(es, n_bins)?;
    let h = es.hamiltonian() + lamb_shift(cs, es, LambVariant::Redfield)?;
    Superoperator::from_kernels(es, cs, &h, &|b: &BathModel| {
        let b = *b;
        let bins = bins.clone();
        Ok(boxed(move |w: f64, wp: f64| {
            let k = bins.bin(w);
            if k == bins.bin(wp) {
                C64::new(b.spectral_density(bins.centers[k]), 0.0)
            } else {
                ZERO
            }
        }))
    })
}

/// γ_τ, S_τ and derivatives at every Bohr frequency, for each distinct bath.
struct DcgTables {
    tables: Vec<(BathModel, DcgTable)>,
}

#[derive(Clone)]
struct DcgTable {
    tau: f64,
    close: f64,
    points: Arc<HashMap<u64, DcgPoint>>,
}

impl DcgTable {
    fn pair(&self, w: f64, wp: f64) -> (C64, C64) {
        let p = &self.points[&freq_key(w)];
        let q = &self.points[&freq_key(wp)];
        dcg_pair(p, q, self.tau, self.close)
    }
}

impl DcgTables {
    fn build(cs: &CouplingSet, es: &EigenSystem, tau: f64) -> Result<Self> {
        let mut freqs: Vec<f64> = es.bohr.iter().cloned().collect();
        freqs.sort_by(|a, b| a.total_cmp(b));
        freqs.dedup_by(|a, b| freq_key(*a) == freq_key(*b));
        let mut tables = Vec::new();
        for (bath, _) in cs.bath_groups() {
            let pts: Vec<Result<DcgPoint>> = freqs.par_iter().map(|&w| dcg_point(&bath, w, tau)).collect();
            let mut points = HashMap::with_capacity(freqs.len());
            for (w, p) in freqs.iter().zip(pts) {
                points.insert(freq_key(*w), p?);
            }
            tables.push((bath, DcgTable { tau, close: 1e-6 * bath.omega_c, points: Arc::new(points) }));
        }
        Ok(DcgTables { tables })
    }

    fn get(&self, bath: &BathModel) -> &DcgTable {
        &self.tables.iter().find(|(b, _)| b == bath).expect("bath table").1
    }
}

/// Dynamically coarse-grained equation at coarse-graining time τ.
pub fn dcg_generator(es: &EigenSystem, cs: &CouplingSet, tau: f64) -> Result<Superoperator> {
    if !(tau > 0.0) {
        return Err(Error::InvalidArgument(format!("DCG coarse-graining time must be positive, got {tau}")));
    }
    cs.check(es.dim())?;
    if es.dim() > MAX_SUPEROPERATOR_DIM {
        return Err(Error::TooLarge(format!("DCG needs a superoperator; dimension {} exceeds {MAX_SUPEROPERATOR_DIM}", es.dim())));
    }
    let tables = DcgTables::build(cs, es, tau)?;
    let h = es.hamiltonian() + lamb_shift_by_kernel(cs, es, |b, w, wp| Ok(tables.get(b).pair(w, wp).1))?;
    Superoperator::from_kernels(es, cs, &h, &|b: &BathModel| {
        let t = tables.get(b).clone();
        Ok(boxed(move |w: f64, wp: f64| t.pair(w, wp).0))
    })
}

/// Kernel matrix G_dc(ω_in, ω_jm) for explicit index tuples (i, n, j, m).
pub fn dcg_coefficients(es: &EigenSystem, bath: &BathModel, tau: f64, tuples: &[(usize, usize, usize, usize)]) -> Result<Vec<C64>> {
    tuples
        .iter()
        .map(|&(i, n, j, m)| {
            let p = dcg_point(bath, es.bohr[[i, n]], tau)?;
            let q = dcg_point(bath, es.bohr[[j, m]], tau)?;
            Ok(dcg_pair(&p, &q, tau, 1e-6 * bath.omega_c).0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdcKind {
    Redfield,
    Game,
}

/// Redfield or GAME with coefficients Γ_t that depend on the time since
/// the initial preparation. Frozen forms are cached per time.
pub struct TdcGenerator {
    kind: TdcKind,
    es: EigenSystem,
    cs: CouplingSet,
    cache: Mutex<Vec<(u64, Arc<SplitForm>)>>,
}

impl TdcGenerator {
    pub fn new(kind: TdcKind, es: &EigenSystem, cs: &CouplingSet) -> Result<Self> {
        cs.check(es.dim())?;
        Ok(TdcGenerator { kind, es: es.clone(), cs: cs.clone(), cache: Mutex::new(Vec::new()) })
    }

    fn form_at(&self, t: f64) -> Result<Arc<SplitForm>> {
        let key = t.to_bits();
        if let Some((_, f)) = self.cache.lock().unwrap().iter().find(|(k, _)| *k == key) {
            return Ok(f.clone());
        }
        let split = match self.kind {
            TdcKind::Redfield => redfield_generator(&self.es, &self.cs, Horizon::Finite(t))?.split,
            TdcKind::Game => game_generator(&self.es, &self.cs, Horizon::Finite(t))?.split,
        };
        let f = Arc::new(split);
        let mut cache = self.cache.lock().unwrap();
        if cache.len() >= 4 {
            cache.remove(0);
        }
        cache.push((key, f.clone()));
        Ok(f)
    }
}

impl Generator for TdcGenerator {
    fn dim(&self) -> usize {
        self.es.dim()
    }

    fn apply(&self, t: f64, rho: &CMat) -> Result<CMat> {
        check_dim(rho, self.es.dim())?;
        Ok(self.form_at(t)?.apply(rho))
    }

    fn is_time_dependent(&self) -> bool {
        true
    }
}

/// The zero generator.
pub struct NullGenerator(pub usize);

impl Generator for NullGenerator {
    fn dim(&self) -> usize {
        self.0
    }

    fn apply(&self, _t: f64, rho: &CMat) -> Result<CMat> {
        Ok(Array2::zeros(rho.raw_dim()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathKind;

    fn jc3() -> (EigenSystem, CouplingSet) {
        let es = EigenSystem::from_energies(Array1::from(vec![0.0, 0.095, 0.105]));
        let mut c = zeros(3);
        c[[1, 0]] = ONE;
        c[[2, 0]] = ONE;
        let bath = BathModel::new(BathKind::OhmicExp, 0.001, 1.0).unwrap();
        (es, CouplingSet::single(c, bath))
    }

    #[test]
    fn binning_assigns_edges() {
        let (es, _) = jc3();
        let b = Binning::new(&es, 4).unwrap();
        assert_eq!(b.bin(b.lo), 0);
        assert_eq!(b.bin(-b.lo), 3);
    }

    #[test]
    fn frequency_classes_link_close_frequencies() {
        let es = EigenSystem::from_energies(Array1::from(vec![0.0, 1.0, 2.0]));
        let a = Array2::from_elem((3, 3), ONE);
        let classes = frequency_classes(&es, &a, 1e-9);
        // ω ∈ {−2,−1,0,1,2} with multiplicities 1,2,3,2,1
        let sizes: Vec<usize> = classes.iter().map(|c| c.len()).collect();
        assert_eq!(sizes, vec![1, 2, 3, 2, 1]);
    }

    #[test]
    fn zero_time_filter_vanishes() {
        let (es, cs) = jc3();
        let f = filtered_operator(&cs.couplings[0].op, &es, &cs.couplings[0].bath, Horizon::Finite(0.0)).unwrap();
        assert!(f.iter().all(|z| *z == ZERO));
    }
}
