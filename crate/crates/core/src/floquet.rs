//! Periodically driven systems: the one-period propagator and quasi-energies,
//! Fourier-filtered coupling operators in the Floquet frame, and the
//! time-dependent GAME generator built from them.
//!
//! The Floquet frame is ρ_F = W(t)† ρ W(t), with W(t) holding the periodic
//! modes |u_φ(t)⟩ as columns; free evolution there is −i[diag ε, ρ_F] with ε
//! on the zone branch stored in `frame_energies`.

use crate::bath::{BathModel, Horizon};
use crate::error::{Error, Result};
use crate::generators::{signed_sqrt, CouplingSet, Generator, LindbladForm};
use crate::hilbert::{dagger, hermitian_part, identity, CMat};
use crate::metrics;
use crate::propagate::{step_count, Stepper};
use crate::spinchain::{SpinComponent, TruncatedChain};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

pub const DEFAULT_FRAMES: usize = 2048;
pub const UNITARITY_TOLERANCE: f64 = 1e-11;
/// Largest accepted ratio of the Nyquist to the zero-frequency component.
pub const LEAKAGE_RATIO: f64 = 1e-10;
/// Default RK4 phase increment ‖H‖·h used to pick the step count.
pub const DEFAULT_PHASE_STEP: f64 = 2e-3;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Clone)]
pub struct FloquetBasis {
    pub period: f64,
    /// Quasi-energies in (−ω_p/2, ω_p/2], ascending.
    pub quasi_energies: Array1<f64>,
    /// Branch ε_φ + k_φω_p for which |u_φ(t)⟩ has no dominant harmonic
    /// other than the zero one; the frames use this branch.
    pub frame_energies: Array1<f64>,
    pub monodromy: CMat,
    /// W(t_j), columns |u_φ(t_j)⟩, at t_j = jT/M.
    pub frames: Vec<CMat>,
    pub unitarity_defect: f64,
    pub rk4_steps: usize,
}

impl FloquetBasis {
    pub fn dim(&self) -> usize {
        self.quasi_energies.len()
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// ω_p = 2π/T.
    pub fn drive_frequency(&self) -> f64 {
        2.0 * PI / self.period
    }

    /// Frame holding t (which must lie on the sample grid).
    pub fn frame_at(&self, t: f64) -> Result<&CMat> {
        Ok(&self.frames[grid_index(t, self.period, self.frames.len())?])
    }

    /// W†AW at every sample time.
    pub fn frame_operator(&self, a: &CMat) -> Result<Vec<CMat>> {
        if a.nrows() != self.dim() || a.ncols() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: a.nrows() });
        }
        Ok(self.frames.iter().map(|w| dagger(w).dot(a).dot(w)).collect())
    }

    /// Lab-frame state from a Floquet-frame state at a grid time.
    pub fn to_lab(&self, rho_f: &CMat, t: f64) -> Result<CMat> {
        let w = self.frame_at(t)?;
        Ok(w.dot(rho_f).dot(&dagger(w)))
    }

    pub fn to_floquet(&self, rho: &CMat, t: f64) -> Result<CMat> {
        let w = self.frame_at(t)?;
        Ok(dagger(w).dot(rho).dot(w))
    }
}

fn grid_index(t: f64, period: f64, count: usize) -> Result<usize> {
    let s = t.rem_euclid(period) / period * count as f64;
    let k = s.round();
    if (s - k).abs() > 1e-6 {
        return Err(Error::InvalidArgument(format!("t = {t} is not on the grid of {count} samples per period")));
    }
    Ok(k as usize % count)
}

fn to_nalgebra(a: &CMat) -> nalgebra::DMatrix<C64> {
    nalgebra::DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[[i, j]])
}

/// Integrates dU/dt = −iH(t)U over one period with RK4, `substeps` steps
/// per sample interval, and diagonalizes U(T).
pub fn monodromy<F>(h: F, period: f64, frames: usize, substeps: usize) -> Result<FloquetBasis>
where
    F: Fn(f64) -> CMat,
{
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidArgument(format!("period must be positive, got {period}")));
    }
    if frames < 2 || !frames.is_power_of_two() || substeps == 0 {
        return Err(Error::InvalidArgument(format!("need a power-of-two frame count and substeps ≥ 1, got {frames}, {substeps}")));
    }
    let n = h(0.0).nrows();
    let dt = period / (frames * substeps) as f64;
    let mi = C64::new(0.0, -1.0);
    let rhs = |t: f64, u: &CMat| -> CMat { h(t).dot(u) * mi };
    let mut u = identity(n);
    let mut us = Vec::with_capacity(frames);
    for j in 0..frames {
        us.push(u.clone());
        for s in 0..substeps {
            let t = (j * substeps + s) as f64 * dt;
            let half = C64::new(0.5 * dt, 0.0);
            let k1 = rhs(t, &u);
            let k2 = rhs(t + 0.5 * dt, &(&u + &(&k1 * half)));
            let k3 = rhs(t + 0.5 * dt, &(&u + &(&k2 * half)));
            let k4 = rhs(t + dt, &(&u + &(&k3 * C64::new(dt, 0.0))));
            u = &u + &((k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0));
        }
    }
    let defect = metrics::trace_norm(&(u.dot(&dagger(&u)) - identity(n)))?;
    if defect > UNITARITY_TOLERANCE {
        return Err(Error::UnitarityLoss(defect));
    }
    let schur = nalgebra::Schur::new(to_nalgebra(&u));
    let (q, t) = schur.unpack();
    let wp = 2.0 * PI / period;
    let mut modes: Vec<(f64, usize)> = (0..n)
        .map(|k| {
            let mut e = -t[(k, k)].arg() / period;
            if e <= -0.5 * wp {
                e += wp;
            }
            (e, k)
        })
        .collect();
    modes.sort_by(|a, b| a.0.total_cmp(&b.0));
    let v = Array2::from_shape_fn((n, n), |(i, c)| q[(i, modes[c].1)]);
    let eps: Array1<f64> = modes.iter().map(|m| m.0).collect();
    let build = |e: &Array1<f64>| -> Vec<CMat> {
        us.iter()
            .enumerate()
            .map(|(j, uj)| {
                let tj = j as f64 * period / frames as f64;
                let mut w = uj.dot(&v);
                for (c, mut col) in w.columns_mut().into_iter().enumerate() {
                    col *= C64::from_polar(1.0, e[c] * tj);
                }
                w
            })
            .collect()
    };
    let folded = build(&eps);
    let spec = fft_frames(&folded, false);
    let shifted: Array1<f64> = (0..n)
        .map(|c| {
            let weight = |j: usize| spec[j].column(c).iter().map(|z| z.norm_sqr()).sum::<f64>();
            let best = (0..frames).max_by(|a, b| weight(*a).total_cmp(&weight(*b))).unwrap_or(0);
            eps[c] - harmonic(best, frames) as f64 * wp
        })
        .collect();
    Ok(FloquetBasis {
        period,
        quasi_energies: eps,
        frames: build(&shifted),
        frame_energies: shifted,
        monodromy: u,
        unitarity_defect: defect,
        rk4_steps: frames * substeps,
    })
}

/// Substeps per sample interval such that ‖H‖·dt stays below `phase_step`.
pub fn substeps_for(h_norm: f64, period: f64, frames: usize, phase_step: f64) -> usize {
    ((h_norm * period / (frames as f64 * phase_step)).ceil() as usize).max(1)
}

/// Entrywise DFT along time of a sequence of N×N frames.
fn fft_frames(frames: &[CMat], inverse: bool) -> Vec<CMat> {
    let m = frames.len();
    let (r, c) = frames[0].dim();
    let mut planner = FftPlanner::<f64>::new();
    let fft = if inverse { planner.plan_fft_inverse(m) } else { planner.plan_fft_forward(m) };
    let mut out = vec![Array2::<C64>::zeros((r, c)); m];
    let mut buf = vec![ZERO; m];
    let scale = if inverse { 1.0 / m as f64 } else { 1.0 };
    for i in 0..r {
        for j in 0..c {
            for (b, f) in buf.iter_mut().zip(frames) {
                *b = f[[i, j]];
            }
            fft.process(&mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                o[[i, j]] = b * scale;
            }
        }
    }
    out
}

/// Forward then inverse transform; the identity up to rounding.
pub fn fft_round_trip(frames: &[CMat]) -> Vec<CMat> {
    fft_frames(&fft_frames(frames, false), true)
}

/// Signed harmonic of FFT bin j: j for j ≤ M/2, j − M above.
pub fn harmonic(j: usize, m: usize) -> i64 {
    if j <= m / 2 {
        j as i64
    } else {
        j as i64 - m as i64
    }
}

/// Fourier-filtered frames together with the Nyquist-to-DC ratio of the input.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub frames: Vec<CMat>,
    pub leakage: f64,
}

/// mask(ε_φ − ε_ξ + qω_p) for every FFT bin, as one matrix per bin.
pub fn mask_table<F>(basis: &FloquetBasis, mask: F) -> Result<Vec<CMat>>
where
    F: Fn(f64) -> Result<C64> + Sync,
{
    let m = basis.frame_count();
    let n = basis.dim();
    let wp = basis.drive_frequency();
    let eps = &basis.frame_energies;
    (0..m)
        .into_par_iter()
        .map(|j| {
            let q = harmonic(j, m) as f64;
            let mut out = Array2::zeros((n, n));
            for a in 0..n {
                for b in 0..n {
                    out[[a, b]] = mask(eps[a] - eps[b] + q * wp)?;
                }
            }
            Ok(out)
        })
        .collect()
}

/// IFFT{table ∘ FFT[A(t)]} with a table from `mask_table`.
pub fn filter_with(a_frames: &[CMat], table: &[CMat]) -> Result<Filtered> {
    let m = a_frames.len();
    if m != table.len() {
        return Err(Error::DimensionMismatch { expected: table.len(), got: m });
    }
    let mut spec = fft_frames(a_frames, false);
    let dc = crate::hilbert::frobenius(&spec[0]);
    let nyq = crate::hilbert::frobenius(&spec[m / 2]);
    let leakage = if dc > 0.0 { nyq / dc } else { 0.0 };
    for (s, t) in spec.iter_mut().zip(table) {
        *s *= t;
    }
    Ok(Filtered { frames: fft_frames(&spec, true), leakage })
}

fn gamma_conj_table(basis: &FloquetBasis, bath: &BathModel) -> Result<Vec<CMat>> {
    mask_table(basis, |w| Ok(bath.half_fourier(w, Horizon::Infinite)?.conj()))
}

fn sqrt_gamma_table(basis: &FloquetBasis, bath: &BathModel) -> Result<Vec<CMat>> {
    mask_table(basis, |w| Ok(signed_sqrt(2.0 * bath.half_fourier(w, Horizon::Infinite)?.re)))
}

/// A_f(t) = IFFT{Γ* ∘ FFT[A(t)]}; the static limit is the filtered operator A∘Γ*.
pub fn floquet_filtered(basis: &FloquetBasis, a_frames: &[CMat], bath: &BathModel) -> Result<Filtered> {
    filter_with(a_frames, &gamma_conj_table(basis, bath)?)
}

/// L(t) = IFFT{√γ ∘ FFT[A(t)]}.
pub fn floquet_lindblad(basis: &FloquetBasis, a_frames: &[CMat], bath: &BathModel) -> Result<Filtered> {
    filter_with(a_frames, &sqrt_gamma_table(basis, bath)?)
}

/// Time-dependent GAME in the Floquet frame: H(t) = diag ε + (i/2)Σ(C_f C† − C C_f†)
/// and L_k(t), stored at the midpoints of `steps` uniform steps per period.
pub struct FloquetGame {
    period: f64,
    steps: usize,
    frames: Vec<(CMat, Vec<CMat>)>,
    cache: Mutex<Option<(usize, Arc<LindbladForm>)>>,
    pub warnings: Vec<String>,
}

impl FloquetGame {
    pub fn new(basis: &FloquetBasis, cs: &CouplingSet, steps: usize) -> Result<Self> {
        let m = basis.frame_count();
        if steps == 0 || m % (2 * steps) != 0 {
            return Err(Error::InvalidArgument(format!("{steps} steps per period do not divide {m} frames into midpoints")));
        }
        cs.check(basis.dim())?;
        let stride = m / steps;
        let picks: Vec<usize> = (0..steps).map(|i| i * stride + stride / 2).collect();
        let mut hs: Vec<CMat> = picks.iter().map(|_| Array2::from_diag(&basis.frame_energies.mapv(|e| C64::new(e, 0.0)))).collect();
        let mut ops: Vec<Vec<CMat>> = vec![Vec::with_capacity(cs.len()); steps];
        let mut warnings = Vec::new();
        let mut tables: Vec<(BathModel, Vec<CMat>, Vec<CMat>)> = Vec::new();
        for c in &cs.couplings {
            if !tables.iter().any(|t| t.0 == c.bath) {
                tables.push((c.bath, gamma_conj_table(basis, &c.bath)?, sqrt_gamma_table(basis, &c.bath)?));
            }
        }
        let filtered: Vec<Result<(Vec<CMat>, Filtered, Filtered)>> = cs
            .couplings
            .par_iter()
            .map(|c| {
                let (_, gt, st) = tables.iter().find(|t| t.0 == c.bath).unwrap();
                let a = basis.frame_operator(&c.op)?;
                let f = filter_with(&a, gt)?;
                let l = filter_with(&a, st)?;
                Ok((a, f, l))
            })
            .collect();
        for (k, r) in filtered.into_iter().enumerate() {
            let (a, f, l) = r?;
            if f.leakage > LEAKAGE_RATIO {
                warnings.push(format!("coupling {k}: spectral leakage {:.2e} at half the sampling frequency", f.leakage));
            }
            for (s, &j) in picks.iter().enumerate() {
                let cf = &f.frames[j];
                let shift = cf.dot(&dagger(&a[j])) - a[j].dot(&dagger(cf));
                hs[s] = &hs[s] + &(shift * C64::new(0.0, 0.5));
                if l.frames[j].iter().any(|z| *z != ZERO) {
                    ops[s].push(l.frames[j].clone());
                }
            }
        }
        let frames = hs.into_iter().map(|h| hermitian_part(&h)).zip(ops).collect();
        Ok(FloquetGame { period: basis.period, steps, frames, cache: Mutex::new(None), warnings })
    }

    /// Step size whose midpoints are the stored frames.
    pub fn dt(&self) -> f64 {
        self.period / self.steps as f64
    }

    fn form(&self, t: f64) -> Result<Arc<LindbladForm>> {
        let s = t.rem_euclid(self.period) / self.dt() - 0.5;
        let k = s.round();
        if (s - k).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!(
                "Floquet GAME is stored at step midpoints; t = {t} is not one (use the frozen-midpoint stepper with dt = T/{})",
                self.steps
            )));
        }
        let idx = (k as i64).rem_euclid(self.steps as i64) as usize;
        if let Some((i, f)) = self.cache.lock().unwrap().as_ref() {
            if *i == idx {
                return Ok(f.clone());
            }
        }
        let (h, ops) = &self.frames[idx];
        let f = Arc::new(LindbladForm::new(h.clone(), ops.clone())?);
        *self.cache.lock().unwrap() = Some((idx, f.clone()));
        Ok(f)
    }

    pub fn hamiltonian_at(&self, t: f64) -> Result<CMat> {
        Ok(self.form(t)?.h_eff().clone())
    }

    pub fn lindblad_ops_at(&self, t: f64) -> Result<Vec<CMat>> {
        Ok(self.form(t)?.lindblad_ops().to_vec())
    }
}

impl Generator for FloquetGame {
    fn dim(&self) -> usize {
        self.frames[0].0.nrows()
    }

    fn apply(&self, t: f64, rho: &CMat) -> Result<CMat> {
        self.form(t)?.apply(t, rho)
    }

    fn is_time_dependent(&self) -> bool {
        true
    }
}

/// Square wave with raised-cosine edges: high on the first half period,
/// zero on the second, each edge taking `ramp`·T.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareWave {
    pub period: f64,
    pub ramp: f64,
}

impl SquareWave {
    pub fn new(period: f64, ramp: f64) -> Result<Self> {
        if !(period > 0.0) || !(ramp > 0.0 && ramp < 0.25) {
            return Err(Error::InvalidArgument(format!("need T > 0 and ramp fraction in (0, 0.25), got {period}, {ramp}")));
        }
        Ok(SquareWave { period, ramp })
    }

    pub fn value(&self, t: f64) -> f64 {
        let s = t.rem_euclid(self.period) / self.period;
        let r = self.ramp;
        if s < r {
            0.5 * (1.0 - (PI * s / r).cos())
        } else if s < 0.5 {
            1.0
        } else if s < 0.5 + r {
            0.5 * (1.0 + (PI * (s - 0.5) / r).cos())
        } else {
            0.0
        }
    }
}

/// Truncated chain under H(t) = H0 − ε_z S_x h(t), energies measured from their mean.
pub struct DrivenChain {
    pub chain: TruncatedChain,
    pub wave: SquareWave,
    /// ε_z in absolute units.
    pub amplitude: f64,
    pub sx: CMat,
    pub offset: f64,
}

impl DrivenChain {
    /// Period in units of T_fm, amplitude in units of Δ.
    pub fn new(chain: TruncatedChain, period_fm: f64, amplitude_gap: f64, ramp: f64) -> Result<Self> {
        let wave = SquareWave::new(period_fm * chain.fmr_period(), ramp)?;
        let sx = chain.total_spin(SpinComponent::X)?;
        let offset = chain.es.energies.mean().unwrap_or(0.0);
        let amplitude = amplitude_gap * chain.gap;
        Ok(DrivenChain { chain, wave, amplitude, sx, offset })
    }

    pub fn hamiltonian(&self, t: f64) -> CMat {
        let mut h = &self.sx * C64::new(-self.amplitude * self.wave.value(t), 0.0);
        for (i, e) in self.chain.es.energies.iter().enumerate() {
            h[[i, i]] += e - self.offset;
        }
        h
    }

    pub fn basis(&self, frames: usize, phase_step: f64) -> Result<FloquetBasis> {
        let spread = self.chain.es.energies.iter().map(|e| (e - self.offset).abs()).fold(0.0, f64::max);
        let sx_norm = 0.5 * self.chain.model.n as f64;
        let substeps = substeps_for(spread + self.amplitude * sx_norm, self.wave.period, frames, phase_step);
        monodromy(|t| self.hamiltonian(t), self.wave.period, frames, substeps)
    }
}

impl DrivenChain {
    /// Σ|ρ_ab| over pairs of levels with opposite nonzero magnetization.
    pub fn opposite_magnetization_coherence(&self, rho: &CMat) -> f64 {
        let sz = &self.chain.sz;
        let mut acc = 0.0;
        for a in 0..sz.len() {
            for b in 0..sz.len() {
                if sz[a] != 0.0 && (sz[a] + sz[b]).abs() < 1e-9 {
                    acc += rho[[a, b]].norm();
                }
            }
        }
        acc
    }

    /// ρ in the eigenbasis of a total-spin component, ordered by eigenvalue.
    pub fn in_spin_basis(&self, rho: &CMat, c: SpinComponent) -> Result<(Array1<f64>, CMat)> {
        let es = crate::hilbert::diagonalize(&self.chain.total_spin(c)?)?;
        let v = &es.basis;
        Ok((es.energies.clone(), dagger(v).dot(rho).dot(v)))
    }
}

/// Lab-frame results of a Floquet GAME run.
#[derive(Debug, Clone, Default)]
pub struct FloquetRun {
    pub times: Vec<f64>,
    /// Re Tr(Oρ) for each requested observable, per time.
    pub observables: Vec<Vec<f64>>,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub snapshots: Vec<(f64, CMat)>,
}

/// Evolves a lab-frame state with Floquet GAME for `t_max`, recording
/// observables every `sample` steps and full states at the requested step indices.
pub fn evolve_floquet(
    basis: &FloquetBasis,
    game: &FloquetGame,
    rho0: &CMat,
    t_max: f64,
    epsilon: f64,
    observables: &[CMat],
    sample: usize,
    snapshot_steps: &[usize],
) -> Result<FloquetRun> {
    let dt = game.dt();
    let steps = step_count(t_max, dt)?;
    let stepper = Stepper::FrozenMidpoint { epsilon };
    let mut rho_f = basis.to_floquet(rho0, 0.0)?;
    let mut run = FloquetRun { observables: vec![Vec::new(); observables.len()], min_eigenvalue: f64::INFINITY, ..Default::default() };
    let sample = sample.max(1);
    for k in 0..=steps {
        let t = k as f64 * dt;
        if k > 0 {
            rho_f = stepper.step(game, &rho_f, t - dt, dt)?;
        }
        let keep = snapshot_steps.contains(&k);
        if k % sample != 0 && k != steps && !keep {
            continue;
        }
        let rho = basis.to_lab(&rho_f, t)?;
        if keep {
            run.snapshots.push((t, rho.clone()));
        }
        if k % sample != 0 && k != steps {
            continue;
        }
        run.times.push(t);
        for (o, out) in observables.iter().zip(run.observables.iter_mut()) {
            let mut acc = ZERO;
            for i in 0..o.nrows() {
                for j in 0..o.ncols() {
                    acc += o[[i, j]] * rho[[j, i]];
                }
            }
            out.push(acc.re);
        }
        run.max_trace_drift = run.max_trace_drift.max(metrics::trace_deviation(&rho));
        run.min_eigenvalue = run.min_eigenvalue.min(metrics::min_eigenvalue(&rho)?);
    }
    Ok(run)
}
