//! V-type three-level system with one bosonic bath: H_sb = C⊗B + C†⊗B†,
//! C = |1⟩⟨0| + |2⟩⟨0|. Exact single-excitation dynamics, renormalized
//! levels and widths, and master-equation comparisons.

use crate::bath::{BathKind, BathModel, Horizon};
use crate::error::{Error, Result};
use crate::generators::{game_generator, lamb_shift, perlind_generator, redfield_generator, CouplingSet, Generator, LambVariant};
use crate::hilbert::{diagonalize, expm, zeros, CMat, DensityMatrix, EigenSystem};
use crate::metrics::{fit_decay_window, trace_distance, FitResult};
use crate::propagate::{evolve_lockstep, step_power_series, Stepper, DEFAULT_EPSILON};
use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use std::f64::consts::PI;

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jc3Model {
    pub e1: f64,
    pub e2: f64,
    pub bath: BathModel,
}

impl Jc3Model {
    pub fn new(e1: f64, e2: f64, bath: BathModel) -> Result<Self> {
        if !(e1 > 0.0 && e1 <= e2) {
            return Err(Error::InvalidArgument(format!("need 0 < e1 ≤ e2, got e1={e1}, e2={e2}")));
        }
        Ok(Jc3Model { e1, e2, bath })
    }

    /// E1 = 0.095ω_c, E2 = 0.105ω_c, Ohmic bath with exponential cutoff.
    pub fn case_a(g: f64) -> Result<Self> {
        Jc3Model::new(0.095, 0.105, BathModel::new(BathKind::OhmicExp, g, 1.0)?)
    }

    /// E1 = 0.09975ω_c, E2 = 0.10025ω_c.
    pub fn case_b(g: f64) -> Result<Self> {
        Jc3Model::new(0.09975, 0.10025, BathModel::new(BathKind::OhmicExp, g, 1.0)?)
    }

    /// H0(λ) = E1|1⟩⟨1| + [E2 − λ(E2−E1)]|2⟩⟨2|; levels cross at λ = 1.
    pub fn at_lambda(&self, lambda: f64) -> Jc3Model {
        Jc3Model { e1: self.e1, e2: self.e2 - lambda * (self.e2 - self.e1), bath: self.bath }
    }

    pub fn eigensystem(&self) -> EigenSystem {
        EigenSystem::from_energies(Array1::from(vec![0.0, self.e1, self.e2]))
    }

    pub fn coupling(&self) -> CMat {
        let mut c = zeros(3);
        c[[1, 0]] = ONE;
        c[[2, 0]] = ONE;
        c
    }

    pub fn coupling_set(&self) -> CouplingSet {
        CouplingSet::single(self.coupling(), self.bath)
    }

    /// H0 plus the Redfield Lamb shift.
    pub fn renormalized_hamiltonian(&self) -> Result<CMat> {
        let es = self.eigensystem();
        Ok(es.hamiltonian() + lamb_shift(&self.coupling_set(), &es, LambVariant::Redfield)?)
    }

    /// Bare widths γ(E1), γ(E2).
    pub fn bare_widths(&self) -> (f64, f64) {
        (self.bath.spectral_density(self.e1), self.bath.spectral_density(self.e2))
    }
}

#[derive(Debug, Clone)]
pub struct RenormalizedLevels {
    /// Closed-form eigenvalues of the renormalized {|1⟩,|2⟩} block.
    pub e1p: f64,
    pub e2p: f64,
    /// Same eigenvalues from numerical diagonalization.
    pub e1p_numeric: f64,
    pub e2p_numeric: f64,
    /// Eigenvectors in the {|1⟩,|2⟩} block, lower level first.
    pub states: [Array1<C64>; 2],
}

impl RenormalizedLevels {
    pub fn gap(&self) -> f64 {
        self.e2p - self.e1p
    }
}

pub fn renormalized_levels(model: &Jc3Model) -> Result<RenormalizedLevels> {
    let b = &model.bath;
    let (s1, s2) = (b.principal_density(model.e1), b.principal_density(model.e2));
    let (g1, g2) = model.bare_widths();
    let ebar = 0.5 * (model.e1 + model.e2);
    let sbar = 0.5 * (s1 + s2);
    let de = model.e2 - model.e1;
    let ds = s2 - s1;
    let dg = g2 - g1;
    let root = (sbar * sbar + (0.5 * (de + ds)).powi(2) + (dg / 4.0).powi(2)).sqrt();

    let h = model.renormalized_hamiltonian()?;
    let block = Array2::from_shape_fn((2, 2), |(i, j)| h[[i + 1, j + 1]]);
    let es = diagonalize(&block)?;
    let states = [es.basis.column(0).to_owned(), es.basis.column(1).to_owned()];
    Ok(RenormalizedLevels {
        e1p: ebar + sbar - root,
        e2p: ebar + sbar + root,
        e1p_numeric: es.energies[0],
        e2p_numeric: es.energies[1],
        states,
    })
}

/// Second-order expansion of the renormalized levels in ΔE = E2 − E1
/// around the crossing, with derivatives of γ and S at the mean energy.
pub fn strong_anticrossing_levels(model: &Jc3Model) -> (f64, f64) {
    let b = &model.bath;
    let ebar = 0.5 * (model.e1 + model.e2);
    let de = model.e2 - model.e1;
    let s = 0.5 * (b.principal_density(model.e1) + b.principal_density(model.e2));
    let h = 1e-6 * b.omega_c;
    let ds = (b.principal_density(ebar + h) - b.principal_density(ebar - h)) / (2.0 * h);
    let dg = b.spectral_density_derivative(ebar);
    let kappa = dg * dg / 16.0 + 0.25 * (1.0 + ds).powi(2);
    let shift = kappa * de * de / (2.0 * s.abs());
    (ebar + s - s.abs() - shift, ebar + s + s.abs() + shift)
}

/// Widths of the renormalized states in the strong-anticrossing regime:
/// Γ2' = (Γ1+Γ2)/4·[ΔE/2S̄]², Γ1' = Γ1 + Γ2 − Γ2'.
pub fn table_widths(model: &Jc3Model) -> (f64, f64) {
    let (g1, g2) = model.bare_widths();
    let b = &model.bath;
    let sbar = 0.5 * (b.principal_density(model.e1) + b.principal_density(model.e2));
    let de = model.e2 - model.e1;
    let g2p = 0.25 * (g1 + g2) * (de / (2.0 * sbar)).powi(2);
    (g1 + g2 - g2p, g2p)
}

/// γ continued to complex frequencies (exponential-cutoff baths only).
fn spectral_density_complex(b: &BathModel, z: C64) -> Result<C64> {
    let tp = 2.0 * PI * b.g;
    let e = (-z / b.omega_c).exp();
    match b.kind {
        BathKind::OhmicExp => Ok(z * e * tp),
        BathKind::SuperOhmicExp => Ok(z * z * z / (b.omega_c * b.omega_c) * e * tp),
        BathKind::OhmicDrudeLorentz => Err(Error::UnsupportedBathKind(b.kind.name())),
    }
}

/// Sum-of-exponentials form C(t) ≈ Σ_k w_k e^{−iω_k t} with Im ω_k < 0,
/// from C(t) = (1/2π)∫γ(ω)e^{−iωt}dω on the ray ω = x e^{−iπ/4} and a
/// trapezoid rule in ln x.
#[derive(Debug, Clone)]
pub struct SoeKernel {
    pub weights: Vec<C64>,
    pub freqs: Vec<C64>,
}

impl SoeKernel {
    /// Accurate for 0 ≤ t ≤ t_max.
    pub fn new(bath: &BathModel, t_max: f64) -> Result<Self> {
        let theta = PI / 4.0;
        let rot = C64::from_polar(1.0, -theta);
        let h = 0.125;
        let x_max = 45.0 * bath.omega_c / theta.cos();
        let x_min = 1e-5 / t_max.max(1.0 / bath.omega_c);
        let (u0, u1) = (x_min.ln(), x_max.ln());
        let count = ((u1 - u0) / h).ceil() as usize + 1;
        let mut weights = Vec::with_capacity(count);
        let mut freqs = Vec::with_capacity(count);
        for k in 0..count {
            let x = (u0 + k as f64 * h).exp();
            let z = rot * x;
            weights.push(spectral_density_complex(bath, z)? * rot * (h * x / (2.0 * PI)));
            freqs.push(z);
        }
        Ok(SoeKernel { weights, freqs })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn eval(&self, t: f64) -> C64 {
        self.weights.iter().zip(&self.freqs).map(|(w, z)| w * (-C64::i() * z * t).exp()).sum()
    }
}

/// Single-excitation amplitudes on a uniform time grid, in the Schrödinger
/// picture (a_i) and the interaction picture (c_i = a_i e^{iE_i t}).
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub e1: f64,
    pub e2: f64,
    pub times: Vec<f64>,
    pub a1: Vec<C64>,
    pub a2: Vec<C64>,
}

impl ExactSolution {
    pub fn c1(&self, k: usize) -> C64 {
        self.a1[k] * C64::from_polar(1.0, self.e1 * self.times[k])
    }

    pub fn c2(&self, k: usize) -> C64 {
        self.a2[k] * C64::from_polar(1.0, self.e2 * self.times[k])
    }

    pub fn populations(&self, k: usize) -> (f64, f64) {
        (self.a1[k].norm_sqr(), self.a2[k].norm_sqr())
    }

    /// Reduced 3×3 state: the pure excited block plus the ground population.
    pub fn state(&self, k: usize) -> CMat {
        let a = [self.a1[k], self.a2[k]];
        let mut rho = zeros(3);
        for i in 0..2 {
            for j in 0..2 {
                rho[[i + 1, j + 1]] = a[i] * a[j].conj();
            }
        }
        rho[[0, 0]] = C64::new(1.0 - a[0].norm_sqr() - a[1].norm_sqr(), 0.0);
        rho
    }
}

/// Exact evolution from c1 = 1, c2 = 0. With the kernel in
/// sum-of-exponentials form the Volterra pair becomes a linear ODE for
/// (a1, a2, y_k), y_k(t) = ∫_0^t e^{−iω_k(t−s)}(a1 + a2)(s) ds, which is
/// propagated with its exact one-step matrix exponential.
pub fn exact_evolve(model: &Jc3Model, t_max: f64, dt: f64) -> Result<ExactSolution> {
    exact_evolve_from(model, (ONE, ZERO), t_max, dt)
}

pub fn exact_evolve_from(model: &Jc3Model, init: (C64, C64), t_max: f64, dt: f64) -> Result<ExactSolution> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_max ≥ 0, got dt={dt}, t_max={t_max}")));
    }
    let steps = crate::propagate::step_count(t_max, dt)?;
    let mut sol = ExactSolution { e1: model.e1, e2: model.e2, times: vec![0.0], a1: vec![init.0], a2: vec![init.1] };
    if model.bath.g == 0.0 {
        for k in 1..=steps {
            let t = k as f64 * dt;
            sol.times.push(t);
            sol.a1.push(init.0 * C64::from_polar(1.0, -model.e1 * t));
            sol.a2.push(init.1 * C64::from_polar(1.0, -model.e2 * t));
        }
        return Ok(sol);
    }
    let soe = SoeKernel::new(&model.bath, steps as f64 * dt)?;
    let k = soe.len();
    let n = k + 2;
    let mut m = Array2::<C64>::zeros((n, n));
    m[[0, 0]] = C64::new(0.0, -model.e1);
    m[[1, 1]] = C64::new(0.0, -model.e2);
    for (j, (w, z)) in soe.weights.iter().zip(&soe.freqs).enumerate() {
        m[[0, j + 2]] = -w;
        m[[1, j + 2]] = -w;
        m[[j + 2, 0]] = ONE;
        m[[j + 2, 1]] = ONE;
        m[[j + 2, j + 2]] = -C64::i() * z;
    }
    let p = expm(&(m * C64::new(dt, 0.0)));
    let mut v = Array1::<C64>::zeros(n);
    v[0] = init.0;
    v[1] = init.1;
    for step in 1..=steps {
        v = p.dot(&v);
        sol.times.push(step as f64 * dt);
        sol.a1.push(v[0]);
        sol.a2.push(v[1]);
    }
    Ok(sol)
}

/// Direct discretization of the Volterra pair in the interaction picture
/// with trapezoid convolutions and one predictor–corrector pass per step.
/// Second order in dt and O(steps²) in cost.
pub fn volterra_trapezoid(model: &Jc3Model, t_max: f64, dt: f64) -> Result<ExactSolution> {
    let wc = model.bath.omega_c;
    if dt * wc > 0.1 {
        return Err(Error::StepTooLarge { dt, limit: 0.1 / wc });
    }
    let steps = crate::propagate::step_count(t_max, dt)?;
    let (e1, e2) = (model.e1, model.e2);
    let w12 = e1 - e2;
    let mut f1 = Vec::with_capacity(steps + 1);
    let mut f2 = Vec::with_capacity(steps + 1);
    for j in 0..=steps {
        let t = j as f64 * dt;
        let c = model.bath.correlation_function(t)?;
        f1.push(C64::from_polar(1.0, e1 * t) * c);
        f2.push(C64::from_polar(1.0, e2 * t) * c);
    }
    let conv = |f: &[C64], c: &[C64], last: C64, n: usize| -> C64 {
        // ∫_0^{t_n} f(τ) c(t_n − τ) dτ with c(t_n) = last
        if n == 0 {
            return ZERO;
        }
        let mut acc = f[0] * last * 0.5 + f[n] * c[0] * 0.5;
        for j in 1..n {
            acc += f[j] * c[n - j];
        }
        acc * dt
    };
    let deriv = |n: usize, c1: &[C64], c2: &[C64], l1: C64, l2: C64| -> (C64, C64) {
        let t = n as f64 * dt;
        let i1 = conv(&f1, c1, l1, n);
        let i2 = conv(&f2, c2, l2, n);
        let d1 = -i1 - C64::from_polar(1.0, w12 * t) * i2;
        let d2 = -i2 - C64::from_polar(1.0, -w12 * t) * i1;
        (d1, d2)
    };
    let mut c1 = vec![ONE];
    let mut c2 = vec![ZERO];
    let mut d = (ZERO, ZERO);
    for n in 0..steps {
        let (p1, p2) = (c1[n] + d.0 * dt, c2[n] + d.1 * dt);
        c1.push(p1);
        c2.push(p2);
        let dn = deriv(n + 1, &c1, &c2, p1, p2);
        let (q1, q2) = (c1[n] + (d.0 + dn.0) * (0.5 * dt), c2[n] + (d.1 + dn.1) * (0.5 * dt));
        c1[n + 1] = q1;
        c2[n + 1] = q2;
        d = deriv(n + 1, &c1, &c2, q1, q2);
    }
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();
    let a1 = times.iter().zip(&c1).map(|(t, c)| c * C64::from_polar(1.0, -e1 * t)).collect();
    let a2 = times.iter().zip(&c2).map(|(t, c)| c * C64::from_polar(1.0, -e2 * t)).collect();
    Ok(ExactSolution { e1, e2, times, a1, a2 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Jc3Equation {
    Redfield,
    Game,
    /// GAME dissipator without the Lamb shift.
    Perlind,
}

pub fn generator(model: &Jc3Model, eq: Jc3Equation) -> Result<Box<dyn Generator>> {
    let es = model.eigensystem();
    let cs = model.coupling_set();
    Ok(match eq {
        Jc3Equation::Redfield => Box::new(redfield_generator(&es, &cs, Horizon::Infinite)?),
        Jc3Equation::Game => Box::new(game_generator(&es, &cs, Horizon::Infinite)?),
        Jc3Equation::Perlind => Box::new(perlind_generator(&es, &cs)?),
    })
}

/// Trace distances sampled along a run from |1⟩.
#[derive(Debug, Clone, Default)]
pub struct ErrorTrace {
    pub times: Vec<f64>,
    pub game_exact: Vec<f64>,
    pub redfield_exact: Vec<f64>,
    pub perlind_exact: Vec<f64>,
    pub redfield_game: Vec<f64>,
    pub exact_p1: Vec<f64>,
    pub exact_p2: Vec<f64>,
    pub game_p1: Vec<f64>,
    pub game_p2: Vec<f64>,
}

fn peak(v: &[f64]) -> f64 {
    v.iter().cloned().fold(0.0, f64::max)
}

impl ErrorTrace {
    pub fn peak_game_exact(&self) -> f64 {
        peak(&self.game_exact)
    }

    pub fn peak_redfield_game(&self) -> f64 {
        peak(&self.redfield_game)
    }

    pub fn peak_perlind_exact(&self) -> f64 {
        peak(&self.perlind_exact)
    }
}

/// Runs Redfield, GAME and PERLind from |1⟩ with step dt and compares with
/// the exact state every `sample` steps.
pub fn compare_with_exact(model: &Jc3Model, t_max: f64, dt: f64, sample: usize) -> Result<ErrorTrace> {
    if sample == 0 {
        return Err(Error::InvalidArgument("sampling interval must be at least one step".into()));
    }
    let steps = crate::propagate::step_count(t_max, dt)?;
    let exact = exact_evolve(model, steps as f64 * dt, dt * sample as f64)?;
    let red = generator(model, Jc3Equation::Redfield)?;
    let game = generator(model, Jc3Equation::Game)?;
    let per = generator(model, Jc3Equation::Perlind)?;
    let stepper = Stepper::PowerSeries { epsilon: DEFAULT_EPSILON };
    let gens: Vec<(&dyn Generator, Stepper)> =
        vec![(red.as_ref(), stepper.clone()), (game.as_ref(), stepper.clone()), (per.as_ref(), stepper)];
    let rho0 = DensityMatrix::basis_state(3, 1);
    let mut out = ErrorTrace::default();
    evolve_lockstep(&gens, &rho0, steps as f64 * dt, dt, |k, t, states| {
        if k % sample != 0 {
            return Ok(());
        }
        let ex = exact.state(k / sample);
        out.times.push(t);
        out.redfield_exact.push(trace_distance(&states[0], &ex)?);
        out.game_exact.push(trace_distance(&states[1], &ex)?);
        out.perlind_exact.push(trace_distance(&states[2], &ex)?);
        out.redfield_game.push(trace_distance(&states[0], &states[1])?);
        let (p1, p2) = exact.populations(k / sample);
        out.exact_p1.push(p1);
        out.exact_p2.push(p2);
        out.game_p1.push(states[1][[1, 1]].re);
        out.game_p2.push(states[1][[2, 2]].re);
        Ok(())
    })?;
    Ok(out)
}

/// Population of a renormalized state under GAME, starting in that state.
pub fn renormalized_population(model: &Jc3Model, level: usize, dt: f64, t_max: f64, stop_below: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let levels = renormalized_levels(model)?;
    let v = &levels.states[level];
    let psi = Array1::from(vec![ZERO, v[0], v[1]]);
    let g = generator(model, Jc3Equation::Game)?;
    let mut rho = DensityMatrix::pure(&psi).mat;
    let pop = |r: &CMat| -> f64 {
        let mut acc = ZERO;
        for i in 0..2 {
            for j in 0..2 {
                acc += v[i].conj() * r[[i + 1, j + 1]] * v[j];
            }
        }
        acc.re
    };
    let steps = crate::propagate::step_count(t_max, dt)?;
    let mut times = vec![0.0];
    let mut values = vec![pop(&rho)];
    for k in 1..=steps {
        rho = step_power_series(g.as_ref(), &rho, 0.0, dt, DEFAULT_EPSILON)?;
        let p = pop(&rho);
        times.push(k as f64 * dt);
        values.push(p);
        if p < stop_below * values[0] {
            break;
        }
    }
    Ok((times, values))
}

#[derive(Debug, Clone)]
pub struct ScanPoint {
    pub lambda: f64,
    pub e1p: f64,
    pub e2p: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub fit1: FitResult,
    pub fit2: FitResult,
    /// Strong-anticrossing widths (Γ1', Γ2') from the closed formulas.
    pub table: (f64, f64),
}

/// Renormalized levels and fitted GAME widths at each λ.
pub fn lambda_scan(model: &Jc3Model, lambdas: &[f64], dt: f64, t_max: f64) -> Result<Vec<ScanPoint>> {
    lambdas
        .par_iter()
        .map(|&lambda| {
            let m = model.at_lambda(lambda);
            let levels = renormalized_levels(&m)?;
            let (gamma1, gamma2) = m.bare_widths();
            let (t1, y1) = renormalized_population(&m, 0, dt, t_max, 0.05)?;
            let (t2, y2) = renormalized_population(&m, 1, dt, t_max, 0.05)?;
            Ok(ScanPoint {
                lambda,
                e1p: levels.e1p,
                e2p: levels.e2p,
                gamma1,
                gamma2,
                fit1: fit_decay_window(&t1, &y1)?,
                fit2: fit_decay_window(&t2, &y2)?,
                table: table_widths(&m),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_validation() {
        let b = BathModel::new(BathKind::OhmicExp, 0.001, 1.0).unwrap();
        assert!(Jc3Model::new(0.2, 0.1, b).is_err());
        assert!(Jc3Model::new(0.0, 0.1, b).is_err());
        let m = Jc3Model::case_a(0.001).unwrap();
        assert_eq!(m.at_lambda(1.0).e2, m.e1);
    }

    #[test]
    fn drude_lorentz_has_no_exact_solution() {
        let b = BathModel::new(BathKind::OhmicDrudeLorentz, 0.001, 1.0).unwrap();
        let m = Jc3Model::new(0.1, 0.11, b).unwrap();
        assert!(matches!(exact_evolve(&m, 1.0, 0.1), Err(Error::UnsupportedBathKind(_))));
    }
}
