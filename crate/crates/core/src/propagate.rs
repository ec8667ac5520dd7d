//! Time stepping: truncated power series of e^{𝓛dt}, with time-dependent
//! generators frozen at the step midpoint, plus RK4 variants.

use crate::error::{Error, Result};
use crate::generators::Generator;
use crate::hilbert::{frobenius, hermiticity_defect, rotate_frame, trace, CMat, DensityMatrix};
use crate::metrics;
use ndarray::Array1;
use num_complex::Complex64 as C64;
use std::collections::BTreeMap;
use std::io::{Read, Write};

pub const DEFAULT_EPSILON: f64 = 1e-7;
pub const MAX_TERMS: usize = 200;
pub const TRACE_DRIFT_WARNING: f64 = 1e-6;

/// ρ' = Σ_m dtᵐ 𝓛ᵐ(ρ)/m!, stopped once a term has Frobenius norm below ε.
pub fn step_power_series(g: &dyn Generator, rho: &CMat, t: f64, dt: f64, epsilon: f64) -> Result<CMat> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("series threshold must be positive, got {epsilon}")));
    }
    let mut out = rho.clone();
    if dt == 0.0 {
        return Ok(out);
    }
    let mut term = rho.clone();
    for m in 1..=MAX_TERMS {
        term = g.apply(t, &term)? * C64::new(dt / m as f64, 0.0);
        out += &term;
        if frobenius(&term) < epsilon {
            return Ok(out);
        }
    }
    Err(Error::NoConvergence(MAX_TERMS))
}

/// Classical RK4 on dρ/dt = 𝓛_t(ρ).
pub fn step_rk4(g: &dyn Generator, rho: &CMat, t: f64, dt: f64) -> Result<CMat> {
    let h = C64::new(dt, 0.0);
    let half = C64::new(0.5 * dt, 0.0);
    let k1 = g.apply(t, rho)?;
    let k2 = g.apply(t + 0.5 * dt, &(rho + &(&k1 * half)))?;
    let k3 = g.apply(t + 0.5 * dt, &(rho + &(&k2 * half)))?;
    let k4 = g.apply(t + dt, &(rho + &(&k3 * h)))?;
    let sum = k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4;
    Ok(rho + &(sum * C64::new(dt / 6.0, 0.0)))
}

/// RK4 for ϱ(s) = e^{iH0(s−t)} ρ(s) e^{−iH0(s−t)} over one step, with the
/// free rotation applied exactly. Energies are those of the diagonal H0.
pub fn step_rk4_interaction(g: &dyn Generator, energies: &Array1<f64>, rho: &CMat, t: f64, dt: f64) -> Result<CMat> {
    let n = energies.len();
    let rhs = |tau: f64, v: &CMat| -> Result<CMat> {
        let r = rotate_frame(v, energies, tau, -1.0);
        let mut d = g.apply(t + tau, &r)?;
        for i in 0..n {
            for j in 0..n {
                d[[i, j]] += C64::new(0.0, energies[i] - energies[j]) * r[[i, j]];
            }
        }
        Ok(rotate_frame(&d, energies, tau, 1.0))
    };
    let h = C64::new(dt, 0.0);
    let half = C64::new(0.5 * dt, 0.0);
    let k1 = rhs(0.0, rho)?;
    let k2 = rhs(0.5 * dt, &(rho + &(&k1 * half)))?;
    let k3 = rhs(0.5 * dt, &(rho + &(&k2 * half)))?;
    let k4 = rhs(dt, &(rho + &(&k3 * h)))?;
    let sum = k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4;
    let v = rho + &(sum * C64::new(dt / 6.0, 0.0));
    Ok(rotate_frame(&v, energies, dt, -1.0))
}

#[derive(Debug, Clone)]
pub enum Stepper {
    PowerSeries { epsilon: f64 },
    Rk4,
    Rk4Interaction { energies: Array1<f64> },
    /// Power series of the generator frozen at the step midpoint.
    FrozenMidpoint { epsilon: f64 },
}

impl Stepper {
    /// Power series, frozen at the step midpoint for time-dependent generators.
    pub fn for_generator(g: &dyn Generator, epsilon: f64) -> Stepper {
        if g.is_time_dependent() {
            Stepper::FrozenMidpoint { epsilon }
        } else {
            Stepper::PowerSeries { epsilon }
        }
    }

    pub fn step(&self, g: &dyn Generator, rho: &CMat, t: f64, dt: f64) -> Result<CMat> {
        match self {
            Stepper::PowerSeries { epsilon } => step_power_series(g, rho, t, dt, *epsilon),
            Stepper::Rk4 => step_rk4(g, rho, t, dt),
            Stepper::Rk4Interaction { energies } => step_rk4_interaction(g, energies, rho, t, dt),
            Stepper::FrozenMidpoint { epsilon } => step_power_series(g, rho, t + 0.5 * dt, dt, *epsilon),
        }
    }
}

type RecordFn = dyn Fn(f64, &CMat) -> Result<f64> + Send + Sync;

/// A named scalar observable recorded every step.
pub struct Recorder {
    pub name: String,
    f: Box<RecordFn>,
}

impl Recorder {
    pub fn new<F>(name: &str, f: F) -> Self
    where
        F: Fn(f64, &CMat) -> Result<f64> + Send + Sync + 'static,
    {
        Recorder { name: name.to_string(), f: Box::new(f) }
    }

    pub fn trace() -> Self {
        Recorder::new("trace", |_, r| Ok(trace(r).re))
    }

    pub fn purity() -> Self {
        Recorder::new("purity", |_, r| Ok(metrics::purity(r)))
    }

    pub fn population(k: usize) -> Self {
        Recorder::new(&format!("p{k}"), move |_, r| Ok(r[[k, k]].re))
    }

    pub fn negativity() -> Self {
        Recorder::new("negativity", |_, r| metrics::negativity_sum(r))
    }

    pub fn min_eigenvalue() -> Self {
        Recorder::new("min_eigenvalue", |_, r| metrics::min_eigenvalue(r))
    }

    /// Re Tr(Oρ).
    pub fn expectation(name: &str, op: CMat) -> Self {
        Recorder::new(name, move |_, r| {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..op.nrows() {
                for j in 0..op.ncols() {
                    acc += op[[i, j]] * r[[j, i]];
                }
            }
            Ok(acc.re)
        })
    }

    pub fn record(&self, t: f64, rho: &CMat) -> Result<f64> {
        (self.f)(t, rho)
    }
}

pub struct EvolveOptions {
    pub stepper: Stepper,
    /// Store every `thin`-th state; 0 stores none.
    pub thin: usize,
    pub recorders: Vec<Recorder>,
    /// Track the smallest eigenvalue seen along the run.
    pub monitor_positivity: bool,
}

impl EvolveOptions {
    pub fn new(stepper: Stepper) -> Self {
        EvolveOptions { stepper, thin: 0, recorders: Vec::new(), monitor_positivity: false }
    }

    pub fn with_recorder(mut self, r: Recorder) -> Self {
        self.recorders.push(r);
        self
    }

    pub fn thinned(mut self, thin: usize) -> Self {
        self.thin = thin;
        self
    }

    pub fn monitored(mut self) -> Self {
        self.monitor_positivity = true;
        self
    }
}

#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub state_times: Vec<f64>,
    pub states: Vec<CMat>,
    pub observables: BTreeMap<String, Vec<f64>>,
    pub max_trace_drift: f64,
    pub max_hermiticity_defect: f64,
    pub min_eigenvalue: Option<f64>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    pub fn observable(&self, name: &str) -> Option<&[f64]> {
        self.observables.get(name).map(|v| v.as_slice())
    }

    pub fn final_state(&self) -> Option<&CMat> {
        self.states.last()
    }
}

/// Number of steps of size dt that reach t_max.
pub fn step_count(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::InvalidArgument(format!("need dt > 0 and t_max ≥ 0, got dt={dt}, t_max={t_max}")));
    }
    Ok((t_max / dt - 1e-9).ceil().max(0.0) as usize)
}

/// Steps ρ0 from t = 0 to t_max with uniform dt.
pub fn evolve(g: &dyn Generator, rho0: &DensityMatrix, t_max: f64, dt: f64, opts: &EvolveOptions) -> Result<Trajectory> {
    if rho0.dim() != g.dim() {
        return Err(Error::DimensionMismatch { expected: g.dim(), got: rho0.dim() });
    }
    let steps = step_count(t_max, dt)?;
    let mut traj = Trajectory::default();
    for r in &opts.recorders {
        traj.observables.insert(r.name.clone(), Vec::with_capacity(steps + 1));
    }
    let mut rho = rho0.mat.clone();
    for k in 0..=steps {
        let t = k as f64 * dt;
        if k > 0 {
            rho = opts.stepper.step(g, &rho, t - dt, dt)?;
        }
        traj.times.push(t);
        for r in &opts.recorders {
            let v = r.record(t, &rho)?;
            traj.observables.get_mut(&r.name).unwrap().push(v);
        }
        let drift = metrics::trace_deviation(&rho);
        if drift > TRACE_DRIFT_WARNING && traj.max_trace_drift <= TRACE_DRIFT_WARNING {
            traj.warnings.push(format!("trace drift {drift:e} at t = {t}"));
        }
        traj.max_trace_drift = traj.max_trace_drift.max(drift);
        traj.max_hermiticity_defect = traj.max_hermiticity_defect.max(hermiticity_defect(rho.view()));
        if opts.monitor_positivity {
            let m = metrics::min_eigenvalue(&rho)?;
            traj.min_eigenvalue = Some(traj.min_eigenvalue.map_or(m, |x: f64| x.min(m)));
        }
        if opts.thin > 0 && (k % opts.thin == 0 || k == steps) {
            traj.state_times.push(t);
            traj.states.push(rho.clone());
        }
    }
    Ok(traj)
}

/// Advances several generators from the same initial state in lockstep,
/// calling `observe(k, t, states)` after every step (and at t = 0).
pub fn evolve_lockstep<F>(
    gens: &[(&dyn Generator, Stepper)],
    rho0: &DensityMatrix,
    t_max: f64,
    dt: f64,
    mut observe: F,
) -> Result<()>
where
    F: FnMut(usize, f64, &[CMat]) -> Result<()>,
{
    let steps = step_count(t_max, dt)?;
    for (g, _) in gens {
        if g.dim() != rho0.dim() {
            return Err(Error::DimensionMismatch { expected: g.dim(), got: rho0.dim() });
        }
    }
    let mut states: Vec<CMat> = vec![rho0.mat.clone(); gens.len()];
    observe(0, 0.0, &states)?;
    for k in 1..=steps {
        let t = (k - 1) as f64 * dt;
        for ((g, s), rho) in gens.iter().zip(states.iter_mut()) {
            *rho = s.step(*g, rho, t, dt)?;
        }
        observe(k, k as f64 * dt, &states)?;
    }
    Ok(())
}

/// Observables as CSV rows `t,observable,value`.
pub fn write_observables_csv<W: Write>(traj: &Trajectory, mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,observable,value")?;
    for (name, values) in &traj.observables {
        for (t, v) in traj.times.iter().zip(values) {
            writeln!(w, "{t:.12e},{name},{v:.12e}")?;
        }
    }
    Ok(())
}

const DUMP_MAGIC: &[u8; 8] = b"QMESTAT1";

/// Little-endian dump of the stored states: magic, N, count, then per state t and N² (re, im) pairs.
pub fn write_states<W: Write>(traj: &Trajectory, mut w: W) -> std::io::Result<()> {
    let n = traj.states.first().map_or(0, |s| s.nrows());
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(n as u64).to_le_bytes())?;
    w.write_all(&(traj.states.len() as u64).to_le_bytes())?;
    for (t, s) in traj.state_times.iter().zip(&traj.states) {
        w.write_all(&t.to_le_bytes())?;
        for z in s.iter() {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_states<R: Read>(mut r: R) -> Result<(Vec<f64>, Vec<CMat>)> {
    let io = |e: std::io::Error| Error::InvalidArgument(format!("state dump: {e}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io)?;
    if &magic != DUMP_MAGIC {
        return Err(Error::InvalidArgument("state dump: bad header".into()));
    }
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(io)?;
    let n = u64::from_le_bytes(b) as usize;
    r.read_exact(&mut b).map_err(io)?;
    let count = u64::from_le_bytes(b) as usize;
    let mut times = Vec::with_capacity(count);
    let mut states = Vec::with_capacity(count);
    let mut next = |r: &mut R| -> Result<f64> {
        r.read_exact(&mut b).map_err(io)?;
        Ok(f64::from_le_bytes(b))
    };
    for _ in 0..count {
        times.push(next(&mut r)?);
        let mut data = Vec::with_capacity(n * n);
        for _ in 0..n * n {
            let re = next(&mut r)?;
            let im = next(&mut r)?;
            data.push(C64::new(re, im));
        }
        states.push(CMat::from_shape_vec((n, n), data).expect("shape"));
    }
    Ok((times, states))
}
