//! Registry of the master equations by name, and a runner that evolves one
//! initial state under several of them and measures their divergence.

use crate::error::{Error, Result};
use crate::generators::*;
use crate::bath::Horizon;
use crate::hilbert::{CMat, DensityMatrix, EigenSystem};
use crate::metrics;
use crate::propagate::{step_count, Recorder, Stepper};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Equation {
    Redfield,
    TdcRedfield,
    Game,
    TdcGame,
    Rwa,
    Prwa(usize),
    CgRedfield(f64),
    Dcg(f64),
    Perlind,
    PerlindRwaLs,
    Ule,
}

pub const EQUATION_NAMES: &[&str] = &[
    "redfield",
    "tdc-redfield",
    "game",
    "tdc-game",
    "rwa",
    "prwa(bins)",
    "cg-redfield(T0)",
    "dcg(tau)",
    "perlind",
    "perlind+rwa-ls",
    "ule",
];

impl Equation {
    /// True when every frozen generator is of GKSL form.
    pub fn is_lindblad(&self) -> bool {
        matches!(
            self,
            Equation::Game | Equation::TdcGame | Equation::Rwa | Equation::Prwa(_) | Equation::Dcg(_) | Equation::Perlind | Equation::PerlindRwaLs | Equation::Ule
        )
    }

    pub fn is_time_dependent(&self) -> bool {
        matches!(self, Equation::TdcRedfield | Equation::TdcGame)
    }

    /// Needs an N²×N² superoperator.
    pub fn needs_superoperator(&self) -> bool {
        matches!(self, Equation::CgRedfield(_) | Equation::Dcg(_))
    }

    pub fn build(&self, es: &EigenSystem, cs: &CouplingSet) -> Result<Box<dyn Generator>> {
        Ok(match *self {
            Equation::Redfield => Box::new(redfield_generator(es, cs, Horizon::Infinite)?),
            Equation::TdcRedfield => Box::new(TdcGenerator::new(TdcKind::Redfield, es, cs)?),
            Equation::Game => Box::new(game_generator(es, cs, Horizon::Infinite)?),
            Equation::TdcGame => Box::new(TdcGenerator::new(TdcKind::Game, es, cs)?),
            Equation::Rwa => Box::new(rwa_generator(es, cs)?),
            Equation::Prwa(bins) => Box::new(prwa_generator(es, cs, bins)?),
            Equation::CgRedfield(t0) => Box::new(cg_redfield_generator(es, cs, t0)?),
            Equation::Dcg(tau) => Box::new(dcg_generator(es, cs, tau)?),
            Equation::Perlind => Box::new(perlind_generator(es, cs)?),
            Equation::PerlindRwaLs => Box::new(perlind_rwa_shift_generator(es, cs)?),
            Equation::Ule => Box::new(ule_generator(es, cs)?),
        })
    }

    pub fn stepper(&self, epsilon: f64) -> Stepper {
        if self.is_time_dependent() {
            Stepper::FrozenMidpoint { epsilon }
        } else {
            Stepper::PowerSeries { epsilon }
        }
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Equation::Redfield => write!(f, "redfield"),
            Equation::TdcRedfield => write!(f, "tdc-redfield"),
            Equation::Game => write!(f, "game"),
            Equation::TdcGame => write!(f, "tdc-game"),
            Equation::Rwa => write!(f, "rwa"),
            Equation::Prwa(b) => write!(f, "prwa({b})"),
            Equation::CgRedfield(t) => write!(f, "cg-redfield({t})"),
            Equation::Dcg(t) => write!(f, "dcg({t})"),
            Equation::Perlind => write!(f, "perlind"),
            Equation::PerlindRwaLs => write!(f, "perlind+rwa-ls"),
            Equation::Ule => write!(f, "ule"),
        }
    }
}

impl FromStr for Equation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let unknown = || Error::InvalidArgument(format!("unknown equation '{s}'; known: {}", EQUATION_NAMES.join(", ")));
        let (head, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(s[i + 1..s.len() - 1].trim())),
            Some(_) => return Err(unknown()),
            None => (s.as_str(), None),
        };
        let number = |what: &str| -> Result<f64> {
            let a = arg.ok_or_else(|| Error::InvalidArgument(format!("'{head}' needs a {what} argument, e.g. {head}(1.0)")))?;
            let v: f64 = a.parse().map_err(|_| Error::InvalidArgument(format!("bad {what} '{a}' in '{s}'")))?;
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidArgument(format!("{what} must be finite and non-negative in '{s}'")));
            }
            Ok(v)
        };
        let plain = |e: Equation| if arg.is_some() { Err(Error::InvalidArgument(format!("'{head}' takes no argument"))) } else { Ok(e) };
        match head {
            "redfield" => plain(Equation::Redfield),
            "tdc-redfield" => plain(Equation::TdcRedfield),
            "game" => plain(Equation::Game),
            "tdc-game" => plain(Equation::TdcGame),
            "rwa" => plain(Equation::Rwa),
            "perlind" => plain(Equation::Perlind),
            "perlind+rwa-ls" => plain(Equation::PerlindRwaLs),
            "ule" => plain(Equation::Ule),
            "prwa" => {
                let b = number("bin count")?;
                if b < 1.0 || b.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!("bin count must be a positive integer in '{s}'")));
                }
                Ok(Equation::Prwa(b as usize))
            }
            "cg-redfield" => Ok(Equation::CgRedfield(number("coarse-graining time")?)),
            "dcg" => {
                let t = number("coarse-graining time")?;
                if t == 0.0 {
                    return Err(Error::InvalidArgument(format!("DCG needs τ > 0 in '{s}'")));
                }
                Ok(Equation::Dcg(t))
            }
            _ => Err(unknown()),
        }
    }
}

/// Outcome of evolving one state under several equations.
#[derive(Debug, Clone, Default)]
pub struct Comparison {
    pub equations: Vec<Equation>,
    pub reference: usize,
    /// Sample times.
    pub times: Vec<f64>,
    /// Trace distance to the reference at each sample; NaN once either run failed.
    pub distances: Vec<Vec<f64>>,
    /// Recorded observables per equation at each sample.
    pub observables: Vec<BTreeMap<String, Vec<f64>>>,
    /// Smallest eigenvalue seen at the samples, when monitored.
    pub min_eigenvalue: Vec<Option<f64>>,
    pub max_trace_drift: Vec<f64>,
    pub errors: Vec<Option<String>>,
    pub build_seconds: Vec<f64>,
    pub run_seconds: Vec<f64>,
}

impl Comparison {
    pub fn index_of(&self, eq: Equation) -> Option<usize> {
        self.equations.iter().position(|e| *e == eq)
    }

    /// Largest distance to the reference over the run.
    pub fn peak_distance(&self, k: usize) -> f64 {
        self.distances[k].iter().cloned().fold(0.0, f64::max)
    }
}

pub struct CompareOptions {
    pub t_max: f64,
    pub dt: f64,
    pub epsilon: f64,
    /// Sample every `sample` steps.
    pub sample: usize,
    pub monitor_positivity: bool,
}

/// Evolves `rho0` under every equation in lockstep. A failure in one
/// equation is recorded and the others continue.
pub fn compare(
    es: &EigenSystem,
    cs: &CouplingSet,
    rho0: &DensityMatrix,
    equations: &[Equation],
    reference: usize,
    opts: &CompareOptions,
    recorders: &dyn Fn() -> Vec<Recorder>,
) -> Result<Comparison> {
    if equations.is_empty() {
        return Err(Error::InvalidArgument("no equations to compare".into()));
    }
    if reference >= equations.len() {
        return Err(Error::InvalidArgument(format!("reference index {reference} out of range")));
    }
    if rho0.dim() != es.dim() {
        return Err(Error::DimensionMismatch { expected: es.dim(), got: rho0.dim() });
    }
    let steps = step_count(opts.t_max, opts.dt)?;
    let sample = opts.sample.max(1);
    let m = equations.len();
    let mut out = Comparison {
        equations: equations.to_vec(),
        reference,
        distances: vec![Vec::new(); m],
        observables: vec![BTreeMap::new(); m],
        min_eigenvalue: vec![None; m],
        max_trace_drift: vec![0.0; m],
        errors: vec![None; m],
        build_seconds: vec![0.0; m],
        run_seconds: vec![0.0; m],
        ..Default::default()
    };
    let mut gens: Vec<Option<Box<dyn Generator>>> = Vec::with_capacity(m);
    let mut recs: Vec<Vec<Recorder>> = Vec::with_capacity(m);
    for (k, eq) in equations.iter().enumerate() {
        let t0 = Instant::now();
        match eq.build(es, cs) {
            Ok(g) => gens.push(Some(g)),
            Err(e) => {
                out.errors[k] = Some(e.to_string());
                gens.push(None);
            }
        }
        out.build_seconds[k] = t0.elapsed().as_secs_f64();
        recs.push(recorders());
    }
    let steppers: Vec<Stepper> = equations.iter().map(|e| e.stepper(opts.epsilon)).collect();
    let mut states: Vec<CMat> = vec![rho0.mat.clone(); m];
    for k in 0..=steps {
        let t = k as f64 * opts.dt;
        if k > 0 {
            for j in 0..m {
                let Some(g) = &gens[j] else { continue };
                let t0 = Instant::now();
                match steppers[j].step(g.as_ref(), &states[j], t - opts.dt, opts.dt) {
                    Ok(r) => states[j] = r,
                    Err(e) => {
                        out.errors[j] = Some(format!("t = {t}: {e}"));
                        gens[j] = None;
                    }
                }
                out.run_seconds[j] += t0.elapsed().as_secs_f64();
            }
        }
        if k % sample != 0 && k != steps {
            continue;
        }
        out.times.push(t);
        for j in 0..m {
            let alive = gens[j].is_some() && gens[reference].is_some();
            let d = if !alive {
                f64::NAN
            } else if j == reference {
                0.0
            } else {
                metrics::trace_distance(&states[j], &states[reference])?
            };
            out.distances[j].push(d);
            if gens[j].is_none() {
                continue;
            }
            for r in &recs[j] {
                let v = r.record(t, &states[j])?;
                out.observables[j].entry(r.name.clone()).or_default().push(v);
            }
            out.max_trace_drift[j] = out.max_trace_drift[j].max(metrics::trace_deviation(&states[j]));
            if opts.monitor_positivity {
                let e = metrics::min_eigenvalue(&states[j])?;
                out.min_eigenvalue[j] = Some(out.min_eigenvalue[j].map_or(e, |x: f64| x.min(e)));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        let all = [
            Equation::Redfield,
            Equation::TdcRedfield,
            Equation::Game,
            Equation::TdcGame,
            Equation::Rwa,
            Equation::Prwa(4),
            Equation::CgRedfield(0.5),
            Equation::Dcg(2.0),
            Equation::Perlind,
            Equation::PerlindRwaLs,
            Equation::Ule,
        ];
        for e in all {
            assert_eq!(e.to_string().parse::<Equation>().unwrap(), e);
        }
        assert_eq!(" PRWA( 3 ) ".parse::<Equation>().unwrap(), Equation::Prwa(3));
    }

    #[test]
    fn bad_names_are_rejected() {
        for s in ["lindblad", "prwa", "prwa(0)", "prwa(2.5)", "dcg(0)", "dcg(-1)", "game(2)", "cg-redfield(x)", "dcg(1"] {
            assert!(s.parse::<Equation>().is_err(), "{s}");
        }
    }
}
