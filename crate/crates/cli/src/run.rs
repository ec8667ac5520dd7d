//! Experiment runners, one per subcommand.

use crate::config::{ExperimentConfig, Kind, ModelConfig};
use crate::output::{file_stem, Cell, RunOutput, Table};
use qme::bath::{BathModel, Horizon};
use qme::equations::{compare, CompareOptions, Comparison};
use qme::floquet::{evolve_floquet, DrivenChain, FloquetGame, DEFAULT_PHASE_STEP};
use qme::generators::{redfield_generator, CouplingSet, Generator};
use qme::hilbert::{zeros, CMat, DensityMatrix, EigenSystem};
use qme::C64;
use qme::jc3::{compare_with_exact, lambda_scan, renormalized_levels, Jc3Model};
use qme::kernels::{self, KernelGrid};
use qme::metrics;
use qme::propagate::Recorder;
use qme::spinchain::{spectrum, ChainModel, CouplingBasis, SpinComponent, TruncatedChain};
use serde_json::json;
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

#[derive(Debug)]
pub enum RunError {
    Config(String),
    Numerical(String),
    Io(std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Io(_) => 1,
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for RunError {}

impl From<qme::Error> for RunError {
    fn from(e: qme::Error) -> Self {
        RunError::Numerical(e.to_string())
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::Io(e)
    }
}

/// What a finished run produced.
#[derive(Debug)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub manifest: PathBuf,
    pub files: Vec<String>,
    /// Equations that failed while the others completed.
    pub failed: Vec<String>,
}

/// A model ready for propagation, with its reference period.
pub struct System {
    pub es: EigenSystem,
    pub cs: CouplingSet,
    pub rho0: DensityMatrix,
    pub period: f64,
    /// Named operators recorded as Re Tr(Oρ).
    pub operators: Vec<(String, CMat)>,
    pub chain: Option<TruncatedChain>,
    pub jc3: Option<Jc3Model>,
}

fn chain_of(cfg: &ExperimentConfig) -> Result<TruncatedChain, RunError> {
    let ModelConfig::Chain { n, j, eps_d, h_z, keep, .. } = cfg.model else {
        return Err(RunError::Config("model.type: a chain model is required".into()));
    };
    let m = ChainModel::new(n, j, eps_d)?;
    let m = match h_z {
        Some(h) => m.with_field(h),
        None => m.with_default_field()?,
    };
    Ok(spectrum(&m)?.truncate(keep)?)
}

/// Bath for the configured model. For the chain this is one of the 3n
/// environments at total coupling g.
pub fn bath_of(cfg: &ExperimentConfig, chain: Option<&TruncatedChain>) -> Result<BathModel, RunError> {
    let kind = cfg.bath.kind();
    Ok(match chain {
        Some(c) => c.bath(kind, cfg.bath.g, cfg.bath.omega_c.unwrap_or_else(|| c.cutoff(crate::config::DEFAULT_CUTOFF_GAPS)))?,
        None => BathModel::new(kind, cfg.bath.g, cfg.bath.omega_c.unwrap_or(1.0))?,
    })
}

fn jc3_of(cfg: &ExperimentConfig) -> Result<Jc3Model, RunError> {
    let ModelConfig::Jc3 { e1, e2, lambda } = cfg.model else {
        return Err(RunError::Config("model.type: a jc3 model is required".into()));
    };
    Ok(Jc3Model::new(e1, e2, bath_of(cfg, None)?)?.at_lambda(lambda))
}

/// JC3: starts in |1⟩, reference period 2π/E1. Chain: starts along +S_x,
/// reference period T_fm.
pub fn build_system(cfg: &ExperimentConfig) -> Result<System, RunError> {
    match &cfg.model {
        ModelConfig::Jc3 { .. } => {
            let m = jc3_of(cfg)?;
            let operators = (0..3)
                .map(|k| {
                    let mut p = zeros(3);
                    p[[k, k]] = C64::new(1.0, 0.0);
                    (format!("p{k}"), p)
                })
                .collect();
            Ok(System {
                es: m.eigensystem(),
                cs: m.coupling_set(),
                rho0: DensityMatrix::basis_state(3, 1),
                period: 2.0 * std::f64::consts::PI / m.e1,
                operators,
                chain: None,
                jc3: Some(m),
            })
        }
        ModelConfig::Chain { coupling, .. } => {
            let chain = chain_of(cfg)?;
            let bath = bath_of(cfg, Some(&chain))?;
            let form = if coupling == "cartesian" { CouplingBasis::Cartesian } else { CouplingBasis::Ladder };
            let cs = chain.coupling_set(bath, form)?;
            let (rho0, _) = chain.perpendicular_state()?;
            let mut operators = Vec::new();
            for (name, c) in [("sx", SpinComponent::X), ("sy", SpinComponent::Y), ("sz", SpinComponent::Z)] {
                operators.push((name.to_string(), chain.total_spin(c)?));
            }
            Ok(System { es: chain.es.clone(), cs, rho0, period: chain.fmr_period(), operators, chain: Some(chain), jc3: None })
        }
    }
}

fn observable_recorders(sys: &System) -> Vec<Recorder> {
    let mut r: Vec<Recorder> = sys.operators.iter().map(|(n, o)| Recorder::expectation(n, o.clone())).collect();
    r.push(Recorder::purity());
    r.push(Recorder::negativity());
    r
}

pub fn run(cfg: &ExperimentConfig, dir: PathBuf) -> Result<RunSummary, RunError> {
    let mut out = RunOutput::create(dir)?;
    let failed = match cfg.kind {
        Kind::Spectra => run_spectra(cfg, &mut out)?,
        Kind::Kernels => run_kernels(cfg, &mut out)?,
        Kind::Jc3 => run_jc3(cfg, &mut out)?,
        Kind::Chain => run_chain(cfg, &mut out)?,
        Kind::Floquet => run_floquet(cfg, &mut out)?,
        Kind::Compare => run_compare_into(cfg, &mut out, false)?,
    };
    let files = out.files().keys().cloned().collect();
    let dir = out.dir.clone();
    let status = if failed.is_empty() { "ok" } else { "partial" };
    let manifest = out.finish(&config_echo(cfg), status)?;
    Ok(RunSummary { dir, manifest, files, failed })
}

/// The resolved config restricted to the sections the experiment reads.
pub fn config_echo(cfg: &ExperimentConfig) -> serde_json::Value {
    let mut v = serde_json::to_value(cfg).expect("serializable");
    let obj = v.as_object_mut().expect("object");
    let keep = |section: &str| match section {
        "spectra" => cfg.kind == Kind::Spectra,
        "kernels" => cfg.kind == Kind::Kernels,
        "jc3" => cfg.kind == Kind::Jc3,
        "floquet" => cfg.kind == Kind::Floquet,
        "equations" | "reference" => matches!(cfg.kind, Kind::Compare | Kind::Chain),
        _ => true,
    };
    obj.retain(|k, _| keep(k));
    v
}

fn run_spectra(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<Vec<String>, RunError> {
    let chain = match cfg.model {
        ModelConfig::Chain { .. } => Some(chain_of(cfg)?),
        _ => None,
    };
    let bath = bath_of(cfg, chain.as_ref())?;
    let s = &cfg.spectra;
    let wc = bath.omega_c;
    let mut spec = Table::new(&["omega", "gamma", "s"]);
    out.timed("spectrum", || {
        for w in kernels::uniform_grid(s.omega_min * wc, s.omega_max * wc, s.points) {
            spec.push(vec![w.into(), bath.spectral_density(w).into(), bath.principal_density(w).into()]);
        }
    });
    out.write_table("spectrum.csv", &spec)?;
    let corr = out.timed("correlation", || -> Result<Table, qme::Error> {
        let mut corr = Table::new(&["t", "re_c", "im_c"]);
        for t in kernels::uniform_grid(0.0, s.t_max / wc, s.t_points) {
            let c = bath.correlation_function(t)?;
            corr.push(vec![t.into(), c.re.into(), c.im.into()]);
        }
        Ok(corr)
    });
    match corr {
        Ok(t) => out.write_table("correlation.csv", &t)?,
        Err(qme::Error::UnsupportedBathKind(k)) => out.warn(format!("no closed-form correlation function for the {k} bath; correlation.csv skipped")),
        Err(e) => return Err(e.into()),
    }
    out.result("omega_c", wc);
    out.result("g", bath.g);
    Ok(Vec::new())
}

fn run_kernels(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<Vec<String>, RunError> {
    let chain = match cfg.model {
        ModelConfig::Chain { .. } => Some(chain_of(cfg)?),
        _ => None,
    };
    let bath = bath_of(cfg, chain.as_ref())?;
    let k = &cfg.kernels;
    let wc = bath.omega_c;
    let grid = kernels::uniform_grid(k.omega_min * wc, k.omega_max * wc, k.points);
    let t0 = k.grid_t0 / wc;
    let mut table = Table::new(&["omega", "omega_p", "diss_re", "diss_im", "unit_re", "unit_im", "geo_mean", "detune_re", "detune_im", "cg_re", "cg_im"]);
    out.timed("kernel_grid", || {
        for &w in grid.iter() {
            for &wp in grid.iter() {
                let d = kernels::dissipative_kernel(&bath, w, wp);
                let u = kernels::unitary_kernel(&bath, w, wp);
                let f = kernels::detuning_function(&bath, w, wp);
                let cg = kernels::cg_dissipative_kernel(&bath, w, wp, t0);
                table.push(vec![
                    w.into(),
                    wp.into(),
                    d.re.into(),
                    d.im.into(),
                    u.re.into(),
                    u.im.into(),
                    kernels::geometric_mean(&bath, w, wp).into(),
                    f.re.into(),
                    f.im.into(),
                    cg.re.into(),
                    cg.im.into(),
                ]);
            }
        }
    });
    out.write_table("kernel_grid.csv", &table)?;
    let t0s: Vec<f64> = k.t0.iter().map(|t| t / wc).collect();
    let scan = out.timed("norm_ratio", || kernels::norm_ratio_scan(&bath, &grid, &t0s))?;
    let mut nr = Table::new(&["t0", "ratio"]);
    for (t, r) in scan {
        nr.push(vec![t.into(), r.into()]);
    }
    out.write_table("norm_ratio.csv", &nr)?;
    let full = KernelGrid::build(grid.clone(), |w, wp| kernels::dissipative_kernel(&bath, w, wp));
    out.result("dissipative_trace_norm", full.trace_norm()?);
    out.result("omega_c", wc);
    Ok(Vec::new())
}

fn run_jc3(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<Vec<String>, RunError> {
    let m = jc3_of(cfg)?;
    let period = 2.0 * std::f64::consts::PI / m.e1;
    let dt = period / cfg.propagator.dt_divisor as f64;
    let t_max = cfg.propagator.t_max * period;
    let tr = out.timed("exact_comparison", || compare_with_exact(&m, t_max, dt, cfg.output.thin))?;
    let mut err = Table::new(&["t", "game_exact", "redfield_exact", "perlind_exact", "redfield_game"]);
    let mut pops = Table::new(&["t", "exact_p1", "exact_p2", "game_p1", "game_p2"]);
    for k in 0..tr.times.len() {
        err.push(vec![tr.times[k].into(), tr.game_exact[k].into(), tr.redfield_exact[k].into(), tr.perlind_exact[k].into(), tr.redfield_game[k].into()]);
        pops.push(vec![tr.times[k].into(), tr.exact_p1[k].into(), tr.exact_p2[k].into(), tr.game_p1[k].into(), tr.game_p2[k].into()]);
    }
    out.write_table("jc3_errors.csv", &err)?;
    out.write_table("jc3_populations.csv", &pops)?;
    let levels = renormalized_levels(&m)?;
    out.result("dt", dt);
    out.result("reference_period", period);
    out.result("peak_game_exact", tr.peak_game_exact());
    out.result("peak_redfield_game", tr.peak_redfield_game());
    out.result("peak_perlind_exact", tr.peak_perlind_exact());
    out.result("renormalized_levels", json!({ "e1p": levels.e1p, "e2p": levels.e2p, "gap": levels.gap() }));
    if !cfg.jc3.lambdas.is_empty() {
        let base = Jc3Model::new(m.e1, m.e2, m.bath)?;
        let pts = out.timed("lambda_scan", || lambda_scan(&base, &cfg.jc3.lambdas, cfg.jc3.scan_dt, cfg.jc3.scan_t_max))?;
        let mut scan = Table::new(&["lambda", "e1p", "e2p", "gamma1", "gamma2", "fit1", "fit2", "table1", "table2"]);
        for p in pts {
            scan.push(vec![
                p.lambda.into(),
                p.e1p.into(),
                p.e2p.into(),
                p.gamma1.into(),
                p.gamma2.into(),
                p.fit1.rate.into(),
                p.fit2.rate.into(),
                p.table.0.into(),
                p.table.1.into(),
            ]);
        }
        out.write_table("jc3_scan.csv", &scan)?;
    }
    Ok(Vec::new())
}

fn run_chain(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<Vec<String>, RunError> {
    let chain = out.timed("spectrum", || chain_of(cfg))?;
    let mut levels = Table::new(&["k", "energy", "sz"]);
    for (k, e) in chain.es.energies.iter().enumerate() {
        levels.push(vec![k.into(), (*e).into(), chain.sz[k].into()]);
    }
    out.write_table("chain_levels.csv", &levels)?;
    out.result("gap", chain.gap);
    out.result("fmr_period", chain.fmr_period());
    run_compare_into(cfg, out, true)
}

/// Evolves the initial state under every configured equation and writes
/// one observable table per equation plus the distances to the reference.
pub fn run_compare(cfg: &ExperimentConfig, dir: PathBuf) -> Result<RunSummary, RunError> {
    let mut c = cfg.clone();
    c.kind = Kind::Compare;
    run(&c, dir)
}

fn run_compare_into(cfg: &ExperimentConfig, out: &mut RunOutput, with_rate: bool) -> Result<Vec<String>, RunError> {
    let sys = out.timed("model", || build_system(cfg))?;
    let reference = cfg.equations.iter().position(|e| *e == cfg.reference).expect("validated");
    let opts = CompareOptions {
        t_max: cfg.propagator.t_max * sys.period,
        dt: sys.period / cfg.propagator.dt_divisor as f64,
        epsilon: cfg.propagator.epsilon,
        sample: cfg.output.thin,
        monitor_positivity: cfg.propagator.monitor_positivity,
    };
    let rate: Option<Arc<dyn Generator + Send + Sync>> = if with_rate {
        Some(Arc::new(out.timed("rate_generator", || redfield_generator(&sys.es, &sys.cs, Horizon::Infinite))?))
    } else {
        None
    };
    let energies = sys.es.energies.clone();
    let recorders = || {
        let mut r = observable_recorders(&sys);
        if let Some(g) = &rate {
            let g = g.clone();
            let e = energies.clone();
            r.push(Recorder::new("relaxation_rate", move |t, rho| metrics::relaxation_rate(g.as_ref(), &e, t, rho)));
        }
        r
    };
    let c = out.timed("propagate", || compare(&sys.es, &sys.cs, &sys.rho0, &cfg.equations, reference, &opts, &recorders))?;
    write_comparison(&c, out)?;
    out.result("dt", opts.dt);
    out.result("steps", c.times.len().saturating_sub(1));
    out.result("reference_period", sys.period);
    out.result("reference", cfg.reference.to_string());
    let mut failed = Vec::new();
    for (k, e) in c.equations.iter().enumerate() {
        if let Some(err) = &c.errors[k] {
            out.warn(format!("{e} failed: {err}"));
            failed.push(e.to_string());
        }
    }
    Ok(failed)
}

fn write_comparison(c: &Comparison, out: &mut RunOutput) -> Result<(), RunError> {
    let mut names = vec!["t".to_string()];
    names.extend(c.equations.iter().map(|e| e.to_string()));
    let mut dist = Table::new(&names);
    for (i, t) in c.times.iter().enumerate() {
        let mut row: Vec<Cell> = vec![(*t).into()];
        row.extend(c.distances.iter().map(|d| Cell::Num(d[i])));
        dist.push(row);
    }
    out.write_table("distances.csv", &dist)?;
    let mut slowest = (String::new(), -1.0);
    for (k, e) in c.equations.iter().enumerate() {
        let obs = &c.observables[k];
        let mut cols = vec!["t".to_string()];
        cols.extend(obs.keys().cloned());
        let mut table = Table::new(&cols);
        let len = obs.values().map(|v| v.len()).min().unwrap_or(0);
        for i in 0..len {
            let mut row: Vec<Cell> = vec![c.times[i].into()];
            row.extend(obs.values().map(|v| Cell::Num(v[i])));
            table.push(row);
        }
        let file = format!("eq_{}.csv", file_stem(&e.to_string()));
        out.write_table(&file, &table)?;
        let total = c.build_seconds[k] + c.run_seconds[k];
        if total > slowest.1 {
            slowest = (e.to_string(), total);
        }
        out.equation(
            &e.to_string(),
            json!({
                "file": file,
                "build_seconds": c.build_seconds[k],
                "run_seconds": c.run_seconds[k],
                "error": c.errors[k],
                "max_trace_drift": c.max_trace_drift[k],
                "min_eigenvalue": c.min_eigenvalue[k],
                "peak_distance": finite_or_null(c.peak_distance(k)),
            }),
        );
    }
    out.result("slowest", slowest.0);
    Ok(())
}

fn finite_or_null(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn run_floquet(cfg: &ExperimentConfig, out: &mut RunOutput) -> Result<Vec<String>, RunError> {
    let f = &cfg.floquet;
    let chain = out.timed("spectrum", || chain_of(cfg))?;
    let bath = bath_of(cfg, Some(&chain))?;
    let form = match &cfg.model {
        ModelConfig::Chain { coupling, .. } if coupling == "ladder" => CouplingBasis::Ladder,
        _ => CouplingBasis::Cartesian,
    };
    let cs = chain.coupling_set(bath, form)?;
    let (rho0, _) = chain.perpendicular_state()?;
    let tf = chain.fmr_period();
    let d = DrivenChain::new(chain, f.period, f.amplitude, f.ramp)?;
    let basis = out.timed("monodromy", || d.basis(f.frames, DEFAULT_PHASE_STEP))?;
    let game = out.timed("generator", || FloquetGame::new(&basis, &cs, f.steps))?;
    for w in &game.warnings {
        out.warn(w.clone());
    }
    let dt = game.dt();
    let snaps: Vec<usize> = f.snapshots.iter().map(|s| (s * f.steps as f64).round() as usize).collect();
    let obs = [d.sx.clone(), d.chain.total_spin(SpinComponent::Y)?, d.chain.total_spin(SpinComponent::Z)?];
    let t_max = cfg.propagator.t_max * tf;
    let run = out.timed("propagate", || evolve_floquet(&basis, &game, &rho0.mat, t_max, cfg.propagator.epsilon, &obs, cfg.output.thin, &snaps))?;
    let mut sx = Table::new(&["t", "sx", "sy", "sz"]);
    for (i, t) in run.times.iter().enumerate() {
        sx.push(vec![(*t).into(), run.observables[0][i].into(), run.observables[1][i].into(), run.observables[2][i].into()]);
    }
    out.write_table("floquet_spin.csv", &sx)?;
    let mut heat = Table::new(&["t", "basis", "row", "col", "m_row", "m_col", "magnitude"]);
    let mut coherence = Vec::new();
    for (t, rho) in &run.snapshots {
        coherence.push(json!({ "t": t, "coherence": d.opposite_magnetization_coherence(rho) }));
        for (label, c) in [("x", SpinComponent::X), ("y", SpinComponent::Y)] {
            let (m, r) = d.in_spin_basis(rho, c)?;
            for i in 0..r.nrows() {
                for j in 0..r.ncols() {
                    heat.push(vec![(*t).into(), label.into(), i.into(), j.into(), m[i].into(), m[j].into(), r[[i, j]].norm().into()]);
                }
            }
        }
    }
    out.write_table("floquet_heatmap.csv", &heat)?;
    out.result("fmr_period", tf);
    out.result("drive_period", basis.period);
    out.result("dt", dt);
    out.result("quasi_energies", basis.quasi_energies.to_vec());
    out.result("unitarity_defect", basis.unitarity_defect);
    out.result("rk4_steps", basis.rk4_steps);
    out.result("max_trace_drift", run.max_trace_drift);
    out.result("min_eigenvalue", run.min_eigenvalue);
    out.result("opposite_magnetization_coherence", coherence);
    Ok(Vec::new())
}
