//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- <name>...`. A FAIL
//! verdict is reported but only fails the process when QME_ACCEPTANCE_STRICT
//! is set; a criterion that errors or panics always fails it.

use ndarray::Array2;
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use qme::bath::{BathKind, BathModel, Horizon, TdSpectralPair};
use qme::equations::{compare, CompareOptions, Equation};
use qme::floquet::{evolve_floquet, DrivenChain, FloquetGame, DEFAULT_FRAMES, DEFAULT_PHASE_STEP, UNITARITY_TOLERANCE};
use qme::generators::*;
use qme::hilbert::{dagger, trace, CMat, EigenSystem};
use qme::jc3::*;
use qme::kernels::*;
use qme::metrics;
use qme::propagate::{Recorder, Stepper};
use qme::quad::Quad;
use qme::spinchain::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

struct Verdict {
    pass: bool,
    detail: String,
}

impl Verdict {
    fn new(checks: Vec<(bool, String)>) -> Self {
        let pass = checks.iter().all(|c| c.0);
        let detail = checks.iter().map(|(ok, s)| format!("{}{}", if *ok { "" } else { "✗ " }, s)).collect::<Vec<_>>().join("; ");
        Verdict { pass, detail }
    }
}

type Criterion = (&'static str, fn() -> Verdict);

const CRITERIA: &[Criterion] = &[
    ("jc3-exactness", jc3_exactness),
    ("dark-state-width", dark_state_width),
    ("algebraic-identities", algebraic_identities),
    ("transform-suite", transform_suite),
    ("kernel-structure", kernel_structure),
    ("cp-contract", cp_contract),
    ("chain-scaling", chain_scaling),
    ("comparative-ordering", comparative_ordering),
    ("floquet-reduction", floquet_reduction),
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let strict = std::env::var_os("QME_ACCEPTANCE_STRICT").is_some();
    let mut failed = 0;
    let mut errored = 0;
    let mut ran = 0;
    for (name, run) in CRITERIA {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let t0 = Instant::now();
        match std::panic::catch_unwind(run) {
            Ok(v) => {
                if !v.pass {
                    failed += 1;
                }
                println!("{} {name} ({:.1}s): {}", if v.pass { "PASS" } else { "FAIL" }, t0.elapsed().as_secs_f64(), v.detail);
            }
            Err(_) => {
                errored += 1;
                println!("FAIL {name} ({:.1}s): error while running the criterion", t0.elapsed().as_secs_f64());
            }
        }
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed - errored);
    if errored > 0 || (strict && failed > 0) {
        std::process::exit(1);
    }
}

fn check(ok: bool, s: String) -> (bool, String) {
    (ok, s)
}

// ---------------------------------------------------------------------------

fn jc3_exactness() -> Verdict {
    let mut checks = Vec::new();
    for (label, m) in [("A", Jc3Model::case_a(0.001).unwrap()), ("B", Jc3Model::case_b(0.001).unwrap())] {
        let tr = compare_with_exact(&m, 8000.0, 0.02, 50).unwrap();
        let ge = tr.peak_game_exact();
        let rg = tr.peak_redfield_game();
        let pe = tr.peak_perlind_exact();
        checks.push(check(rg <= 0.2 * ge, format!("case {label}: Redfield↔GAME/GAME↔exact = {:.3} (≤ 0.2)", rg / ge)));
        checks.push(check(pe >= 50.0 * ge, format!("case {label}: PERLind/GAME error = {:.1} (≥ 50)", pe / ge)));
    }
    Verdict::new(checks)
}

fn dark_state_width() -> Verdict {
    let base = Jc3Model::case_b(0.001).unwrap();
    let lambdas = [0.0, 0.25, 0.5, 0.8, 1.0, 1.2, 1.5, 1.75, 2.0];
    let pts = lambda_scan(&base, &lambdas, 2.0, 6e6).unwrap();
    let mut checks = Vec::new();
    // nearest scan points on each side of the crossing with a nonzero dark width
    let mut worst: f64 = 0.0;
    for p in pts.iter().filter(|p| p.lambda == 0.8 || p.lambda == 1.2) {
        worst = worst.max((p.fit2.rate - p.table.1).abs() / p.table.1);
    }
    checks.push(check(worst <= 0.03, format!("Γ2' fit vs closed formula next to the crossing: {:.2}% (≤ 3%)", 100.0 * worst)));
    let mut sum_err: f64 = 0.0;
    for p in &pts {
        sum_err = sum_err.max(((p.fit1.rate + p.fit2.rate) - (p.gamma1 + p.gamma2)).abs() / (p.gamma1 + p.gamma2));
    }
    checks.push(check(sum_err <= 0.05, format!("width sum rule: {:.2}% (≤ 5%)", 100.0 * sum_err)));
    let m = base.at_lambda(1.0);
    let l = renormalized_levels(&m).unwrap();
    let gap = l.e2p_numeric - l.e1p_numeric;
    let target = 2.0 * m.bath.principal_density(m.e1).abs();
    let e = (gap - target).abs() / target;
    checks.push(check(e <= 0.02, format!("gap at λ=1 vs 2|S(E1)|: {:.1e} (≤ 2%)", e)));
    Verdict::new(checks)
}

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    Array2::from_shape_fn((n, n), |_| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
}

fn random_density(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let a = random_matrix(n, rng);
    let p = a.dot(&dagger(&a));
    let t = trace(&p);
    p / t
}

fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    let d = (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    d / a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300)
}

fn algebraic_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_forms: f64 = 0.0;
    for _ in 0..5 {
        let n = 6;
        let mut e: Vec<f64> = (0..n).map(|_| 3.0 * rng.gen::<f64>()).collect();
        e.sort_by(|a, b| a.total_cmp(b));
        let es = EigenSystem::from_energies(ndarray::Array1::from(e));
        let a = random_matrix(n, &mut rng);
        let herm = (&a + &dagger(&a)) * C64::new(0.5, 0.0);
        let mut cs = CouplingSet::single(herm, BathModel::new(BathKind::OhmicExp, 0.05, 1.0).unwrap());
        cs.push(random_matrix(n, &mut rng), BathModel::new(BathKind::SuperOhmicExp, 0.02, 2.0).unwrap());
        let f = redfield_generator(&es, &cs, Horizon::Infinite).unwrap();
        let k = redfield_kernel_form(&es, &cs).unwrap();
        for _ in 0..10 {
            let rho = random_density(n, &mut rng);
            worst_forms = worst_forms.max(rel_diff(&f.apply(0.0, &rho).unwrap(), &k.apply(0.0, &rho).unwrap()));
        }
    }
    let mut worst_split: f64 = 0.0;
    for kind in [BathKind::OhmicExp, BathKind::OhmicDrudeLorentz, BathKind::SuperOhmicExp] {
        let b = BathModel::new(kind, 0.7, 1.3).unwrap();
        for _ in 0..400 {
            let (w, wp) = (8.0 * rng.gen::<f64>() - 4.0, 8.0 * rng.gen::<f64>() - 4.0);
            let g = dissipative_kernel(&b, w, wp);
            let split = C64::new(geometric_mean(&b, w, wp), 0.0) + detuning_function(&b, w, wp);
            let scale = b.spectral_density(w).max(b.spectral_density(wp)).max(b.principal_density(w).abs()).max(b.principal_density(wp).abs());
            worst_split = worst_split.max((g - split).norm() / scale);
        }
    }
    let mut worst_levels: f64 = 0.0;
    for g in [0.001, 0.01] {
        for m in [Jc3Model::case_a(g).unwrap(), Jc3Model::case_b(g).unwrap()] {
            for lambda in [0.0, 0.5, 1.0, 1.5, 2.0] {
                let l = renormalized_levels(&m.at_lambda(lambda)).unwrap();
                worst_levels = worst_levels.max((l.e1p - l.e1p_numeric).abs()).max((l.e2p - l.e2p_numeric).abs());
            }
        }
    }
    Verdict::new(vec![
        check(worst_forms < 1e-12, format!("filtered vs kernel Redfield: {worst_forms:.1e} (< 1e-12)")),
        check(worst_split < 1e-14, format!("G = √(γγ') + f: {worst_split:.1e} (< 1e-14)")),
        check(worst_levels < 1e-12, format!("renormalized levels closed form vs diagonalization: {worst_levels:.1e} (< 1e-12)")),
    ])
}

/// ∫_0^t C(τ) e^{iωτ} dτ by direct quadrature.
fn time_domain_transform(b: &BathModel, w: f64, t: f64) -> C64 {
    let q = Quad { abs_tol: 1e-14, rel_tol: 1e-13, max_segments: 100_000 };
    let n = ((t * (w.abs() + b.omega_c)) / 10.0).ceil().max(1.0) as usize;
    let pts: Vec<f64> = (0..=n).map(|k| t * k as f64 / n as f64).collect();
    q.integrate_points(|s: f64| b.correlation_function(s).unwrap() * C64::new(0.0, w * s).exp(), &pts).unwrap()
}

fn transform_suite() -> Verdict {
    let omegas: Vec<f64> = (0..10).map(|k| -2.0 + 0.55 * k as f64).collect();
    let times: Vec<f64> = (0..10).map(|k| 0.2 * 1.8f64.powi(k)).collect();
    let mut checks = Vec::new();
    for kind in [BathKind::OhmicExp, BathKind::OhmicDrudeLorentz, BathKind::SuperOhmicExp] {
        let b = BathModel::new(kind, 1.0, 1.0).unwrap();
        let pair = TdSpectralPair { bath: b };
        let mut worst: f64 = 0.0;
        for &w in &omegas {
            for &t in &times {
                let (r, wt) = b.td_unitary_coeffs(w, t).unwrap();
                worst = worst.max((r - pair.s_t(w, t).unwrap()).abs());
                worst = worst.max((wt + 0.25 * pair.gamma_t(w, t).unwrap()).abs());
            }
        }
        checks.push(check(worst < 1e-6, format!("{}: R_t = S_t, W_t = −γ_t/4 to {worst:.1e} (< 1e-6)", kind.name())));
    }
    let b = BathModel::new(BathKind::OhmicExp, 1.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for &w in &omegas {
        for &t in &times[..8] {
            worst = worst.max((b.half_fourier(w, Horizon::Finite(t)).unwrap() - time_domain_transform(&b, w, t)).norm());
        }
    }
    checks.push(check(worst < 1e-8, format!("explicit Γ_t vs time-domain quadrature: {worst:.1e} (< 1e-8)")));
    Verdict::new(checks)
}

/// (τ/2π) e^{−i(ω−ω')τ/2} ∫ γ(Ω) sinc((Ω−ω)τ/2) sinc((Ω−ω')τ/2) dΩ by composite Simpson.
fn dcg_brute_force(bath: &BathModel, w: f64, wp: f64, tau: f64) -> C64 {
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
    let f = |x: f64| bath.spectral_density(x) * sinc((x - w) * tau / 2.0) * sinc((x - wp) * tau / 2.0);
    let (a, b, n) = (0.0, 80.0 * bath.omega_c, 800_000usize);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    C64::from_polar(1.0, -(w - wp) * tau / 2.0) * (tau / (2.0 * PI) * acc * h / 3.0)
}

fn kernel_structure() -> Verdict {
    let mut checks = Vec::new();
    let mut worst_psd: f64 = 0.0;
    for kind in [BathKind::OhmicExp, BathKind::OhmicDrudeLorentz, BathKind::SuperOhmicExp] {
        let b = BathModel::new(kind, 1.0, 1.0).unwrap();
        for tau in [0.5, 4.0, 32.0] {
            let k = KernelGrid::build(uniform_grid(-3.0, 3.0, 50), |w, wp| dcg_kernels(&b, w, wp, tau).unwrap().0);
            let (e, _) = k.values.eigh(UPLO::Lower).unwrap();
            let max = e.iter().cloned().fold(0.0, f64::max);
            worst_psd = worst_psd.max(-e[0] / max);
        }
    }
    checks.push(check(worst_psd <= 1e-10, format!("DCG kernel min eig / max eig = {:.1e} (≥ −1e-10)", -worst_psd)));
    let mut rng = ChaCha8Rng::seed_from_u64(72);
    let b = BathModel::new(BathKind::OhmicExp, 1.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let w = 4.0 * rng.gen::<f64>() - 1.0;
        let wp = 4.0 * rng.gen::<f64>() - 1.0;
        let tau = 0.5 + 9.5 * rng.gen::<f64>();
        let (g, _) = dcg_kernels(&b, w, wp, tau).unwrap();
        let o = dcg_brute_force(&b, w, wp, tau);
        worst = worst.max((g - o).norm() / o.norm().max(1e-3 * b.g * b.omega_c));
    }
    checks.push(check(worst < 1e-6, format!("DCG decomposition vs brute-force quadrature: {worst:.1e} (< 1e-6)")));
    let small = [0.0, 0.05, 0.1, 0.2, 0.3];
    let large = [10.0, 20.0, 40.0, 80.0, 160.0];
    let t0s: Vec<f64> = small.iter().chain(&large).cloned().collect();
    let scan = norm_ratio_scan(&b, &uniform_grid(-3.0, 3.0, 201), &t0s).unwrap();
    let r0 = scan[0].1;
    let flat = scan[..5].iter().map(|(_, r)| (r / r0 - 1.0).abs()).fold(0.0, f64::max);
    checks.push(check(flat < 0.1, format!("norm ratio plateau variation for T0 < 0.3/ω_c: {:.1}% (< 10%)", 100.0 * flat)));
    // C/T0 fit in log space
    let tail = &scan[5..];
    let c = (tail.iter().map(|(t, r)| (r * t).ln()).sum::<f64>() / tail.len() as f64).exp();
    let resid = tail.iter().map(|(t, r)| (r - c / t).abs() / r).fold(0.0, f64::max);
    checks.push(check(resid < 0.1, format!("inverse-law fit for T0 > 10/ω_c: residual {:.1}% (< 10%)", 100.0 * resid)));
    Verdict::new(checks)
}

fn chain_case(keep: usize, g_tot: f64) -> (TruncatedChain, CouplingSet) {
    let chain = desk_chain(keep).unwrap();
    let bath = chain.bath(BathKind::OhmicExp, g_tot, chain.cutoff(6.0)).unwrap();
    let cs = chain.coupling_set(bath, CouplingBasis::Ladder).unwrap();
    (chain, cs)
}

fn cp_contract() -> Verdict {
    let (chain, cs) = chain_case(32, 1.0);
    let (rho, _) = chain.perpendicular_state().unwrap();
    let tf = chain.fmr_period();
    let eqs = [Equation::Redfield, Equation::Game, Equation::TdcGame, Equation::Prwa(51), Equation::Perlind];
    let opts = CompareOptions { t_max: 2000.0 * tf / 32.0, dt: tf / 32.0, epsilon: 1e-10, sample: 1, monitor_positivity: true };
    let c = compare(&chain.es, &cs, &rho, &eqs, 0, &opts, &|| vec![Recorder::negativity()]).unwrap();
    let mut checks = Vec::new();
    for k in 1..eqs.len() {
        let e = c.min_eigenvalue[k].unwrap_or(f64::NAN);
        let ok = c.errors[k].is_none() && e >= -1e-8 && c.max_trace_drift[k] <= 1e-8 && c.times.len() == 2001;
        checks.push(check(ok, format!("{}: min eig {e:.1e}, trace drift {:.1e}", eqs[k], c.max_trace_drift[k])));
    }
    let neg = c.observables[0]["negativity"].iter().cloned().fold(0.0, f64::min);
    checks.push(check(neg < 0.0, format!("Redfield negativity sum reaches {neg:.2e} (< 0)")));
    let v = floquet_driven_run();
    checks.push(check(v.0, v.1));
    Verdict::new(checks)
}

fn floquet_chain(amplitude: f64) -> DrivenChain {
    let chain = spectrum(&ChainModel::new(6, 400.0, 6.0).unwrap().with_default_field().unwrap()).unwrap().truncate(16).unwrap();
    DrivenChain::new(chain, 10.0, amplitude, 0.05).unwrap()
}

fn floquet_bath(d: &DrivenChain) -> CouplingSet {
    let bath = d.chain.bath(BathKind::SuperOhmicExp, 0.266 * 18.0, d.chain.cutoff(6.0)).unwrap();
    d.chain.coupling_set(bath, CouplingBasis::Cartesian).unwrap()
}

const FLOQUET_STEPS: usize = DEFAULT_FRAMES / 2;

/// Driven n=6 chain over two periods: (ok, description).
fn floquet_driven_run() -> (bool, String) {
    static RUN: OnceLock<(bool, String)> = OnceLock::new();
    RUN.get_or_init(|| {
        let d = floquet_chain(1.0);
        let basis = d.basis(DEFAULT_FRAMES, DEFAULT_PHASE_STEP).unwrap();
        let game = FloquetGame::new(&basis, &floquet_bath(&d), FLOQUET_STEPS).unwrap();
        let (rho0, _) = d.chain.perpendicular_state().unwrap();
        let run = evolve_floquet(&basis, &game, &rho0.mat, 2.0 * basis.period, 1e-10, &[], 1, &[]).unwrap();
        let ok = run.min_eigenvalue >= -1e-8 && run.max_trace_drift <= 1e-8 && run.times.len() > 2000;
        (ok, format!("Floquet-GAME ({} steps): min eig {:.1e}, trace drift {:.1e}", run.times.len() - 1, run.min_eigenvalue, run.max_trace_drift))
    })
    .clone()
}

fn chain_scaling() -> Verdict {
    let gs = [0.01, 0.02, 0.04, 0.1];
    let mut rates = Vec::new();
    let mut peaks = Vec::new();
    let mut sat = Vec::new();
    for &g in &gs {
        let (chain, cs) = chain_case(128, g);
        let (rho, _) = chain.perpendicular_state().unwrap();
        let tf = chain.fmr_period();
        let red: Arc<dyn Generator + Send + Sync> = Arc::new(redfield_generator(&chain.es, &cs, Horizon::Infinite).unwrap());
        let energies = chain.es.energies.clone();
        let recorders = || {
            let red = red.clone();
            let e = energies.clone();
            vec![Recorder::new("relaxation_rate", move |t, r| metrics::relaxation_rate(red.as_ref(), &e, t, r))]
        };
        let opts = CompareOptions { t_max: 3.0 * tf, dt: tf / 32.0, epsilon: 1e-9, sample: 1, monitor_positivity: false };
        let c = compare(&chain.es, &cs, &rho, &[Equation::Redfield, Equation::Game], 0, &opts, &recorders).unwrap();
        let r = &c.observables[0]["relaxation_rate"];
        rates.push(r.iter().sum::<f64>() / r.len() as f64);
        let peak = c.peak_distance(1);
        peaks.push(peak);
        let k = c.distances[1].iter().position(|d| *d >= 0.9 * peak).unwrap();
        sat.push(c.times[k] / tf);
    }
    // least-squares line through the origin on the lowest four points
    let slope = rates.iter().zip(&peaks).map(|(x, y)| x * y).sum::<f64>() / rates.iter().map(|x| x * x).sum::<f64>();
    let resid = rates.iter().zip(&peaks).map(|(x, y)| (y - slope * x).abs() / y).fold(0.0, f64::max);
    let spread = (sat[0] - sat[2]).abs() / sat[0];
    let table: Vec<String> = gs.iter().zip(rates.iter().zip(&peaks)).map(|(g, (r, p))| format!("g={g}: 1/τ_r={r:.3e}, peak={p:.3e}")).collect();
    Verdict::new(vec![
        check(resid < 0.15, format!("peak vs 1/τ_r through origin: slope {slope:.3}, residual {:.1}% (< 15%) [{}]", 100.0 * resid, table.join(", "))),
        check(spread < 0.2, format!("saturation time g=0.01 vs 0.04: {:.3} vs {:.3} T_fm, {:.1}% (< 20%)", sat[0], sat[2], 100.0 * spread)),
    ])
}

fn comparative_ordering() -> Verdict {
    let mut checks = Vec::new();
    for g in [1.0, 0.01] {
        let (chain, cs) = chain_case(48, g);
        let (rho, _) = chain.perpendicular_state().unwrap();
        let tf = chain.fmr_period();
        let eqs = vec![
            Equation::Redfield,
            Equation::Game,
            Equation::Rwa,
            Equation::Prwa(11),
            Equation::Prwa(51),
            Equation::Prwa(201),
            Equation::Dcg(0.5 * tf),
            Equation::Dcg(4.0 * tf),
            Equation::Dcg(32.0 * tf),
            Equation::Perlind,
            Equation::PerlindRwaLs,
            Equation::Ule,
        ];
        let opts = CompareOptions { t_max: 4.0 * tf, dt: tf / 32.0, epsilon: 1e-9, sample: 4, monitor_positivity: false };
        let c = compare(&chain.es, &cs, &rho, &eqs, 0, &opts, &|| vec![]).unwrap();
        let game = c.peak_distance(1);
        let mut others = Vec::new();
        let mut strictly = true;
        for k in 2..eqs.len() - 1 {
            let p = c.peak_distance(k);
            strictly &= c.errors[k].is_none() && game < p;
            others.push(format!("{} {p:.4e}", eqs[k]));
        }
        let ule = c.peak_distance(eqs.len() - 1);
        checks.push(check(strictly && c.errors[1].is_none(), format!("g_tot={g}: GAME {game:.4e} strictly below {}", others.join(", "))));
        checks.push(check(game <= ule, format!("g_tot={g}: GAME {game:.5e} ≤ ULE {ule:.5e}")));
    }
    Verdict::new(checks)
}

fn floquet_reduction() -> Verdict {
    let mut checks = Vec::new();
    let d = floquet_chain(0.0);
    let basis = d.basis(DEFAULT_FRAMES, DEFAULT_PHASE_STEP).unwrap();
    let cs = floquet_bath(&d);
    let game = FloquetGame::new(&basis, &cs, FLOQUET_STEPS).unwrap();
    let reference = game_generator(&d.chain.es, &cs, Horizon::Infinite).unwrap();
    let (rho0, _) = d.chain.perpendicular_state().unwrap();
    let dt = game.dt();
    let mut rho_s = rho0.mat.clone();
    let mut rho_f = basis.to_floquet(&rho0.mat, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    for k in 1..=FLOQUET_STEPS {
        let t = k as f64 * dt;
        rho_s = Stepper::PowerSeries { epsilon: 1e-12 }.step(&reference, &rho_s, t - dt, dt).unwrap();
        rho_f = Stepper::FrozenMidpoint { epsilon: 1e-12 }.step(&game, &rho_f, t - dt, dt).unwrap();
        let lab = basis.to_lab(&rho_f, t).unwrap();
        let diff = (&lab - &rho_s).iter().map(|z| z.norm()).fold(0.0, f64::max);
        worst = worst.max(diff / k as f64);
    }
    checks.push(check(worst < 1e-8, format!("zero drive vs static GAME: {worst:.1e} per step (< 1e-8)")));
    let driven = floquet_chain(1.0);
    let b = driven.basis(DEFAULT_FRAMES, DEFAULT_PHASE_STEP).unwrap();
    checks.push(check(b.unitarity_defect < UNITARITY_TOLERANCE, format!("driven monodromy ‖UU†−1‖₁ = {:.1e} (< 1e-11)", b.unitarity_defect)));
    let v = floquet_driven_run();
    checks.push(check(v.0, v.1));
    Verdict::new(checks)
}
