//! Experiment configuration: a TOML document resolved into a fully
//! defaulted, validated `ExperimentConfig`.

use qme::bath::BathKind;
use qme::equations::Equation;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const DEFAULT_DT_DIVISOR: usize = 64;
pub const DEFAULT_EPSILON: f64 = 1e-7;
pub const DEFAULT_CUTOFF_GAPS: f64 = 6.0;
pub const DEFAULT_T_MAX_PERIODS: f64 = 30.0;
pub const DEFAULT_OUTPUT_DIR: &str = "qme-out";

#[derive(Debug, Clone)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn field_err(field: &str, msg: impl fmt::Display) -> ConfigError {
    ConfigError(format!("{field}: {msg}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Spectra,
    Kernels,
    Jc3,
    Chain,
    Floquet,
    Compare,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Spectra => "spectra",
            Kind::Kernels => "kernels",
            Kind::Jc3 => "jc3",
            Kind::Chain => "chain",
            Kind::Floquet => "floquet",
            Kind::Compare => "compare",
        }
    }
}

impl FromStr for Kind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Ok(match s {
            "spectra" => Kind::Spectra,
            "kernels" => Kind::Kernels,
            "jc3" => Kind::Jc3,
            "chain" => Kind::Chain,
            "floquet" => Kind::Floquet,
            "compare" => Kind::Compare,
            _ => return Err(field_err("kind", format!("unknown experiment kind '{s}'"))),
        })
    }
}

// Raw document, every field optional.

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    kind: Option<String>,
    model: Option<RawModel>,
    bath: Option<RawBath>,
    equations: Option<RawEquations>,
    propagator: Option<RawPropagator>,
    output: Option<RawOutput>,
    spectra: Option<RawSpectra>,
    kernels: Option<RawKernels>,
    jc3: Option<RawJc3>,
    floquet: Option<RawFloquet>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(rename = "type")]
    kind: Option<String>,
    preset: Option<String>,
    e1: Option<f64>,
    e2: Option<f64>,
    lambda: Option<f64>,
    n: Option<usize>,
    j: Option<f64>,
    eps_d: Option<f64>,
    h_z: Option<f64>,
    keep: Option<usize>,
    coupling: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBath {
    kind: Option<String>,
    g: Option<f64>,
    omega_c: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEquations {
    list: Option<Vec<String>>,
    reference: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPropagator {
    dt_divisor: Option<usize>,
    epsilon: Option<f64>,
    t_max: Option<f64>,
    monitor_positivity: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    thin: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectra {
    omega_min: Option<f64>,
    omega_max: Option<f64>,
    points: Option<usize>,
    t_max: Option<f64>,
    t_points: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernels {
    omega_min: Option<f64>,
    omega_max: Option<f64>,
    points: Option<usize>,
    t0: Option<Vec<f64>>,
    grid_t0: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJc3 {
    lambdas: Option<Vec<f64>>,
    scan_dt: Option<f64>,
    scan_t_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFloquet {
    period: Option<f64>,
    amplitude: Option<f64>,
    ramp: Option<f64>,
    frames: Option<usize>,
    steps: Option<usize>,
    snapshots: Option<Vec<f64>>,
}

// Resolved configuration.

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ModelConfig {
    Jc3 { e1: f64, e2: f64, lambda: f64 },
    Chain { n: usize, j: f64, eps_d: f64, h_z: Option<f64>, keep: usize, coupling: String },
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct BathConfig {
    pub kind: String,
    /// Coupling g for JC3, total coupling g_tot for the chain.
    pub g: f64,
    /// Absolute cutoff; `None` means 6Δ for the chain.
    pub omega_c: Option<f64>,
}

impl BathConfig {
    pub fn kind(&self) -> BathKind {
        BathKind::parse(&self.kind).expect("validated at parse time")
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PropagatorConfig {
    pub dt_divisor: usize,
    pub epsilon: f64,
    /// In units of the model's reference period.
    pub t_max: f64,
    pub monitor_positivity: bool,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct OutputConfig {
    pub dir: String,
    pub thin: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SpectraConfig {
    /// Frequencies in units of ω_c, times in units of 1/ω_c.
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub t_max: f64,
    pub t_points: usize,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct KernelsConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
    pub t0: Vec<f64>,
    pub grid_t0: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Jc3Config {
    pub lambdas: Vec<f64>,
    pub scan_dt: f64,
    pub scan_t_max: f64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct FloquetConfig {
    /// Drive period in units of T_fm.
    pub period: f64,
    /// Drive amplitude in units of the gap Δ.
    pub amplitude: f64,
    pub ramp: f64,
    pub frames: usize,
    pub steps: usize,
    /// Snapshot times in units of the drive period.
    pub snapshots: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub model: ModelConfig,
    pub bath: BathConfig,
    #[serde(serialize_with = "ser_equations")]
    pub equations: Vec<Equation>,
    #[serde(serialize_with = "ser_equation")]
    pub reference: Equation,
    pub propagator: PropagatorConfig,
    pub output: OutputConfig,
    pub spectra: SpectraConfig,
    pub kernels: KernelsConfig,
    pub jc3: Jc3Config,
    pub floquet: FloquetConfig,
}

fn ser_equations<S: serde::Serializer>(v: &[Equation], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|e| e.to_string()))
}

fn ser_equation<S: serde::Serializer>(v: &Equation, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

fn positive(field: &str, v: f64) -> Result<f64, ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(field_err(field, format!("must be finite and positive, got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<usize, ConfigError> {
    if v >= min {
        Ok(v)
    } else {
        Err(field_err(field, format!("must be at least {min}, got {v}")))
    }
}

fn jc3_preset(name: &str) -> Result<(f64, f64), ConfigError> {
    match name {
        "case_a" | "a" => Ok((0.095, 0.105)),
        "case_b" | "b" => Ok((0.09975, 0.10025)),
        _ => Err(field_err("model.preset", format!("unknown JC3 preset '{name}' (case_a, case_b)"))),
    }
}

fn default_model_type(kind: Kind) -> &'static str {
    match kind {
        Kind::Jc3 | Kind::Spectra | Kind::Kernels | Kind::Compare => "jc3",
        Kind::Chain | Kind::Floquet => "chain",
    }
}

fn resolve_model(kind: Kind, raw: RawModel) -> Result<ModelConfig, ConfigError> {
    let ty = raw.kind.as_deref().unwrap_or(default_model_type(kind)).to_string();
    let jc3_only = [("e1", raw.e1.is_some()), ("e2", raw.e2.is_some()), ("lambda", raw.lambda.is_some()), ("preset", raw.preset.is_some())];
    let chain_only = [
        ("n", raw.n.is_some()),
        ("j", raw.j.is_some()),
        ("eps_d", raw.eps_d.is_some()),
        ("h_z", raw.h_z.is_some()),
        ("keep", raw.keep.is_some()),
        ("coupling", raw.coupling.is_some()),
    ];
    match ty.as_str() {
        "jc3" => {
            if kind == Kind::Chain || kind == Kind::Floquet {
                return Err(field_err("model.type", format!("the {} experiment needs a chain model", kind.name())));
            }
            if let Some((f, _)) = chain_only.iter().find(|(_, set)| *set) {
                return Err(field_err(&format!("model.{f}"), "not a JC3 parameter"));
            }
            let (pe1, pe2) = jc3_preset(raw.preset.as_deref().unwrap_or("case_a"))?;
            let e1 = positive("model.e1", raw.e1.unwrap_or(pe1))?;
            let e2 = positive("model.e2", raw.e2.unwrap_or(pe2))?;
            if e1 > e2 {
                return Err(field_err("model.e2", format!("needs e1 ≤ e2, got e1={e1}, e2={e2}")));
            }
            let lambda = raw.lambda.unwrap_or(0.0);
            if !lambda.is_finite() {
                return Err(field_err("model.lambda", "must be finite"));
            }
            Ok(ModelConfig::Jc3 { e1, e2, lambda })
        }
        "chain" => {
            if kind == Kind::Jc3 {
                return Err(field_err("model.type", "the jc3 experiment needs a jc3 model"));
            }
            if let Some((f, _)) = jc3_only.iter().find(|(_, set)| *set) {
                return Err(field_err(&format!("model.{f}"), "not a chain parameter"));
            }
            let floquet = kind == Kind::Floquet;
            let n = raw.n.unwrap_or(if floquet { 6 } else { 8 });
            if !(2..=qme::spinchain::MAX_SITES).contains(&n) {
                return Err(field_err("model.n", format!("must be in 2..={}, got {n}", qme::spinchain::MAX_SITES)));
            }
            let j = positive("model.j", raw.j.unwrap_or(400.0))?;
            let eps_d = raw.eps_d.unwrap_or(6.0);
            if !eps_d.is_finite() {
                return Err(field_err("model.eps_d", "must be finite"));
            }
            if let Some(h) = raw.h_z {
                if !h.is_finite() {
                    return Err(field_err("model.h_z", "must be finite"));
                }
            }
            let keep = raw.keep.unwrap_or(if floquet { 16 } else { 32 });
            if keep < 2 || keep > 1 << n {
                return Err(field_err("model.keep", format!("must be in 2..={}, got {keep}", 1usize << n)));
            }
            let coupling = raw.coupling.unwrap_or_else(|| if floquet { "cartesian".into() } else { "ladder".into() });
            if coupling != "ladder" && coupling != "cartesian" {
                return Err(field_err("model.coupling", format!("unknown coupling form '{coupling}' (ladder, cartesian)")));
            }
            Ok(ModelConfig::Chain { n, j, eps_d, h_z: raw.h_z, keep, coupling })
        }
        other => Err(field_err("model.type", format!("unknown model type '{other}' (jc3, chain)"))),
    }
}

fn parse_equations(list: &[String]) -> Result<Vec<Equation>, ConfigError> {
    let mut out = Vec::with_capacity(list.len());
    for (i, s) in list.iter().enumerate() {
        let e: Equation = s.parse().map_err(|e| field_err(&format!("equations.list[{i}]"), e))?;
        if out.contains(&e) {
            return Err(field_err(&format!("equations.list[{i}]"), format!("duplicate equation '{e}'")));
        }
        out.push(e);
    }
    Ok(out)
}

fn default_equations(kind: Kind) -> Vec<Equation> {
    match kind {
        Kind::Chain => vec![Equation::Redfield, Equation::Game],
        _ => vec![Equation::Redfield, Equation::Game, Equation::Perlind],
    }
}

/// Parses and validates a TOML configuration. `kind` supplies the
/// experiment when the document does not name one; a conflicting name is
/// an error.
pub fn parse_config(text: &str, kind: Option<Kind>) -> Result<ExperimentConfig, ConfigError> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| ConfigError(format!("parse error: {e}")))?;
    let doc_kind = raw.kind.as_deref().map(Kind::from_str).transpose()?;
    let kind = match (kind, doc_kind) {
        (Some(a), Some(b)) if a != b => {
            return Err(field_err("kind", format!("config is for '{}' but the '{}' subcommand was run", b.name(), a.name())))
        }
        (Some(a), _) | (None, Some(a)) => a,
        (None, None) => return Err(field_err("kind", "missing experiment kind")),
    };

    let model = resolve_model(kind, raw.model.unwrap_or_default())?;
    let is_chain = matches!(model, ModelConfig::Chain { .. });

    let rb = raw.bath.unwrap_or_default();
    let bath_kind = rb.kind.unwrap_or_else(|| if kind == Kind::Floquet { "super-ohmic-exp".into() } else { "ohmic-exp".into() });
    let bath_kind = BathKind::parse(&bath_kind)
        .ok_or_else(|| field_err("bath.kind", format!("unknown bath '{bath_kind}' (ohmic-exp, ohmic-drude-lorentz, super-ohmic-exp)")))?
        .name()
        .to_string();
    let g = rb.g.unwrap_or(if is_chain { 1.0 } else { 0.001 });
    if !(g.is_finite() && g >= 0.0) {
        return Err(field_err("bath.g", format!("must be finite and non-negative, got {g}")));
    }
    let omega_c = match rb.omega_c {
        Some(w) => Some(positive("bath.omega_c", w)?),
        None if is_chain => None,
        None => Some(1.0),
    };
    let bath = BathConfig { kind: bath_kind, g, omega_c };

    let re = raw.equations.unwrap_or_default();
    let equations = match re.list {
        Some(l) if l.is_empty() => return Err(field_err("equations.list", "empty equation list")),
        Some(l) => parse_equations(&l)?,
        None => default_equations(kind),
    };
    let reference = match re.reference {
        Some(r) => {
            let e: Equation = r.parse().map_err(|e| field_err("equations.reference", e))?;
            if !equations.contains(&e) {
                return Err(field_err("equations.reference", format!("'{e}' is not in equations.list")));
            }
            e
        }
        None if equations.contains(&Equation::Redfield) => Equation::Redfield,
        None => equations[0],
    };

    let rp = raw.propagator.unwrap_or_default();
    let propagator = PropagatorConfig {
        dt_divisor: at_least("propagator.dt_divisor", rp.dt_divisor.unwrap_or(DEFAULT_DT_DIVISOR), 1)?,
        epsilon: positive("propagator.epsilon", rp.epsilon.unwrap_or(DEFAULT_EPSILON))?,
        t_max: positive("propagator.t_max", rp.t_max.unwrap_or(DEFAULT_T_MAX_PERIODS))?,
        monitor_positivity: rp.monitor_positivity.unwrap_or(false),
    };

    let ro = raw.output.unwrap_or_default();
    let output = OutputConfig {
        dir: ro.dir.unwrap_or_else(|| DEFAULT_OUTPUT_DIR.to_string()),
        thin: at_least("output.thin", ro.thin.unwrap_or(1), 1)?,
    };

    let rs = raw.spectra.unwrap_or_default();
    let spectra = SpectraConfig {
        omega_min: rs.omega_min.unwrap_or(-5.0),
        omega_max: rs.omega_max.unwrap_or(10.0),
        points: at_least("spectra.points", rs.points.unwrap_or(301), 2)?,
        t_max: positive("spectra.t_max", rs.t_max.unwrap_or(20.0))?,
        t_points: at_least("spectra.t_points", rs.t_points.unwrap_or(201), 2)?,
    };
    if !(spectra.omega_min < spectra.omega_max) {
        return Err(field_err("spectra.omega_max", "must exceed spectra.omega_min"));
    }

    let rk = raw.kernels.unwrap_or_default();
    let t0 = rk.t0.unwrap_or_else(|| (0..=20).map(|k| 10f64.powf(-2.0 + 0.25 * k as f64)).collect());
    for (i, v) in t0.iter().enumerate() {
        if !(v.is_finite() && *v >= 0.0) {
            return Err(field_err(&format!("kernels.t0[{i}]"), format!("must be finite and non-negative, got {v}")));
        }
    }
    let kernels = KernelsConfig {
        omega_min: rk.omega_min.unwrap_or(-3.0),
        omega_max: rk.omega_max.unwrap_or(3.0),
        points: at_least("kernels.points", rk.points.unwrap_or(121), 2)?,
        t0,
        grid_t0: rk.grid_t0.unwrap_or(0.0),
    };
    if !(kernels.omega_min < kernels.omega_max) {
        return Err(field_err("kernels.omega_max", "must exceed kernels.omega_min"));
    }
    if !(kernels.grid_t0.is_finite() && kernels.grid_t0 >= 0.0) {
        return Err(field_err("kernels.grid_t0", "must be finite and non-negative"));
    }

    let rj = raw.jc3.unwrap_or_default();
    let jc3 = Jc3Config {
        lambdas: rj.lambdas.unwrap_or_default(),
        scan_dt: positive("jc3.scan_dt", rj.scan_dt.unwrap_or(2.0))?,
        scan_t_max: positive("jc3.scan_t_max", rj.scan_t_max.unwrap_or(6e6))?,
    };

    let rf = raw.floquet.unwrap_or_default();
    let frames = rf.frames.unwrap_or(qme::floquet::DEFAULT_FRAMES);
    if !frames.is_power_of_two() || frames < 4 {
        return Err(field_err("floquet.frames", format!("must be a power of two ≥ 4, got {frames}")));
    }
    let steps = rf.steps.unwrap_or(frames / 2);
    if steps == 0 || (frames % (2 * steps)) != 0 {
        return Err(field_err("floquet.steps", format!("2·steps must divide frames ({frames}), got {steps}")));
    }
    let ramp = rf.ramp.unwrap_or(0.05);
    if !(ramp > 0.0 && ramp < 0.25) {
        return Err(field_err("floquet.ramp", format!("must lie in (0, 0.25), got {ramp}")));
    }
    let floquet = FloquetConfig {
        period: positive("floquet.period", rf.period.unwrap_or(10.0))?,
        amplitude: rf.amplitude.unwrap_or(1.0),
        ramp,
        frames,
        steps,
        snapshots: rf.snapshots.unwrap_or_else(|| vec![0.0, 0.5]),
    };
    if !floquet.amplitude.is_finite() {
        return Err(field_err("floquet.amplitude", "must be finite"));
    }
    for (i, s) in floquet.snapshots.iter().enumerate() {
        if !(s.is_finite() && *s >= 0.0) {
            return Err(field_err(&format!("floquet.snapshots[{i}]"), "must be finite and non-negative"));
        }
    }

    Ok(ExperimentConfig { kind, model, bath, equations, reference, propagator, output, spectra, kernels, jc3, floquet })
}

impl ExperimentConfig {
    /// Defaults for `kind` with no document.
    pub fn defaults(kind: Kind) -> Self {
        parse_config("", Some(kind)).expect("defaults are valid")
    }
}
