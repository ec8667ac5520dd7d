use clap::{Args, Parser, Subcommand};
use qme_cli::config::{parse_config, Kind};
use qme_cli::run::run;
use qme_cli::OUTPUT_DIR_ENV;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qme", version, about = "Run master-equation experiments and write CSV tables with a JSON manifest")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bath spectral density, principal density and correlation function
    Spectra(Common),
    /// Kernel grids and the norm ratio against coarse-graining time
    Kernels(Common),
    /// Three-level model against its exact solution, with optional λ scan
    Jc3 {
        #[command(flatten)]
        common: Common,
        /// Preset: case_a or case_b
        #[arg(long)]
        preset: Option<String>,
        /// Comma-separated λ values for the level-crossing scan
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
    },
    /// Spin chain spectrum and relaxation comparison
    Chain(Common),
    /// Driven spin chain under Floquet GAME
    Floquet {
        #[command(flatten)]
        common: Common,
        /// Drive period in units of T_fm
        #[arg(long)]
        period: Option<f64>,
        /// Drive amplitude in units of the gap
        #[arg(long)]
        amplitude: Option<f64>,
        /// Ramp fraction of the period
        #[arg(long)]
        ramp: Option<f64>,
        /// Bath kind
        #[arg(long)]
        bath: Option<String>,
        /// Frames per period (power of two)
        #[arg(long)]
        frames: Option<usize>,
    },
    /// Evolve one initial state under several equations
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults apply when omitted
    config: Option<PathBuf>,
    /// Output directory, overriding the config and the environment
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated equation list, e.g. redfield,game,prwa(11)
    #[arg(long, value_delimiter = ',')]
    equations: Option<Vec<String>>,
    /// Propagation time in units of the reference period
    #[arg(long)]
    t_max: Option<f64>,
}

fn set(doc: &mut toml::Table, section: &str, key: &str, v: toml::Value) {
    let entry = doc.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    if let toml::Value::Table(t) = entry {
        t.insert(key.to_string(), v);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut overrides: Vec<(&str, &str, toml::Value)> = Vec::new();
    let (kind, common) = match cli.command {
        Command::Spectra(c) => (Kind::Spectra, c),
        Command::Kernels(c) => (Kind::Kernels, c),
        Command::Chain(c) => (Kind::Chain, c),
        Command::Compare(c) => (Kind::Compare, c),
        Command::Jc3 { common, preset, lambdas } => {
            if let Some(p) = preset {
                overrides.push(("model", "preset", p.into()));
            }
            if let Some(l) = lambdas {
                overrides.push(("jc3", "lambdas", toml::Value::Array(l.into_iter().map(toml::Value::from).collect())));
            }
            (Kind::Jc3, common)
        }
        Command::Floquet { common, period, amplitude, ramp, bath, frames } => {
            for (key, v) in [("period", period), ("amplitude", amplitude), ("ramp", ramp)] {
                if let Some(v) = v {
                    overrides.push(("floquet", key, v.into()));
                }
            }
            if let Some(b) = bath {
                overrides.push(("bath", "kind", b.into()));
            }
            if let Some(f) = frames {
                overrides.push(("floquet", "frames", toml::Value::Integer(f as i64)));
            }
            (Kind::Floquet, common)
        }
    };
    if let Some(eqs) = common.equations {
        overrides.push(("equations", "list", toml::Value::Array(eqs.into_iter().map(toml::Value::from).collect())));
    }
    if let Some(t) = common.t_max {
        overrides.push(("propagator", "t_max", t.into()));
    }

    let text = match &common.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => t,
            Err(e) => {
                eprintln!("config error: cannot read {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => String::new(),
    };
    let text = if overrides.is_empty() {
        text
    } else {
        let mut doc: toml::Table = match text.parse() {
            Ok(d) => d,
            Err(e) => {
                eprintln!("config error: parse error: {e}");
                return ExitCode::from(2);
            }
        };
        for (section, key, v) in overrides {
            set(&mut doc, section, key, v);
        }
        doc.to_string()
    };
    let cfg = match parse_config(&text, Some(kind)) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    let dir = common
        .out
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(&cfg.output.dir));
    match run(&cfg, dir) {
        Ok(s) => {
            for f in &s.files {
                println!("{}", s.dir.join(f).display());
            }
            println!("{}", s.manifest.display());
            if s.failed.is_empty() {
                ExitCode::SUCCESS
            } else {
                eprintln!("numerical failure in: {}", s.failed.join(", "));
                ExitCode::from(3)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
