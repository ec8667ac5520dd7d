//! Output files: wide CSV tables, atomic writes and the run manifest.

use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Column-oriented table written as CSV with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Table { columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    /// Rust's `Display` for f64 is the shortest string that round-trips.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        s.push_str(&self.columns.iter().map(|c| quote(c)).collect::<Vec<_>>().join(","));
        s.push('\n');
        for row in &self.rows {
            for (k, c) in row.iter().enumerate() {
                if k > 0 {
                    s.push(',');
                }
                match c {
                    Cell::Num(v) => write!(s, "{v}").unwrap(),
                    Cell::Int(v) => write!(s, "{v}").unwrap(),
                    Cell::Text(t) => s.push_str(&quote(t)),
                }
            }
            s.push('\n');
        }
        s
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// File-system safe stem for an equation or observable name.
pub fn file_stem(name: &str) -> String {
    let mut out = String::new();
    for c in name.chars() {
        if c.is_ascii_alphanumeric() || c == '-' || c == '.' {
            out.push(c);
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects outputs of one run. Writes are serialized through `&mut self`.
pub struct RunOutput {
    pub dir: PathBuf,
    files: BTreeMap<String, String>,
    phases: Vec<(String, f64)>,
    equations: Map<String, Value>,
    results: Map<String, Value>,
    warnings: Vec<String>,
}

impl RunOutput {
    pub fn create(dir: PathBuf) -> io::Result<Self> {
        std::fs::create_dir_all(&dir)?;
        Ok(RunOutput { dir, files: BTreeMap::new(), phases: Vec::new(), equations: Map::new(), results: Map::new(), warnings: Vec::new() })
    }

    pub fn write_file(&mut self, name: &str, bytes: &[u8]) -> io::Result<()> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> io::Result<()> {
        self.write_file(name, table.to_csv().as_bytes())
    }

    /// Runs `f` and records its wall time under `phase`.
    pub fn timed<T>(&mut self, phase: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.phases.push((phase.to_string(), t0.elapsed().as_secs_f64()));
        out
    }

    pub fn equation(&mut self, name: &str, info: Value) {
        self.equations.insert(name.to_string(), info);
    }

    pub fn result(&mut self, key: &str, v: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(v).expect("serializable"));
    }

    pub fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }

    pub fn files(&self) -> &BTreeMap<String, String> {
        &self.files
    }

    /// Writes `manifest.json` last, after every output file.
    pub fn finish(self, config: &impl Serialize, status: &str) -> io::Result<PathBuf> {
        let mut timing = Map::new();
        let phases: Map<String, Value> = self.phases.into_iter().map(|(k, v)| (k, Value::from(v))).collect();
        timing.insert("phases".into(), Value::Object(phases));
        timing.insert("equations".into(), Value::Object(self.equations));
        let manifest = serde_json::json!({
            "status": status,
            "config": config,
            "versions": {
                "qme": qme::VERSION,
                "qme-cli": env!("CARGO_PKG_VERSION"),
            },
            "timing": timing,
            "results": self.results,
            "warnings": self.warnings,
            "files": self.files,
        });
        let path = self.dir.join("manifest.json");
        let mut text = serde_json::to_string_pretty(&manifest).expect("serializable");
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

