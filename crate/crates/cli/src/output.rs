//! Output directory: CSV/JSON tables, the JSON report and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// Floats round-trip through 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone)]
pub enum Cell {
    U(u64),
    I(i64),
    F(f64),
    B(bool),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::U(x) => x.to_string(),
            Cell::I(x) => x.to_string(),
            Cell::F(x) => fmt_f64(*x),
            Cell::B(x) => x.to_string(),
            Cell::S(s) => {
                if s.contains([',', '"', '\n']) {
                    format!("\"{}\"", s.replace('"', "\"\""))
                } else {
                    s.clone()
                }
            }
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::U(x) => json!(x),
            Cell::I(x) => json!(x),
            Cell::F(x) if x.is_finite() => json!(x),
            Cell::F(x) => json!(x.to_string()),
            Cell::B(x) => json!(x),
            Cell::S(s) => json!(s),
        }
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::U(x)
    }
}
impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::U(x as u64)
    }
}
impl From<u32> for Cell {
    fn from(x: u32) -> Self {
        Cell::U(x as u64)
    }
}
impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::I(x)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}
impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::B(x)
    }
}
impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::S(x)
    }
}
impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::S(x.to_string())
    }
}

#[macro_export]
macro_rules! row {
    ($($x:expr),* $(,)?) => { vec![$($crate::output::Cell::from($x)),*] };
}

/// Seeds are derived as `master.child(group, run)`; the manifest lists the
/// groups used.
#[derive(Debug, Clone, Serialize)]
pub struct SeedGroup {
    pub label: String,
    pub group: u64,
    pub runs: u64,
}

pub struct Outputs {
    dir: PathBuf,
    format: Format,
    manifest_hash: String,
    config_hash: String,
    subcommand: &'static str,
    config_path: PathBuf,
    master_seed: u64,
    workers: usize,
    started: Instant,
    files: BTreeMap<String, String>,
    seed_groups: Vec<SeedGroup>,
}

impl Outputs {
    pub fn create(
        dir: &Path,
        format: Format,
        subcommand: &'static str,
        config_path: &Path,
        config_bytes: &[u8],
        master_seed: u64,
        workers: usize,
    ) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let config_hash = sha256_hex(config_bytes);
        let input = format!(
            "{subcommand}\n{config_hash}\n{master_seed}\n{}\n",
            env!("CARGO_PKG_VERSION")
        );
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            manifest_hash: sha256_hex(input.as_bytes())[..16].to_string(),
            config_hash,
            subcommand,
            config_path: config_path.to_path_buf(),
            master_seed,
            workers,
            started: Instant::now(),
            files: BTreeMap::new(),
            seed_groups: Vec::new(),
        })
    }

    pub fn seeds(&mut self, label: &str, group: u64, runs: u64) {
        self.seed_groups.push(SeedGroup {
            label: label.to_string(),
            group,
            runs,
        });
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(self.dir.join(name), bytes)?;
        self.files.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Writes `<stem>.csv` or `<stem>.json` depending on the format; every
    /// row carries the manifest hash.
    pub fn table(
        &mut self,
        stem: &str,
        header: &[&str],
        rows: &[Vec<Cell>],
    ) -> Result<(), CliError> {
        match self.format {
            Format::Csv => {
                let mut s = String::from("manifest_hash");
                for h in header {
                    s.push(',');
                    s.push_str(h);
                }
                s.push('\n');
                for r in rows {
                    debug_assert_eq!(r.len(), header.len());
                    s.push_str(&self.manifest_hash);
                    for c in r {
                        s.push(',');
                        s.push_str(&c.csv());
                    }
                    s.push('\n');
                }
                self.write(&format!("{stem}.csv"), s.as_bytes())
            }
            Format::Json => {
                let rows: Vec<Value> = rows
                    .iter()
                    .map(|r| {
                        let mut m = serde_json::Map::new();
                        for (h, c) in header.iter().zip(r) {
                            m.insert(h.to_string(), c.json());
                        }
                        Value::Object(m)
                    })
                    .collect();
                let v = json!({ "manifest_hash": self.manifest_hash, "rows": rows });
                let mut bytes = serde_json::to_vec_pretty(&v).expect("json");
                bytes.push(b'\n');
                self.write(&format!("{stem}.json"), &bytes)
            }
        }
    }

    /// `report.json`: the verdict and summary numbers.
    pub fn report<T: Serialize>(&mut self, report: &T) -> Result<(), CliError> {
        let mut v = serde_json::to_value(report).expect("serializable report");
        if let Value::Object(m) = &mut v {
            m.insert("manifest_hash".into(), json!(self.manifest_hash));
        }
        let mut bytes = serde_json::to_vec_pretty(&v).expect("json");
        bytes.push(b'\n');
        self.write("report.json", &bytes)
    }

    /// Writes `manifest.json`. It holds wall-clock time, so it is not
    /// itself among the digested outputs.
    pub fn finish(self, exit_code: u8) -> Result<(), CliError> {
        let m = json!({
            "manifest_hash": self.manifest_hash,
            "subcommand": self.subcommand,
            "config_path": self.config_path.display().to_string(),
            "config_hash": self.config_hash,
            "code_version": env!("CARGO_PKG_VERSION"),
            "master_seed": self.master_seed,
            "seed_derivation": "master.child(group, run)",
            "seed_groups": self.seed_groups,
            "workers": self.workers,
            "wall_clock_seconds": self.started.elapsed().as_secs_f64(),
            "exit_code": exit_code,
            "outputs": self.files,
        });
        let mut bytes = serde_json::to_vec_pretty(&m).expect("json");
        bytes.push(b'\n');
        fs::write(self.dir.join("manifest.json"), bytes)?;
        Ok(())
    }
}
