//! In-memory artifacts and the single writer that flushes them.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::ExperimentConfig;

/// Files produced by a command, held in memory until the run finishes.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    /// Human-readable summary for stdout.
    pub summary: String,
    /// Threshold violations, reported under `--check`.
    pub violations: Vec<String>,
    /// Violations that fail the run even without `--check`.
    pub failures: Vec<String>,
}

impl Artifacts {
    pub fn add(&mut self, name: impl Into<String>, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.violations.push(msg());
        }
    }

    /// Writes every file under `dir`, creating it if needed.
    pub fn write_all(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            fs::write(&path, bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Full-precision float for CSV: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        "NaN".to_string()
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    version: &'static str,
    command: &'a str,
    config_hash: String,
    report: &'a T,
}

/// Pretty JSON wrapped with the artifact version and config hash.
pub fn json<T: Serialize>(command: &str, cfg: &ExperimentConfig, report: &T) -> Vec<u8> {
    let env = Envelope { version: env!("CARGO_PKG_VERSION"), command, config_hash: cfg.hash(), report };
    let mut out = serde_json::to_vec_pretty(&env).expect("report serializes");
    out.push(b'\n');
    out
}

/// CSV with a header row; every cell is preformatted.
pub fn csv(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}
