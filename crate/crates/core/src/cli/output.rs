//! CSV and JSON artifacts with a provenance header.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::Result;
use crate::rng::RNG_ALGORITHM;

pub const TOOL: &str = "echostate";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub rng: &'static str,
    pub seed: u64,
}

impl Meta {
    pub fn new(command: &str, config_hash: String, seed: u64) -> Self {
        Self {
            tool: TOOL,
            version: VERSION,
            command: command.to_owned(),
            config_hash,
            rng: RNG_ALGORITHM,
            seed,
        }
    }

    /// First line of every CSV file.
    pub fn comment_line(&self) -> String {
        format!(
            "# {} {} command={} config={} rng={} seed={}",
            self.tool, self.version, self.command, self.config_hash, self.rng, self.seed
        )
    }
}

/// Shortest round-trip decimal form; `nan`, `inf`, `-inf` otherwise.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{v:?}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Writes `header` and `rows` as comma-separated LF-terminated lines.
pub fn csv_string(meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut s = String::new();
    writeln!(s, "{}", meta.comment_line()).unwrap();
    writeln!(s, "{}", header.join(",")).unwrap();
    for r in rows {
        debug_assert_eq!(r.len(), header.len());
        writeln!(s, "{}", r.join(",")).unwrap();
    }
    s
}

pub fn write_csv(
    dir: &Path,
    name: &str,
    meta: &Meta,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, csv_string(meta, header, rows))?;
    Ok(path)
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    meta: &'a Meta,
    #[serde(flatten)]
    body: &'a T,
}

/// Writes `{"meta": ..., <fields of body>}` as pretty JSON.
pub fn write_json<T: Serialize>(dir: &Path, name: &str, meta: &Meta, body: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(&Wrapped { meta, body })?;
    text.push('\n');
    fs::write(&path, text)?;
    Ok(path)
}
