//! Parameter grid over spectral radius, input scale and leak rate.
//!
//! Finished grid points are appended to `sweep.journal` as they complete, so
//! an interrupted run picks up where it stopped. `sweep.csv` is assembled in
//! grid order at the end and does not depend on the worker count or on how
//! many restarts it took.

use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use rayon::prelude::*;

use super::config::{ExperimentConfig, SWEEP_STREAM};
use super::output::{fmt_f64, fmt_opt, write_csv, Meta};
use super::{Outcome, EXIT_OK};
use crate::capacity::{capacity_spectrum, CapacityOptions};
use crate::error::{Error, Result};
use crate::lyapunov::{kaplan_yorke, ks_entropy, lyapunov_spectrum_scalar, LyapunovConfig};
use crate::rng::derive_seed;
use crate::signals::generate;
use crate::topology::ScaleTarget;

/// Environment variable holding the worker count; unset means one per core.
pub const WORKERS_ENV: &str = "ESN_WORKERS";

const JOURNAL: &str = "sweep.journal";
const HEADER: [&str; 8] = [
    "rho",
    "input_scale",
    "leak",
    "seed",
    "lambda_max",
    "d_ky",
    "h_ks",
    "mc_total",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub rho: f64,
    pub input_scale: f64,
    pub leak: f64,
    /// Topology seed of the replicate.
    pub seed: u64,
    pub lambda_max: f64,
    pub d_ky: Option<f64>,
    pub h_ks: f64,
    pub mc_total: f64,
}

impl SweepRow {
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.rho),
            fmt_f64(self.input_scale),
            fmt_f64(self.leak),
            self.seed.to_string(),
            fmt_f64(self.lambda_max),
            fmt_opt(self.d_ky),
            fmt_f64(self.h_ks),
            fmt_f64(self.mc_total),
        ]
    }
}

#[derive(Debug, Clone, Copy)]
struct Point {
    rho: f64,
    input_scale: f64,
    leak: f64,
    replicate: usize,
}

fn grid(cfg: &ExperimentConfig) -> Vec<Point> {
    let s = &cfg.sweep;
    let mut pts = Vec::new();
    for &rho in &s.rho {
        for &input_scale in &s.input_scale {
            for &leak in &s.leak {
                for replicate in 0..s.seeds {
                    pts.push(Point {
                        rho,
                        input_scale,
                        leak,
                        replicate,
                    });
                }
            }
        }
    }
    pts
}

fn run_point(cfg: &ExperimentConfig, u: &[f64], index: usize, p: Point) -> Result<SweepRow> {
    let s = &cfg.sweep;
    let stream = derive_seed(cfg.seed, SWEEP_STREAM);
    let seed = derive_seed(stream, p.replicate as u64);
    let mut section = cfg.reservoir;
    section.scale = ScaleTarget::SpectralRadius(p.rho);
    section.input_scaling = p.input_scale;
    section.leak_rate = p.leak;
    let res = section.design(seed).build()?;
    let spec = lyapunov_spectrum_scalar(
        &res,
        u,
        &LyapunovConfig {
            k: Some(s.lyapunov_k.unwrap_or(res.n().min(10))),
            reorth_interval: 1,
            washout: s.lyapunov_washout,
            seed: derive_seed(stream, 1_000_000 + index as u64),
        },
    )?;
    let mc = capacity_spectrum(
        &res,
        u,
        None,
        &CapacityOptions {
            washout: s.capacity_washout,
            ..CapacityOptions::default()
        },
    )?;
    Ok(SweepRow {
        rho: p.rho,
        input_scale: p.input_scale,
        leak: p.leak,
        seed,
        lambda_max: spec.max_exponent(),
        d_ky: kaplan_yorke(&spec),
        h_ks: ks_entropy(&spec),
        mc_total: mc.total,
    })
}

/// Worker count from [`WORKERS_ENV`]; `None` leaves the choice to rayon.
pub(crate) fn workers_from_env() -> Result<Option<usize>> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Ok(Some(k)),
            _ => Err(Error::Config(format!(
                "{WORKERS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn journal_header(hash: &str) -> String {
    format!("# sweep journal config={hash}\n")
}

/// Completed rows keyed by grid index. A trailing partial line from an
/// interrupted write is ignored.
fn read_journal(path: &Path, hash: &str, points: usize) -> Result<BTreeMap<usize, String>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.split_inclusive('\n');
    let first = lines.next().unwrap_or("");
    if first != journal_header(hash) {
        return Err(Error::Config(format!(
            "{} was written for a different config; delete it to start over",
            path.display()
        )));
    }
    let mut done = BTreeMap::new();
    for line in lines {
        let Some(line) = line.strip_suffix('\n') else {
            break;
        };
        let bad = || Error::Config(format!("{}: malformed line {line:?}", path.display()));
        let (idx, row) = line.split_once('\t').ok_or_else(bad)?;
        let idx: usize = idx.parse().map_err(|_| bad())?;
        if idx >= points || row.split(',').count() != HEADER.len() {
            return Err(bad());
        }
        done.insert(idx, row.to_owned());
    }
    Ok(done)
}

fn open_journal(path: &Path, hash: &str) -> Result<fs::File> {
    if path.exists() {
        let text = fs::read_to_string(path)?;
        // Drop a torn last line so appends start on a fresh line.
        if !text.ends_with('\n') {
            let keep = text.rfind('\n').map_or(0, |i| i + 1);
            fs::write(path, &text[..keep])?;
        }
        Ok(OpenOptions::new().append(true).open(path)?)
    } else {
        let mut f = fs::File::create(path)?;
        f.write_all(journal_header(hash).as_bytes())?;
        f.flush()?;
        Ok(f)
    }
}

pub(super) fn sweep(cfg: &ExperimentConfig, dir: &Path) -> Result<Outcome> {
    let s = &cfg.sweep;
    if s.rho.is_empty() || s.input_scale.is_empty() || s.leak.is_empty() || s.seeds == 0 {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let u = generate(&cfg.signal_spec()?)?;
    let points = grid(cfg);
    let hash = cfg.hash();
    let journal_path: PathBuf = dir.join(JOURNAL);
    let mut done = if journal_path.exists() {
        read_journal(&journal_path, &hash, points.len())?
    } else {
        BTreeMap::new()
    };
    let resumed = done.len();
    let journal = Mutex::new(open_journal(&journal_path, &hash)?);

    let todo: Vec<usize> = (0..points.len())
        .filter(|i| !done.contains_key(i))
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers_from_env()? {
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let fresh: Vec<(usize, String)> = pool.install(|| {
        todo.par_iter()
            .map(|&i| {
                let row = run_point(cfg, &u, i, points[i])?.fields().join(",");
                let mut f = journal.lock().expect("journal lock");
                writeln!(f, "{i}\t{row}")?;
                f.flush()?;
                Ok((i, row))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    done.extend(fresh);

    let rows: Vec<Vec<String>> = done
        .values()
        .map(|r| r.split(',').map(str::to_owned).collect())
        .collect();
    let meta = Meta::new("sweep", hash, cfg.seed);
    let path = write_csv(dir, "sweep.csv", &meta, &HEADER, &rows)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        files: vec![path, journal_path],
        summary: format!(
            "{} grid points ({} resumed from the journal)",
            rows.len(),
            resumed
        ),
    })
}
