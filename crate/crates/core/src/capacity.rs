//! Linear memory capacity and information-processing capacity.
//!
//! Every estimate harvests the states once, splits the usable steps into a
//! contiguous training block and a held-out block, factors the ridge system
//! once and then fits one readout per target.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{dot, Matrix};
use crate::readout::{squared_correlation, variance, CenteredRidge};
use crate::reservoir::Reservoir;
use crate::signals::{generate, SignalSpec};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;
/// Relative allowance on the `MC_tot <= n` bound.
pub const BOUND_SLACK: f64 = 0.05;
pub const MAX_FUNCTIONALS: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapacityOptions {
    pub washout: usize,
    /// `None` uses the scale-aware default of [`CenteredRidge`].
    #[serde(default)]
    pub mu: Option<f64>,
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    /// `None` uses `4 / sqrt(test length)`.
    #[serde(default)]
    pub threshold: Option<f64>,
}

fn default_train_fraction() -> f64 {
    DEFAULT_TRAIN_FRACTION
}

impl Default for CapacityOptions {
    fn default() -> Self {
        Self {
            washout: 500,
            mu: None,
            train_fraction: DEFAULT_TRAIN_FRACTION,
            threshold: None,
        }
    }
}

/// Harvested states with a factored ridge system over the training block.
///
/// Row `r` of the usable block is the state at time `start + r`, where
/// `start = max(washout, max_delay)`.
pub struct CapacityEstimator {
    start: usize,
    train_len: usize,
    ridge: CenteredRidge,
    test: Matrix,
    threshold: f64,
    centered_input: Vec<f64>,
}

impl CapacityEstimator {
    /// Centers `input`, drives `res` with it and prepares targets that reach
    /// back at most `max_delay` steps.
    pub fn new(
        res: &Reservoir,
        input: &[f64],
        max_delay: usize,
        opts: &CapacityOptions,
    ) -> Result<Self> {
        if res.m() != 1 {
            return Err(invalid("capacity needs a scalar-input reservoir"));
        }
        if !(opts.train_fraction > 0.0 && opts.train_fraction < 1.0) {
            return Err(invalid("train fraction must lie in (0, 1)"));
        }
        let len = input.len();
        let start = opts.washout.max(max_delay);
        if start + 20 > len {
            return Err(invalid(format!(
                "delay {max_delay} with washout {} leaves too few of {len} samples",
                opts.washout
            )));
        }
        let mean = input.iter().sum::<f64>() / len as f64;
        let centered_input: Vec<f64> = input.iter().map(|u| u - mean).collect();
        let states = res.harvest_scalar(&centered_input, start)?;
        let usable = states.rows();
        let train_len = (usable as f64 * opts.train_fraction).floor() as usize;
        if train_len < 2 || usable - train_len < 2 {
            return Err(invalid("split leaves an empty training or test block"));
        }
        let n = res.n();
        let slice = |a: usize, b: usize| {
            Matrix::from_row_major(b - a, n, states.as_slice()[a * n..b * n].to_vec())
        };
        let ridge = CenteredRidge::new(&slice(0, train_len)?, opts.mu)?;
        let test = slice(train_len, usable)?;
        let threshold = opts
            .threshold
            .unwrap_or(4.0 / ((usable - train_len) as f64).sqrt());
        Ok(Self {
            start,
            train_len,
            ridge,
            test,
            threshold,
            centered_input,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn test_len(&self) -> usize {
        self.test.rows()
    }

    pub fn usable_len(&self) -> usize {
        self.train_len + self.test.rows()
    }

    /// First time step with a harvested state.
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn centered_input(&self) -> &[f64] {
        &self.centered_input
    }

    /// Held-out squared correlation for a target given on every usable step.
    pub fn capacity_of(&self, target: &[f64]) -> Result<f64> {
        if target.len() != self.usable_len() {
            return Err(invalid(format!(
                "target has {} samples, expected {}",
                target.len(),
                self.usable_len()
            )));
        }
        let (w, b) = self.ridge.fit(&target[..self.train_len])?;
        let pred: Vec<f64> = (0..self.test.rows())
            .map(|r| dot(&w, self.test.row(r)) + b)
            .collect();
        Ok(squared_correlation(&target[self.train_len..], &pred).unwrap_or(0.0))
    }

    /// Held-out `mse / Var(target)`; `None` for a constant held-out target.
    pub fn heldout_nmse(&self, target: &[f64]) -> Result<Option<f64>> {
        if target.len() != self.usable_len() {
            return Err(invalid(format!(
                "target has {} samples, expected {}",
                target.len(),
                self.usable_len()
            )));
        }
        let (w, b) = self.ridge.fit(&target[..self.train_len])?;
        let held = &target[self.train_len..];
        let mse = held
            .iter()
            .enumerate()
            .map(|(r, y)| (y - dot(&w, self.test.row(r)) - b).powi(2))
            .sum::<f64>()
            / held.len() as f64;
        let var = variance(held);
        Ok((var > 0.0).then(|| mse / var))
    }

    /// Capacity for a target built from the time index of each usable step.
    pub fn capacity_with(&self, f: impl Fn(usize) -> f64) -> Result<f64> {
        let target: Vec<f64> = (self.start..self.start + self.usable_len())
            .map(f)
            .collect();
        self.capacity_of(&target)
    }

    /// `C(tau)` for the delayed centered input.
    pub fn delay(&self, tau: usize) -> Result<f64> {
        if tau == 0 || tau > self.start {
            return Err(invalid(format!(
                "delay {tau} must lie in 1..={}",
                self.start
            )));
        }
        let u = &self.centered_input;
        self.capacity_with(|t| u[t - tau])
    }
}

/// `C(tau)` for one delay, as in the memory-capacity definition.
pub fn delay_capacity(
    res: &Reservoir,
    input: &[f64],
    tau: usize,
    opts: &CapacityOptions,
) -> Result<f64> {
    if tau == 0 {
        return Err(invalid("delay must be at least 1"));
    }
    let usable = input.len().saturating_sub(opts.washout.max(tau));
    if usable < 20 {
        return Err(invalid(format!(
            "delay {tau} is too long for an input of length {} after washout {}",
            input.len(),
            opts.washout
        )));
    }
    CapacityEstimator::new(res, input, tau, opts)?.delay(tau)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySpectrum {
    /// `capacities[i]` is `C(i + 1)`.
    pub capacities: Vec<f64>,
    /// Sum of the capacities above the threshold.
    pub total: f64,
    pub threshold: f64,
    pub tau_max: usize,
    pub n: usize,
    pub test_len: usize,
}

impl CapacitySpectrum {
    pub fn get(&self, tau: usize) -> Option<f64> {
        tau.checked_sub(1)
            .and_then(|i| self.capacities.get(i).copied())
    }

    /// `total <= n (1 + BOUND_SLACK)`.
    pub fn within_bound(&self) -> bool {
        self.total <= self.n as f64 * (1.0 + BOUND_SLACK)
    }
}

/// Capacities `C(1..=tau_max)`; `tau_max = None` means `2n`.
pub fn capacity_spectrum(
    res: &Reservoir,
    input: &[f64],
    tau_max: Option<usize>,
    opts: &CapacityOptions,
) -> Result<CapacitySpectrum> {
    let tau_max = tau_max.unwrap_or(2 * res.n());
    if tau_max == 0 {
        return Err(invalid("tau_max must be positive"));
    }
    let usable = input.len().saturating_sub(opts.washout);
    if tau_max > usable / 4 {
        return Err(invalid(format!(
            "tau_max {tau_max} exceeds a quarter of the {usable} usable samples"
        )));
    }
    let est = CapacityEstimator::new(res, input, tau_max, opts)?;
    let capacities = (1..=tau_max)
        .into_par_iter()
        .map(|tau| est.delay(tau))
        .collect::<Result<Vec<f64>>>()?;
    Ok(CapacitySpectrum {
        total: thresholded_sum(&capacities, est.threshold()),
        capacities,
        threshold: est.threshold(),
        tau_max,
        n: res.n(),
        test_len: est.test_len(),
    })
}

fn thresholded_sum(c: &[f64], threshold: f64) -> f64 {
    c.iter().filter(|v| **v > threshold).fold(0.0, |a, v| a + v)
}

/// `sqrt(2d + 1) P_d(x)`, orthonormal for the uniform law on [-1, 1].
pub fn normalized_legendre(d: usize, x: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, x);
    let p = match d {
        0 => 1.0,
        1 => x,
        _ => {
            for k in 1..d {
                let k = k as f64;
                let p2 = ((2.0 * k + 1.0) * x * p1 - k * p0) / (k + 1.0);
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    };
    (2.0 * d as f64 + 1.0).sqrt() * p
}

/// One basis functional: `prod_i P_{degrees[i]}(u_{t - delays[i]})`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Functional {
    pub delays: Vec<usize>,
    pub degrees: Vec<usize>,
}

impl Functional {
    pub fn total_degree(&self) -> usize {
        self.degrees.iter().sum()
    }

    pub fn eval(&self, u: &[f64], t: usize) -> f64 {
        self.delays
            .iter()
            .zip(&self.degrees)
            .map(|(&d, &k)| normalized_legendre(k, u[t - d]))
            .product()
    }
}

/// All functionals of total degree `1..=max_degree` over delays
/// `1..=max_delay`, ordered by total degree and capped at `limit`.
/// The flag reports whether the cap cut the list short.
pub fn enumerate_functionals(
    max_degree: usize,
    max_delay: usize,
    limit: usize,
) -> (Vec<Functional>, bool) {
    let mut out = Vec::new();
    for total in 1..=max_degree {
        let mut degrees = vec![0usize; max_delay];
        if !compositions(total, 0, &mut degrees, &mut out, limit) {
            return (out, true);
        }
    }
    (out, false)
}

// Fills `degrees[pos..]` with every split of `left`; returns false once the
// limit is hit.
fn compositions(
    left: usize,
    pos: usize,
    degrees: &mut [usize],
    out: &mut Vec<Functional>,
    limit: usize,
) -> bool {
    if pos == degrees.len() {
        if left == 0 {
            if out.len() == limit {
                return false;
            }
            let (delays, degs) = degrees
                .iter()
                .enumerate()
                .filter(|(_, d)| **d > 0)
                .map(|(i, d)| (i + 1, *d))
                .unzip();
            out.push(Functional {
                delays,
                degrees: degs,
            });
        }
        return true;
    }
    for d in (0..=left).rev() {
        degrees[pos] = d;
        if !compositions(left - d, pos + 1, degrees, out, limit) {
            return false;
        }
    }
    degrees[pos] = 0;
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpcEntry {
    pub functional: Functional,
    pub capacity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IpcReport {
    pub entries: Vec<IpcEntry>,
    pub total_ipc: f64,
    /// Thresholded sum per total degree; index 0 is degree 1.
    pub total_by_degree: Vec<f64>,
    pub max_degree: usize,
    pub max_delay: usize,
    pub threshold: f64,
    pub truncated: bool,
    pub n: usize,
}

impl IpcReport {
    pub fn get(&self, delays: &[usize], degrees: &[usize]) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.functional.delays == delays && e.functional.degrees == degrees)
            .map(|e| e.capacity)
    }

    pub fn within_bound(&self) -> bool {
        self.total_ipc <= self.n as f64 * (1.0 + BOUND_SLACK)
    }
}

/// Capacities for a truncated Legendre product basis.
///
/// The reservoir is driven by the centered input while the basis is
/// evaluated on the raw input, so degree-1 entries equal `C(tau)`.
pub fn ipc(
    res: &Reservoir,
    signal: &SignalSpec,
    max_degree: usize,
    max_delay: usize,
    opts: &CapacityOptions,
) -> Result<IpcReport> {
    if !signal.is_standard_uniform() {
        return Err(Error::Refused(
            "the Legendre basis is orthonormal only for i.i.d. uniform input on [-1, 1]; \
             set the signal to uniform_iid with lo = -1 and hi = 1"
                .into(),
        ));
    }
    if max_degree == 0 || max_delay == 0 {
        return Err(invalid("max_degree and max_delay must be positive"));
    }
    let u = generate(signal)?;
    let est = CapacityEstimator::new(res, &u, max_delay, opts)?;
    let (functionals, truncated) = enumerate_functionals(max_degree, max_delay, MAX_FUNCTIONALS);
    let caps = functionals
        .par_iter()
        .map(|f| est.capacity_with(|t| f.eval(&u, t)))
        .collect::<Result<Vec<f64>>>()?;
    let threshold = est.threshold();
    let mut by_degree: BTreeMap<usize, f64> = (1..=max_degree).map(|d| (d, 0.0)).collect();
    for (f, c) in functionals.iter().zip(&caps) {
        if *c > threshold {
            *by_degree.entry(f.total_degree()).or_default() += c;
        }
    }
    let entries: Vec<IpcEntry> = functionals
        .into_iter()
        .zip(caps)
        .map(|(functional, capacity)| IpcEntry {
            functional,
            capacity,
        })
        .collect();
    Ok(IpcReport {
        total_ipc: by_degree.values().fold(0.0, |a, v| a + v),
        total_by_degree: by_degree.into_values().collect(),
        entries,
        max_degree,
        max_delay,
        threshold,
        truncated,
        n: res.n(),
    })
}
