//! Seeded input generators and target constructors.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{derive_seed, SeededRng};

/// Value at which a NARMA run is declared divergent.
pub const NARMA_DIVERGENCE: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalKind {
    UniformIid { lo: f64, hi: f64 },
    Constant { value: f64 },
    Impulse { t0: usize, amplitude: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalSpec {
    #[serde(flatten)]
    pub kind: SignalKind,
    pub length: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SignalSpec {
    pub fn uniform(lo: f64, hi: f64, length: usize, seed: u64) -> Self {
        Self {
            kind: SignalKind::UniformIid { lo, hi },
            length,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 {
            return Err(invalid("signal length must be at least 1"));
        }
        if let SignalKind::UniformIid { lo, hi } = self.kind {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(invalid(format!(
                    "uniform bounds need lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// True for i.i.d. uniform input on exactly [-1, 1].
    pub fn is_standard_uniform(&self) -> bool {
        matches!(self.kind, SignalKind::UniformIid { lo, hi } if lo == -1.0 && hi == 1.0)
    }
}

pub fn generate(spec: &SignalSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let n = spec.length;
    Ok(match spec.kind {
        SignalKind::UniformIid { lo, hi } => {
            let mut rng = SeededRng::new(spec.seed);
            (0..n).map(|_| rng.uniform(lo, hi)).collect()
        }
        SignalKind::Constant { value } => vec![value; n],
        SignalKind::Impulse { t0, amplitude } => {
            let mut v = vec![0.0; n];
            if t0 < n {
                v[t0] = amplitude;
            }
            v
        }
    })
}

/// A target series whose `values[i]` belongs to time step `offset + i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub offset: usize,
    pub values: Vec<f64>,
}

impl Aligned {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `y_t = u_{t-tau}` for `t >= tau`; nothing is padded.
pub fn delayed_target(u: &[f64], tau: usize) -> Result<Aligned> {
    if tau == 0 {
        return Err(invalid("delay must be at least 1"));
    }
    if tau >= u.len() {
        return Err(invalid(format!(
            "delay {tau} leaves no samples in a sequence of length {}",
            u.len()
        )));
    }
    Ok(Aligned {
        offset: tau,
        values: u[..u.len() - tau].to_vec(),
    })
}

/// `y_t = prod_i u_{t - delays[i]}` for `t >= max(delays)`.
pub fn product_target(u: &[f64], delays: &[usize]) -> Result<Aligned> {
    let Some(&max) = delays.iter().max() else {
        return Err(invalid("product target needs at least one delay"));
    };
    if delays.contains(&0) {
        return Err(invalid("delays must be at least 1"));
    }
    if max >= u.len() {
        return Err(invalid(format!(
            "delay {max} leaves no samples in a sequence of length {}",
            u.len()
        )));
    }
    let values = (max..u.len())
        .map(|t| delays.iter().map(|&d| u[t - d]).product())
        .collect();
    Ok(Aligned {
        offset: max,
        values,
    })
}

/// NARMA target of the given order.
///
/// Returns `z` with `z[t]` the system output after consuming `u[0..=t]`:
///
/// ```text
/// y[t+1] = 0.3 y[t] + 0.05 y[t] * sum_{i<order} y[t-i] + 1.5 u[t-order+1] u[t] + 0.1
/// ```
///
/// with `y[0..order] = 0` and `z[t] = y[t+1]`. Inputs are expected in
/// [0, 0.5]; a run whose output leaves [-10, 10] is rejected.
pub fn narma_target(u: &[f64], order: usize) -> Result<Vec<f64>> {
    if order == 0 {
        return Err(invalid("NARMA order must be positive"));
    }
    if u.iter().any(|v| !(0.0..=0.5).contains(v)) {
        return Err(invalid("NARMA input must lie in [0, 0.5]"));
    }
    let n = u.len();
    let mut y = vec![0.0; n + 1];
    for t in 0..n {
        if t + 1 < order {
            continue;
        }
        let window: f64 = y[t + 1 - order..=t].iter().sum();
        let next = 0.3 * y[t] + 0.05 * y[t] * window + 1.5 * u[t + 1 - order] * u[t] + 0.1;
        if !next.is_finite() || next.abs() > NARMA_DIVERGENCE {
            return Err(Error::Divergence(format!(
                "NARMA-{order} output {next} at t={t}; resample the input with another seed"
            )));
        }
        y[t + 1] = next;
    }
    y.remove(0);
    Ok(y)
}

/// Input/target pair for a NARMA benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct NarmaSeries {
    /// Uniform input on [0, 0.5].
    pub input: Vec<f64>,
    pub target: Vec<f64>,
    /// Seed that produced a bounded run.
    pub seed: u64,
}

/// Draws uniform input and runs the NARMA recursion, retrying with
/// `derive_seed(seed, k)` for `k = 1, 2, ...` while the run diverges.
pub fn narma_series(
    length: usize,
    order: usize,
    seed: u64,
    attempts: usize,
) -> Result<NarmaSeries> {
    let mut last = None;
    for k in 0..attempts.max(1) {
        let s = if k == 0 {
            seed
        } else {
            derive_seed(seed, k as u64)
        };
        let input = to_narma_range(&generate(&SignalSpec::uniform(-1.0, 1.0, length, s))?);
        match narma_target(&input, order) {
            Ok(target) => {
                return Ok(NarmaSeries {
                    input,
                    target,
                    seed: s,
                })
            }
            Err(e @ Error::Divergence(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Maps values from [-1, 1] affinely onto [0, 0.5].
pub fn to_narma_range(u: &[f64]) -> Vec<f64> {
    u.iter()
        .map(|v| ((v + 1.0) * 0.25).clamp(0.0, 0.5))
        .collect()
}
