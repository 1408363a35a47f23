//! Conditional Lyapunov exponents along a driven orbit.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{orthonormalize, random_orthogonal, Matrix};
use crate::reservoir::Reservoir;
use crate::rng::SeededRng;

/// Growth factors below this count as a collapse of the tangent direction.
pub const GROWTH_FLOOR: f64 = 1e-300;
/// Post-washout steps required per reservoir dimension.
pub const MIN_STEPS_PER_DIM: usize = 10;

/// `(1 - α) I + α diag(φ'(z)) W` at the step from `x_prev` under `u`.
pub fn jacobian(res: &Reservoir, x_prev: &[f64], u: &[f64]) -> Result<Matrix> {
    let d = res.activation_derivative_diag(x_prev, u)?;
    let a = res.leak_rate();
    let n = res.n();
    let mut j = Matrix::zeros(n, n);
    for i in 0..n {
        let s = a * d[i];
        for (o, w) in j.row_mut(i).iter_mut().zip(res.w().row(i)) {
            *o = s * w;
        }
        if a < 1.0 {
            j[(i, i)] += 1.0 - a;
        }
    }
    Ok(j)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LyapunovConfig {
    /// Number of exponents; `None` means all `n`.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "one")]
    pub reorth_interval: usize,
    pub washout: usize,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    /// Nonincreasing.
    pub exponents: Vec<f64>,
    /// True where the direction collapsed and the floor was used.
    pub degenerate: Vec<bool>,
    pub steps: usize,
    pub reorth_interval: usize,
    /// Set when the activation has kinks; the Jacobian then uses one-sided
    /// derivatives.
    pub subdifferential: bool,
}

impl LyapunovSpectrum {
    pub fn max_exponent(&self) -> f64 {
        self.exponents.first().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Benettin QR iteration of `k` tangent vectors along the orbit from the
/// zero state. Tangents are evolved during the washout but only the later
/// steps are averaged.
pub fn lyapunov_spectrum(
    res: &Reservoir,
    inputs: &[Vec<f64>],
    cfg: &LyapunovConfig,
) -> Result<LyapunovSpectrum> {
    let n = res.n();
    let k = cfg.k.unwrap_or(n);
    if k == 0 || k > n {
        return Err(invalid(format!(
            "exponent count must lie in 1..={n}, got {k}"
        )));
    }
    if cfg.reorth_interval == 0 {
        return Err(invalid("reorthonormalization interval must be positive"));
    }
    let steps = inputs.len().saturating_sub(cfg.washout);
    if steps < MIN_STEPS_PER_DIM * n {
        return Err(invalid(format!(
            "need at least {} steps after the washout, got {steps}",
            MIN_STEPS_PER_DIM * n
        )));
    }
    if inputs.iter().any(|u| u.len() != res.m()) {
        return Err(invalid("input dimension does not match the reservoir"));
    }
    let mut rng = SeededRng::new(cfg.seed);
    let q0 = random_orthogonal(n, &mut rng);
    let mut tangents: Vec<Vec<f64>> = (0..k).map(|j| q0.col(j)).collect();
    let a = res.leak_rate();
    let mut x = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut wv = vec![0.0; n];
    let mut sums = vec![0.0; k];
    let mut degenerate = vec![false; k];
    let mut since = 0;
    for (t, u) in inputs.iter().enumerate() {
        let d = res.activation_derivative_diag(&x, u)?;
        for v in tangents.iter_mut() {
            res.w().matvec_into(v, &mut wv);
            for i in 0..n {
                v[i] = (1.0 - a) * v[i] + a * d[i] * wv[i];
            }
        }
        res.step_into(&x, u, &mut next);
        std::mem::swap(&mut x, &mut next);
        since += 1;
        let last = t + 1 == inputs.len();
        if t < cfg.washout {
            if since == cfg.reorth_interval || t + 1 == cfg.washout {
                orthonormalize(&mut tangents);
                revive(&mut tangents, &mut rng);
                since = 0;
            }
        } else if since == cfg.reorth_interval || last {
            let r = orthonormalize(&mut tangents);
            for j in 0..k {
                if r[j] > GROWTH_FLOOR {
                    sums[j] += r[j].ln();
                } else {
                    sums[j] += GROWTH_FLOOR.ln();
                    degenerate[j] = true;
                }
            }
            since = 0;
        }
    }
    let mut pairs: Vec<(f64, bool)> = sums
        .iter()
        .map(|s| s / steps as f64)
        .zip(degenerate)
        .collect();
    pairs.sort_by(|p, q| q.0.total_cmp(&p.0));
    let (exponents, degenerate) = pairs.into_iter().unzip();
    Ok(LyapunovSpectrum {
        exponents,
        degenerate,
        steps,
        reorth_interval: cfg.reorth_interval,
        subdifferential: !res.activation().is_smooth(),
    })
}

// Directions that collapsed during the washout are replaced so the averaging
// window starts from a full orthonormal frame.
fn revive(tangents: &mut [Vec<f64>], rng: &mut SeededRng) {
    for _ in 0..4 {
        if tangents.iter().all(|v| v.iter().any(|x| *x != 0.0)) {
            return;
        }
        for v in tangents.iter_mut() {
            if v.iter().all(|x| *x == 0.0) {
                v.iter_mut().for_each(|x| *x = rng.standard_normal());
            }
        }
        orthonormalize(tangents);
    }
}

/// Scalar-input convenience wrapper.
pub fn lyapunov_spectrum_scalar(
    res: &Reservoir,
    inputs: &[f64],
    cfg: &LyapunovConfig,
) -> Result<LyapunovSpectrum> {
    let v: Vec<Vec<f64>> = inputs.iter().map(|u| vec![*u]).collect();
    lyapunov_spectrum(res, &v, cfg)
}

/// `j + (λ_1 + ... + λ_j) / |λ_{j+1}|` with `j` the largest index whose
/// partial sum is nonnegative.
///
/// Returns `Some(0)` when `λ_1 < 0`, `Some(k)` when every partial sum is
/// nonnegative, and `None` when every exponent is degenerate.
pub fn kaplan_yorke(spec: &LyapunovSpectrum) -> Option<f64> {
    let ex = &spec.exponents;
    if ex.is_empty() || spec.degenerate.iter().all(|d| *d) {
        return None;
    }
    if ex[0] < 0.0 {
        return Some(0.0);
    }
    let mut sum = 0.0;
    for j in 0..ex.len() {
        if sum + ex[j] < 0.0 {
            return Some(j as f64 + sum / ex[j].abs());
        }
        sum += ex[j];
    }
    Some(ex.len() as f64)
}

/// Sum of the strictly positive exponents.
pub fn ks_entropy(spec: &LyapunovSpectrum) -> f64 {
    spec.exponents
        .iter()
        .filter(|l| **l > 0.0)
        .fold(0.0, |a, l| a + l)
}
