//! Fading-memory checks and pullback ensemble convergence.

use serde::{Deserialize, Serialize};

use crate::certification::{certify_contraction, fmp_lipschitz_constant};
use crate::error::{invalid, Error, Result};
use crate::numerics::{distance, norm2};
use crate::reservoir::Reservoir;
use crate::rng::SeededRng;

/// Slack added to the right-hand side of every fading-memory comparison.
pub const FMP_SLACK: f64 = 1e-9;
/// Ensembles up to this size use all pairs for the diameter.
pub const EXACT_DIAMETER_LIMIT: usize = 64;
const SAMPLED_PAIRS: usize = EXACT_DIAMETER_LIMIT * (EXACT_DIAMETER_LIMIT - 1) / 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedNormConfig {
    pub lambda: f64,
    /// Largest look-back depth `k`.
    pub horizon: usize,
}

impl WeightedNormConfig {
    pub fn new(lambda: f64, horizon: usize) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid(format!("lambda must lie in (0, 1), got {lambda}")));
        }
        if horizon == 0 {
            return Err(invalid("weighted-norm horizon must be positive"));
        }
        Ok(Self { lambda, horizon })
    }
}

/// `max_{t < len} max_{k <= min(t, horizon)} λ^k ‖u_{t-k}‖`.
///
/// Entries before the start of the sequence count as zero. An empty
/// sequence has norm 0.
pub fn weighted_norm(u: &[Vec<f64>], cfg: &WeightedNormConfig) -> f64 {
    let norms: Vec<f64> = u.iter().map(|v| norm2(v)).collect();
    let mut best = 0.0f64;
    for t in 0..norms.len() {
        let mut w = 1.0;
        for k in 0..=t.min(cfg.horizon) {
            best = best.max(w * norms[t - k]);
            w *= cfg.lambda;
        }
    }
    best
}

/// `max_k λ^k ‖u_{T-1-k}‖`, the weighted norm anchored at the last step.
pub fn anchored_weighted_norm(u: &[Vec<f64>], lambda: f64) -> f64 {
    let mut w = 1.0;
    let mut best = 0.0f64;
    for v in u.iter().rev() {
        best = best.max(w * norm2(v));
        w *= lambda;
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FmpReport {
    /// `‖x_T(u) - x_T(v)‖` from a common initial state.
    pub lhs: f64,
    /// `C ‖u - v‖_λ`.
    pub rhs: f64,
    pub holds: bool,
    pub lipschitz_constant: f64,
    pub input_distance: f64,
    /// `C max_k λ^k ‖u_{T-1-k} - v_{T-1-k}‖`; a tighter bound on `lhs`.
    pub anchored_rhs: f64,
    pub horizon: usize,
}

/// Compares the state distance produced by two input streams against the
/// filter Lipschitz bound. Refuses uncertified reservoirs.
pub fn empirical_fmp_check(
    res: &Reservoir,
    u: &[Vec<f64>],
    v: &[Vec<f64>],
    lambda: f64,
    horizon: usize,
) -> Result<FmpReport> {
    let cert = certify_contraction(res)?;
    if !cert.passes {
        return Err(Error::Refused(format!(
            "reservoir is not certified (contraction factor {}); the bound does not apply",
            cert.contraction_factor
        )));
    }
    let c = fmp_lipschitz_constant(&cert, lambda)?;
    if horizon == 0 || u.len() < horizon || v.len() < horizon {
        return Err(invalid(format!(
            "both streams need at least horizon = {horizon} > 0 steps"
        )));
    }
    let (u, v) = (&u[..horizon], &v[..horizon]);
    if u.iter().chain(v).any(|s| s.len() != res.m()) {
        return Err(invalid("input dimension does not match the reservoir"));
    }
    let n = res.n();
    let (mut x, mut y, mut buf) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for (a, b) in u.iter().zip(v) {
        res.step_into(&x, a, &mut buf);
        std::mem::swap(&mut x, &mut buf);
        res.step_into(&y, b, &mut buf);
        std::mem::swap(&mut y, &mut buf);
    }
    let diff: Vec<Vec<f64>> = u
        .iter()
        .zip(v)
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| p - q).collect())
        .collect();
    let cfg = WeightedNormConfig::new(lambda, horizon)?;
    let input_distance = weighted_norm(&diff, &cfg);
    let lhs = distance(&x, &y);
    let rhs = c * input_distance;
    Ok(FmpReport {
        lhs,
        rhs,
        holds: lhs <= rhs + FMP_SLACK,
        lipschitz_constant: c,
        input_distance,
        anchored_rhs: c * anchored_weighted_norm(&diff, lambda),
        horizon,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PullbackReport {
    /// Ensemble diameter at `t = 0..=horizon`.
    pub diameters: Vec<f64>,
    pub singleton: bool,
    pub exact_pairs: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PullbackConfig {
    pub ensemble_size: usize,
    pub init_box_radius: f64,
    pub seed: u64,
    pub tol: f64,
}

/// Evolves an ensemble of initial states under one common input and tracks
/// its diameter (max pairwise distance).
pub fn pullback_convergence(
    res: &Reservoir,
    inputs: &[Vec<f64>],
    cfg: &PullbackConfig,
) -> Result<PullbackReport> {
    if cfg.ensemble_size < 2 {
        return Err(invalid("ensemble needs at least two members"));
    }
    if !(cfg.init_box_radius >= 0.0) {
        return Err(invalid("box radius must be nonnegative"));
    }
    if inputs.iter().any(|s| s.len() != res.m()) {
        return Err(invalid("input dimension does not match the reservoir"));
    }
    let n = res.n();
    let mut rng = SeededRng::new(cfg.seed);
    let r = cfg.init_box_radius;
    let mut members: Vec<Vec<f64>> = (0..cfg.ensemble_size)
        .map(|_| {
            (0..n)
                .map(|_| if r > 0.0 { rng.uniform(-r, r) } else { 0.0 })
                .collect()
        })
        .collect();
    let exact = cfg.ensemble_size <= EXACT_DIAMETER_LIMIT;
    let pairs: Vec<(usize, usize)> = if exact {
        (0..cfg.ensemble_size)
            .flat_map(|i| (i + 1..cfg.ensemble_size).map(move |j| (i, j)))
            .collect()
    } else {
        (0..SAMPLED_PAIRS)
            .map(|_| {
                let i = rng.below(cfg.ensemble_size);
                let mut j = rng.below(cfg.ensemble_size - 1);
                if j >= i {
                    j += 1;
                }
                (i, j)
            })
            .collect()
    };
    let diameter = |ms: &[Vec<f64>]| {
        pairs
            .iter()
            .fold(0.0f64, |d, &(i, j)| d.max(distance(&ms[i], &ms[j])))
    };
    let mut diameters = Vec::with_capacity(inputs.len() + 1);
    diameters.push(diameter(&members));
    let mut buf = vec![0.0; n];
    for u in inputs {
        for x in members.iter_mut() {
            res.step_into(x, u, &mut buf);
            std::mem::swap(x, &mut buf);
        }
        diameters.push(diameter(&members));
    }
    let last = *diameters.last().expect("nonempty");
    Ok(PullbackReport {
        singleton: last < cfg.tol,
        diameters,
        exact_pairs: exact,
    })
}
