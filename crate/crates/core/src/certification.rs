//! Algebraic and empirical echo-state checks.
//!
//! The algebraic certificate is the sufficient contraction test
//! `L_φ ‖W‖₂ < 1` (leak-adjusted to `(1-α) + α L_φ ‖W‖₂`). It is one-sided:
//! a failing certificate says nothing about divergence.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::numerics::{distance, spectral_norm, spectral_radius};
use crate::reservoir::Reservoir;
use crate::rng::SeededRng;

/// Distances below this are treated as exact convergence when fitting rates.
pub const DISTANCE_FLOOR: f64 = 1e-14;
/// Minimum number of above-floor samples for a decay-rate fit.
pub const MIN_FIT_POINTS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub l_phi: f64,
    pub w_norm: f64,
    pub spectral_radius: f64,
    /// `(1-α) + α L_φ ‖W‖₂`; equals `L_φ ‖W‖₂` without leak.
    pub contraction_factor: f64,
    pub passes: bool,
    pub l_u_bound: f64,
    pub l_x_bound: f64,
    pub note: String,
}

impl Certificate {
    /// Gap between the sufficient norm test and the spectral-radius rule of
    /// thumb: true when `L_φ ρ(W) < 1` but the certificate fails.
    pub fn radius_rule_only(&self) -> bool {
        !self.passes && self.l_phi * self.spectral_radius < 1.0
    }
}

pub fn certify_contraction(res: &Reservoir) -> Result<Certificate> {
    let act = res.activation();
    let l_phi = act.lipschitz_constant();
    let w_norm = spectral_norm(res.w())?;
    let rho = spectral_radius(res.w())?;
    let alpha = res.leak_rate();
    let factor = if alpha == 1.0 {
        l_phi * w_norm
    } else {
        (1.0 - alpha) + alpha * l_phi * w_norm
    };
    let l_u = l_phi * spectral_norm(res.w_in())?;
    let note = if act.is_bounded() {
        String::new()
    } else {
        format!(
            "{} is unbounded: state boundedness needs the bounded-input argument \
             (see relu_state_bound); the contraction factor is still evaluated",
            act.name()
        )
    };
    Ok(Certificate {
        l_phi,
        w_norm,
        spectral_radius: rho,
        contraction_factor: factor,
        passes: factor < 1.0,
        l_u_bound: l_u,
        l_x_bound: factor,
        note,
    })
}

/// Default washout: `max(100, 10 ⌈1/(1-c)⌉)` for a certified reservoir with
/// contraction factor `c`, else 500.
pub fn default_washout(cert: &Certificate) -> usize {
    if cert.passes {
        let k = (1.0 / (1.0 - cert.contraction_factor)).ceil();
        if k.is_finite() && k < 1e7 {
            return 100usize.max(10 * k as usize);
        }
    }
    500
}

/// Bound on `‖x_t‖` for a ReLU-type reservoir with `‖W‖₂ = γ < 1`, where
/// `m_b = ‖W_in‖₂ M + ‖b‖` for inputs with `‖u_t‖ ≤ M`:
///
/// `(‖x_0‖ - m_b/(1-γ)) γ^t + m_b/(1-γ)`.
pub fn relu_state_bound(gamma: f64, m_b: f64, x0_norm: f64, t: u64) -> Result<f64> {
    if !(gamma >= 0.0 && gamma < 1.0) {
        return Err(invalid(format!(
            "gain must lie in [0, 1) for a nonvacuous bound, got {gamma}"
        )));
    }
    if !(m_b >= 0.0) || !(x0_norm >= 0.0) {
        return Err(invalid("m_b and x0_norm must be nonnegative"));
    }
    let fixed = m_b / (1.0 - gamma);
    let decay = if t > i32::MAX as u64 {
        0.0
    } else {
        gamma.powi(t as i32)
    };
    Ok((x0_norm - fixed) * decay + fixed)
}

/// Long-run value of [`relu_state_bound`] as `t → ∞`.
pub fn relu_state_bound_limit(gamma: f64, m_b: f64) -> Result<f64> {
    relu_state_bound(gamma, m_b, 0.0, u64::MAX)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EspTestReport {
    pub converged: bool,
    /// Largest final distance over all pairs.
    pub final_distance: f64,
    /// Worst (largest) least-squares slope of `log distance` against `t`
    /// across pairs; `None` when no pair stays above the floor long enough.
    pub fitted_rate: Option<f64>,
    pub trials: usize,
    pub horizon: usize,
    /// Per-step maximum distance over pairs, `t = 0..=horizon`.
    pub max_distances: Vec<f64>,
}

/// Configuration of the paired-trajectory test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EspTestConfig {
    pub pairs: usize,
    pub seed: u64,
    pub horizon: usize,
    pub tol: f64,
}

/// Drives pairs of trajectories from random initial states in `[-1, 1]^n`
/// under a common input and checks that they merge.
///
/// `inputs` must provide at least `horizon` steps; extra steps are ignored.
pub fn empirical_esp_test(
    res: &Reservoir,
    inputs: &[Vec<f64>],
    cfg: &EspTestConfig,
) -> Result<EspTestReport> {
    if cfg.horizon < 50 {
        return Err(invalid(format!(
            "horizon must be at least 50, got {}",
            cfg.horizon
        )));
    }
    if inputs.len() < cfg.horizon {
        return Err(invalid(format!(
            "need {} input steps, got {}",
            cfg.horizon,
            inputs.len()
        )));
    }
    if cfg.pairs == 0 {
        return Err(invalid("need at least one trajectory pair"));
    }
    if inputs.iter().any(|u| u.len() != res.m()) {
        return Err(invalid("input dimension does not match the reservoir"));
    }
    let n = res.n();
    let mut rng = SeededRng::new(cfg.seed);
    let mut max_distances = vec![0.0f64; cfg.horizon + 1];
    let mut worst_rate: Option<f64> = None;
    let mut final_distance = 0.0f64;
    let mut buf = vec![0.0; n];
    for _ in 0..cfg.pairs {
        let mut x: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut y: Vec<f64> = (0..n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let mut dists = Vec::with_capacity(cfg.horizon + 1);
        dists.push(distance(&x, &y));
        for u in &inputs[..cfg.horizon] {
            res.step_into(&x, u, &mut buf);
            std::mem::swap(&mut x, &mut buf);
            res.step_into(&y, u, &mut buf);
            std::mem::swap(&mut y, &mut buf);
            dists.push(distance(&x, &y));
        }
        for (m, d) in max_distances.iter_mut().zip(&dists) {
            *m = m.max(*d);
        }
        final_distance = final_distance.max(*dists.last().expect("nonempty"));
        if let Some(rate) = fitted_log_rate(&dists) {
            worst_rate = Some(worst_rate.map_or(rate, |w: f64| w.max(rate)));
        }
    }
    Ok(EspTestReport {
        converged: final_distance < cfg.tol,
        final_distance,
        fitted_rate: worst_rate,
        trials: cfg.pairs,
        horizon: cfg.horizon,
        max_distances,
    })
}

/// Least-squares slope of `ln d_t` against `t` over the leading run of
/// distances at or above [`DISTANCE_FLOOR`].
pub fn fitted_log_rate(dists: &[f64]) -> Option<f64> {
    let window: Vec<f64> = dists
        .iter()
        .take_while(|d| **d >= DISTANCE_FLOOR && d.is_finite())
        .map(|d| d.ln())
        .collect();
    if window.len() < MIN_FIT_POINTS {
        return None;
    }
    let k = window.len() as f64;
    let t_mean = (k - 1.0) / 2.0;
    let y_mean = window.iter().sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in window.iter().enumerate() {
        let dt = t as f64 - t_mean;
        sxy += dt * (y - y_mean);
        sxx += dt * dt;
    }
    Some(sxy / sxx)
}

/// `C = L_u / (1 - β/λ)`, the Lipschitz constant of the input-to-state
/// filter under the λ-weighted input norm.
pub fn fmp_lipschitz_constant(cert: &Certificate, lambda: f64) -> Result<f64> {
    if !cert.passes {
        return Err(invalid(
            "certificate does not pass; the filter bound needs a contraction",
        ));
    }
    let beta = cert.l_x_bound;
    if !(lambda > beta && lambda < 1.0) {
        return Err(invalid(format!(
            "lambda must lie in (beta, 1) = ({beta}, 1), got {lambda}"
        )));
    }
    Ok(cert.l_u_bound / (1.0 - beta / lambda))
}
