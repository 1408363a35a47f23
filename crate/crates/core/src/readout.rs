//! Affine readouts trained by ridge regression, and their error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{dot, Cholesky, Matrix};

/// Scale of the default ridge parameter relative to `trace(XᵀX) / n`.
pub const DEFAULT_MU_SCALE: f64 = 1e-8;

/// `y = w_out x + b_out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReadoutRepr", into = "ReadoutRepr")]
pub struct Readout {
    w_out: Matrix,
    b_out: Vec<f64>,
}

impl Readout {
    pub fn new(w_out: Matrix, b_out: Vec<f64>) -> Result<Self> {
        if b_out.len() != w_out.rows() {
            return Err(invalid(format!(
                "bias has length {}, expected {}",
                b_out.len(),
                w_out.rows()
            )));
        }
        if !w_out.is_finite() || b_out.iter().any(|v| !v.is_finite()) {
            return Err(invalid("readout weights must be finite"));
        }
        Ok(Self { w_out, b_out })
    }

    pub fn w_out(&self) -> &Matrix {
        &self.w_out
    }

    pub fn b_out(&self) -> &[f64] {
        &self.b_out
    }

    /// Number of outputs `p`.
    pub fn outputs(&self) -> usize {
        self.w_out.rows()
    }

    /// Reservoir size `n` the readout expects.
    pub fn inputs(&self) -> usize {
        self.w_out.cols()
    }

    pub fn predict_one(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.w_out.matvec(x);
        y.iter_mut().zip(&self.b_out).for_each(|(a, b)| *a += b);
        y
    }

    /// Predictions for every row of `states`, as a `T x p` matrix.
    pub fn predict(&self, states: &Matrix) -> Result<Matrix> {
        if states.cols() != self.inputs() {
            return Err(invalid(format!(
                "states have {} columns, readout expects {}",
                states.cols(),
                self.inputs()
            )));
        }
        let p = self.outputs();
        let mut out = Matrix::zeros(states.rows(), p);
        for t in 0..states.rows() {
            let x = states.row(t);
            for (k, o) in out.row_mut(t).iter_mut().enumerate() {
                *o = dot(self.w_out.row(k), x) + self.b_out[k];
            }
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReadoutRepr {
    p: usize,
    n: usize,
    w_out: Vec<f64>,
    b_out: Vec<f64>,
}

impl TryFrom<ReadoutRepr> for Readout {
    type Error = Error;

    fn try_from(r: ReadoutRepr) -> Result<Self> {
        Readout::new(Matrix::from_row_major(r.p, r.n, r.w_out)?, r.b_out)
    }
}

impl From<Readout> for ReadoutRepr {
    fn from(r: Readout) -> Self {
        ReadoutRepr {
            p: r.w_out.rows(),
            n: r.w_out.cols(),
            w_out: r.w_out.into_vec(),
            b_out: r.b_out,
        }
    }
}

/// Ridge system on centered states, factored once and reused for any
/// number of targets. Centering leaves the intercept unregularized.
#[derive(Debug, Clone)]
pub struct CenteredRidge {
    mean: Vec<f64>,
    centered: Matrix,
    gram: Matrix,
    chol: Cholesky,
    mu: f64,
}

impl CenteredRidge {
    /// `mu = None` picks `DEFAULT_MU_SCALE * trace(XᵀX) / n` on the centered states.
    pub fn new(states: &Matrix, mu: Option<f64>) -> Result<Self> {
        let (t, n) = (states.rows(), states.cols());
        if t == 0 || n == 0 {
            return Err(invalid("need at least one sample and one feature"));
        }
        if !states.is_finite() {
            return Err(invalid("states must be finite"));
        }
        let mut mean = vec![0.0; n];
        for r in 0..t {
            mean.iter_mut()
                .zip(states.row(r))
                .for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= t as f64);
        let mut centered = states.clone();
        for r in 0..t {
            centered
                .row_mut(r)
                .iter_mut()
                .zip(&mean)
                .for_each(|(x, m)| *x -= m);
        }
        let mut gram = centered.gram();
        if !gram.is_finite() {
            return Err(Error::Divergence(
                "state Gram matrix overflows; the reservoir is unstable for this input".into(),
            ));
        }
        let mu = match mu {
            Some(m) if m >= 0.0 && m.is_finite() => m,
            Some(m) => return Err(invalid(format!("ridge parameter must be >= 0, got {m}"))),
            None => {
                let trace = (0..n).map(|i| gram[(i, i)]).sum::<f64>();
                // Constant states: any positive ridge gives the zero weight.
                if trace > 0.0 {
                    DEFAULT_MU_SCALE * trace / n as f64
                } else {
                    1.0
                }
            }
        };
        for i in 0..n {
            gram[(i, i)] += mu;
        }
        let chol = Cholesky::new(&gram)?;
        Ok(Self {
            mean,
            centered,
            gram,
            chol,
            mu,
        })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn samples(&self) -> usize {
        self.centered.rows()
    }

    /// Weights and intercept for one target column.
    pub fn fit(&self, y: &[f64]) -> Result<(Vec<f64>, f64)> {
        if y.len() != self.samples() {
            return Err(invalid(format!(
                "target has {} samples, states have {}",
                y.len(),
                self.samples()
            )));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(invalid("targets must be finite"));
        }
        let y_mean = y.iter().sum::<f64>() / y.len() as f64;
        let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();
        let rhs = self.centered.tr_matvec(&yc);
        let w = self.chol.solve_refined(&self.gram, &rhs);
        let b = y_mean - dot(&w, &self.mean);
        Ok((w, b))
    }
}

/// Result of [`train_readout`].
#[derive(Debug, Clone, PartialEq)]
pub struct Training {
    pub readout: Readout,
    pub mu: f64,
    pub warnings: Vec<String>,
}

/// Fits an affine readout minimizing `‖Y - XWᵀ - 1bᵀ‖² + mu‖W‖²`.
pub fn train_readout(states: &Matrix, targets: &Matrix, mu: Option<f64>) -> Result<Training> {
    if states.rows() != targets.rows() {
        return Err(invalid(format!(
            "{} state rows but {} target rows",
            states.rows(),
            targets.rows()
        )));
    }
    if targets.cols() == 0 {
        return Err(invalid("targets need at least one column"));
    }
    let mut warnings = Vec::new();
    if states.rows() <= states.cols() {
        warnings.push(format!(
            "only {} samples for {} features; the fit is underdetermined without ridge",
            states.rows(),
            states.cols()
        ));
    }
    let ridge = CenteredRidge::new(states, mu)?;
    let p = targets.cols();
    let mut w_out = Matrix::zeros(p, states.cols());
    let mut b_out = vec![0.0; p];
    for k in 0..p {
        let (w, b) = ridge.fit(&targets.col(k))?;
        w_out.row_mut(k).copy_from_slice(&w);
        b_out[k] = b;
    }
    Ok(Training {
        readout: Readout::new(w_out, b_out)?,
        mu: ridge.mu(),
        warnings,
    })
}

/// Per-output error metrics. `None` marks a metric that is undefined
/// because the target has zero variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mse: Vec<f64>,
    pub nmse: Vec<Option<f64>>,
    pub squared_correlation: Vec<Option<f64>>,
}

pub fn evaluate(readout: &Readout, states: &Matrix, targets: &Matrix) -> Result<Metrics> {
    if states.rows() != targets.rows() || targets.cols() != readout.outputs() {
        return Err(invalid("states, targets and readout disagree in shape"));
    }
    if states.rows() == 0 {
        return Err(invalid("nothing to evaluate"));
    }
    let pred = readout.predict(states)?;
    let mut m = Metrics {
        mse: Vec::new(),
        nmse: Vec::new(),
        squared_correlation: Vec::new(),
    };
    for k in 0..targets.cols() {
        let (y, yh) = (targets.col(k), pred.col(k));
        let mse = y.iter().zip(&yh).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / y.len() as f64;
        let var = variance(&y);
        m.mse.push(mse);
        m.nmse.push((var > 0.0).then(|| mse / var));
        m.squared_correlation.push(squared_correlation(&y, &yh));
    }
    Ok(m)
}

/// Population variance.
pub fn variance(v: &[f64]) -> f64 {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
}

/// `Cov(y, ŷ)² / (Var(y) Var(ŷ))`.
///
/// `None` if `y` is constant; `Some(0)` if only `ŷ` is constant.
pub fn squared_correlation(y: &[f64], yhat: &[f64]) -> Option<f64> {
    assert_eq!(y.len(), yhat.len());
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mh = yhat.iter().sum::<f64>() / n;
    let (mut cov, mut vy, mut vh) = (0.0, 0.0, 0.0);
    for (a, b) in y.iter().zip(yhat) {
        let (da, db) = (a - my, b - mh);
        cov += da * db;
        vy += da * da;
        vh += db * db;
    }
    if vy == 0.0 {
        return None;
    }
    if vh == 0.0 {
        return Some(0.0);
    }
    // Rounding can land one ulp above 1.
    Some((cov * cov / (vy * vh)).min(1.0))
}
