//! The echo-state update `x_t = (1-α) x_{t-1} + α φ(W_in u_t + W x_{t-1} + b)`
//! and driven simulation.
//!
//! With leak rate `α = 1` the update is the plain ESN map. The leak is a
//! convex combination outside the nonlinearity, so the state-Lipschitz
//! constant of the leaky map is `(1-α) + α L_φ ‖W‖₂`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::Matrix;

/// Component-wise nonlinearity with its derivative and global Lipschitz
/// constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    LogisticSigmoid,
    Softsign,
    Relu,
    LeakyRelu { slope: f64 },
    Elu { scale: f64 },
    Identity,
}

impl Activation {
    /// The activations with a tabulated Lipschitz constant, in their
    /// standard parametrization.
    pub const TABLE: [Activation; 6] = [
        Activation::Tanh,
        Activation::LogisticSigmoid,
        Activation::Softsign,
        Activation::Relu,
        Activation::LeakyRelu { slope: 0.01 },
        Activation::Elu { scale: 1.0 },
    ];

    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::LeakyRelu { slope } if !(slope > 0.0 && slope < 1.0) => Err(invalid(
                format!("leaky ReLU slope must lie in (0, 1), got {slope}"),
            )),
            Activation::Elu { scale } if !(scale > 0.0 && scale.is_finite()) => {
                Err(invalid(format!("ELU scale must be positive, got {scale}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::LogisticSigmoid => "logistic_sigmoid",
            Activation::Softsign => "softsign",
            Activation::Relu => "relu",
            Activation::LeakyRelu { .. } => "leaky_relu",
            Activation::Elu { .. } => "elu",
            Activation::Identity => "identity",
        }
    }

    #[inline]
    pub fn apply(&self, z: f64) -> f64 {
        match *self {
            Activation::Tanh => z.tanh(),
            Activation::LogisticSigmoid => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            Activation::Softsign => z / (1.0 + z.abs()),
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu { slope } => {
                if z >= 0.0 {
                    z
                } else {
                    slope * z
                }
            }
            Activation::Elu { scale } => {
                if z >= 0.0 {
                    z
                } else {
                    scale * z.exp_m1()
                }
            }
            Activation::Identity => z,
        }
    }

    /// Derivative; at the rectifier kink `z = 0` the lower-branch value is
    /// used (0 for ReLU, `slope` for leaky ReLU).
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        match *self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::LogisticSigmoid => {
                let s = self.apply(z);
                s * (1.0 - s)
            }
            Activation::Softsign => {
                let d = 1.0 + z.abs();
                1.0 / (d * d)
            }
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if z > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Elu { scale } => {
                if z >= 0.0 {
                    1.0
                } else {
                    scale * z.exp()
                }
            }
            Activation::Identity => 1.0,
        }
    }

    /// Global Lipschitz constant `sup |φ'|`.
    pub fn lipschitz_constant(&self) -> f64 {
        match *self {
            Activation::LogisticSigmoid => 0.25,
            Activation::LeakyRelu { slope } => slope.max(1.0),
            Activation::Elu { scale } => scale.max(1.0),
            _ => 1.0,
        }
    }

    /// Whether the range is bounded (saturating activations).
    pub fn is_bounded(&self) -> bool {
        matches!(
            self,
            Activation::Tanh | Activation::LogisticSigmoid | Activation::Softsign
        )
    }

    /// Whether φ is continuously differentiable everywhere.
    pub fn is_smooth(&self) -> bool {
        match *self {
            Activation::Relu | Activation::LeakyRelu { .. } => false,
            Activation::Elu { scale } => scale == 1.0,
            _ => true,
        }
    }
}

/// Fixed input, recurrent and bias weights plus activation and leak rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ReservoirRepr", into = "ReservoirRepr")]
pub struct Reservoir {
    w_in: Matrix,
    w: Matrix,
    b: Vec<f64>,
    activation: Activation,
    leak_rate: f64,
}

impl Reservoir {
    pub fn new(
        w_in: Matrix,
        w: Matrix,
        b: Vec<f64>,
        activation: Activation,
        leak_rate: f64,
    ) -> Result<Self> {
        let n = w.rows();
        if n == 0 || !w.is_square() {
            return Err(invalid(format!(
                "recurrent matrix must be square and nonempty, got {}x{}",
                w.rows(),
                w.cols()
            )));
        }
        if w_in.rows() != n || w_in.cols() == 0 {
            return Err(invalid(format!(
                "input matrix must be {n}xm with m >= 1, got {}x{}",
                w_in.rows(),
                w_in.cols()
            )));
        }
        if b.len() != n {
            return Err(invalid(format!(
                "bias has length {}, expected {n}",
                b.len()
            )));
        }
        if !(w.is_finite() && w_in.is_finite() && b.iter().all(|v| v.is_finite())) {
            return Err(invalid("reservoir weights must be finite"));
        }
        if !(leak_rate > 0.0 && leak_rate <= 1.0) {
            return Err(invalid(format!(
                "leak rate must lie in (0, 1], got {leak_rate}"
            )));
        }
        activation.validate()?;
        Ok(Self {
            w_in,
            w,
            b,
            activation,
            leak_rate,
        })
    }

    /// State dimension.
    pub fn n(&self) -> usize {
        self.w.rows()
    }

    /// Input dimension.
    pub fn m(&self) -> usize {
        self.w_in.cols()
    }

    pub fn w_in(&self) -> &Matrix {
        &self.w_in
    }

    pub fn w(&self) -> &Matrix {
        &self.w
    }

    pub fn bias(&self) -> &[f64] {
        &self.b
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn leak_rate(&self) -> f64 {
        self.leak_rate
    }

    /// Same weights with a different recurrent matrix.
    pub fn with_w(&self, w: Matrix) -> Result<Self> {
        Self::new(
            self.w_in.clone(),
            w,
            self.b.clone(),
            self.activation,
            self.leak_rate,
        )
    }

    pub fn with_activation(&self, activation: Activation) -> Result<Self> {
        Self::new(
            self.w_in.clone(),
            self.w.clone(),
            self.b.clone(),
            activation,
            self.leak_rate,
        )
    }

    pub fn with_leak_rate(&self, leak_rate: f64) -> Result<Self> {
        Self::new(
            self.w_in.clone(),
            self.w.clone(),
            self.b.clone(),
            self.activation,
            leak_rate,
        )
    }

    fn check_dims(&self, x_prev: &[f64], u: &[f64]) -> Result<()> {
        if x_prev.len() != self.n() {
            return Err(invalid(format!(
                "state has dimension {}, reservoir expects {}",
                x_prev.len(),
                self.n()
            )));
        }
        if u.len() != self.m() {
            return Err(invalid(format!(
                "input has dimension {}, reservoir expects {}",
                u.len(),
                self.m()
            )));
        }
        Ok(())
    }

    /// `W_in u + W x_prev + b`, written into `out`.
    pub(crate) fn preactivation_into(&self, x_prev: &[f64], u: &[f64], out: &mut [f64]) {
        self.w.matvec_into(x_prev, out);
        for (i, o) in out.iter_mut().enumerate() {
            let row = self.w_in.row(i);
            let mut s = self.b[i];
            for (a, v) in row.iter().zip(u) {
                s += a * v;
            }
            *o += s;
        }
    }

    /// Unchecked update used on hot paths; `out` must not alias `x_prev`.
    pub(crate) fn step_into(&self, x_prev: &[f64], u: &[f64], out: &mut [f64]) {
        self.preactivation_into(x_prev, u, out);
        let phi = self.activation;
        if self.leak_rate == 1.0 {
            out.iter_mut().for_each(|z| *z = phi.apply(*z));
        } else {
            let a = self.leak_rate;
            for (z, &x) in out.iter_mut().zip(x_prev) {
                *z = (1.0 - a) * x + a * phi.apply(*z);
            }
        }
    }

    /// One update of the reservoir state.
    pub fn step(&self, x_prev: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x_prev, u)?;
        let mut out = vec![0.0; self.n()];
        self.step_into(x_prev, u, &mut out);
        Ok(out)
    }

    /// φ' evaluated at the pre-activation of the step from `x_prev` under `u`.
    pub fn activation_derivative_diag(&self, x_prev: &[f64], u: &[f64]) -> Result<Vec<f64>> {
        self.check_dims(x_prev, u)?;
        let mut z = vec![0.0; self.n()];
        self.preactivation_into(x_prev, u, &mut z);
        Ok(z.into_iter()
            .map(|v| self.activation.derivative(v))
            .collect())
    }

    /// Iterates the update over `inputs` starting at `x0`.
    pub fn drive(
        &self,
        x0: &[f64],
        inputs: &[Vec<f64>],
        washout: usize,
    ) -> Result<StateTrajectory> {
        if inputs.is_empty() {
            return Err(invalid("cannot drive a reservoir with an empty input"));
        }
        if washout >= inputs.len() {
            return Err(invalid(format!(
                "washout {washout} must be shorter than the input ({})",
                inputs.len()
            )));
        }
        for u in inputs {
            self.check_dims(x0, u)?;
        }
        let mut states = Vec::with_capacity(inputs.len() + 1);
        states.push(x0.to_vec());
        for u in inputs {
            let mut next = vec![0.0; self.n()];
            self.step_into(states.last().expect("nonempty"), u, &mut next);
            states.push(next);
        }
        Ok(StateTrajectory {
            states,
            inputs: inputs.to_vec(),
            washout,
        })
    }

    /// `drive` for a scalar input stream (requires `m = 1`).
    pub fn drive_scalar(
        &self,
        x0: &[f64],
        inputs: &[f64],
        washout: usize,
    ) -> Result<StateTrajectory> {
        if self.m() != 1 {
            return Err(invalid(format!(
                "scalar drive needs m = 1, reservoir has m = {}",
                self.m()
            )));
        }
        let inputs: Vec<Vec<f64>> = inputs.iter().map(|&v| vec![v]).collect();
        self.drive(x0, &inputs, washout)
    }

    /// States after consuming `inputs[washout..]`, stacked as rows, without
    /// keeping the whole trajectory.
    pub fn harvest_scalar(&self, inputs: &[f64], washout: usize) -> Result<Matrix> {
        if self.m() != 1 {
            return Err(invalid("scalar harvest needs m = 1"));
        }
        if inputs.is_empty() || washout >= inputs.len() {
            return Err(invalid(format!(
                "washout {washout} must be shorter than the input ({})",
                inputs.len()
            )));
        }
        let n = self.n();
        let mut out = Matrix::zeros(inputs.len() - washout, n);
        let mut x = vec![0.0; n];
        let mut next = vec![0.0; n];
        for (t, &u) in inputs.iter().enumerate() {
            self.step_into(&x, &[u], &mut next);
            std::mem::swap(&mut x, &mut next);
            if t >= washout {
                out.row_mut(t - washout).copy_from_slice(&x);
            }
        }
        if !out.is_finite() {
            return Err(Error::Divergence(
                "reservoir state left the finite range".into(),
            ));
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReservoirRepr {
    n: usize,
    m: usize,
    activation: Activation,
    leak_rate: f64,
    w_in: Vec<f64>,
    w: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<ReservoirRepr> for Reservoir {
    type Error = Error;

    fn try_from(r: ReservoirRepr) -> Result<Self> {
        let w_in = Matrix::from_row_major(r.n, r.m, r.w_in)?;
        let w = Matrix::from_row_major(r.n, r.n, r.w)?;
        Reservoir::new(w_in, w, r.b, r.activation, r.leak_rate)
    }
}

impl From<Reservoir> for ReservoirRepr {
    fn from(r: Reservoir) -> Self {
        ReservoirRepr {
            n: r.n(),
            m: r.m(),
            activation: r.activation,
            leak_rate: r.leak_rate,
            w_in: r.w_in.into_vec(),
            w: r.w.into_vec(),
            b: r.b,
        }
    }
}

/// Orbit of a driven reservoir: `states[0] = x0` and `states[t+1]` is the
/// state after consuming `inputs[t]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTrajectory {
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub washout: usize,
}

impl StateTrajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// States with index greater than the washout.
    pub fn harvested(&self) -> &[Vec<f64>] {
        &self.states[self.washout + 1..]
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory is nonempty")
    }

    pub fn harvested_matrix(&self) -> Matrix {
        let h = self.harvested();
        let n = h.first().map_or(0, Vec::len);
        Matrix::from_row_major(h.len(), n, h.concat()).unwrap_or_else(|_| Matrix::zeros(h.len(), n))
    }
}
