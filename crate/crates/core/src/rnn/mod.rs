//! Shallow ReLU recurrent network with a single recurrent state,
//!
//! ```text
//! x_{k+1} = a^T relu(w1 x_k + W2 u + b)
//! ```
//!
//! trained online by ADAM on the squared prediction error plus a penalty on
//! every neuron that violates the row-wise contraction certificate
//! `|a_i| + |w1_i| / (n + 1) < 1 / (n + 1)`.

mod adam;
mod certify;
mod equilibrium;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use adam::{AdamConfig, AdamState};
pub use certify::{certify, contraction_matrix, CertificationReport};
pub use equilibrium::{
    critical_values, equilibria, EquilibriumClass, EquilibriumPoint, EquilibriumReport,
};

use crate::error::{Error, Result};

/// Hyperparameters of the recurrent estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RnnConfig {
    /// Neuron count.
    pub n: usize,
    /// Exogenous input dimension.
    pub m: usize,
    /// Weight of the contraction penalty.
    pub eta: f64,
    pub adam: AdamConfig,
    /// Half-width of the uniform initialization. `None` picks `1 / (2 (n + 1))`,
    /// which lies inside the certified set.
    pub init_scale: Option<f64>,
}

impl Default for RnnConfig {
    fn default() -> Self {
        Self {
            n: 20,
            m: 4,
            eta: 1000.0,
            adam: AdamConfig::default(),
            init_scale: None,
        }
    }
}

impl RnnConfig {
    pub fn init_scale(&self) -> f64 {
        self.init_scale
            .unwrap_or(1.0 / (2.0 * (self.n as f64 + 1.0)))
    }

    /// Certificate threshold `1 / (n + 1)`.
    pub fn lambda(&self) -> f64 {
        1.0 / (self.n as f64 + 1.0)
    }

    pub fn weight_count(&self) -> usize {
        self.n * (self.m + 1) + 2 * self.n
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!("rnn.n must be > 1, got {}", self.n)));
        }
        if self.m == 0 {
            return Err(Error::Config("rnn.m must be positive".into()));
        }
        if !(self.eta > 0.0) {
            return Err(Error::Config(format!("rnn.eta must be positive, got {}", self.eta)));
        }
        self.adam.validate()
    }
}

/// Network weights. `w2` is `n x m`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnWeights {
    pub n: usize,
    pub m: usize,
    pub a: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b: Vec<f64>,
}

impl RnnWeights {
    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            n,
            m,
            a: vec![0.0; n],
            w1: vec![0.0; n],
            w2: vec![0.0; n * m],
            b: vec![0.0; n],
        }
    }

    pub fn uniform<R: Rng + ?Sized>(n: usize, m: usize, half_width: f64, rng: &mut R) -> Self {
        let mut draw = |len: usize| -> Vec<f64> {
            (0..len)
                .map(|_| rng.random_range(-half_width..=half_width))
                .collect()
        };
        let a = draw(n);
        let w1 = draw(n);
        let w2 = draw(n * m);
        let b = draw(n);
        Self { n, m, a, w1, w2, b }
    }

    /// Flat layout `[a, w1, W2 (row-major), b]`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        out.extend_from_slice(&self.a);
        out.extend_from_slice(&self.w1);
        out.extend_from_slice(&self.w2);
        out.extend_from_slice(&self.b);
        out
    }

    pub fn from_flat(n: usize, m: usize, flat: &[f64]) -> Result<Self> {
        let expected = n * (m + 3);
        if flat.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: flat.len(),
            });
        }
        let (a, rest) = flat.split_at(n);
        let (w1, rest) = rest.split_at(n);
        let (w2, b) = rest.split_at(n * m);
        Ok(Self {
            n,
            m,
            a: a.to_vec(),
            w1: w1.to_vec(),
            w2: w2.to_vec(),
            b: b.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.n * (self.m + 3)
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_finite(&self) -> bool {
        [&self.a, &self.w1, &self.w2, &self.b]
            .iter()
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    fn check_input(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.m {
            return Err(Error::DimensionMismatch {
                expected: self.m,
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Pre-activation of neuron `i`.
    fn preactivation(&self, i: usize, x: f64, u: &[f64]) -> f64 {
        let row = &self.w2[i * self.m..(i + 1) * self.m];
        let drive: f64 = row.iter().zip(u).map(|(w, u)| w * u).sum();
        self.w1[i] * x + drive + self.b[i]
    }

    /// One recurrent step.
    pub fn forward(&self, x: f64, u: &[f64]) -> Result<f64> {
        self.check_input(u)?;
        Ok((0..self.n)
            .map(|i| self.a[i] * relu(self.preactivation(i, x, u)))
            .sum())
    }

    /// Penalty multipliers: 1 for every neuron violating the certificate row.
    pub fn violations(&self) -> Vec<bool> {
        let lambda = 1.0 / (self.n as f64 + 1.0);
        self.a
            .iter()
            .zip(&self.w1)
            .map(|(a, w)| a.abs() + lambda * w.abs() > lambda)
            .collect()
    }

    /// `(eta / 2) sum_i psi_i (a_i^2 + w1_i^2)`.
    pub fn penalty(&self, eta: f64) -> f64 {
        let sum: f64 = self
            .violations()
            .iter()
            .zip(self.a.iter().zip(&self.w1))
            .filter(|(psi, _)| **psi)
            .map(|(_, (a, w))| a * a + w * w)
            .sum();
        0.5 * eta * sum
    }

    /// Training loss for one prediction.
    pub fn loss(&self, x_pred: f64, x_meas: f64, eta: f64) -> f64 {
        let e = x_pred - x_meas;
        0.5 * e * e + self.penalty(eta)
    }

    /// Analytic gradient of [`RnnWeights::loss`] with `x_pred = forward(x, u)`.
    ///
    /// `x` is treated as an input (one-step truncation), `relu'(0) = 0`, and
    /// the penalty multipliers are held constant within the step.
    pub fn backprop(&self, x: f64, u: &[f64], x_meas: f64, eta: f64) -> Result<RnnWeights> {
        self.check_input(u)?;
        let mut grad = RnnWeights::zeros(self.n, self.m);
        let pre: Vec<f64> = (0..self.n).map(|i| self.preactivation(i, x, u)).collect();
        let x_pred: f64 = pre.iter().zip(&self.a).map(|(z, a)| a * relu(*z)).sum();
        let e = x_pred - x_meas;
        for i in 0..self.n {
            grad.a[i] = e * relu(pre[i]);
            if pre[i] > 0.0 {
                let delta = e * self.a[i];
                grad.w1[i] = delta * x;
                for (j, uj) in u.iter().enumerate() {
                    grad.w2[i * self.m + j] = delta * uj;
                }
                grad.b[i] = delta;
            }
        }
        for (i, psi) in self.violations().into_iter().enumerate() {
            if psi {
                grad.a[i] += eta * self.a[i];
                grad.w1[i] += eta * self.w1[i];
            }
        }
        Ok(grad)
    }
}

#[inline]
fn relu(z: f64) -> f64 {
    if z > 0.0 {
        z
    } else {
        0.0
    }
}

/// Weights plus optimizer state: the learnable part of the recurrent
/// estimator. The recurrent state itself is owned by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct RnnModel {
    pub config: RnnConfig,
    pub weights: RnnWeights,
    pub adam: AdamState,
    /// Steps skipped because of non-finite inputs.
    pub skipped: u64,
}

impl RnnModel {
    pub fn new<R: Rng + ?Sized>(config: RnnConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let weights = RnnWeights::uniform(config.n, config.m, config.init_scale(), rng);
        Ok(Self::from_weights(config, weights))
    }

    pub fn from_weights(config: RnnConfig, weights: RnnWeights) -> Self {
        let adam = AdamState::new(weights.len());
        Self {
            config,
            weights,
            adam,
            skipped: 0,
        }
    }

    /// Predicts the next scaled state from `x_k` and, when a measurement of
    /// that next state is supplied, takes one ADAM step on the penalized
    /// loss. The returned prediction always uses the pre-update weights.
    ///
    /// Non-finite inputs are counted in `skipped` and yield `None`.
    pub fn predict_and_learn(
        &mut self,
        x_k: f64,
        u: &[f64],
        x_meas: Option<f64>,
    ) -> Result<Option<f64>> {
        if !x_k.is_finite() || u.iter().any(|v| !v.is_finite()) {
            self.skipped += 1;
            return Ok(None);
        }
        let x_pred = self.weights.forward(x_k, u)?;
        match x_meas {
            Some(target) if target.is_finite() => {
                let grad = self.weights.backprop(x_k, u, target, self.config.eta)?;
                let mut flat = self.weights.to_flat();
                self.adam.step(&self.config.adam, &mut flat, &grad.to_flat());
                self.weights = RnnWeights::from_flat(self.config.n, self.config.m, &flat)?;
            }
            Some(_) => self.skipped += 1,
            None => {}
        }
        Ok(Some(x_pred))
    }

    pub fn certify(&self) -> Result<CertificationReport> {
        certify(&self.weights)
    }

    pub fn equilibria(&self) -> EquilibriumReport {
        equilibria(&self.weights)
    }
}
