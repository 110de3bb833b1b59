use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let betas = (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2);
        if !(self.lr > 0.0) || !betas || !(self.eps > 0.0) {
            return Err(Error::Config(format!("invalid ADAM settings: {self:?}")));
        }
        Ok(())
    }
}

/// First and second moment estimates with the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// Bias-corrected ADAM update of `params` in place.
    pub fn step(&mut self, cfg: &AdamConfig, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        debug_assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(3);
        let mut w = [0.1, -0.2, 0.3];
        state.step(&cfg, &mut w, &[0.0; 3]);
        assert_eq!(w, [0.1, -0.2, 0.3]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(1);
        let mut w = [0.0];
        state.step(&cfg, &mut w, &[1.0]);
        // m_hat = 1, v_hat = 1, so the step is lr / (1 + eps)
        assert!((w[0] + 0.001).abs() < 1e-10, "{}", w[0]);
    }

    #[test]
    fn repeated_gradient_moves_monotonically() {
        let cfg = AdamConfig::default();
        let mut state = AdamState::new(2);
        let mut w = [0.0, 0.0];
        let mut prev = w;
        for _ in 0..100 {
            state.step(&cfg, &mut w, &[2.0, -0.5]);
            assert!(w[0] < prev[0]);
            assert!(w[1] > prev[1]);
            prev = w;
        }
    }
}
