//! Fusion of the three velocity predictions: a plain average and a weighted
//! combination `v_we = c1 v_aid + c2 v_rnn + c3 v_rls` whose weights are
//! tracked by recursive least squares. There is no intercept and no
//! convexity constraint on the weights.

use nalgebra::{DMatrix, DVector, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rls::Rls;

pub fn average(v_aid: f64, v_rnn: f64, v_rls: f64) -> f64 {
    (v_aid + v_rnn + v_rls) / 3.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub lambda_f: f64,
    pub p0: f64,
    pub p_max: f64,
    /// Re-initialize the fusion weights at the start of every mission
    /// instead of carrying them across.
    pub reset_per_mission: bool,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            lambda_f: 0.999,
            p0: 1e2,
            p_max: 1e8,
            reset_per_mission: false,
        }
    }
}

/// Fusion weights and their covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState {
    pub rls: Rls<3>,
}

impl EnsembleState {
    pub fn new(cfg: &EnsembleConfig) -> Result<Self> {
        let third = 1.0 / 3.0;
        Ok(Self {
            rls: Rls::new(
                SVector::from([third, third, third]),
                cfg.p0,
                cfg.lambda_f,
                cfg.p_max,
            )?,
        })
    }

    pub fn weights(&self) -> [f64; 3] {
        [self.rls.theta[0], self.rls.theta[1], self.rls.theta[2]]
    }

    pub fn predict(&self, v_aid: f64, v_rnn: f64, v_rls: f64) -> f64 {
        self.rls.predict(&SVector::from([v_aid, v_rnn, v_rls]))
    }

    /// Fused prediction with the current weights, then one RLS step towards
    /// `v_meas` when it is present. The prediction never sees `v_meas`.
    pub fn fuse_update(&mut self, v_aid: f64, v_rnn: f64, v_rls: f64, v_meas: Option<f64>) -> f64 {
        let phi = SVector::from([v_aid, v_rnn, v_rls]);
        if !phi.iter().all(|v| v.is_finite()) {
            return f64::NAN;
        }
        match v_meas {
            Some(v) if v.is_finite() => self.rls.update(&phi, v),
            _ => self.rls.predict(&phi),
        }
    }
}

/// Least-squares fusion weights over a whole dataset of
/// `(v_aid, v_rnn, v_rls, v_meas)` rows, with the resulting fused MSE.
pub fn batch_fit(rows: &[[f64; 4]]) -> Result<([f64; 3], f64)> {
    if rows.is_empty() {
        return Err(Error::NoData("batch fusion needs at least one sample".into()));
    }
    let x = DMatrix::from_fn(rows.len(), 3, |i, j| rows[i][j]);
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|r| r[3]));
    let svd = x.clone().svd(true, true);
    let c = svd
        .solve(&y, 1e-12)
        .map_err(|e| Error::NoData(format!("least-squares solve failed: {e}")))?;
    let resid = y - x * &c;
    let mse = resid.norm_squared() / rows.len() as f64;
    Ok(([c[0], c[1], c[2]], mse))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn average_examples() {
        assert_eq!(average(1.0, 1.0, 1.0), 1.0);
        assert!((average(0.9, 1.1, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(average(0.0, 0.0, 3.0), 1.0);
    }

    #[test]
    fn selector_weights_pick_component() {
        let mut s = EnsembleState::new(&EnsembleConfig::default()).unwrap();
        s.rls.theta = SVector::from([1.0, 0.0, 0.0]);
        assert_eq!(s.predict(0.7, 3.0, -2.0), 0.7);
    }

    #[test]
    fn prediction_is_causal() {
        let mut s = EnsembleState::new(&EnsembleConfig::default()).unwrap();
        let before = s.predict(1.0, 2.0, 3.0);
        let fused = s.fuse_update(1.0, 2.0, 3.0, Some(10.0));
        assert_eq!(fused, before);
        assert_ne!(s.predict(1.0, 2.0, 3.0), before);
    }

    #[test]
    fn batch_fit_recovers_exact_combination() {
        let rows: Vec<[f64; 4]> = (0..50)
            .map(|k| {
                let t = k as f64 * 0.3;
                let (a, b, c) = (t.sin(), (1.7 * t).cos(), 0.1 * t);
                [a, b, c, 0.6 * a + 0.3 * b - 0.2 * c]
            })
            .collect();
        let (w, mse) = batch_fit(&rows).unwrap();
        assert!((w[0] - 0.6).abs() < 1e-10 && (w[1] - 0.3).abs() < 1e-10);
        assert!(mse < 1e-20);
        assert!(batch_fit(&[]).is_err());
    }
}
