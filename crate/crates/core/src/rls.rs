//! Recursive least squares with exponential forgetting, and the quasi-static
//! thruster map built on it.
//!
//! The thruster map assumes `dv/dt = 0` and regresses velocity directly on
//! polynomial and trigonometric features of the inputs:
//!
//! ```text
//! v ~ Phi^T zeta,   Phi = (xi_R, xi_R^2, xi_R^3, xi_L, xi_L^2, xi_L^3, sin th, cos th, |thdot|)
//! ```

use nalgebra::{DMatrix, SMatrix, SVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Covariance is re-initialized when its smallest eigenvalue drops below this.
const MIN_EIGENVALUE: f64 = 1e-12;

/// Covariance form RLS over an `N`-dimensional regressor.
#[derive(Debug, Clone, PartialEq)]
pub struct Rls<const N: usize> {
    pub theta: SVector<f64, N>,
    pub p: SMatrix<f64, N, N>,
    pub lambda_f: f64,
    /// Diagonal of the initial covariance, used again on reset.
    pub p0: f64,
    /// Upper bound on the covariance spectrum before a reset (wind-up guard).
    pub p_max: f64,
    pub resets: u64,
}

impl<const N: usize> Rls<N> {
    pub fn new(theta0: SVector<f64, N>, p0: f64, lambda_f: f64, p_max: f64) -> Result<Self> {
        if !(lambda_f > 0.0 && lambda_f <= 1.0) {
            return Err(Error::Config(format!(
                "forgetting factor must lie in (0, 1], got {lambda_f}"
            )));
        }
        if !(p0 > 0.0) || !(p_max >= p0) {
            return Err(Error::Config(format!(
                "covariance bounds must satisfy 0 < p0 <= p_max, got {p0}, {p_max}"
            )));
        }
        Ok(Self {
            theta: theta0,
            p: SMatrix::identity() * p0,
            lambda_f,
            p0,
            p_max,
            resets: 0,
        })
    }

    pub fn predict(&self, phi: &SVector<f64, N>) -> f64 {
        phi.dot(&self.theta)
    }

    /// One recursion step. Returns the a-priori prediction `phi^T theta`.
    pub fn update(&mut self, phi: &SVector<f64, N>, y: f64) -> f64 {
        let pred = self.predict(phi);
        let p_phi = self.p * phi;
        let denom = self.lambda_f + phi.dot(&p_phi);
        let gain = p_phi / denom;
        self.theta += gain * (y - pred);
        let next = (self.p - gain * p_phi.transpose()) / self.lambda_f;
        self.p = (next + next.transpose()) * 0.5;
        self.condition();
        pred
    }

    fn condition(&mut self) {
        let finite = self.p.iter().all(|v| v.is_finite());
        let ok = finite && {
            let eig = SymmetricEigen::new(DMatrix::from_column_slice(N, N, self.p.as_slice())).eigenvalues;
            eig.min() >= MIN_EIGENVALUE && eig.max() <= self.p_max
        };
        if !ok {
            self.p = SMatrix::identity() * self.p0;
            self.resets += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RlsConfig {
    pub lambda_f: f64,
    pub p0: f64,
    pub p_max: f64,
}

impl Default for RlsConfig {
    fn default() -> Self {
        Self {
            lambda_f: 0.995,
            p0: 1e3,
            p_max: 1e8,
        }
    }
}

/// Feature vector of the quasi-static map.
pub fn regressor(xi_left: f64, xi_right: f64, theta: f64, thetadot: f64) -> SVector<f64, 9> {
    SVector::from([
        xi_right,
        xi_right.powi(2),
        xi_right.powi(3),
        xi_left,
        xi_left.powi(2),
        xi_left.powi(3),
        theta.sin(),
        theta.cos(),
        thetadot.abs(),
    ])
}

/// Inputs the thruster map consumes from a measurement frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapInputs {
    pub xi_left: f64,
    pub xi_right: f64,
    pub theta: f64,
    pub thetadot: f64,
}

impl MapInputs {
    fn is_finite(&self) -> bool {
        self.xi_left.is_finite()
            && self.xi_right.is_finite()
            && self.theta.is_finite()
            && self.thetadot.is_finite()
    }
}

/// Thruster-map estimator state: `zeta`, covariance and forgetting factor.
#[derive(Debug, Clone, PartialEq)]
pub struct RlsState {
    pub rls: Rls<9>,
    /// Commands are divided by this before building the regressor.
    pub xi_scale: f64,
    pub skipped: u64,
}

impl RlsState {
    pub fn new(cfg: &RlsConfig, xi_scale: f64) -> Result<Self> {
        if !(xi_scale > 0.0) {
            return Err(Error::Config(format!("xi scale must be positive, got {xi_scale}")));
        }
        Ok(Self {
            rls: Rls::new(SVector::zeros(), cfg.p0, cfg.lambda_f, cfg.p_max)?,
            xi_scale,
            skipped: 0,
        })
    }

    fn features(&self, inp: &MapInputs) -> SVector<f64, 9> {
        regressor(
            inp.xi_left / self.xi_scale,
            inp.xi_right / self.xi_scale,
            inp.theta,
            inp.thetadot,
        )
    }

    pub fn predict(&self, inp: &MapInputs) -> Option<f64> {
        inp.is_finite().then(|| self.rls.predict(&self.features(inp)))
    }

    /// Prediction from the current coefficients followed, when a finite
    /// measurement is present, by one RLS step. Non-finite frames are skipped.
    pub fn update(&mut self, inp: &MapInputs, v_meas: Option<f64>) -> Option<f64> {
        if !inp.is_finite() {
            self.skipped += 1;
            return None;
        }
        let phi = self.features(inp);
        match v_meas {
            Some(v) if v.is_finite() => Some(self.rls.update(&phi, v)),
            Some(_) => {
                self.skipped += 1;
                Some(self.rls.predict(&phi))
            }
            None => Some(self.rls.predict(&phi)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn regressor_examples() {
        let phi = regressor(0.0, 0.0, 0.0, 0.0);
        assert_eq!(phi.as_slice(), &[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0]);

        let phi = regressor(-1.0, 2.0, FRAC_PI_2, -3.0);
        let want = [2.0, 4.0, 8.0, -1.0, 1.0, -1.0, 1.0, 0.0, 3.0];
        for (g, w) in phi.iter().zip(want) {
            assert!((g - w).abs() < 1e-15, "{phi:?}");
        }
        assert_eq!(regressor(1.0, 1.0, 0.3, 2.0), regressor(1.0, 1.0, 0.3, -2.0));
    }

    #[test]
    fn zero_innovation_keeps_coefficients() {
        let mut rls = Rls::<3>::new(SVector::from([0.5, -1.0, 2.0]), 100.0, 0.99, 1e8).unwrap();
        let phi = SVector::from([1.0, 2.0, 3.0]);
        let y = rls.predict(&phi);
        let before = rls.theta;
        rls.update(&phi, y);
        assert_eq!(rls.theta, before);
    }

    #[test]
    fn covariance_stays_symmetric() {
        let mut rls = Rls::<3>::new(SVector::zeros(), 1e3, 0.98, 1e8).unwrap();
        for k in 0..500 {
            let t = k as f64 * 0.37;
            let phi = SVector::from([t.sin(), (2.0 * t).cos(), 1.0]);
            rls.update(&phi, 0.3 * t.sin() - 0.1);
            let asym = (rls.p - rls.p.transpose()).abs().max();
            assert!(asym < 1e-12);
        }
    }

    #[test]
    fn wind_up_triggers_reset() {
        let mut rls = Rls::<2>::new(SVector::zeros(), 1.0, 0.9, 1e3).unwrap();
        // excitation only along the first axis: the second direction winds up
        for _ in 0..200 {
            rls.update(&SVector::from([1.0, 0.0]), 1.0);
        }
        assert!(rls.resets > 0);
        assert!(rls.p.max() <= 1e3);
    }

    #[test]
    fn bad_forgetting_factor_is_rejected() {
        assert!(Rls::<2>::new(SVector::zeros(), 1.0, 0.0, 1e3).is_err());
        assert!(Rls::<2>::new(SVector::zeros(), 1.0, 1.01, 1e3).is_err());
    }

    #[test]
    fn quasi_static_prediction_is_pure() {
        let state = RlsState::new(&RlsConfig::default(), 100.0).unwrap();
        let inp = MapInputs {
            xi_left: 40.0,
            xi_right: 60.0,
            theta: 1.0,
            thetadot: 0.1,
        };
        assert_eq!(state.predict(&inp), state.predict(&inp));
    }

    #[test]
    fn non_finite_frame_is_skipped() {
        let mut state = RlsState::new(&RlsConfig::default(), 100.0).unwrap();
        let inp = MapInputs {
            xi_left: f64::NAN,
            xi_right: 0.0,
            theta: 0.0,
            thetadot: 0.0,
        };
        assert_eq!(state.update(&inp, Some(1.0)), None);
        assert_eq!(state.skipped, 1);
    }
}
