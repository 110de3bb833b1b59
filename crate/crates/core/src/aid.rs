//! Adaptive identification of the surge plant with known mass.
//!
//! The plant is linear in its parameters, `m dv/dt = W(v, thdot, xi)^T theta`,
//! so a velocity observer driven by the current estimate and a gradient
//! adaptation law on the observer error give
//!
//! ```text
//! v_hat' = W^T theta_hat / m + k_v (v - v_hat)
//! theta_hat' = Gamma W (v - v_hat)
//! ```
//!
//! which is stable with the Lyapunov function
//! `(v - v_hat)^2 / 2 + theta_err^T Gamma^-1 theta_err / (2 m)`.
//! Both equations are integrated with forward Euler at the stream rate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::SurgeParams;

pub const AID_PARAMS: usize = 9;

/// Regressor `(|v|v, v, |thdot v|, xi_L, xi_L^2, xi_L v, xi_R, xi_R^2, xi_R v)`.
pub fn regressor(v: f64, thetadot: f64, xi_left: f64, xi_right: f64) -> [f64; AID_PARAMS] {
    [
        v.abs() * v,
        v,
        (thetadot * v).abs(),
        xi_left,
        xi_left * xi_left,
        xi_left * v,
        xi_right,
        xi_right * xi_right,
        xi_right * v,
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AidGains {
    /// Observer gain (1/s).
    pub k_v: f64,
    /// Per-parameter adaptation gains.
    pub gamma: [f64; AID_PARAMS],
}

impl Default for AidGains {
    fn default() -> Self {
        AidGains::scaled_to(&SurgeParams::heron_nominal().theta(), 2.0, 100.0, 0.1)
    }
}

impl AidGains {
    /// Gains that move each parameter by `rate` of its nominal magnitude per
    /// second under a unit (1 m/s) observer error at the typical regressor
    /// magnitude, taken at `v_typ` and `xi_typ`.
    pub fn scaled_to(nominal: &[f64; AID_PARAMS], v_typ: f64, xi_typ: f64, rate: f64) -> Self {
        let w = regressor(v_typ, 1.0, xi_typ, xi_typ);
        let mut gamma = [0.0; AID_PARAMS];
        for i in 0..AID_PARAMS {
            gamma[i] = rate * nominal[i].abs() / w[i].abs();
        }
        Self { k_v: 1.0, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k_v > 0.0) || self.gamma.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::Config(format!("AID gains must be positive: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AidConfig {
    pub gains: AidGains,
    /// Known mass. `None` derives it from the initial estimate as `8 |c_q|`.
    pub mass: Option<f64>,
    /// Initial parameter estimate.
    pub theta0: [f64; AID_PARAMS],
}

impl Default for AidConfig {
    fn default() -> Self {
        Self {
            gains: AidGains::default(),
            mass: None,
            theta0: SurgeParams::heron_nominal().theta(),
        }
    }
}

impl AidConfig {
    pub fn mass(&self) -> f64 {
        self.mass.unwrap_or(8.0 * self.theta0[0].abs())
    }
}

/// Parameter estimate, observer velocity, known mass and gains.
#[derive(Debug, Clone, PartialEq)]
pub struct AidState {
    pub theta_hat: [f64; AID_PARAMS],
    pub v_hat: f64,
    pub m: f64,
    pub gains: AidGains,
    pub skipped: u64,
}

/// Signals the identifier consumes from one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AidFrame {
    pub v_meas: Option<f64>,
    pub thetadot: f64,
    pub xi_left: f64,
    pub xi_right: f64,
}

impl AidState {
    pub fn new(cfg: &AidConfig) -> Result<Self> {
        cfg.gains.validate()?;
        let m = cfg.mass();
        if !(m > 0.0) || !m.is_finite() {
            return Err(Error::Config(format!("AID mass must be positive, got {m}")));
        }
        Ok(Self {
            theta_hat: cfg.theta0,
            v_hat: 0.0,
            m,
            gains: cfg.gains.clone(),
            skipped: 0,
        })
    }

    /// Observer derivative `W^T theta_hat / m` at the given signals.
    fn drift(&self, v: f64, frame: &AidFrame) -> ([f64; AID_PARAMS], f64) {
        let w = regressor(v, frame.thetadot, frame.xi_left.max(0.0), frame.xi_right.max(0.0));
        let force: f64 = w.iter().zip(&self.theta_hat).map(|(a, b)| a * b).sum();
        (w, force / self.m)
    }

    /// Consumes one frame and advances the observer by `dt`.
    ///
    /// Returns the velocity predicted for this frame, i.e. `v_hat` before the
    /// update. With a measurement the regressor uses the measured speed and
    /// both observer and parameters are corrected; without one the observer
    /// runs open loop on its own estimate.
    pub fn update(&mut self, frame: &AidFrame, dt: f64) -> Result<f64> {
        self.step(frame, dt, true)
    }

    /// Like [`AidState::update`] but with the parameter estimate held fixed;
    /// only the observer is corrected.
    pub fn observe(&mut self, frame: &AidFrame, dt: f64) -> Result<f64> {
        self.step(frame, dt, false)
    }

    fn step(&mut self, frame: &AidFrame, dt: f64, adapt: bool) -> Result<f64> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidStep(format!("AID dt must be positive, got {dt}")));
        }
        let v_pred = self.v_hat;
        let inputs_ok = frame.thetadot.is_finite()
            && frame.xi_left.is_finite()
            && frame.xi_right.is_finite();
        let meas = frame.v_meas.filter(|v| v.is_finite());
        if !inputs_ok || (frame.v_meas.is_some() && meas.is_none()) {
            self.skipped += 1;
            return Ok(v_pred);
        }
        match meas {
            Some(v) => {
                let err = v - self.v_hat;
                let (w, drift) = self.drift(v, frame);
                self.v_hat += dt * (drift + self.gains.k_v * err);
                for i in (0..AID_PARAMS).filter(|_| adapt) {
                    self.theta_hat[i] += dt * self.gains.gamma[i] * w[i] * err;
                }
            }
            None => {
                let (_, drift) = self.drift(self.v_hat, frame);
                self.v_hat += dt * drift;
            }
        }
        Ok(v_pred)
    }
}
