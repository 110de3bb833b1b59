//! 1-DOF surge dynamics of a twin-thruster surface vehicle.
//!
//! The plant is
//!
//! ```text
//! m dv/dt = c_q |v| v + c_l v + c_thetadot |thetadot v| + tau_L + tau_R
//! tau_i   = alpha_i xi_i + beta_i xi_i^2 + gamma_i xi_i v
//! ```
//!
//! discretized with forward Euler. Velocities are kept non-negative and below
//! `v_max`, which is the domain where the scaled discrete map is contracting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thrust coefficients of a single thruster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThrustParams {
    /// Linear thrust coefficient (N per command unit).
    pub alpha: f64,
    /// Quadratic (bollard-pull) coefficient.
    pub beta: f64,
    /// Speed coupling coefficient, non-positive.
    pub gamma: f64,
}

impl ThrustParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.alpha >= 0.0 && self.beta >= 0.0 && self.gamma <= 0.0;
        if ok && self.alpha.is_finite() && self.beta.is_finite() && self.gamma.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidParams(format!(
                "thrust coefficients out of domain: {self:?}"
            )))
        }
    }
}

/// Physical parameters of the surge plant. `m` includes added mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurgeParams {
    pub m: f64,
    pub c_q: f64,
    pub c_l: f64,
    pub c_thetadot: f64,
    pub thrust_left: ThrustParams,
    pub thrust_right: ThrustParams,
}

impl SurgeParams {
    /// Nominal Heron-class parameters (percent thrust commands, m = 8|c_q|).
    pub fn heron_nominal() -> Self {
        let thruster = ThrustParams::new(0.08, 0.001, -0.03);
        Self {
            m: 36.0,
            c_q: -4.5,
            c_l: -7.0,
            c_thetadot: -4.0,
            thrust_left: thruster,
            thrust_right: thruster,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.m, self.c_q, self.c_l, self.c_thetadot]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.m <= 0.0 {
            return Err(Error::InvalidParams(format!("mass must be positive: {self:?}")));
        }
        if self.c_q > 0.0 || self.c_l > 0.0 || self.c_thetadot > 0.0 {
            return Err(Error::InvalidParams(format!(
                "drag coefficients must be non-positive: {self:?}"
            )));
        }
        self.thrust_left.validate()?;
        self.thrust_right.validate()
    }

    /// Parameter vector in the adaptive identifier's ordering
    /// `(c_q, c_l, c_thetadot, alpha_L, beta_L, gamma_L, alpha_R, beta_R, gamma_R)`.
    pub fn theta(&self) -> [f64; 9] {
        let (l, r) = (self.thrust_left, self.thrust_right);
        [
            self.c_q,
            self.c_l,
            self.c_thetadot,
            l.alpha,
            l.beta,
            l.gamma,
            r.alpha,
            r.beta,
            r.gamma,
        ]
    }
}

/// Exogenous inputs acting on the plant over one step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SurgeInput {
    /// Heading rate (rad/s).
    pub thetadot: f64,
    pub xi_left: f64,
    pub xi_right: f64,
}

impl SurgeInput {
    pub fn new(thetadot: f64, xi_left: f64, xi_right: f64) -> Self {
        Self {
            thetadot,
            xi_left,
            xi_right,
        }
    }

    fn is_finite(&self) -> bool {
        self.thetadot.is_finite() && self.xi_left.is_finite() && self.xi_right.is_finite()
    }
}

/// Thruster force. Reverse commands are clamped to zero.
pub fn thrust(p: &ThrustParams, xi: f64, v: f64) -> f64 {
    let xi = xi.max(0.0);
    p.alpha * xi + p.beta * xi * xi + p.gamma * xi * v
}

/// Surge acceleration dv/dt (m/s^2).
pub fn accel(p: &SurgeParams, v: f64, input: &SurgeInput) -> f64 {
    let drag = p.c_q * v.abs() * v + p.c_l * v + p.c_thetadot * (input.thetadot * v).abs();
    let force = drag
        + thrust(&p.thrust_left, input.xi_left, v)
        + thrust(&p.thrust_right, input.xi_right, v);
    force / p.m
}

/// One forward-Euler step, clamped to `[0, v_max]`.
pub fn step(p: &SurgeParams, v: f64, input: &SurgeInput, dt: f64, v_max: f64) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidStep(format!("dt must be positive, got {dt}")));
    }
    if !v.is_finite() || !input.is_finite() {
        return Err(Error::InvalidStep("non-finite state or input".into()));
    }
    let next = v + dt * accel(p, v, input);
    Ok(next.clamp(0.0, v_max))
}

/// Largest Euler step for which the scaled discrete plant is contracting on
/// `[0, v_max]` with commands in `[0, xi_max]`.
///
/// Returns `None` when every drag and speed-coupling term vanishes, in which
/// case the bound places no constraint on `dt`.
pub fn contraction_dt_bound(p: &SurgeParams, v_max: f64, xi_max: f64) -> Option<f64> {
    let denom = contraction_slope_sum(p, v_max, xi_max).abs();
    if denom == 0.0 {
        None
    } else {
        Some(2.0 * p.m / denom)
    }
}

/// `2 v_max c_q + c_l + c_thetadot + (gamma_R + gamma_L) xi_max`, the most
/// negative value of the state-derivative bracket over the scaled domain.
pub fn contraction_slope_sum(p: &SurgeParams, v_max: f64, xi_max: f64) -> f64 {
    2.0 * v_max * p.c_q
        + p.c_l
        + p.c_thetadot
        + (p.thrust_right.gamma + p.thrust_left.gamma) * xi_max
}

/// Linear state scaling `x = h v` with `h = 1 / (2 v_max)`, so `[0, v_max]`
/// maps onto `[0, 0.5]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleMap {
    v_max: f64,
    h: f64,
}

impl ScaleMap {
    pub fn new(v_max: f64) -> Result<Self> {
        if !(v_max > 0.0) || !v_max.is_finite() {
            return Err(Error::InvalidParams(format!("v_max must be positive, got {v_max}")));
        }
        Ok(Self {
            v_max,
            h: 1.0 / (2.0 * v_max),
        })
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn scale(&self, v: f64) -> f64 {
        self.h * v
    }

    pub fn unscale(&self, x: f64) -> f64 {
        x / self.h
    }
}
