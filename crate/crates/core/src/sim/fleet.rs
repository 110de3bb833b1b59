//! Synthetic vehicles: true plant parameters and measurement noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SurgeParams, ThrustParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    /// Standard deviation of the Gaussian speed noise (m/s).
    pub velocity_std: f64,
    /// Per-sample probability of an additive outlier.
    pub outlier_prob: f64,
    /// Outliers are drawn uniformly from `[-outlier_mag, outlier_mag]`.
    pub outlier_mag: f64,
    /// Per-sample probability that the speed message is missing.
    pub dropout_prob: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            velocity_std: 0.03,
            outlier_prob: 0.002,
            outlier_mag: 0.5,
            dropout_prob: 0.01,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            velocity_std: 0.0,
            outlier_prob: 0.0,
            outlier_mag: 0.0,
            dropout_prob: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [self.outlier_prob, self.dropout_prob];
        if !(self.velocity_std >= 0.0)
            || !(self.outlier_mag >= 0.0)
            || probs.iter().any(|p| !(0.0..=1.0).contains(p))
        {
            return Err(Error::Config(format!("invalid noise model: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleSpec {
    pub vehicle_id: String,
    pub truth: SurgeParams,
    pub noise: NoiseModel,
    /// Seed of this vehicle's noise stream.
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FleetConfig {
    pub vehicles: usize,
    /// Relative half-width of the per-parameter perturbation.
    pub spread: f64,
    pub seed: u64,
    pub noise: NoiseModel,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            vehicles: 8,
            spread: 0.3,
            seed: 7,
            noise: NoiseModel::default(),
        }
    }
}

impl FleetConfig {
    /// Vehicles whose parameters are independent uniform perturbations of
    /// the nominal set. The mass is not drawn; it stays at `8 |c_q|` so the
    /// known-mass assumption of the adaptive identifier holds per vehicle.
    pub fn generate(&self) -> Result<Vec<VehicleSpec>> {
        if !(0.0..1.0).contains(&self.spread) {
            return Err(Error::Config(format!("spread must lie in [0, 1), got {}", self.spread)));
        }
        self.noise.validate()?;
        let nominal = SurgeParams::heron_nominal();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::with_capacity(self.vehicles);
        for i in 0..self.vehicles {
            let mut jitter = |x: f64| -> f64 {
                if self.spread == 0.0 {
                    x
                } else {
                    x * (1.0 + rng.random_range(-self.spread..self.spread))
                }
            };
            let mut thrust = |t: &ThrustParams| ThrustParams {
                alpha: jitter(t.alpha),
                beta: jitter(t.beta),
                gamma: jitter(t.gamma),
            };
            let thrust_left = thrust(&nominal.thrust_left);
            let thrust_right = thrust(&nominal.thrust_right);
            let c_q = jitter(nominal.c_q);
            let truth = SurgeParams {
                m: 8.0 * c_q.abs(),
                c_q,
                c_l: jitter(nominal.c_l),
                c_thetadot: jitter(nominal.c_thetadot),
                thrust_left,
                thrust_right,
            };
            truth.validate()?;
            out.push(VehicleSpec {
                vehicle_id: format!("heron-{:02}", i + 1),
                truth,
                noise: self.noise,
                seed: rng.random(),
            });
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fleet_is_reproducible_and_bounded() {
        let cfg = FleetConfig::default();
        let a = cfg.generate().unwrap();
        assert_eq!(a, cfg.generate().unwrap());
        assert_eq!(a.len(), 8);
        let nominal = SurgeParams::heron_nominal().theta();
        for v in &a {
            for (x, n) in v.truth.theta().iter().zip(nominal) {
                let r = x / n;
                assert!((0.7..=1.3).contains(&r), "{r}");
            }
        }
        assert_ne!(a[0].truth, a[1].truth);
        for v in &a {
            assert!((v.truth.m - 8.0 * v.truth.c_q.abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_spread_gives_nominal_fleet() {
        let cfg = FleetConfig {
            spread: 0.0,
            ..Default::default()
        };
        for v in cfg.generate().unwrap() {
            assert_eq!(v.truth, SurgeParams::heron_nominal());
        }
    }
}
