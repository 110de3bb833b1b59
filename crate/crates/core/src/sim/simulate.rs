//! Mission simulation: integrates the true plant under a script and emits the
//! message stream a vehicle would log.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::fleet::VehicleSpec;
use super::mission::MissionScript;
use crate::error::{Error, Result};
use crate::model::{contraction_dt_bound, step, SurgeInput};
use crate::stream::gate::wrap_angle;
use crate::stream::{Channel, Message, MissionLog};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    /// Frame period (s).
    pub dt: f64,
    /// Euler substeps of the true plant per frame.
    pub substeps: usize,
    pub v_max: f64,
    pub xi_max: f64,
    pub t_start: f64,
    pub v0: f64,
    pub theta0: f64,
    /// Thruster messages are delayed by a uniform draw from `[0, jitter]`.
    pub jitter: f64,
    /// Also publish the heading rate instead of leaving it to be derived.
    pub emit_heading_rate: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            substeps: 10,
            v_max: 3.0,
            xi_max: 100.0,
            t_start: 0.0,
            v0: 0.0,
            theta0: 0.0,
            jitter: 0.0,
            emit_heading_rate: false,
        }
    }
}

/// True state and commands at one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthSample {
    pub t: f64,
    pub v: f64,
    pub theta: f64,
    pub thetadot: f64,
    pub xi_left: f64,
    pub xi_right: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub log: MissionLog,
    pub truth: Vec<TruthSample>,
    /// Number of velocity samples that received an outlier.
    pub outliers: usize,
}

/// Rejects a configuration whose integration step exceeds the contraction
/// bound of the vehicle's true plant.
pub fn check_step(vehicle: &VehicleSpec, cfg: &SimConfig) -> Result<()> {
    if !(cfg.dt > 0.0) || cfg.substeps == 0 {
        return Err(Error::Config(format!(
            "dt must be positive and substeps non-zero, got {} / {}",
            cfg.dt, cfg.substeps
        )));
    }
    let h = cfg.dt / cfg.substeps as f64;
    if let Some(bound) = contraction_dt_bound(&vehicle.truth, cfg.v_max, cfg.xi_max) {
        if h > bound {
            return Err(Error::Config(format!(
                "{}: step {h} s exceeds the contraction bound {bound:.4} s",
                vehicle.vehicle_id
            )));
        }
    }
    Ok(())
}

/// Simulates one mission. `run_index` selects an independent noise stream
/// for the same vehicle.
pub fn simulate(
    vehicle: &VehicleSpec,
    script: &MissionScript,
    cfg: &SimConfig,
    run_id: &str,
    run_index: u64,
) -> Result<SimRun> {
    vehicle.truth.validate()?;
    vehicle.noise.validate()?;
    check_step(vehicle, cfg)?;
    script.validate(cfg.xi_max, cfg.dt)?;

    let mut rng = ChaCha8Rng::seed_from_u64(vehicle.seed ^ run_index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let noise = Normal::new(0.0, vehicle.noise.velocity_std)
        .map_err(|e| Error::Config(format!("velocity noise: {e}")))?;

    let frames = (script.duration() / cfg.dt).round() as usize;
    let h = cfg.dt / cfg.substeps as f64;
    let mut v = cfg.v0.clamp(0.0, cfg.v_max);
    let mut theta = wrap_angle(cfg.theta0).rem_euclid(std::f64::consts::TAU);
    let mut messages = Vec::with_capacity(frames * 5);
    let mut truth = Vec::with_capacity(frames);
    let mut outliers = 0;

    for k in 0..frames {
        let s = k as f64 * cfg.dt;
        let t = cfg.t_start + s;
        let cmd = script.eval(s);
        truth.push(TruthSample {
            t,
            v,
            theta,
            thetadot: cmd.turn_rate,
            xi_left: cmd.xi_left,
            xi_right: cmd.xi_right,
        });

        let mut measured = v + noise.sample(&mut rng);
        if rng.random::<f64>() < vehicle.noise.outlier_prob {
            let mag = vehicle.noise.outlier_mag;
            measured += rng.random_range(-mag..=mag);
            outliers += 1;
        }
        if rng.random::<f64>() >= vehicle.noise.dropout_prob {
            messages.push(Message::new(t, Channel::Velocity, measured));
        }
        if cfg.emit_heading_rate {
            messages.push(Message::new(t, Channel::HeadingRate, cmd.turn_rate));
        }
        messages.push(Message::new(t, Channel::Heading, theta));
        let mut delays = [0.0, 0.0];
        if cfg.jitter > 0.0 {
            delays = [rng.random_range(0.0..cfg.jitter), rng.random_range(0.0..cfg.jitter)];
        }
        let mut thrusts = [
            Message::new(t + delays[0], Channel::ThrustLeft, cmd.xi_left),
            Message::new(t + delays[1], Channel::ThrustRight, cmd.xi_right),
        ];
        thrusts.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        messages.extend(thrusts);

        let input = SurgeInput::new(cmd.turn_rate, cmd.xi_left, cmd.xi_right);
        for _ in 0..cfg.substeps {
            v = step(&vehicle.truth, v, &input, h, cfg.v_max)?;
        }
        theta = (theta + cfg.dt * cmd.turn_rate).rem_euclid(std::f64::consts::TAU);
    }

    Ok(SimRun {
        log: MissionLog {
            vehicle_id: vehicle.vehicle_id.clone(),
            run_id: run_id.to_string(),
            messages,
            corrupt_lines: 0,
        },
        truth,
        outliers,
    })
}
