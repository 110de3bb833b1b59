//! Scripted command profiles: thruster commands in percent and the turn rate
//! as functions of mission time.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Command {
    pub xi_left: f64,
    pub xi_right: f64,
    pub turn_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    /// Constant commands; a non-zero turn rate makes it a turn.
    Cruise {
        duration: f64,
        xi: f64,
        #[serde(default)]
        differential: f64,
        #[serde(default)]
        turn_rate: f64,
    },
    /// Sums of sines on both commands and on the turn rate, with distinct
    /// phases per channel.
    MultiSine {
        duration: f64,
        mean: f64,
        amplitude: f64,
        periods: Vec<f64>,
        turn_amplitude: f64,
    },
    /// Both commands jump from `from` to `to` halfway through.
    Step { duration: f64, from: f64, to: f64 },
    Ramp { duration: f64, from: f64, to: f64 },
    Idle { duration: f64 },
    /// Thrust cut while the hull keeps rotating.
    Abort { duration: f64, turn_rate: f64 },
}

impl Segment {
    pub fn duration(&self) -> f64 {
        match self {
            Segment::Cruise { duration, .. }
            | Segment::MultiSine { duration, .. }
            | Segment::Step { duration, .. }
            | Segment::Ramp { duration, .. }
            | Segment::Idle { duration }
            | Segment::Abort { duration, .. } => *duration,
        }
    }

    /// Commands at time `s` into the segment.
    pub fn eval(&self, s: f64) -> Command {
        match self {
            Segment::Cruise {
                xi,
                differential,
                turn_rate,
                ..
            } => Command {
                xi_left: xi - differential / 2.0,
                xi_right: xi + differential / 2.0,
                turn_rate: *turn_rate,
            },
            Segment::MultiSine {
                mean,
                amplitude,
                periods,
                turn_amplitude,
                ..
            } => {
                let k = periods.len().max(1) as f64;
                let sum = |offset: f64| -> f64 {
                    periods
                        .iter()
                        .enumerate()
                        .map(|(i, p)| (TAU * s / p + offset * (i as f64 + 1.0)).sin())
                        .sum::<f64>()
                        / k
                };
                Command {
                    xi_left: mean + amplitude * sum(0.0),
                    xi_right: mean + amplitude * sum(2.1),
                    turn_rate: turn_amplitude * sum(4.3),
                }
            }
            Segment::Step {
                duration, from, to, ..
            } => {
                let xi = if s < duration / 2.0 { *from } else { *to };
                Command {
                    xi_left: xi,
                    xi_right: xi,
                    turn_rate: 0.0,
                }
            }
            Segment::Ramp { duration, from, to } => {
                let xi = from + (to - from) * (s / duration).clamp(0.0, 1.0);
                Command {
                    xi_left: xi,
                    xi_right: xi,
                    turn_rate: 0.0,
                }
            }
            Segment::Idle { .. } => Command::default(),
            Segment::Abort { turn_rate, .. } => Command {
                turn_rate: *turn_rate,
                ..Command::default()
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct MissionScript {
    pub segments: Vec<Segment>,
}

impl MissionScript {
    pub fn duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    /// Commands at mission time `t`; past the end the last segment is held.
    pub fn eval(&self, t: f64) -> Command {
        let mut start = 0.0;
        for (i, seg) in self.segments.iter().enumerate() {
            let end = start + seg.duration();
            if t < end || i + 1 == self.segments.len() {
                return seg.eval(t - start);
            }
            start = end;
        }
        Command::default()
    }

    /// Checks every segment and that commands stay within `[0, xi_max]`
    /// at the frame times.
    pub fn validate(&self, xi_max: f64, dt: f64) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::Config("mission script has no segments".into()));
        }
        for seg in &self.segments {
            if !(seg.duration() > 0.0) {
                return Err(Error::Config(format!("segment duration must be positive: {seg:?}")));
            }
            if let Segment::MultiSine { periods, .. } = seg {
                if periods.is_empty() || periods.iter().any(|p| !(*p > 0.0)) {
                    return Err(Error::Config("multi-sine periods must be positive".into()));
                }
            }
        }
        let frames = (self.duration() / dt).round() as usize;
        for k in 0..=frames {
            let t = k as f64 * dt;
            let c = self.eval(t);
            for xi in [c.xi_left, c.xi_right] {
                if !(0.0..=xi_max).contains(&xi) {
                    return Err(Error::Config(format!(
                        "command {xi:.3} at t = {t:.1} s is outside [0, {xi_max}]"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Persistently exciting profile: one multi-sine spanning `duration`
    /// with commands in `[0.1, 0.9] xi_max`.
    pub fn excitation(duration: f64, xi_max: f64) -> Self {
        Self {
            segments: vec![Segment::MultiSine {
                duration,
                mean: 0.5 * xi_max,
                amplitude: 0.4 * xi_max,
                periods: vec![7.0, 13.0, 29.0, 61.0],
                turn_amplitude: 0.3,
            }],
        }
    }

    /// A survey-like mission: cruise legs, turns, speed steps and ramps,
    /// with occasional idles and aborts.
    pub fn survey<R: Rng + ?Sized>(duration: f64, xi_max: f64, rng: &mut R) -> Self {
        let mut segments = Vec::new();
        let mut total = 0.0;
        let mut xi = rng.random_range(0.4..0.8) * xi_max;
        while total < duration {
            let len = rng.random_range(20.0..90.0_f64).min(duration - total).max(1.0);
            let roll: f64 = rng.random();
            let seg = if roll < 0.35 {
                Segment::Cruise {
                    duration: len,
                    xi,
                    differential: rng.random_range(-0.05..0.05) * xi_max,
                    turn_rate: 0.0,
                }
            } else if roll < 0.55 {
                Segment::Cruise {
                    duration: len.min(30.0),
                    xi,
                    differential: rng.random_range(-0.2..0.2) * xi_max,
                    turn_rate: rng.random_range(-0.25..0.25),
                }
            } else if roll < 0.7 {
                let to = rng.random_range(0.3..0.9) * xi_max;
                let s = Segment::Step {
                    duration: len,
                    from: xi,
                    to,
                };
                xi = to;
                s
            } else if roll < 0.85 {
                let to = rng.random_range(0.3..0.9) * xi_max;
                let s = Segment::Ramp {
                    duration: len,
                    from: xi,
                    to,
                };
                xi = to;
                s
            } else if roll < 0.95 {
                Segment::Idle {
                    duration: len.min(20.0),
                }
            } else {
                Segment::Abort {
                    duration: len.min(15.0),
                    turn_rate: rng.random_range(-0.2..0.2),
                }
            };
            total += seg.duration();
            segments.push(seg);
        }
        Self { segments }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn segments_follow_each_other() {
        let s = MissionScript {
            segments: vec![
                Segment::Idle { duration: 10.0 },
                Segment::Ramp {
                    duration: 10.0,
                    from: 0.0,
                    to: 50.0,
                },
                Segment::Step {
                    duration: 10.0,
                    from: 20.0,
                    to: 80.0,
                },
            ],
        };
        assert_eq!(s.duration(), 30.0);
        assert_eq!(s.eval(5.0).xi_left, 0.0);
        assert_eq!(s.eval(15.0).xi_right, 25.0);
        assert_eq!(s.eval(22.0).xi_left, 20.0);
        assert_eq!(s.eval(27.0).xi_left, 80.0);
        assert_eq!(s.eval(100.0).xi_left, 80.0);
    }

    #[test]
    fn command_ceiling_is_enforced() {
        let s = MissionScript {
            segments: vec![Segment::Cruise {
                duration: 5.0,
                xi: 90.0,
                differential: 30.0,
                turn_rate: 0.0,
            }],
        };
        assert!(s.validate(100.0, 0.1).unwrap_err().is_config());
        assert!(s.validate(120.0, 0.1).is_ok());
    }

    #[test]
    fn generated_scripts_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let s = MissionScript::survey(600.0, 100.0, &mut rng);
            assert!(s.duration() >= 600.0);
            s.validate(100.0, 0.1).unwrap();
        }
        MissionScript::excitation(600.0, 100.0).validate(100.0, 0.1).unwrap();
    }

    #[test]
    fn scripts_parse_from_toml() {
        let text = r#"
            [[segments]]
            kind = "cruise"
            duration = 30.0
            xi = 60.0

            [[segments]]
            kind = "abort"
            duration = 5.0
            turn_rate = 0.1
        "#;
        let s: MissionScript = toml::from_str(text).unwrap();
        assert_eq!(s.segments.len(), 2);
        assert_eq!(s.eval(31.0).turn_rate, 0.1);
    }
}
