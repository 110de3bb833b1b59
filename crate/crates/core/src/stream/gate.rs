//! Staleness gate: assembles asynchronous messages into measurement frames.
//!
//! A frame is emitted once heading and both thruster commands have each been
//! refreshed since the previous frame and their timestamps lie within the
//! staleness window of one another. The velocity measurement is attached only
//! when a fresh one is also inside the window; otherwise the frame is
//! prediction-only.

use std::f64::consts::{PI, TAU};

use super::message::{Channel, Message};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementFrame {
    /// Newest input timestamp of the frame.
    pub t: f64,
    /// Quantized measured speed, when fresh.
    pub v_meas: Option<f64>,
    pub theta: f64,
    pub thetadot: f64,
    pub xi_left: f64,
    pub xi_right: f64,
}

/// Rounds to the nearest multiple of `step`, ties away from zero.
pub fn quantize_velocity(v: f64, step: f64) -> f64 {
    if !(step > 0.0) {
        return v;
    }
    let k = (v / step).round();
    let inv = 1.0 / step;
    // divide by an integral reciprocal when possible so 0.15 prints as 0.15
    if (inv - inv.round()).abs() < 1e-9 {
        k / inv.round()
    } else {
        k * step
    }
}

/// Wraps an angle difference into `(-pi, pi]`.
pub fn wrap_angle(d: f64) -> f64 {
    let r = (d + PI).rem_euclid(TAU) - PI;
    if r == -PI {
        PI
    } else {
        r
    }
}

/// Heading-rate reconstruction from consecutive heading messages.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HeadingTracker {
    pub last: Option<(f64, f64)>,
    pub rate: f64,
}

impl HeadingTracker {
    pub fn push(&mut self, t: f64, heading: f64) {
        if let Some((t0, h0)) = self.last {
            if t > t0 && heading.is_finite() && h0.is_finite() {
                self.rate = wrap_angle(heading - h0) / (t - t0);
            }
        }
        self.last = Some((t, heading));
    }
}

const REQUIRED: [Channel; 3] = [Channel::Heading, Channel::ThrustLeft, Channel::ThrustRight];

#[derive(Debug, Clone)]
pub struct Gate {
    window: f64,
    quantum: f64,
    latest: [Option<(f64, f64)>; 5],
    fresh: [bool; 5],
    pub heading: HeadingTracker,
    /// Messages rejected for arriving out of order on their channel.
    pub out_of_order: usize,
}

impl Gate {
    pub fn new(window: f64, quantum: f64) -> Self {
        Self {
            window,
            quantum,
            latest: [None; 5],
            fresh: [false; 5],
            heading: HeadingTracker::default(),
            out_of_order: 0,
        }
    }

    pub fn with_heading(mut self, heading: HeadingTracker) -> Self {
        self.heading = heading;
        self
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn push(&mut self, msg: &Message) -> Option<MeasurementFrame> {
        let idx = msg.channel.index();
        if let Some((t_prev, _)) = self.latest[idx] {
            if msg.timestamp < t_prev {
                self.out_of_order += 1;
                return None;
            }
        }
        self.latest[idx] = Some((msg.timestamp, msg.value));
        self.fresh[idx] = true;
        if msg.channel == Channel::Heading {
            self.heading.push(msg.timestamp, msg.value);
        }
        self.try_emit()
    }

    fn get(&self, c: Channel) -> Option<(f64, f64)> {
        self.latest[c.index()]
    }

    fn try_emit(&mut self) -> Option<MeasurementFrame> {
        if !REQUIRED.iter().all(|c| self.fresh[c.index()]) {
            return None;
        }
        let stamps: Vec<f64> = REQUIRED.iter().map(|c| self.get(*c).unwrap().0).collect();
        let newest = stamps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let oldest = stamps.iter().cloned().fold(f64::INFINITY, f64::min);
        if newest - oldest > self.window {
            return None;
        }
        for c in REQUIRED {
            self.fresh[c.index()] = false;
        }

        let within = |c: Channel, fresh: bool| -> Option<f64> {
            self.get(c)
                .filter(|(t, _)| fresh && (newest - t).abs() <= self.window)
                .map(|(_, v)| v)
        };
        let v_meas = within(Channel::Velocity, self.fresh[Channel::Velocity.index()])
            .map(|v| quantize_velocity(v, self.quantum));
        let explicit_rate = within(Channel::HeadingRate, self.fresh[Channel::HeadingRate.index()]);
        if v_meas.is_some() {
            self.fresh[Channel::Velocity.index()] = false;
        }
        self.fresh[Channel::HeadingRate.index()] = false;

        Some(MeasurementFrame {
            t: newest,
            v_meas,
            theta: self.get(Channel::Heading).unwrap().1,
            thetadot: explicit_rate.unwrap_or(self.heading.rate),
            xi_left: self.get(Channel::ThrustLeft).unwrap().1,
            xi_right: self.get(Channel::ThrustRight).unwrap().1,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msg(t: f64, c: Channel, v: f64) -> Message {
        Message::new(t, c, v)
    }

    #[test]
    fn quantization_examples() {
        assert_eq!(quantize_velocity(0.237, 0.05), 0.25);
        assert_eq!(quantize_velocity(0.0, 0.05), 0.0);
        assert_eq!(quantize_velocity(0.125, 0.05), 0.15);
        assert_eq!(quantize_velocity(-0.125, 0.05), -0.15);
        assert_eq!(quantize_velocity(1.01, 0.05), 1.0);
    }

    #[test]
    fn inputs_within_window_complete_a_frame() {
        let mut g = Gate::new(0.2, 0.05);
        assert!(g.push(&msg(0.0, Channel::Heading, 1.0)).is_none());
        assert!(g.push(&msg(0.10, Channel::ThrustLeft, 30.0)).is_none());
        let f = g.push(&msg(0.15, Channel::ThrustRight, 40.0)).unwrap();
        assert_eq!(f.t, 0.15);
        assert_eq!((f.xi_left, f.xi_right, f.theta), (30.0, 40.0, 1.0));
        assert_eq!(f.v_meas, None);
    }

    #[test]
    fn spread_beyond_window_waits() {
        let mut g = Gate::new(0.2, 0.05);
        g.push(&msg(0.0, Channel::Heading, 1.0));
        g.push(&msg(0.25, Channel::ThrustLeft, 30.0));
        assert!(g.push(&msg(0.25, Channel::ThrustRight, 40.0)).is_none());
        // a heading refresh brings the set back inside the window
        let f = g.push(&msg(0.3, Channel::Heading, 1.1)).unwrap();
        assert_eq!(f.t, 0.3);
    }

    #[test]
    fn stale_velocity_gives_prediction_only_frame() {
        let mut g = Gate::new(0.2, 0.05);
        g.push(&msg(0.0, Channel::Velocity, 1.0));
        g.push(&msg(0.5, Channel::Heading, 0.0));
        g.push(&msg(0.5, Channel::ThrustLeft, 10.0));
        let f = g.push(&msg(0.5, Channel::ThrustRight, 10.0)).unwrap();
        assert_eq!(f.v_meas, None);

        g.push(&msg(0.6, Channel::Velocity, 1.013));
        g.push(&msg(0.6, Channel::Heading, 0.0));
        g.push(&msg(0.6, Channel::ThrustLeft, 10.0));
        let f = g.push(&msg(0.6, Channel::ThrustRight, 10.0)).unwrap();
        assert_eq!(f.v_meas, Some(1.0));
    }

    #[test]
    fn velocity_is_consumed_once() {
        let mut g = Gate::new(0.2, 0.05);
        g.push(&msg(0.0, Channel::Velocity, 1.0));
        for t in [0.0, 0.1] {
            g.push(&msg(t, Channel::Heading, 0.0));
            g.push(&msg(t, Channel::ThrustLeft, 1.0));
            let f = g.push(&msg(t, Channel::ThrustRight, 1.0)).unwrap();
            assert_eq!(f.v_meas.is_some(), t == 0.0);
        }
    }

    #[test]
    fn heading_rate_is_differenced_with_wraparound() {
        let mut g = Gate::new(0.2, 0.05);
        g.push(&msg(0.0, Channel::Heading, TAU - 0.05));
        g.push(&msg(0.1, Channel::Heading, 0.05));
        assert!((g.heading.rate - 1.0).abs() < 1e-9);
        g.push(&msg(0.1, Channel::ThrustLeft, 1.0));
        let f = g.push(&msg(0.1, Channel::ThrustRight, 1.0)).unwrap();
        assert!((f.thetadot - 1.0).abs() < 1e-9);
    }

    #[test]
    fn explicit_heading_rate_takes_precedence() {
        let mut g = Gate::new(0.2, 0.05);
        g.push(&msg(0.0, Channel::HeadingRate, -0.3));
        g.push(&msg(0.0, Channel::Heading, 0.0));
        g.push(&msg(0.0, Channel::ThrustLeft, 1.0));
        let f = g.push(&msg(0.0, Channel::ThrustRight, 1.0)).unwrap();
        assert_eq!(f.thetadot, -0.3);
    }

    #[test]
    fn out_of_order_messages_are_dropped() {
        let mut g = Gate::new(0.2, 0.05);
        g.push(&msg(1.0, Channel::Heading, 0.0));
        g.push(&msg(0.5, Channel::Heading, 3.0));
        assert_eq!(g.out_of_order, 1);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI / 2.0) + PI / 2.0).abs() < 1e-12);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
    }
}
