//! The per-frame estimation engine: runs the three estimators and both
//! fusion rules on each measurement frame and accumulates error metrics.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gate::{HeadingTracker, MeasurementFrame};
use super::metrics::{Method, MetricsAccumulator};
use crate::aid::{AidConfig, AidFrame, AidState};
use crate::ensemble::{EnsembleConfig, EnsembleState};
use crate::error::{Error, Result};
use crate::model::ScaleMap;
use crate::rls::{MapInputs, RlsConfig, RlsState};
use crate::rnn::{RnnConfig, RnnModel};

/// Signals fed to the recurrent network as its exogenous input vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RnnInput {
    /// Left command divided by the command ceiling.
    XiLeft,
    XiRight,
    SinHeading,
    CosHeading,
    HeadingRate,
    Bias,
}

impl RnnInput {
    pub fn default_set() -> Vec<RnnInput> {
        vec![
            RnnInput::XiLeft,
            RnnInput::XiRight,
            RnnInput::SinHeading,
            RnnInput::CosHeading,
        ]
    }

    fn eval(&self, f: &MeasurementFrame, xi_max: f64) -> f64 {
        match self {
            RnnInput::XiLeft => f.xi_left / xi_max,
            RnnInput::XiRight => f.xi_right / xi_max,
            RnnInput::SinHeading => f.theta.sin(),
            RnnInput::CosHeading => f.theta.cos(),
            RnnInput::HeadingRate => f.thetadot,
            RnnInput::Bias => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorSet {
    pub aid: bool,
    pub rnn: bool,
    pub rls: bool,
}

impl Default for EstimatorSet {
    fn default() -> Self {
        Self {
            aid: true,
            rnn: true,
            rls: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EngineConfig {
    /// Integration step of the estimators, equal to the nominal frame period.
    pub dt: f64,
    /// Maximum timestamp spread inside one frame (s).
    pub window: f64,
    /// Velocity quantization step (m/s).
    pub quantum: f64,
    /// Stream time between parameter snapshots (s).
    pub snapshot_period: f64,
    pub v_max: f64,
    pub xi_max: f64,
    /// Seed of the recurrent network's initial weights.
    pub seed: u64,
    pub rnn_inputs: Vec<RnnInput>,
    pub enabled: EstimatorSet,
    pub aid: AidConfig,
    pub rnn: RnnConfig,
    pub rls: RlsConfig,
    pub ensemble: EnsembleConfig,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            dt: 0.1,
            window: 0.2,
            quantum: 0.05,
            snapshot_period: 300.0,
            v_max: 3.0,
            xi_max: 100.0,
            seed: 0,
            rnn_inputs: RnnInput::default_set(),
            enabled: EstimatorSet::default(),
            aid: AidConfig::default(),
            rnn: RnnConfig::default(),
            rls: RlsConfig::default(),
            ensemble: EnsembleConfig::default(),
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dt", self.dt),
            ("window", self.window),
            ("snapshot_period", self.snapshot_period),
            ("v_max", self.v_max),
            ("xi_max", self.xi_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.quantum >= 0.0) {
            return Err(Error::Config(format!("quantum must be >= 0, got {}", self.quantum)));
        }
        self.rnn.validate()?;
        if self.rnn.m != self.rnn_inputs.len() {
            return Err(Error::Config(format!(
                "rnn.m = {} but {} rnn inputs are selected",
                self.rnn.m,
                self.rnn_inputs.len()
            )));
        }
        self.aid.gains.validate()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LearningMode {
    /// All estimators and the fusion weights adapt.
    #[default]
    Online,
    /// Estimator parameters are held; only the fusion weights adapt.
    Frozen,
}

/// Stream-side state that is not a learned parameter.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DynamicState {
    /// False until the first frame of a mission has seeded the observers.
    pub primed: bool,
    /// Recurrent state estimate (scaled).
    pub rnn_x: f64,
    /// Network input of the previous frame, awaiting this frame's target.
    pub rnn_u_prev: Option<Vec<f64>>,
    pub heading: HeadingTracker,
    pub last_t: Option<f64>,
    pub mission_start_t: f64,
    /// Accumulated stream time of earlier missions.
    pub elapsed_offset: f64,
    /// Accumulated stream time including the current mission.
    pub elapsed: f64,
    pub next_snapshot_at: f64,
}

/// Per-frame output of the engine.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PredictionRecord {
    pub t: f64,
    pub v_meas: Option<f64>,
    pub aid: Option<f64>,
    pub rnn: Option<f64>,
    pub rls: Option<f64>,
    pub ave: Option<f64>,
    pub we: Option<f64>,
    /// Start-up or skipped frame, excluded from the metrics.
    pub excluded: bool,
}

impl PredictionRecord {
    pub const CSV_HEADER: &'static str =
        "t,v_meas,v_aid,v_rnn,v_rls,v_ave,v_we,err_aid,err_rnn,err_rls,err_ave,err_we,excluded";

    pub fn get(&self, method: Method) -> Option<f64> {
        match method {
            Method::Aid => self.aid,
            Method::Rnn => self.rnn,
            Method::Rls => self.rls,
            Method::Ave => self.ave,
            Method::We => self.we,
        }
    }

    pub fn abs_error(&self, method: Method) -> Option<f64> {
        Some((self.get(method)? - self.v_meas?).abs())
    }

    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
        let mut s = format!("{:?},{}", self.t, opt(self.v_meas));
        for m in Method::ALL {
            let _ = write!(s, ",{}", opt(self.get(m)));
        }
        for m in Method::ALL {
            let _ = write!(s, ",{}", opt(self.abs_error(m)));
        }
        let _ = write!(s, ",{}", self.excluded as u8);
        s
    }

    pub fn from_csv(line: &str) -> Result<Self> {
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != 13 {
            return Err(Error::Log(format!("expected 13 prediction fields: '{line}'")));
        }
        let opt = |s: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse()
                    .map(Some)
                    .map_err(|_| Error::Log(format!("bad number '{s}'")))
            }
        };
        Ok(Self {
            t: opt(fields[0])?.ok_or_else(|| Error::Log("missing time".into()))?,
            v_meas: opt(fields[1])?,
            aid: opt(fields[2])?,
            rnn: opt(fields[3])?,
            rls: opt(fields[4])?,
            ave: opt(fields[5])?,
            we: opt(fields[6])?,
            excluded: fields[12] == "1",
        })
    }
}

/// Recomputes metrics from a sequence of prediction records.
pub fn metrics_from_records<'a, I>(records: I) -> MetricsAccumulator
where
    I: IntoIterator<Item = &'a PredictionRecord>,
{
    let mut acc = MetricsAccumulator::default();
    for r in records {
        if r.excluded {
            acc.skipped_frames += 1;
            continue;
        }
        let Some(meas) = r.v_meas else { continue };
        for m in Method::ALL {
            if let Some(p) = r.get(m).filter(|p| p.is_finite()) {
                acc.push(m, p, meas);
            }
        }
    }
    acc
}

#[derive(Debug, Clone)]
pub struct Engine {
    pub config: EngineConfig,
    pub mode: LearningMode,
    scale: ScaleMap,
    pub aid: AidState,
    pub rnn: RnnModel,
    pub rls: RlsState,
    pub ensemble: EnsembleState,
    pub dynamic: DynamicState,
    pub metrics: MetricsAccumulator,
}

impl Engine {
    pub fn new(config: EngineConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let rnn = RnnModel::new(config.rnn.clone(), &mut rng)?;
        let aid = AidState::new(&config.aid)?;
        let rls = RlsState::new(&config.rls, config.xi_max)?;
        let ensemble = EnsembleState::new(&config.ensemble)?;
        Self::from_parts(config, aid, rnn, rls, ensemble)
    }

    /// Assembles an engine around existing estimator states.
    pub fn from_parts(
        config: EngineConfig,
        aid: AidState,
        rnn: RnnModel,
        rls: RlsState,
        ensemble: EnsembleState,
    ) -> Result<Self> {
        config.validate()?;
        if rnn.weights.m != config.rnn_inputs.len() {
            return Err(Error::DimensionMismatch {
                expected: config.rnn_inputs.len(),
                got: rnn.weights.m,
            });
        }
        let scale = ScaleMap::new(config.v_max)?;
        let dynamic = DynamicState {
            next_snapshot_at: config.snapshot_period,
            ..Default::default()
        };
        Ok(Self {
            config,
            mode: LearningMode::Online,
            scale,
            aid,
            rnn,
            rls,
            ensemble,
            dynamic,
            metrics: MetricsAccumulator::default(),
        })
    }

    pub fn with_mode(mut self, mode: LearningMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn scale(&self) -> &ScaleMap {
        &self.scale
    }

    /// Drops the stream-side state so that the next frame starts a new
    /// mission. Learned parameters are kept.
    pub fn start_mission(&mut self) -> Result<()> {
        let d = &mut self.dynamic;
        d.primed = false;
        d.rnn_u_prev = None;
        d.heading = HeadingTracker::default();
        d.last_t = None;
        if self.config.ensemble.reset_per_mission {
            self.ensemble = EnsembleState::new(&self.config.ensemble)?;
        }
        Ok(())
    }

    /// Whether a stream whose first message is at `t0` continues the
    /// current mission.
    pub fn continues_at(&self, t0: f64) -> bool {
        self.dynamic.primed
            && self
                .dynamic
                .last_t
                .is_some_and(|last| t0 > last && t0 - last <= self.config.dt + self.config.window)
    }

    fn rnn_inputs(&self, f: &MeasurementFrame) -> Vec<f64> {
        self.config
            .rnn_inputs
            .iter()
            .map(|s| s.eval(f, self.config.xi_max))
            .collect()
    }

    /// Processes one frame: predictions from the pre-update estimators, then
    /// learning against the frame's measurement, then metrics.
    pub fn process(&mut self, frame: &MeasurementFrame) -> Result<PredictionRecord> {
        let learn = self.mode == LearningMode::Online;
        let meas = frame.v_meas.filter(|v| v.is_finite());
        let priming = !self.dynamic.primed;
        if priming {
            let v0 = meas.unwrap_or(0.0);
            self.aid.v_hat = v0;
            self.dynamic.rnn_x = self.scale.scale(v0);
            self.dynamic.rnn_u_prev = None;
            self.dynamic.mission_start_t = frame.t;
            self.dynamic.elapsed_offset = self.dynamic.elapsed;
            self.dynamic.primed = true;
        }
        let mut skipped = false;

        let aid = if self.config.enabled.aid {
            let aid_frame = AidFrame {
                v_meas: frame.v_meas,
                thetadot: frame.thetadot,
                xi_left: frame.xi_left,
                xi_right: frame.xi_right,
            };
            let before = self.aid.skipped;
            let v = if learn {
                self.aid.update(&aid_frame, self.config.dt)?
            } else {
                self.aid.observe(&aid_frame, self.config.dt)?
            };
            skipped |= self.aid.skipped != before;
            Some(v)
        } else {
            None
        };

        let rnn = if self.config.enabled.rnn {
            let u = self.rnn_inputs(frame);
            let pred = match self.dynamic.rnn_u_prev.take() {
                Some(u_prev) => {
                    let target = meas.filter(|_| learn).map(|v| self.scale.scale(v));
                    match self.rnn.predict_and_learn(self.dynamic.rnn_x, &u_prev, target)? {
                        Some(x) => {
                            self.dynamic.rnn_x = x;
                            Some(self.scale.unscale(x))
                        }
                        None => {
                            skipped = true;
                            None
                        }
                    }
                }
                None => Some(self.scale.unscale(self.dynamic.rnn_x)),
            };
            if u.iter().all(|v| v.is_finite()) {
                self.dynamic.rnn_u_prev = Some(u);
            }
            pred
        } else {
            None
        };

        let rls = if self.config.enabled.rls {
            let inp = MapInputs {
                xi_left: frame.xi_left,
                xi_right: frame.xi_right,
                theta: frame.theta,
                thetadot: frame.thetadot,
            };
            let before = self.rls.skipped;
            let v = self.rls.update(&inp, meas.filter(|_| learn));
            skipped |= self.rls.skipped != before || v.is_none();
            v
        } else {
            None
        };

        let present: Vec<f64> = [aid, rnn, rls].into_iter().flatten().collect();
        let ave = (!present.is_empty()).then(|| present.iter().sum::<f64>() / present.len() as f64);
        let we = match (aid, rnn, rls) {
            (Some(a), Some(b), Some(c)) => {
                let target = meas.filter(|_| !priming);
                Some(self.ensemble.fuse_update(a, b, c, target)).filter(|v| v.is_finite())
            }
            _ => None,
        };

        let record = PredictionRecord {
            t: frame.t,
            v_meas: frame.v_meas,
            aid,
            rnn,
            rls,
            ave,
            we,
            excluded: priming || skipped,
        };
        if record.excluded {
            self.metrics.skipped_frames += 1;
        } else if let Some(v) = meas {
            for m in Method::ALL {
                if let Some(p) = record.get(m).filter(|p| p.is_finite()) {
                    self.metrics.push(m, p, v);
                }
            }
        }

        let d = &mut self.dynamic;
        d.last_t = Some(frame.t);
        d.elapsed = d.elapsed_offset + (frame.t - d.mission_start_t);
        Ok(record)
    }

    /// True when the stream time has reached the next snapshot boundary;
    /// advances the boundary past the current time.
    pub fn snapshot_due(&mut self) -> bool {
        let d = &mut self.dynamic;
        if d.elapsed + 1e-9 < d.next_snapshot_at {
            return false;
        }
        while d.next_snapshot_at <= d.elapsed + 1e-9 {
            d.next_snapshot_at += self.config.snapshot_period;
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(t: f64, v: Option<f64>) -> MeasurementFrame {
        MeasurementFrame {
            t,
            v_meas: v,
            theta: 0.3,
            thetadot: 0.0,
            xi_left: 50.0,
            xi_right: 50.0,
        }
    }

    #[test]
    fn first_frame_primes_and_is_excluded() {
        let mut e = Engine::new(EngineConfig::default()).unwrap();
        let r = e.process(&frame(0.0, Some(1.0))).unwrap();
        assert!(r.excluded);
        assert_eq!(r.aid, Some(1.0));
        assert_eq!(e.metrics.skipped_frames, 1);
        let r = e.process(&frame(0.1, Some(1.0))).unwrap();
        assert!(!r.excluded);
        assert_eq!(e.metrics.mae(Method::Aid).is_finite(), true);
    }

    #[test]
    fn average_is_mean_of_present_components() {
        let mut e = Engine::new(EngineConfig::default()).unwrap();
        e.process(&frame(0.0, Some(1.0))).unwrap();
        let r = e.process(&frame(0.1, Some(1.0))).unwrap();
        let mean = (r.aid.unwrap() + r.rnn.unwrap() + r.rls.unwrap()) / 3.0;
        assert!((r.ave.unwrap() - mean).abs() < 1e-15);
    }

    #[test]
    fn rnn_mismatch_is_rejected() {
        let mut cfg = EngineConfig::default();
        cfg.rnn_inputs.pop();
        assert!(Engine::new(cfg).unwrap_err().is_config());
    }

    #[test]
    fn csv_round_trip() {
        let r = PredictionRecord {
            t: 1.5,
            v_meas: Some(0.1),
            aid: Some(0.30000000000000004),
            rnn: None,
            rls: Some(-2e-9),
            ave: Some(1.0),
            we: None,
            excluded: true,
        };
        assert_eq!(PredictionRecord::from_csv(&r.to_csv()).unwrap(), r);
        assert_eq!(r.to_csv().split(',').count(), 13);
    }

    #[test]
    fn snapshot_boundaries_advance() {
        let mut cfg = EngineConfig::default();
        cfg.snapshot_period = 1.0;
        let mut e = Engine::new(cfg).unwrap();
        let mut due = Vec::new();
        for k in 0..=25 {
            let t = k as f64 * 0.1;
            e.process(&frame(t, Some(0.5))).unwrap();
            if e.snapshot_due() {
                due.push(k);
            }
        }
        assert_eq!(due, vec![10, 20]);
    }

    #[test]
    fn mission_restart_keeps_elapsed_time() {
        let mut e = Engine::new(EngineConfig::default()).unwrap();
        for k in 0..11 {
            e.process(&frame(100.0 + k as f64 * 0.1, Some(0.5))).unwrap();
        }
        assert!((e.dynamic.elapsed - 1.0).abs() < 1e-9);
        assert!(e.continues_at(101.1));
        assert!(!e.continues_at(5.0));
        e.start_mission().unwrap();
        e.process(&frame(0.0, Some(0.5))).unwrap();
        e.process(&frame(0.5, Some(0.5))).unwrap();
        assert!((e.dynamic.elapsed - 1.5).abs() < 1e-9);
    }
}
