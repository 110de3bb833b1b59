//! Replays a mission log through the gate and the engine, writing periodic
//! and final snapshots.

use std::path::{Path, PathBuf};

use super::engine::{Engine, EngineConfig, PredictionRecord};
use super::gate::Gate;
use super::message::MissionLog;
use super::snapshot::load_latest;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SessionSummary {
    pub frames: usize,
    /// The log continued the mission held in the engine's stream state.
    pub resumed: bool,
    pub snapshots: Vec<PathBuf>,
    pub corrupt_lines: usize,
    pub out_of_order: usize,
}

/// Where and under which identifiers snapshots are written.
#[derive(Debug, Clone, Copy)]
pub struct SnapshotTarget<'a> {
    pub dir: &'a Path,
    pub vehicle_id: &'a str,
    pub run_id: &'a str,
}

/// Runs every message of `log` through `engine`, passing each prediction to
/// `sink`. Stream state carries over when the log continues the engine's
/// current mission; otherwise a new mission is started.
pub fn run_log<F>(
    engine: &mut Engine,
    log: &MissionLog,
    target: Option<SnapshotTarget<'_>>,
    mut sink: F,
) -> Result<SessionSummary>
where
    F: FnMut(&PredictionRecord),
{
    let mut summary = SessionSummary {
        corrupt_lines: log.corrupt_lines,
        ..Default::default()
    };
    let Some(first) = log.messages.first() else {
        return Ok(summary);
    };
    summary.resumed = engine.continues_at(first.timestamp);
    let mut gate = Gate::new(engine.config.window, engine.config.quantum);
    if summary.resumed {
        gate = gate.with_heading(engine.dynamic.heading);
    } else {
        engine.start_mission()?;
    }

    for msg in &log.messages {
        let Some(frame) = gate.push(msg) else { continue };
        let record = engine.process(&frame)?;
        engine.dynamic.heading = gate.heading;
        summary.frames += 1;
        sink(&record);
        if engine.snapshot_due() {
            if let Some(t) = target {
                summary
                    .snapshots
                    .push(engine.snapshot(t.vehicle_id, t.run_id).save(t.dir)?);
            }
        }
    }
    engine.dynamic.heading = gate.heading;
    if let Some(t) = target {
        summary
            .snapshots
            .push(engine.snapshot(t.vehicle_id, t.run_id).save(t.dir)?);
    }
    summary.out_of_order = gate.out_of_order;
    Ok(summary)
}

/// Engine restored from the vehicle's latest snapshot in `dir`, or a fresh
/// one when there is none.
pub fn resume_or_new(
    config: EngineConfig,
    dir: &Path,
    vehicle_id: &str,
) -> Result<(Engine, Option<PathBuf>)> {
    match load_latest(dir, vehicle_id)? {
        Some((path, snap)) => Ok((Engine::from_snapshot(config, &snap)?, Some(path))),
        None => Ok((Engine::new(config)?, None)),
    }
}
