//! Replay, persistence and metric bookkeeping across the stream engine.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use surge_ident::sim::{simulate, MissionScript, SimConfig};
use surge_ident::stream::engine::metrics_from_records;
use surge_ident::stream::{
    load_all, resume_or_new, run_log, Channel, Engine, Gate, Message, Method, MissionLog,
    PredictionRecord, SnapshotTarget,
};
use surge_ident::RunConfig;

fn survey_log(seconds: f64, seed: u64, sim: &SimConfig) -> (RunConfig, MissionLog) {
    let cfg = RunConfig::default();
    let vehicle = cfg.fleet.generate().unwrap().remove(0);
    let script = MissionScript::survey(seconds, 100.0, &mut ChaCha8Rng::seed_from_u64(seed));
    let run = simulate(&vehicle, &script, sim, "m00", seed).unwrap();
    (cfg, run.log)
}

#[test]
fn online_metrics_match_recomputation_from_records() {
    let (cfg, log) = survey_log(300.0, 1, &SimConfig::default());
    let mut engine = Engine::new(cfg.engine).unwrap();
    let mut records = Vec::new();
    run_log(&mut engine, &log, None, |r| records.push(*r)).unwrap();
    let replayed = metrics_from_records(&records);
    assert_eq!(replayed.skipped_frames, engine.metrics.skipped_frames);
    for m in Method::ALL {
        let (a, b) = (engine.metrics.get(m), replayed.get(m));
        assert_eq!(a.count, b.count, "{m}");
        assert!((a.mae() - b.mae()).abs() < 1e-12, "{m}");
        assert!((a.mse() - b.mse()).abs() < 1e-12, "{m}");
    }
}

#[test]
fn csv_records_reproduce_metrics() {
    let (cfg, log) = survey_log(120.0, 2, &SimConfig::default());
    let mut engine = Engine::new(cfg.engine).unwrap();
    let mut lines = Vec::new();
    run_log(&mut engine, &log, None, |r| lines.push(r.to_csv())).unwrap();
    let parsed: Vec<PredictionRecord> = lines
        .iter()
        .map(|l| PredictionRecord::from_csv(l).unwrap())
        .collect();
    let replayed = metrics_from_records(&parsed);
    for m in Method::ALL {
        assert!((replayed.mae(m) - engine.metrics.mae(m)).abs() < 1e-12);
    }
}

#[test]
fn resuming_from_disk_reproduces_the_unsplit_run() {
    let (cfg, log) = survey_log(240.0, 3, &SimConfig::default());
    let mut whole = Engine::new(cfg.engine.clone()).unwrap();
    let mut unsplit = Vec::new();
    run_log(&mut whole, &log, None, |r| unsplit.push(*r)).unwrap();

    let at = 123.45;
    let head = MissionLog {
        messages: log.messages.iter().filter(|m| m.timestamp < at).copied().collect(),
        ..log.clone()
    };
    let tail = MissionLog {
        messages: log.messages.iter().filter(|m| m.timestamp >= at).copied().collect(),
        ..log.clone()
    };
    let dir = tempfile::tempdir().unwrap();
    let target = SnapshotTarget {
        dir: dir.path(),
        vehicle_id: "heron-01",
        run_id: "m00",
    };
    let mut split = Vec::new();
    let (mut first, from) = resume_or_new(cfg.engine.clone(), dir.path(), "heron-01").unwrap();
    assert!(from.is_none());
    run_log(&mut first, &head, Some(target), |r| split.push(*r)).unwrap();
    let (mut second, from) = resume_or_new(cfg.engine, dir.path(), "heron-01").unwrap();
    assert!(from.is_some());
    let summary = run_log(&mut second, &tail, None, |r| split.push(*r)).unwrap();
    assert!(summary.resumed);

    assert_eq!(split.len(), unsplit.len());
    let differing = split.iter().zip(&unsplit).filter(|(a, b)| a != b).count();
    assert_eq!(differing, 0);
    assert_eq!(second.metrics, whole.metrics);
}

#[test]
fn a_later_log_starting_over_is_a_new_mission() {
    let (cfg, log) = survey_log(60.0, 4, &SimConfig::default());
    let mut engine = Engine::new(cfg.engine).unwrap();
    let first = run_log(&mut engine, &log, None, |_| {}).unwrap();
    assert!(!first.resumed);
    let before = engine.metrics.skipped_frames;
    let again = run_log(&mut engine, &log, None, |_| {}).unwrap();
    assert!(!again.resumed);
    // the new mission is primed again, so one more frame is excluded
    assert_eq!(engine.metrics.skipped_frames, before + 1);
    assert!(engine.dynamic.elapsed > 1.9 * log.duration() - 1.0);
}

#[test]
fn snapshots_follow_the_stream_clock() {
    let (mut cfg, log) = survey_log(650.0, 5, &SimConfig::default());
    cfg.engine.snapshot_period = 300.0;
    let dir = tempfile::tempdir().unwrap();
    let mut engine = Engine::new(cfg.engine).unwrap();
    let target = SnapshotTarget {
        dir: dir.path(),
        vehicle_id: "heron-01",
        run_id: "m00",
    };
    let summary = run_log(&mut engine, &log, Some(target), |_| {}).unwrap();
    assert_eq!(summary.snapshots.len(), 3);
    let snaps = load_all(dir.path(), "heron-01").unwrap();
    let times: Vec<f64> = snaps.iter().map(|(_, s)| s.stream_time()).collect();
    assert!((times[0] - 300.0).abs() < 0.11 && (times[1] - 600.0).abs() < 0.11);
    assert!(times.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn jittered_thrusters_still_form_every_frame() {
    let sim = SimConfig {
        jitter: 0.05,
        ..Default::default()
    };
    let (cfg, log) = survey_log(60.0, 6, &sim);
    let mut gate = Gate::new(cfg.engine.window, cfg.engine.quantum);
    let frames = log.messages.iter().filter_map(|m| gate.push(m)).count();
    assert_eq!(frames, 600);
    assert_eq!(gate.out_of_order, 0);
}

#[test]
fn stale_speed_leaves_a_prediction_only_frame() {
    let msgs = [
        Message::new(0.0, Channel::Velocity, 1.02),
        Message::new(0.5, Channel::Heading, 0.1),
        Message::new(0.5, Channel::ThrustLeft, 40.0),
        Message::new(0.55, Channel::ThrustRight, 40.0),
    ];
    let mut gate = Gate::new(0.2, 0.05);
    let frames: Vec<_> = msgs.iter().filter_map(|m| gate.push(m)).collect();
    assert_eq!(frames.len(), 1);
    assert_eq!(frames[0].v_meas, None);
    assert_eq!(frames[0].t, 0.55);
}

#[test]
fn explicit_heading_rate_wins_over_derived_rate() {
    let sim = SimConfig {
        emit_heading_rate: true,
        ..Default::default()
    };
    let cfg = RunConfig::default();
    let vehicle = cfg.fleet.generate().unwrap().remove(0);
    let script = MissionScript::excitation(30.0, 100.0);
    let run = simulate(&vehicle, &script, &sim, "m00", 0).unwrap();
    let mut gate = Gate::new(0.2, 0.05);
    let frames: Vec<_> = run.log.messages.iter().filter_map(|m| gate.push(m)).collect();
    for (f, truth) in frames.iter().zip(&run.truth) {
        assert_eq!(f.thetadot, truth.thetadot);
    }
}
