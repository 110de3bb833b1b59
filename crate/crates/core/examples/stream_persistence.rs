//! Processes a mission in two pieces with a snapshot in between and shows
//! that the resumed run picks up where the first one stopped.

use surge_ident::sim::{simulate_missions, MissionPlan};
use surge_ident::stream::{resume_or_new, run_log, Method, MissionLog, SnapshotTarget};
use surge_ident::RunConfig;

fn main() -> surge_ident::Result<()> {
    let cfg = RunConfig::default();
    let vehicle = cfg.fleet.generate()?.remove(0);
    let plan = MissionPlan {
        count: 1,
        duration: 600.0,
    };
    let log = simulate_missions(&vehicle, &plan, &cfg.sim)?.remove(0).log;
    let half = |keep: fn(f64) -> bool| MissionLog {
        messages: log.messages.iter().filter(|m| keep(m.timestamp)).copied().collect(),
        ..log.clone()
    };
    let (first, second) = (half(|t| t < 299.95), half(|t| t >= 299.95));

    let dir = tempfile::tempdir().expect("temporary directory");
    let target = SnapshotTarget {
        dir: dir.path(),
        vehicle_id: &vehicle.vehicle_id,
        run_id: &log.run_id,
    };
    for (label, part) in [("first half", &first), ("second half", &second)] {
        let (mut engine, from) = resume_or_new(cfg.engine_for(&vehicle), dir.path(), &vehicle.vehicle_id)?;
        if let Some(p) = from {
            println!("resuming from {}", p.file_name().unwrap().to_string_lossy());
        }
        let summary = run_log(&mut engine, part, Some(target), |_| {})?;
        println!(
            "{label}: {} frames, resumed {}, stream time {:.1} s, AVE MAE so far {:.4}",
            summary.frames,
            summary.resumed,
            engine.dynamic.elapsed,
            engine.metrics.mae(Method::Ave)
        );
    }
    Ok(())
}
