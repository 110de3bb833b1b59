//! Trains one vehicle, then scores every stored snapshot on held-out
//! missions with parameters frozen.

use surge_ident::sim::{cross_validate, simulate_missions, summarize, MissionPlan};
use surge_ident::stream::{load_all, run_log, Engine, Method, SnapshotTarget};
use surge_ident::RunConfig;

fn main() -> surge_ident::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.engine.rls.lambda_f = 0.9995;
    let vehicle = cfg.fleet.generate()?.remove(2);
    let runs = simulate_missions(
        &vehicle,
        &MissionPlan {
            count: 5,
            duration: 600.0,
        },
        &cfg.sim,
    )?;
    let dir = tempfile::tempdir().expect("temporary directory");
    let mut engine = Engine::new(cfg.engine_for(&vehicle))?;
    for run in &runs[..3] {
        let target = SnapshotTarget {
            dir: dir.path(),
            vehicle_id: &vehicle.vehicle_id,
            run_id: &run.log.run_id,
        };
        run_log(&mut engine, &run.log, Some(target), |_| {})?;
    }
    let snaps: Vec<_> = load_all(dir.path(), &vehicle.vehicle_id)?.into_iter().map(|(_, s)| s).collect();
    let held_out: Vec<_> = runs[3..].iter().map(|r| r.log.clone()).collect();
    let entries = cross_validate(&cfg.engine, &snaps, &held_out)?;
    println!("{} snapshots x {} missions", snaps.len(), held_out.len());
    for m in Method::ALL {
        let b = summarize(&entries, m, false).expect("scored frames");
        println!(
            "{m:<4} median MAE {:.4}  IQR [{:.4}, {:.4}]  outliers {}",
            b.median,
            b.q1,
            b.q3,
            b.outliers.len()
        );
    }
    Ok(())
}
