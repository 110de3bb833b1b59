//! Trains each vehicle of a small fleet, picks its best snapshot and prints
//! how every model fares on every vehicle's data.

use rayon::prelude::*;
use surge_ident::sim::{best_snapshot, cross_vehicle_matrix, diagonal_dominance, simulate_missions, MissionPlan};
use surge_ident::stream::{load_all, run_log, Engine, Method, SnapshotTarget};
use surge_ident::RunConfig;

fn main() -> surge_ident::Result<()> {
    let mut cfg = RunConfig::default();
    cfg.engine.rls.lambda_f = 0.9995;
    cfg.fleet.vehicles = 4;
    let fleet = cfg.fleet.generate()?;
    let dir = tempfile::tempdir().expect("temporary directory");
    let plan = MissionPlan {
        count: 4,
        duration: 600.0,
    };
    let trained = fleet
        .par_iter()
        .map(|v| {
            let runs = simulate_missions(v, &plan, &cfg.sim)?;
            let engine_cfg = cfg.engine_for(v);
            let mut engine = Engine::new(engine_cfg.clone())?;
            for run in &runs[..3] {
                let target = SnapshotTarget {
                    dir: dir.path(),
                    vehicle_id: &v.vehicle_id,
                    run_id: &run.log.run_id,
                };
                run_log(&mut engine, &run.log, Some(target), |_| {})?;
            }
            let snaps: Vec<_> = load_all(dir.path(), &v.vehicle_id)?.into_iter().map(|(_, s)| s).collect();
            let held_out = vec![runs[3].log.clone()];
            let (best, _) = best_snapshot(&engine_cfg, &snaps, &held_out, Method::Ave)?;
            Ok((snaps[best].clone(), held_out))
        })
        .collect::<surge_ident::Result<Vec<_>>>()?;
    let (models, logs): (Vec<_>, Vec<_>) = trained.into_iter().unzip();
    let matrix = cross_vehicle_matrix(&cfg.engine, &models, &logs, Method::Ave)?;
    println!("rows: models, columns: data (AVE MSE)");
    for (v, row) in fleet.iter().zip(&matrix) {
        let cells: Vec<String> = row.iter().map(|x| format!("{x:.4}")).collect();
        println!("{}  {}", v.vehicle_id, cells.join("  "));
    }
    let (rows, cols) = diagonal_dominance(&matrix);
    println!("diagonal dominant in {:.0}% of rows, {:.0}% of columns", rows * 100.0, cols * 100.0);
    Ok(())
}
