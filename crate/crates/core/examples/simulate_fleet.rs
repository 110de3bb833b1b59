//! Generates the synthetic fleet, flies one survey mission per vehicle and
//! writes the logs to a temporary directory.

use surge_ident::sim::{simulate_missions, MissionPlan};
use surge_ident::RunConfig;

fn main() -> surge_ident::Result<()> {
    let cfg = RunConfig::default();
    let out = tempfile::tempdir().expect("temporary directory");
    let plan = MissionPlan {
        count: 1,
        duration: 300.0,
    };
    println!("vehicle     mass    c_q     c_l   frames  mean speed");
    for vehicle in cfg.fleet.generate()? {
        let run = simulate_missions(&vehicle, &plan, &cfg.sim)?.remove(0);
        let mean = run.truth.iter().map(|s| s.v).sum::<f64>() / run.truth.len() as f64;
        let path = out.path().join(format!("{}.log", vehicle.vehicle_id));
        run.log.write(&path)?;
        println!(
            "{}  {:5.1}  {:5.2}  {:6.2}  {:6}  {:.3} m/s",
            vehicle.vehicle_id,
            vehicle.truth.m,
            vehicle.truth.c_q,
            vehicle.truth.c_l,
            run.truth.len(),
            mean
        );
    }
    println!("logs written under {}", out.path().display());
    Ok(())
}
