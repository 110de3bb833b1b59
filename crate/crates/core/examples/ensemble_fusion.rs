//! Runs all three estimators online with both fusion rules and compares
//! their errors over consecutive missions.

use surge_ident::sim::{simulate_missions, MissionPlan};
use surge_ident::stream::{run_log, Engine, Method};
use surge_ident::RunConfig;

fn main() -> surge_ident::Result<()> {
    let cfg = RunConfig::default();
    let vehicle = cfg.fleet.generate()?.remove(4);
    let runs = simulate_missions(&vehicle, &MissionPlan::default(), &cfg.sim)?;
    let mut engine = Engine::new(cfg.engine_for(&vehicle))?;
    for run in &runs {
        let before = engine.metrics.clone();
        run_log(&mut engine, &run.log, None, |_| {})?;
        print!("{}:", run.log.run_id);
        for m in Method::ALL {
            let (a, b) = (before.get(m), engine.metrics.get(m));
            let mae = (b.sum_abs - a.sum_abs) / (b.count - a.count) as f64;
            print!("  {m} {mae:.4}");
        }
        println!();
    }
    let w = engine.ensemble.weights();
    println!("fusion weights: aid {:.3}, rnn {:.3}, rls {:.3}", w[0], w[1], w[2]);
    Ok(())
}
