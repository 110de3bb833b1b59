//! Fits the quasi-static thruster map to a survey mission and reports the
//! running error.

use surge_ident::rls::{MapInputs, RlsConfig, RlsState};
use surge_ident::sim::{simulate_missions, MissionPlan};
use surge_ident::stream::Gate;
use surge_ident::RunConfig;

fn main() -> surge_ident::Result<()> {
    let cfg = RunConfig::default();
    let vehicle = cfg.fleet.generate()?.remove(0);
    let plan = MissionPlan {
        count: 1,
        duration: 900.0,
    };
    let log = simulate_missions(&vehicle, &plan, &cfg.sim)?.remove(0).log;

    let mut map = RlsState::new(
        &RlsConfig {
            lambda_f: 0.9995,
            ..Default::default()
        },
        cfg.engine.xi_max,
    )?;
    let mut gate = Gate::new(cfg.engine.window, cfg.engine.quantum);
    let (mut abs, mut n) = (0.0, 0);
    for frame in log.messages.iter().filter_map(|m| gate.push(m)) {
        let inputs = MapInputs {
            xi_left: frame.xi_left,
            xi_right: frame.xi_right,
            theta: frame.theta,
            thetadot: frame.thetadot,
        };
        if let (Some(pred), Some(v)) = (map.update(&inputs, frame.v_meas), frame.v_meas) {
            abs += (pred - v).abs();
            n += 1;
        }
        if n > 0 && n % 3000 == 0 {
            println!("t = {:5.0} s  running MAE {:.4} m/s", frame.t, abs / n as f64);
        }
    }
    println!("coefficients: {:.4?}", map.rls.theta.as_slice());
    println!("covariance resets: {}", map.rls.resets);
    Ok(())
}
