//! Adaptive identification on a noiseless vehicle driven by a multi-sine.

use surge_ident::aid::{AidConfig, AidFrame, AidGains, AidState};
use surge_ident::sim::{simulate, MissionScript, NoiseModel, SimConfig};
use surge_ident::RunConfig;

const NAMES: [&str; 9] = ["c_q", "c_l", "c_thetadot", "alpha_l", "beta_l", "gamma_l", "alpha_r", "beta_r", "gamma_r"];

fn main() -> surge_ident::Result<()> {
    let mut vehicle = RunConfig::default().fleet.generate()?.remove(1);
    vehicle.noise = NoiseModel::noiseless();
    let run = simulate(&vehicle, &MissionScript::excitation(600.0, 100.0), &SimConfig::default(), "pe", 0)?;

    let mut cfg = AidConfig {
        mass: Some(vehicle.truth.m),
        ..Default::default()
    };
    cfg.gains = AidGains::scaled_to(&cfg.theta0, 2.0, 100.0, 3.0);
    cfg.gains.k_v = 3.0;
    let mut aid = AidState::new(&cfg)?;
    aid.v_hat = run.truth[0].v;

    for (k, s) in run.truth.iter().enumerate() {
        let frame = AidFrame {
            v_meas: Some(s.v),
            thetadot: s.thetadot,
            xi_left: s.xi_left,
            xi_right: s.xi_right,
        };
        let pred = aid.update(&frame, 0.1)?;
        if k % 1000 == 0 {
            println!("t = {:5.0} s  v = {:.4}  v_hat = {:.4}", s.t, s.v, pred);
        }
    }
    println!("\nparameter      true   estimate");
    for ((name, est), truth) in NAMES.iter().zip(aid.theta_hat).zip(vehicle.truth.theta()) {
        println!("{name:<10} {truth:>9.5} {est:>9.5}");
    }
    Ok(())
}
