//! The simulator against closed-form expectations, and the identifiers
//! against data generated by their own model.

use surge_ident::aid::{AidConfig, AidFrame, AidState};
use surge_ident::model::SurgeParams;
use surge_ident::sim::{
    cross_vehicle_matrix, simulate, simulate_missions, FleetConfig, MissionPlan, MissionScript,
    NoiseModel, Segment, SimConfig, VehicleSpec,
};
use surge_ident::stream::{load_all, run_log, Engine, Method, SnapshotTarget};
use surge_ident::RunConfig;

fn nominal(noise: NoiseModel) -> VehicleSpec {
    VehicleSpec {
        vehicle_id: "nominal".into(),
        truth: SurgeParams::heron_nominal(),
        noise,
        seed: 5,
    }
}

fn exact_sim() -> SimConfig {
    SimConfig {
        substeps: 1,
        emit_heading_rate: true,
        ..Default::default()
    }
}

fn aid_with_truth(p: &SurgeParams, k_v: f64) -> AidState {
    let mut cfg = AidConfig {
        mass: Some(p.m),
        theta0: p.theta(),
        ..Default::default()
    };
    cfg.gains.k_v = k_v;
    AidState::new(&cfg).unwrap()
}

#[test]
fn identifier_with_true_parameters_replays_its_own_model() {
    let vehicle = nominal(NoiseModel::noiseless());
    let run = simulate(&vehicle, &MissionScript::excitation(300.0, 100.0), &exact_sim(), "x", 0).unwrap();
    let mut aid = aid_with_truth(&vehicle.truth, 1.0);
    aid.v_hat = run.truth[0].v;
    let mut worst: f64 = 0.0;
    for s in &run.truth {
        let frame = AidFrame {
            v_meas: Some(s.v),
            thetadot: s.thetadot,
            xi_left: s.xi_left,
            xi_right: s.xi_right,
        };
        let pred = aid.update(&frame, 0.1).unwrap();
        worst = worst.max((pred - s.v).abs());
    }
    assert!(worst < 1e-12, "{worst}");
    for (est, truth) in aid.theta_hat.iter().zip(vehicle.truth.theta()) {
        assert!((est - truth).abs() <= 1e-12 * truth.abs().max(1.0));
    }
}

#[test]
fn observer_error_decays_monotonically() {
    let vehicle = nominal(NoiseModel::noiseless());
    let run = simulate(&vehicle, &MissionScript::excitation(30.0, 100.0), &exact_sim(), "x", 0).unwrap();
    let k_v = 1.0;
    let mut aid = aid_with_truth(&vehicle.truth, k_v);
    aid.v_hat = run.truth[0].v + 0.01;
    let mut last = f64::INFINITY;
    for s in run.truth.iter().take((10.0 / k_v / 0.1) as usize + 1) {
        let err = (s.v - aid.v_hat).abs();
        assert!(err < last || err == 0.0);
        last = err;
        aid.observe(
            &AidFrame {
                v_meas: Some(s.v),
                thetadot: s.thetadot,
                xi_left: s.xi_left,
                xi_right: s.xi_right,
            },
            0.1,
        )
        .unwrap();
    }
    assert!(last < 1e-6, "{last}");
}

#[test]
fn zero_thrust_decays_towards_rest() {
    let vehicle = nominal(NoiseModel::noiseless());
    let script = MissionScript {
        segments: vec![Segment::Idle { duration: 120.0 }],
    };
    let sim = SimConfig {
        v0: 2.0,
        ..Default::default()
    };
    let run = simulate(&vehicle, &script, &sim, "x", 0).unwrap();
    let speeds: Vec<f64> = run.truth.iter().map(|s| s.v).collect();
    assert_eq!(speeds[0], 2.0);
    assert!(speeds.windows(2).all(|w| w[1] <= w[0] && w[1] >= 0.0));
    assert!(*speeds.last().unwrap() < 0.01);
}

#[test]
fn outlier_rate_matches_its_probability() {
    let noise = NoiseModel {
        outlier_prob: 0.01,
        ..Default::default()
    };
    let run = simulate(
        &nominal(noise),
        &MissionScript::excitation(1000.0, 100.0),
        &SimConfig::default(),
        "x",
        0,
    )
    .unwrap();
    assert_eq!(run.truth.len(), 10_000);
    // binomial(10^4, 0.01): mean 100, sd about 10
    assert!((70..=130).contains(&run.outliers), "{}", run.outliers);
}

#[test]
fn dropouts_remove_speed_messages_only() {
    let noise = NoiseModel {
        dropout_prob: 0.2,
        ..NoiseModel::noiseless()
    };
    let run = simulate(
        &nominal(noise),
        &MissionScript::excitation(100.0, 100.0),
        &SimConfig::default(),
        "x",
        0,
    )
    .unwrap();
    let speed = run.log.messages.iter().filter(|m| m.channel == surge_ident::stream::Channel::Velocity).count();
    assert!((650..=950).contains(&speed), "{speed}");
    assert_eq!(run.log.messages.len() - speed, 3 * 1000);
}

#[test]
fn identical_vehicles_give_a_flat_matrix() {
    let mut cfg = RunConfig::default();
    cfg.fleet = FleetConfig {
        vehicles: 2,
        spread: 0.0,
        ..Default::default()
    };
    let fleet = cfg.fleet.generate().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let plan = MissionPlan {
        count: 2,
        duration: 600.0,
    };
    let mut models = Vec::new();
    let mut logs = Vec::new();
    for v in &fleet {
        let runs = simulate_missions(v, &plan, &cfg.sim).unwrap();
        let mut engine = Engine::new(cfg.engine_for(v)).unwrap();
        let target = SnapshotTarget {
            dir: dir.path(),
            vehicle_id: &v.vehicle_id,
            run_id: "m00",
        };
        run_log(&mut engine, &runs[0].log, Some(target), |_| {}).unwrap();
        models.push(load_all(dir.path(), &v.vehicle_id).unwrap().pop().unwrap().1);
        logs.push(vec![runs[1].log.clone()]);
    }
    let m = cross_vehicle_matrix(&cfg.engine, &models, &logs, Method::Aid).unwrap();
    for row in &m {
        for x in row {
            let ratio = x / m[0][0];
            assert!((0.5..2.0).contains(&ratio), "{m:?}");
        }
    }
}
