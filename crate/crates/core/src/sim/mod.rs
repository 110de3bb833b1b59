//! Synthetic fleet, mission scripts, the simulator, and offline
//! cross-validation.

pub mod crossval;
pub mod fleet;
pub mod mission;
pub mod simulate;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use crossval::{
    best_snapshot, cross_validate, cross_vehicle_matrix, diagonal_dominance, evaluate,
    pooled_mse, summarize, BoxStats, CrossValEntry,
};
pub use fleet::{FleetConfig, NoiseModel, VehicleSpec};
pub use mission::{Command, MissionScript, Segment};
pub use simulate::{check_step, simulate, SimConfig, SimRun, TruthSample};

use crate::error::Result;

/// How many missions each vehicle flies and how long they last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MissionPlan {
    pub count: usize,
    /// Mission length (s).
    pub duration: f64,
}

impl Default for MissionPlan {
    fn default() -> Self {
        Self {
            count: 4,
            duration: 900.0,
        }
    }
}

/// Survey missions for one vehicle, simulated with independent noise.
pub fn simulate_missions(
    vehicle: &VehicleSpec,
    plan: &MissionPlan,
    cfg: &SimConfig,
) -> Result<Vec<SimRun>> {
    let mut rng = ChaCha8Rng::seed_from_u64(vehicle.seed);
    (0..plan.count)
        .map(|i| {
            let script = MissionScript::survey(plan.duration, cfg.xi_max, &mut rng);
            simulate(vehicle, &script, cfg, &format!("m{i:02}"), i as u64)
        })
        .collect()
}
