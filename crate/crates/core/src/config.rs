//! Run configuration loaded from TOML. Every field has a default, so an
//! empty file is a valid configuration.
//!
//! ```toml
//! [engine]
//! dt = 0.1
//! [engine.rnn]
//! eta = 10.0
//! [fleet]
//! vehicles = 8
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{FleetConfig, MissionPlan, SimConfig};
use crate::stream::EngineConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub engine: EngineConfig,
    pub sim: SimConfig,
    pub fleet: FleetConfig,
    pub missions: MissionPlan,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    /// Checks the engine settings and that the simulator and engine agree
    /// on the frame period and signal ranges.
    pub fn validate(&self) -> Result<()> {
        self.engine.validate()?;
        if (self.engine.dt - self.sim.dt).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "engine.dt = {} differs from sim.dt = {}",
                self.engine.dt, self.sim.dt
            )));
        }
        if self.engine.v_max != self.sim.v_max || self.engine.xi_max != self.sim.xi_max {
            return Err(Error::Config("engine and sim disagree on v_max or xi_max".into()));
        }
        if !(self.missions.duration > 0.0) {
            return Err(Error::Config("missions.duration must be positive".into()));
        }
        Ok(())
    }

    /// Engine configuration for one vehicle of the synthetic fleet: the
    /// identifier's known mass is `8 |c_q|` of that vehicle's true plant.
    pub fn engine_for(&self, vehicle: &crate::sim::VehicleSpec) -> EngineConfig {
        let mut engine = self.engine.clone();
        if engine.aid.mass.is_none() {
            engine.aid.mass = Some(8.0 * vehicle.truth.c_q.abs());
        }
        engine
    }
}
