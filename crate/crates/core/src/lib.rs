//! Online identification of the surge dynamics of small twin-thruster
//! surface vehicles.
//!
//! Three estimators run side by side on the logged message stream:
//!
//! - [`aid`]: adaptive identification of the physical model with known mass,
//! - [`rnn`]: a shallow ReLU recurrent network kept contracting by a
//!   certificate penalty,
//! - [`rls`]: a quasi-static thruster-to-speed map fitted by recursive least
//!   squares,
//!
//! and [`ensemble`] fuses their predictions. [`stream`] turns asynchronous
//! messages into frames, runs the estimators and persists snapshots;
//! [`sim`] provides a synthetic fleet and offline cross-validation.

pub mod aid;
pub mod config;
pub mod ensemble;
pub mod error;
pub mod model;
pub mod rls;
pub mod rnn;
pub mod sim;
pub mod stream;

pub use config::RunConfig;
pub use error::{Error, Result};
