//! Streaming side: message assembly, the estimation engine, metrics and
//! snapshot persistence.

pub mod engine;
pub mod gate;
pub mod message;
pub mod metrics;
pub mod session;
pub mod snapshot;

pub use engine::{
    metrics_from_records, DynamicState, Engine, EngineConfig, EstimatorSet, LearningMode,
    PredictionRecord, RnnInput,
};
pub use gate::{quantize_velocity, Gate, HeadingTracker, MeasurementFrame};
pub use message::{Channel, Message, MissionLog};
pub use metrics::{ErrorSums, Method, MetricsAccumulator};
pub use session::{resume_or_new, run_log, SessionSummary, SnapshotTarget};
pub use snapshot::{load_all, load_latest, ParameterSnapshot};
