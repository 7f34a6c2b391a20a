//! Deterministic discrete-time simulation of a 2D environment.

pub mod motion;
pub mod scenario;
pub mod simulation;
pub mod snapshot;
pub mod steering;
pub mod stimulus;

pub use motion::{step_agent, Point, ProximityTracker, Sensor};
pub use scenario::Scenario;
pub use simulation::{run, SimError, Simulation};
pub use snapshot::{Snapshot, SnapshotCell};
pub use steering::{SteerCommand, SteerError, SteeringHandle};
pub use stimulus::sinusoid_value;
