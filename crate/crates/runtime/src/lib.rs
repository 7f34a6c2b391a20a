//! In-process execution of checked architectures: entity registry,
//! discovery, push/pull/command delivery, and a deterministic 2D
//! environment simulator that drives it.

pub mod entity;
pub mod error;
pub mod logic;
pub mod newscast;
pub mod runtime;
pub mod sim;
pub mod trace;

pub use entity::{BehaviorError, Composite, Entity, EntityBehavior, TableBehavior};
pub use error::RuntimeError;
pub use logic::{ComponentCtx, ComponentLogic, Delivery, HandlerResult, Handlers, LogicSet, Producer};
pub use runtime::Runtime;
pub use trace::{EventKind, EventRecord};
