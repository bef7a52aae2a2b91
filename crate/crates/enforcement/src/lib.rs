//! Monitor, enforcer and executor of the enforcement loop, wired together
//! over a named-channel bus.
//!
//! * [`Monitor`] abstracts probe samples into condition snapshots.
//! * [`Enforcer`] steps the model server and timestamps each pass.
//! * [`Executor`] expands obligations into tasks and runs their timers.
//! * [`runtime`] spawns the three as concurrent activities.

pub mod bus;
pub mod clock;
pub mod config;
pub mod enforcer;
pub mod executor;
pub mod messages;
pub mod mock;
pub mod monitor;
pub mod runtime;

pub use bus::{InProcessBus, Transport};
pub use clock::{Clock, VirtualClock, WallClock};
pub use config::{ConfigError, LoopConfig};
pub use enforcer::{Enforcer, EnforcerError, StepOutcome};
pub use executor::{plan_tasks, AckOutcome, Executor, ExecutorError, TaskMap};
pub use messages::*;
pub use mock::{AckPolicy, ManagedSystemMock};
pub use monitor::{ConditionDelta, Monitor, MonitorError};
pub use runtime::{run_loop, start, LoopError, LoopHandle};
