//! Mode scheduling for discrete-time hybrid systems.
//!
//! A schedule assigns one of `M` black-box modes to each of `T` steps. The
//! solvers improve a schedule by single switches `(mode, start, duration)`,
//! searched exhaustively or by sampling the candidate set without
//! replacement, and wrap that search in a receding-horizon controller.
//! [`baselines`] holds the comparison methods.

pub mod baselines;
pub mod error;
pub mod schedule;
pub mod seed;
pub mod solvers;
pub mod systems;

pub use error::{ScheduleError, SolveError, SystemError};
pub use schedule::{candidate_count, CandidateSpace, ModeId, RunLengthSchedule, Schedule, Segment, SwitchTuple};
pub use systems::{ControlSystem, HybridSystem, VectorState};
