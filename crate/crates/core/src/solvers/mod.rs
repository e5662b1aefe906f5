//! Rollout evaluation, single-switch search, iterative refinement and the
//! receding-horizon loop.

mod iterative;
mod mpc;
mod rollout;
mod single_switch;

pub use iterative::{local_optimality_certificate, solve_iterative, SolveReport, Termination};
pub use mpc::{run_episode, EpisodeRecord, HybridPlanner, MpcController, MpcStep, Plan, SchedulePlanner};
pub use rollout::{controls_cost, evaluate, evaluate_controls, schedule_cost, TrajectoryRecord};
pub use single_switch::{
    max_batches, solve_single_switch_exhaustive, solve_single_switch_sampled, RolloutObjective, SearchStop,
    SwitchObjective, SwitchSearch,
};

use crate::error::SolveError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum AcceptancePolicy {
    /// Return the first improving candidate in draw order.
    #[default]
    FirstImprovement,
    /// Evaluate the whole batch and return its minimum if it improves.
    BestOfBatch,
}

/// Which single-switch search drives the iterative loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum InnerSolver {
    Exhaustive,
    #[default]
    Sampled,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Candidates per draw (`N`).
    pub batch_size: usize,
    /// Cap on accepted switches.
    pub max_iterations: usize,
    /// A switch is accepted only if it lowers the cost by more than this.
    pub tolerance: f64,
    pub policy: AcceptancePolicy,
    pub seed: u64,
    /// Total rollout budget for one solve, `None` for unlimited.
    pub max_evaluations: Option<u64>,
    /// Evaluate candidate batches on the rayon pool.
    pub parallel: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            batch_size: 64,
            max_iterations: 1000,
            tolerance: 1e-9,
            policy: AcceptancePolicy::FirstImprovement,
            seed: 0,
            max_evaluations: None,
            parallel: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        if self.batch_size == 0 {
            return Err(SolveError::InvalidConfig("batch_size must be >= 1".into()));
        }
        if !(self.tolerance >= 0.0) || !self.tolerance.is_finite() {
            return Err(SolveError::InvalidConfig("tolerance must be finite and >= 0".into()));
        }
        Ok(())
    }
}
