use std::fmt::{self, Write as _};

use super::single_switch::{
    solve_single_switch_exhaustive, solve_single_switch_sampled, RolloutObjective, SearchStop, SwitchObjective,
};
use super::{InnerSolver, SolverConfig};
use crate::error::SolveError;
use crate::schedule::{CandidateSpace, Schedule, SwitchTuple};
use crate::systems::HybridSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// The exhaustive search found no improving switch.
    FixedPoint,
    /// The sampled search drew every candidate without improvement.
    Exhausted,
    IterationCap,
    /// The rollout budget ran out.
    Budget,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::FixedPoint => "fixed-point",
            Termination::Exhausted => "exhausted",
            Termination::IterationCap => "iteration-cap",
            Termination::Budget => "budget",
        }
    }

    /// Both full-search outcomes certify a local optimum.
    pub fn is_local_optimum(self) -> bool {
        matches!(self, Termination::FixedPoint | Termination::Exhausted)
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveReport {
    pub final_schedule: Schedule,
    pub initial_cost: f64,
    /// Cost after each accepted switch.
    pub cost_history: Vec<f64>,
    pub accepted_switches: Vec<SwitchTuple>,
    /// Cumulative rollouts when each switch was accepted.
    pub evaluations_at_accept: Vec<u64>,
    /// Rollouts performed, including base-schedule rollouts.
    pub evaluations: u64,
    pub termination: Termination,
}

impl SolveReport {
    pub fn final_cost(&self) -> f64 {
        self.cost_history.last().copied().unwrap_or(self.initial_cost)
    }

    /// `iter,accepted_mode,mu,nu,cost,evaluations`; row 0 is the initial schedule.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,accepted_mode,mu,nu,cost,evaluations\n");
        let _ = writeln!(out, "0,,,,{},1", self.initial_cost);
        for (i, ((s, c), e)) in self
            .accepted_switches
            .iter()
            .zip(&self.cost_history)
            .zip(&self.evaluations_at_accept)
            .enumerate()
        {
            let _ = writeln!(out, "{},{},{},{},{},{}", i + 1, s.mode, s.start, s.duration, c, e);
        }
        out
    }
}

/// Repeatedly applies the best (or first) improving single switch until none
/// is left, the iteration cap is hit, or the rollout budget is spent.
///
/// The candidate space is reset after every accepted switch. Its random stream
/// keeps running, so each search sees a fresh permutation.
pub fn solve_iterative<S: HybridSystem>(
    system: &S,
    initial: &Schedule,
    config: &SolverConfig,
    inner: InnerSolver,
) -> Result<SolveReport, SolveError> {
    config.validate()?;
    let mut space = CandidateSpace::new(system.mode_count(), system.horizon(), config.seed)?;
    let mut objective = RolloutObjective::new(system, initial.clone())?;
    let mut evaluations = 1u64;
    let initial_cost = objective.base_cost();
    let mut cost_history = Vec::new();
    let mut accepted = Vec::new();
    let mut evaluations_at_accept = Vec::new();

    let termination = loop {
        if accepted.len() >= config.max_iterations {
            break Termination::IterationCap;
        }
        let left = config.max_evaluations.map(|b| b.saturating_sub(evaluations));
        if left == Some(0) {
            break Termination::Budget;
        }
        let search = match inner {
            InnerSolver::Exhaustive => {
                solve_single_switch_exhaustive(&objective, config.tolerance, config.parallel, left)
            }
            InnerSolver::Sampled => solve_single_switch_sampled(&objective, config, &mut space, left)?,
        };
        evaluations += search.evaluations;
        let Some((switch, cost)) = search.best else {
            break match (search.stop, inner) {
                (SearchStop::Budget, _) => Termination::Budget,
                (_, InnerSolver::Exhaustive) => Termination::FixedPoint,
                (_, InnerSolver::Sampled) => Termination::Exhausted,
            };
        };
        let next = objective.base().stitch(&switch)?;
        objective = RolloutObjective::new(system, next)?;
        evaluations += 1;
        debug_assert_eq!(objective.base_cost().to_bits(), cost.to_bits());
        space.reset();
        accepted.push(switch);
        cost_history.push(objective.base_cost());
        evaluations_at_accept.push(evaluations);
    };

    Ok(SolveReport {
        final_schedule: objective.into_base(),
        initial_cost,
        cost_history,
        accepted_switches: accepted,
        evaluations_at_accept,
        evaluations,
        termination,
    })
}

/// Checks that no switch with `duration >= 1` lowers the cost of `schedule` by
/// more than `tolerance`. Returns the best improving switch otherwise.
pub fn local_optimality_certificate<S: HybridSystem>(
    system: &S,
    schedule: &Schedule,
    tolerance: f64,
) -> Result<Option<(SwitchTuple, f64)>, SolveError> {
    let objective = RolloutObjective::new(system, schedule.clone())?;
    Ok(solve_single_switch_exhaustive(&objective, tolerance, false, None).best)
}
