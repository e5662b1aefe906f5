//! Receding-horizon control over mode schedules.
//!
//! At every step the planner re-solves an `H`-step subproblem from the observed
//! state, the first planned mode is executed, and the plan shifted left by one
//! (padded with the default mode) becomes the next warm start.

use super::iterative::solve_iterative;
use super::{InnerSolver, SolverConfig};
use crate::error::SolveError;
use crate::schedule::{ModeId, Schedule};
use crate::seed::derive_seed;
use crate::systems::{HybridSystem, Rebased};

#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub schedule: Schedule,
    pub cost: f64,
    pub evaluations: u64,
}

/// Anything that turns a subproblem and a warm start into a schedule.
pub trait SchedulePlanner<S: HybridSystem> {
    fn plan(&self, problem: &Rebased<'_, S>, warm_start: &Schedule, seed: u64) -> Result<Plan, SolveError>;
}

/// Iterative single-switch refinement as a planner.
#[derive(Clone, Debug, Default)]
pub struct HybridPlanner {
    pub config: SolverConfig,
    pub inner: InnerSolver,
}

impl<S: HybridSystem> SchedulePlanner<S> for HybridPlanner {
    fn plan(&self, problem: &Rebased<'_, S>, warm_start: &Schedule, seed: u64) -> Result<Plan, SolveError> {
        let config = SolverConfig {
            seed,
            ..self.config.clone()
        };
        let report = solve_iterative(problem, warm_start, &config, self.inner)?;
        Ok(Plan {
            cost: report.final_cost(),
            evaluations: report.evaluations,
            schedule: report.final_schedule,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MpcStep {
    pub mode: ModeId,
    pub plan: Schedule,
    pub planned_cost: f64,
    /// The plan diverged and the default mode was executed instead.
    pub flagged: bool,
    pub evaluations: u64,
}

pub struct MpcController<'a, S: HybridSystem, P> {
    system: &'a S,
    planner: P,
    horizon: usize,
    warm_start: Schedule,
    step_index: usize,
    seed: u64,
}

impl<'a, S: HybridSystem, P: SchedulePlanner<S>> MpcController<'a, S, P> {
    pub fn new(system: &'a S, planner: P, horizon: usize, seed: u64) -> Result<Self, SolveError> {
        if horizon == 0 {
            return Err(SolveError::InvalidConfig("planning horizon must be >= 1".into()));
        }
        Ok(Self {
            system,
            planner,
            horizon,
            warm_start: Schedule::constant(system.default_mode(), horizon),
            step_index: 0,
            seed,
        })
    }

    pub fn with_warm_start(mut self, warm_start: Schedule) -> Result<Self, SolveError> {
        warm_start.validate(self.system.mode_count(), self.horizon)?;
        self.warm_start = warm_start;
        Ok(self)
    }

    pub fn warm_start(&self) -> &Schedule {
        &self.warm_start
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn steps_taken(&self) -> usize {
        self.step_index
    }

    /// Plans from `observed`, returns the mode to execute and advances the warm start.
    pub fn step(&mut self, observed: &S::State) -> Result<MpcStep, SolveError> {
        let default = self.system.default_mode();
        let problem = Rebased::new(self.system, observed.clone(), self.horizon, self.step_index);
        let seed = derive_seed(self.seed, self.step_index as u64);
        let plan = self.planner.plan(&problem, &self.warm_start, seed)?;
        let flagged = !plan.cost.is_finite();
        let mode = if flagged { default } else { plan.schedule.mode_at(0) };
        self.warm_start = if flagged {
            Schedule::constant(default, self.horizon)
        } else {
            plan.schedule.shifted(default)
        };
        self.step_index += 1;
        Ok(MpcStep {
            mode,
            planned_cost: plan.cost,
            flagged,
            evaluations: plan.evaluations,
            plan: plan.schedule,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord<X> {
    /// `steps + 1` executed states.
    pub states: Vec<X>,
    pub modes: Vec<ModeId>,
    /// `l(x_k, m_k) dt` for each executed step.
    pub stage_costs: Vec<f64>,
    pub terminal_cost: f64,
    /// Sum of executed stage costs plus the terminal cost at the final state.
    pub cumulative_cost: f64,
    pub flagged_steps: Vec<usize>,
    /// Planned cost at each step, as reported by the planner.
    pub planned_costs: Vec<f64>,
    /// Rollouts spent planning each step.
    pub step_evaluations: Vec<u64>,
    pub evaluations: u64,
}

/// Closed-loop episode against the controller's own model.
///
/// A diverging plant makes the cumulative cost `+inf` and ends the episode.
pub fn run_episode<S: HybridSystem, P: SchedulePlanner<S>>(
    controller: &mut MpcController<'_, S, P>,
    steps: usize,
) -> Result<EpisodeRecord<S::State>, SolveError> {
    let system = controller.system;
    let mut x = system.initial_state();
    let mut record = EpisodeRecord {
        states: vec![x.clone()],
        modes: Vec::with_capacity(steps),
        stage_costs: Vec::with_capacity(steps),
        terminal_cost: 0.0,
        cumulative_cost: 0.0,
        flagged_steps: Vec::new(),
        planned_costs: Vec::with_capacity(steps),
        step_evaluations: Vec::with_capacity(steps),
        evaluations: 0,
    };
    let mut acc = 0.0;
    for k in 0..steps {
        let step = controller.step(&x)?;
        record.evaluations += step.evaluations;
        record.planned_costs.push(step.planned_cost);
        record.step_evaluations.push(step.evaluations);
        if step.flagged {
            record.flagged_steps.push(k);
        }
        let cost = system.stage_cost(&x, step.mode).map(|c| c * system.dt());
        let next = system.step(&x, k, step.mode);
        match (cost, next) {
            (Ok(c), Ok(n)) => {
                acc += c;
                record.stage_costs.push(c);
                record.modes.push(step.mode);
                x = n;
                record.states.push(x.clone());
            }
            _ => {
                record.modes.push(step.mode);
                record.cumulative_cost = f64::INFINITY;
                return Ok(record);
            }
        }
    }
    record.terminal_cost = system.terminal_cost(&x).unwrap_or(f64::INFINITY);
    record.cumulative_cost = acc + record.terminal_cost;
    Ok(record)
}
