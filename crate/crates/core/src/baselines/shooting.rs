use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{argmin, batch_costs, BaselineConfig};
use crate::error::SolveError;
use crate::schedule::{ModeId, Schedule};
use crate::solvers::{schedule_cost, Plan, SchedulePlanner};
use crate::systems::{HybridSystem, Rebased};

/// Result of a search over mode sequences.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeSearch {
    pub schedule: Schedule,
    pub cost: f64,
    /// Best cost seen after each iteration.
    pub cost_history: Vec<f64>,
    pub evaluations: u64,
}

fn random_schedule(rng: &mut ChaCha8Rng, modes: usize, horizon: usize) -> Schedule {
    Schedule::new((0..horizon).map(|_| ModeId(rng.random_range(0..modes))).collect())
}

fn perturb(rng: &mut ChaCha8Rng, incumbent: &Schedule, modes: usize, fraction: f64) -> Schedule {
    let mut out = incumbent.modes().to_vec();
    let mut touched = false;
    for slot in out.iter_mut() {
        if rng.random::<f64>() < fraction {
            *slot = ModeId(rng.random_range(0..modes));
            touched = true;
        }
    }
    if !touched {
        let k = rng.random_range(0..out.len());
        out[k] = ModeId(rng.random_range(0..modes));
    }
    Schedule::new(out)
}

/// Predictive-sampling search: candidates are the incumbent with a random
/// subset of positions redrawn uniformly; the best schedule seen is kept.
///
/// Without a warm start the first iteration samples full sequences uniformly.
/// The warm start's own rollout counts against the budget.
pub fn random_shooting<S: HybridSystem>(
    system: &S,
    config: &BaselineConfig,
    warm_start: Option<&Schedule>,
) -> Result<ModeSearch, SolveError> {
    config.validate()?;
    let (modes, horizon) = (system.mode_count(), system.horizon());
    let budget = config.rollout_budget(config.samples as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut evaluations = 0u64;
    let mut best: Option<(Schedule, f64)> = None;
    if let Some(w) = warm_start {
        let cost = schedule_cost(system, w)?;
        evaluations += 1;
        best = Some((w.clone(), cost));
    }
    let mut history = Vec::new();
    while evaluations < budget {
        let n = (budget - evaluations).min(config.samples as u64) as usize;
        let batch: Vec<Schedule> = (0..n)
            .map(|_| match &best {
                None => random_schedule(&mut rng, modes, horizon),
                Some((inc, _)) => perturb(&mut rng, inc, modes, config.resample_fraction),
            })
            .collect();
        let costs = batch_costs(system, &batch);
        evaluations += n as u64;
        let i = argmin(&costs).expect("non-empty batch");
        if best.as_ref().is_none_or(|(_, c)| costs[i] < *c) {
            best = Some((batch[i].clone(), costs[i]));
        }
        history.push(best.as_ref().map_or(f64::INFINITY, |b| b.1));
    }
    let (schedule, cost) = best.expect("budget >= 1");
    Ok(ModeSearch {
        schedule,
        cost,
        cost_history: history,
        evaluations,
    })
}

/// Random shooting warm-started from the shifted previous plan.
#[derive(Clone, Debug)]
pub struct RandomShootingPlanner {
    pub config: BaselineConfig,
}

impl<S: HybridSystem> SchedulePlanner<S> for RandomShootingPlanner {
    fn plan(&self, problem: &Rebased<'_, S>, warm_start: &Schedule, seed: u64) -> Result<Plan, SolveError> {
        let config = self.config.clone().with_seed(seed);
        let r = random_shooting(problem, &config, Some(warm_start))?;
        Ok(Plan {
            schedule: r.schedule,
            cost: r.cost,
            evaluations: r.evaluations,
        })
    }
}
