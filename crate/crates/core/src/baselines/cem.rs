use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{argmin, batch_costs, BaselineConfig};
use crate::error::SolveError;
use crate::schedule::{ModeId, Schedule};
use crate::solvers::{Plan, SchedulePlanner};
use crate::systems::{HybridSystem, Rebased};

#[derive(Clone, Debug, PartialEq)]
pub struct CemResult {
    pub schedule: Schedule,
    pub cost: f64,
    /// `probabilities[k][m]` after the last refit.
    pub probabilities: Vec<Vec<f64>>,
    /// Best cost seen after each iteration.
    pub cost_history: Vec<f64>,
    pub evaluations: u64,
}

fn sample(rng: &mut ChaCha8Rng, probs: &[Vec<f64>]) -> Schedule {
    Schedule::new(
        probs
            .iter()
            .map(|p| {
                let mut r = rng.random::<f64>();
                for (m, &q) in p.iter().enumerate() {
                    if r < q {
                        return ModeId(m);
                    }
                    r -= q;
                }
                ModeId(p.len() - 1)
            })
            .collect(),
    )
}

/// Elite frequencies per step with additive smoothing `(f + a) / (1 + M a)`.
fn refit(elites: &[&Schedule], modes: usize, horizon: usize, smoothing: f64) -> Result<Vec<Vec<f64>>, SolveError> {
    let n = elites.len() as f64;
    let mut probs = vec![vec![0.0; modes]; horizon];
    for s in elites {
        for (k, m) in s.modes().iter().enumerate() {
            probs[k][m.0] += 1.0;
        }
    }
    for p in &mut probs {
        for q in p.iter_mut() {
            *q = (*q / n + smoothing) / (1.0 + modes as f64 * smoothing);
        }
        if !p.iter().any(|&q| q > 0.0) {
            return Err(SolveError::InvalidConfig("categorical distribution collapsed".into()));
        }
    }
    Ok(probs)
}

/// Cross-entropy method over per-step categorical mode distributions,
/// starting from uniform. Returns the best sequence seen.
pub fn cem_categorical<S: HybridSystem>(system: &S, config: &BaselineConfig) -> Result<CemResult, SolveError> {
    cem_from(system, config, None)
}

fn cem_from<S: HybridSystem>(
    system: &S,
    config: &BaselineConfig,
    warm_start: Option<&Schedule>,
) -> Result<CemResult, SolveError> {
    config.validate()?;
    let (modes, horizon) = (system.mode_count(), system.horizon());
    let budget = config.rollout_budget(config.samples as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut probs = vec![vec![1.0 / modes as f64; modes]; horizon];
    let mut best: Option<(Schedule, f64)> = None;
    let mut evaluations = 0u64;
    if let Some(w) = warm_start {
        best = Some((w.clone(), crate::solvers::schedule_cost(system, w)?));
        evaluations += 1;
    }
    let mut history = Vec::new();
    while evaluations < budget {
        let n = (budget - evaluations).min(config.samples as u64) as usize;
        let batch: Vec<Schedule> = (0..n).map(|_| sample(&mut rng, &probs)).collect();
        let costs = batch_costs(system, &batch);
        evaluations += n as u64;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)));
        let i = argmin(&costs).expect("non-empty batch");
        if best.as_ref().is_none_or(|(_, c)| costs[i] < *c) {
            best = Some((batch[i].clone(), costs[i]));
        }
        history.push(best.as_ref().map_or(f64::INFINITY, |b| b.1));
        let elite_count = ((config.elite_fraction * n as f64).ceil() as usize).clamp(1, n);
        let elites: Vec<&Schedule> = order[..elite_count].iter().map(|&j| &batch[j]).collect();
        probs = refit(&elites, modes, horizon, config.smoothing)?;
    }
    let (schedule, cost) = best.expect("budget >= 1");
    Ok(CemResult {
        schedule,
        cost,
        probabilities: probs,
        cost_history: history,
        evaluations,
    })
}

/// CEM for receding-horizon use. The warm start competes as the initial incumbent.
#[derive(Clone, Debug)]
pub struct CemPlanner {
    pub config: BaselineConfig,
}

impl<S: HybridSystem> SchedulePlanner<S> for CemPlanner {
    fn plan(&self, problem: &Rebased<'_, S>, warm_start: &Schedule, seed: u64) -> Result<Plan, SolveError> {
        let config = self.config.clone().with_seed(seed);
        let r = cem_from(problem, &config, Some(warm_start))?;
        Ok(Plan {
            schedule: r.schedule,
            cost: r.cost,
            evaluations: r.evaluations,
        })
    }
}
