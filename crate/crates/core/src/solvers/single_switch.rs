//! Single-switch search: find one `(mode, start, duration)` that lowers the
//! cost of a base schedule, either by scanning every candidate or by drawing
//! batches without replacement.

use std::cmp::Ordering;

use rayon::prelude::*;

use super::rollout::{check_schedule, rollout_from, schedule_mode, trace_schedule, Trace};
use super::{AcceptancePolicy, SolverConfig};
use crate::error::SolveError;
use crate::schedule::{candidate_count, CandidateSpace, Schedule, SwitchTuple};
use crate::systems::HybridSystem;

/// Cost of stitching a candidate onto a fixed base schedule.
pub trait SwitchObjective: Sync {
    fn mode_count(&self) -> usize;
    fn horizon(&self) -> usize;
    fn base_cost(&self) -> f64;
    fn candidate_cost(&self, switch: &SwitchTuple) -> f64;
}

/// Rollout objective for a system and base schedule.
///
/// The base trajectory is recorded once; a candidate starting at `mu` resumes
/// from the base state and accumulated cost at `mu`, which gives exactly the
/// same number as a full rollout of the stitched schedule.
pub struct RolloutObjective<'a, S: HybridSystem> {
    system: &'a S,
    base: Schedule,
    trace: Trace<S::State>,
    base_cost: f64,
}

impl<'a, S: HybridSystem> RolloutObjective<'a, S> {
    pub fn new(system: &'a S, base: Schedule) -> Result<Self, SolveError> {
        check_schedule(system, &base)?;
        let (trace, base_cost) = trace_schedule(system, &base);
        Ok(Self {
            system,
            base,
            trace,
            base_cost,
        })
    }

    pub fn base(&self) -> &Schedule {
        &self.base
    }

    pub fn into_base(self) -> Schedule {
        self.base
    }
}

impl<S: HybridSystem> SwitchObjective for RolloutObjective<'_, S> {
    fn mode_count(&self) -> usize {
        self.system.mode_count()
    }

    fn horizon(&self) -> usize {
        self.system.horizon()
    }

    fn base_cost(&self) -> f64 {
        self.base_cost
    }

    fn candidate_cost(&self, switch: &SwitchTuple) -> f64 {
        let start = switch.start;
        if start >= self.trace.acc_before.len() {
            // base diverged before the window opens; the shared prefix diverges too
            return f64::INFINITY;
        }
        let base = &self.base;
        let mode_at = |k: usize| if switch.covers(k) { switch.mode } else { base.mode_at(k) };
        let horizon = self.system.horizon();
        rollout_from(
            horizon,
            self.system.dt(),
            start,
            self.trace.states[start].clone(),
            self.trace.acc_before[start],
            |x, k| self.system.step(x, k, mode_at(k)),
            |x, k| {
                let k = k.min(horizon - 1);
                let m = if switch.covers(k) { switch.mode } else { schedule_mode(base, k) };
                self.system.stage_cost(x, m)
            },
            |x| self.system.terminal_cost(x),
            None,
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStop {
    /// An improving candidate was found.
    Improved,
    /// Every candidate was checked and none improves.
    Exhausted,
    /// The rollout budget ran out first.
    Budget,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchSearch {
    /// Improving candidate and its cost.
    pub best: Option<(SwitchTuple, f64)>,
    pub evaluations: u64,
    pub batches: u64,
    pub stop: SearchStop,
}

fn rank(a: &(f64, u64), b: &(f64, u64)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

// Costs of `indices`, in order; parallel evaluation keeps the order.
fn costs_of<O: SwitchObjective>(objective: &O, space: &CandidateSpace, indices: &[u64], parallel: bool) -> Vec<f64> {
    let eval = |&i: &u64| objective.candidate_cost(&space.index_to_tuple(i).expect("drawn index is valid"));
    if parallel {
        indices.par_iter().map(eval).collect()
    } else {
        indices.iter().map(eval).collect()
    }
}

fn minimum(indices: &[u64], costs: &[f64]) -> Option<(f64, u64)> {
    costs
        .iter()
        .copied()
        .zip(indices.iter().copied())
        .min_by(rank)
}

/// Scans all `Z` candidates (or the first `budget` of them in index order) and
/// returns the minimizer if it beats the base by more than `tolerance`.
/// Ties go to the lexicographically smallest `(mode, start, duration)`.
pub fn solve_single_switch_exhaustive<O: SwitchObjective>(
    objective: &O,
    tolerance: f64,
    parallel: bool,
    budget: Option<u64>,
) -> SwitchSearch {
    let space = CandidateSpace::new(objective.mode_count(), objective.horizon(), 0)
        .expect("objective has at least one mode and step");
    let total = space.total();
    let count = budget.map_or(total, |b| b.min(total));
    let eval = |i: u64| (objective.candidate_cost(&space.index_to_tuple(i).expect("index below total")), i);
    let best = if parallel {
        (0..count).into_par_iter().map(eval).min_by(rank)
    } else {
        (0..count).map(eval).min_by(rank)
    };
    let threshold = objective.base_cost() - tolerance;
    let improving = best.filter(|(c, _)| *c < threshold);
    SwitchSearch {
        best: improving.map(|(c, i)| (space.index_to_tuple(i).expect("index below total"), c)),
        evaluations: count,
        batches: u64::from(count > 0),
        stop: match (improving, count == total) {
            (Some(_), _) => SearchStop::Improved,
            (None, true) => SearchStop::Exhausted,
            (None, false) => SearchStop::Budget,
        },
    }
}

/// Draws batches of `config.batch_size` candidates without replacement from
/// `space` until one improves on the base by more than `config.tolerance`.
///
/// Under first-improvement the first improving candidate in draw order wins and
/// evaluations are counted up to it. Under best-of-batch the batch minimum wins.
/// `space` is not reset here, so repeated calls continue the same permutation.
pub fn solve_single_switch_sampled<O: SwitchObjective>(
    objective: &O,
    config: &SolverConfig,
    space: &mut CandidateSpace,
    budget: Option<u64>,
) -> Result<SwitchSearch, SolveError> {
    config.validate()?;
    if space.mode_count() != objective.mode_count() || space.horizon() != objective.horizon() {
        return Err(SolveError::InvalidConfig(format!(
            "candidate space is for M={}, T={} but the problem has M={}, T={}",
            space.mode_count(),
            space.horizon(),
            objective.mode_count(),
            objective.horizon()
        )));
    }
    let threshold = objective.base_cost() - config.tolerance;
    let mut evaluations = 0u64;
    let mut batches = 0u64;
    loop {
        if space.remaining() == 0 {
            return Ok(SwitchSearch {
                best: None,
                evaluations,
                batches,
                stop: SearchStop::Exhausted,
            });
        }
        let left = budget.map(|b| b.saturating_sub(evaluations));
        if left == Some(0) {
            return Ok(SwitchSearch {
                best: None,
                evaluations,
                batches,
                stop: SearchStop::Budget,
            });
        }
        let n = left.map_or(config.batch_size, |l| l.min(config.batch_size as u64) as usize);
        let indices = space.draw_indices(n)?;
        batches += 1;
        let found = match config.policy {
            AcceptancePolicy::FirstImprovement => {
                if config.parallel {
                    let costs = costs_of(objective, space, &indices, true);
                    let hit = costs.iter().position(|&c| c < threshold);
                    evaluations += hit.map_or(indices.len(), |p| p + 1) as u64;
                    hit.map(|p| (costs[p], indices[p]))
                } else {
                    let mut hit = None;
                    for &i in &indices {
                        evaluations += 1;
                        let c = objective.candidate_cost(&space.index_to_tuple(i)?);
                        if c < threshold {
                            hit = Some((c, i));
                            break;
                        }
                    }
                    hit
                }
            }
            AcceptancePolicy::BestOfBatch => {
                let costs = costs_of(objective, space, &indices, config.parallel);
                evaluations += indices.len() as u64;
                minimum(&indices, &costs).filter(|(c, _)| *c < threshold)
            }
        };
        if let Some((c, i)) = found {
            return Ok(SwitchSearch {
                best: Some((space.index_to_tuple(i)?, c)),
                evaluations,
                batches,
                stop: SearchStop::Improved,
            });
        }
    }
}

/// Upper bound on batches a sampled search can draw from a fresh space.
pub fn max_batches(mode_count: usize, horizon: usize, batch_size: usize) -> u64 {
    candidate_count(mode_count, horizon).div_ceil(batch_size as u64)
}
