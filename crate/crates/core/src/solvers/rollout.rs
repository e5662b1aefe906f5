//! Forward simulation and the rollout objective
//! `J = sum_{k=0}^{T} l(x_k, m_k) dt + c_f(x_T)`.
//!
//! Only `T` modes exist, so the cost term at `k = T` uses the last mode
//! `K(T-1)` (the last control for continuous rollouts).

use crate::error::{SolveError, SystemError};
use crate::schedule::{ModeId, Schedule};
use crate::systems::{ControlSystem, HybridSystem, VectorState};

/// States `x_0..=x_T`, per-step costs `l(x_k) dt` for `k in [0, T]` and the total `J`.
///
/// A diverged rollout is truncated at the last finite state and has
/// `total_cost = +inf`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord<X> {
    pub states: Vec<X>,
    pub stage_costs: Vec<f64>,
    pub terminal_cost: f64,
    pub total_cost: f64,
    pub diverged: bool,
}

pub(crate) struct Trace<X> {
    pub states: Vec<X>,
    /// Accumulated cost before stage `k` is added, aligned with `states`.
    pub acc_before: Vec<f64>,
    pub stage_costs: Vec<f64>,
    pub terminal_cost: f64,
}

impl<X> Default for Trace<X> {
    fn default() -> Self {
        Self {
            states: Vec::new(),
            acc_before: Vec::new(),
            stage_costs: Vec::new(),
            terminal_cost: 0.0,
        }
    }
}

/// Core rollout loop shared by every evaluator. `stage(x, k)` is called for
/// `k in [k0, T]`; it is the caller's job to map `k = T` onto the last input.
///
/// The accumulation order is fixed: resuming from a recorded
/// `(x_k, acc_before[k])` reproduces a full rollout bit for bit.
pub(crate) fn rollout_from<X, St, Co, Te>(
    horizon: usize,
    dt: f64,
    k0: usize,
    x0: X,
    acc0: f64,
    step: St,
    stage: Co,
    terminal: Te,
    mut trace: Option<&mut Trace<X>>,
) -> f64
where
    X: Clone,
    St: Fn(&X, usize) -> Result<X, SystemError>,
    Co: Fn(&X, usize) -> Result<f64, SystemError>,
    Te: Fn(&X) -> Result<f64, SystemError>,
{
    let mut x = x0;
    let mut acc = acc0;
    if let Some(t) = trace.as_deref_mut() {
        t.states.push(x.clone());
    }
    for k in k0..=horizon {
        let Ok(c) = stage(&x, k) else {
            return f64::INFINITY;
        };
        let c = c * dt;
        if let Some(t) = trace.as_deref_mut() {
            t.acc_before.push(acc);
            t.stage_costs.push(c);
        }
        acc += c;
        if k == horizon {
            break;
        }
        let Ok(next) = step(&x, k) else {
            return f64::INFINITY;
        };
        x = next;
        if let Some(t) = trace.as_deref_mut() {
            t.states.push(x.clone());
        }
    }
    let Ok(term) = terminal(&x) else {
        return f64::INFINITY;
    };
    if let Some(t) = trace.as_deref_mut() {
        t.terminal_cost = term;
    }
    let total = acc + term;
    if total.is_nan() {
        f64::INFINITY
    } else {
        total
    }
}

fn into_record<X>(trace: Trace<X>, total: f64) -> TrajectoryRecord<X> {
    TrajectoryRecord {
        diverged: !total.is_finite(),
        states: trace.states,
        stage_costs: trace.stage_costs,
        terminal_cost: trace.terminal_cost,
        total_cost: total,
    }
}

pub(crate) fn check_schedule<S: HybridSystem>(system: &S, schedule: &Schedule) -> Result<(), SolveError> {
    schedule.validate(system.mode_count(), system.horizon())?;
    Ok(())
}

/// Mode applied at rollout index `k`, with `k = T` mapped to the last entry.
pub(crate) fn schedule_mode(schedule: &Schedule, k: usize) -> ModeId {
    schedule.mode_at(k.min(schedule.horizon() - 1))
}

pub(crate) fn trace_schedule<S: HybridSystem>(
    system: &S,
    schedule: &Schedule,
) -> (Trace<S::State>, f64) {
    let mut trace = Trace::default();
    let total = rollout_from(
        system.horizon(),
        system.dt(),
        0,
        system.initial_state(),
        0.0,
        |x, k| system.step(x, k, schedule.mode_at(k)),
        |x, k| system.stage_cost(x, schedule_mode(schedule, k)),
        |x| system.terminal_cost(x),
        Some(&mut trace),
    );
    (trace, total)
}

/// Rolls `x_0` through the schedule's modes and records the trajectory and cost.
pub fn evaluate<S: HybridSystem>(
    system: &S,
    schedule: &Schedule,
) -> Result<TrajectoryRecord<S::State>, SolveError> {
    check_schedule(system, schedule)?;
    let (trace, total) = trace_schedule(system, schedule);
    Ok(into_record(trace, total))
}

/// Total cost only; no trajectory is kept.
pub fn schedule_cost<S: HybridSystem>(system: &S, schedule: &Schedule) -> Result<f64, SolveError> {
    check_schedule(system, schedule)?;
    Ok(rollout_from(
        system.horizon(),
        system.dt(),
        0,
        system.initial_state(),
        0.0,
        |x, k| system.step(x, k, schedule.mode_at(k)),
        |x, k| system.stage_cost(x, schedule_mode(schedule, k)),
        |x| system.terminal_cost(x),
        None,
    ))
}

fn check_controls<S>(system: &S, controls: &[f64]) -> Result<(), SolveError>
where
    S: ControlSystem,
    S::State: VectorState,
{
    if controls.len() != system.horizon() {
        return Err(SolveError::InvalidConfig(format!(
            "control sequence has {} entries, horizon is {}",
            controls.len(),
            system.horizon()
        )));
    }
    Ok(())
}

/// Continuous-control counterpart of [`evaluate`].
pub fn evaluate_controls<S>(system: &S, controls: &[f64]) -> Result<TrajectoryRecord<S::State>, SolveError>
where
    S: ControlSystem,
    S::State: VectorState,
{
    check_controls(system, controls)?;
    let mut trace = Trace::default();
    let total = controls_rollout(system, controls, Some(&mut trace));
    Ok(into_record(trace, total))
}

pub fn controls_cost<S>(system: &S, controls: &[f64]) -> Result<f64, SolveError>
where
    S: ControlSystem,
    S::State: VectorState,
{
    check_controls(system, controls)?;
    Ok(controls_rollout(system, controls, None))
}

pub(crate) fn controls_rollout<S>(system: &S, controls: &[f64], trace: Option<&mut Trace<S::State>>) -> f64
where
    S: ControlSystem,
    S::State: VectorState,
{
    let last = controls.len() - 1;
    rollout_from(
        system.horizon(),
        system.dt(),
        0,
        system.initial_state(),
        0.0,
        |x, k| system.step_control(x, k, controls[k]),
        |x, k| system.stage_cost_control(x, controls[k.min(last)]),
        |x| system.terminal_cost(x),
        trace,
    )
}
