//! Black-box hybrid systems.
//!
//! A [`HybridSystem`] exposes one deterministic transition map per mode plus
//! stage and terminal costs. Systems whose modes are levels of a scalar
//! control also implement [`ControlSystem`], which is what the continuous
//! baselines (MPPI, iLQR) optimize over.

mod cartpole;
mod double_integrator;
mod table;

pub use cartpole::{Cartpole, CartpoleConfig, CartpoleParams};
pub use double_integrator::{DoubleIntegrator, DoubleIntegratorConfig};
pub use table::TableSystem;

use std::fmt;

use crate::error::SystemError;
use crate::schedule::ModeId;

pub trait HybridSystem: Sync {
    type State: Clone + Send + Sync + fmt::Debug;

    fn mode_count(&self) -> usize;
    fn horizon(&self) -> usize;
    /// Seconds per discrete step.
    fn dt(&self) -> f64;
    fn initial_state(&self) -> Self::State;

    /// `x_{k+1} = F_m(x_k, k)`. Must be a pure function of its inputs.
    fn step(&self, x: &Self::State, k: usize, mode: ModeId) -> Result<Self::State, SystemError>;

    /// Running cost `l(x, m)`, before multiplication by `dt`.
    fn stage_cost(&self, x: &Self::State, mode: ModeId) -> Result<f64, SystemError>;

    fn terminal_cost(&self, x: &Self::State) -> Result<f64, SystemError>;

    /// Mode used for default schedules and receding-horizon padding.
    fn default_mode(&self) -> ModeId {
        ModeId(0)
    }

    fn state_names(&self) -> Vec<String>;
    fn state_values(&self, x: &Self::State) -> Vec<f64>;
}

/// Fixed-size real state vectors.
pub trait VectorState: Clone + Send + Sync + fmt::Debug {
    fn as_slice(&self) -> &[f64];
    fn from_slice(values: &[f64]) -> Self;

    fn is_finite(&self) -> bool {
        self.as_slice().iter().all(|v| v.is_finite())
    }
}

impl<const N: usize> VectorState for [f64; N] {
    fn as_slice(&self) -> &[f64] {
        self
    }

    fn from_slice(values: &[f64]) -> Self {
        let mut out = [0.0; N];
        out.copy_from_slice(values);
        out
    }
}

/// Hybrid systems whose mode `m` applies the `m`-th level of a bounded scalar control.
pub trait ControlSystem: HybridSystem
where
    Self::State: VectorState,
{
    fn control_bounds(&self) -> (f64, f64);

    /// Control value applied by `mode`.
    fn mode_control(&self, mode: ModeId) -> f64;

    fn step_control(&self, x: &Self::State, k: usize, u: f64) -> Result<Self::State, SystemError>;

    fn stage_cost_control(&self, x: &Self::State, u: f64) -> Result<f64, SystemError>;
}

/// `M` levels evenly spaced on `[lo, hi]`, ascending.
pub fn uniform_levels(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { hi } else { lo + i as f64 * step })
        .collect()
}

/// Index of the level closest to zero, lowest index on ties.
pub(crate) fn zero_level(levels: &[f64]) -> ModeId {
    let mut best = 0;
    for (i, v) in levels.iter().enumerate() {
        if v.abs() < levels[best].abs() {
            best = i;
        }
    }
    ModeId(best)
}

pub(crate) fn check_finite(values: &[f64], step: usize) -> Result<(), SystemError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(SystemError::NonFiniteState { step })
    }
}

/// The same system restarted from `initial` at absolute step `offset`
/// with its own horizon. Used for receding-horizon subproblems.
#[derive(Clone, Debug)]
pub struct Rebased<'a, S: HybridSystem> {
    inner: &'a S,
    initial: S::State,
    horizon: usize,
    offset: usize,
}

impl<'a, S: HybridSystem> Rebased<'a, S> {
    pub fn new(inner: &'a S, initial: S::State, horizon: usize, offset: usize) -> Self {
        Self {
            inner,
            initial,
            horizon,
            offset,
        }
    }

    pub fn inner(&self) -> &S {
        self.inner
    }
}

impl<S: HybridSystem> HybridSystem for Rebased<'_, S> {
    type State = S::State;

    fn mode_count(&self) -> usize {
        self.inner.mode_count()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn dt(&self) -> f64 {
        self.inner.dt()
    }

    fn initial_state(&self) -> S::State {
        self.initial.clone()
    }

    fn step(&self, x: &S::State, k: usize, mode: ModeId) -> Result<S::State, SystemError> {
        self.inner.step(x, k + self.offset, mode)
    }

    fn stage_cost(&self, x: &S::State, mode: ModeId) -> Result<f64, SystemError> {
        self.inner.stage_cost(x, mode)
    }

    fn terminal_cost(&self, x: &S::State) -> Result<f64, SystemError> {
        self.inner.terminal_cost(x)
    }

    fn default_mode(&self) -> ModeId {
        self.inner.default_mode()
    }

    fn state_names(&self) -> Vec<String> {
        self.inner.state_names()
    }

    fn state_values(&self, x: &S::State) -> Vec<f64> {
        self.inner.state_values(x)
    }
}

impl<S> ControlSystem for Rebased<'_, S>
where
    S: ControlSystem,
    S::State: VectorState,
{
    fn control_bounds(&self) -> (f64, f64) {
        self.inner.control_bounds()
    }

    fn mode_control(&self, mode: ModeId) -> f64 {
        self.inner.mode_control(mode)
    }

    fn step_control(&self, x: &S::State, k: usize, u: f64) -> Result<S::State, SystemError> {
        self.inner.step_control(x, k + self.offset, u)
    }

    fn stage_cost_control(&self, x: &S::State, u: f64) -> Result<f64, SystemError> {
        self.inner.stage_cost_control(x, u)
    }
}
