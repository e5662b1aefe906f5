//! Comparison methods: random shooting and categorical CEM over mode
//! sequences, MPPI over continuous controls, and an iLQR reference solver.

mod cem;
mod ilqr;
mod mppi;
mod shooting;

pub use cem::{cem_categorical, CemPlanner, CemResult};
pub use ilqr::{fd_jacobians, ilqr_oracle, IlqrResult};
pub use mppi::{mppi_continuous, mppi_weights, MppiResult};
pub use shooting::{random_shooting, ModeSearch, RandomShootingPlanner};

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::SolveError;
use crate::schedule::Schedule;
use crate::solvers::schedule_cost;
use crate::systems::HybridSystem;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineMethod {
    RandomShooting,
    Cem,
    Mppi,
    Ilqr,
}

impl BaselineMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineMethod::RandomShooting => "random-shooting",
            BaselineMethod::Cem => "cem",
            BaselineMethod::Mppi => "mppi",
            BaselineMethod::Ilqr => "ilqr",
        }
    }

    /// Whether the method searches mode sequences rather than continuous controls.
    pub fn is_discrete(self) -> bool {
        matches!(self, BaselineMethod::RandomShooting | BaselineMethod::Cem)
    }
}

impl fmt::Display for BaselineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random-shooting" => Ok(BaselineMethod::RandomShooting),
            "cem" => Ok(BaselineMethod::Cem),
            "mppi" => Ok(BaselineMethod::Mppi),
            "ilqr" => Ok(BaselineMethod::Ilqr),
            other => Err(format!(
                "unknown baseline method `{other}` (expected random-shooting, cem, mppi or ilqr)"
            )),
        }
    }
}

/// Settings for every baseline. Fields a method does not use are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct BaselineConfig {
    pub method: BaselineMethod,
    /// Rollouts per iteration.
    pub samples: usize,
    pub iterations: usize,
    /// Total rollout budget. Overrides `iterations` for the sampling methods.
    pub budget: Option<u64>,
    pub seed: u64,
    /// Probability that random shooting resamples a given position.
    pub resample_fraction: f64,
    pub elite_fraction: f64,
    pub smoothing: f64,
    /// MPPI temperature.
    pub lambda: f64,
    /// MPPI noise standard deviation, in control units.
    pub sigma: f64,
    pub ilqr: IlqrSettings,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IlqrSettings {
    pub max_iterations: usize,
    /// Relative improvement `(J - J_new) / (1 + |J|)` below which a step is rejected.
    pub tolerance: f64,
    pub reg_min: f64,
    pub reg_max: f64,
    pub reg_factor: f64,
    /// Line-search factors are `2^0, 2^-1, ..., 2^-(line_search_steps - 1)`.
    pub line_search_steps: usize,
    pub fd_relative: f64,
    pub fd_floor: f64,
    /// Relative step for the second differences of the cost.
    pub fd_hessian: f64,
}

impl Default for IlqrSettings {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            tolerance: 1e-10,
            reg_min: 1e-6,
            reg_max: 1e6,
            reg_factor: 10.0,
            line_search_steps: 11,
            fd_relative: 1e-5,
            fd_floor: 1e-8,
            fd_hessian: 1e-4,
        }
    }
}

impl BaselineConfig {
    pub fn new(method: BaselineMethod) -> Self {
        Self {
            method,
            samples: 25,
            iterations: if method == BaselineMethod::Mppi { 30 } else { 50 },
            budget: None,
            seed: 0,
            resample_fraction: 0.1,
            elite_fraction: 0.1,
            smoothing: 1e-3,
            lambda: 0.1,
            sigma: 1.0,
            ilqr: IlqrSettings::default(),
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |msg: &str| Err(SolveError::InvalidConfig(msg.to_string()));
        if self.samples == 0 {
            return bad("samples must be >= 1");
        }
        if self.budget == Some(0) {
            return bad("budget must be >= 1");
        }
        if !(self.resample_fraction > 0.0 && self.resample_fraction <= 1.0) {
            return bad("resample_fraction must be in (0, 1]");
        }
        if !(self.elite_fraction > 0.0 && self.elite_fraction <= 1.0) {
            return bad("elite_fraction must be in (0, 1]");
        }
        if !(self.smoothing > 0.0 && self.smoothing.is_finite()) {
            return bad("smoothing must be positive");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return bad("lambda must be positive");
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad("sigma must be positive");
        }
        let il = &self.ilqr;
        if !(il.reg_min > 0.0 && il.reg_min <= il.reg_max && il.reg_factor > 1.0) {
            return bad("ilqr regularization needs 0 < reg_min <= reg_max and reg_factor > 1");
        }
        if il.line_search_steps == 0 {
            return bad("ilqr line_search_steps must be >= 1");
        }
        if !(il.fd_relative > 0.0 && il.fd_floor > 0.0 && il.fd_hessian > 0.0) {
            return bad("finite-difference steps must be positive");
        }
        if !(il.tolerance >= 0.0) {
            return bad("ilqr tolerance must be >= 0");
        }
        Ok(())
    }

    /// Rollouts available to a sampling method.
    pub(crate) fn rollout_budget(&self, per_iteration: u64) -> u64 {
        self.budget.unwrap_or(self.iterations as u64 * per_iteration)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapReport {
    pub method: String,
    pub horizon: usize,
    pub cost: f64,
    pub oracle_cost: f64,
    /// `(cost - oracle_cost) / horizon`; negative when the method beats the oracle.
    pub normalized_gap: f64,
}

pub fn measure_gap(
    method: &str,
    cost: f64,
    horizon: usize,
    oracle_cost: f64,
    oracle_horizon: usize,
) -> Result<GapReport, SolveError> {
    if horizon != oracle_horizon || horizon == 0 {
        return Err(SolveError::InvalidConfig(format!(
            "gap needs equal positive horizons, got {horizon} and {oracle_horizon}"
        )));
    }
    Ok(GapReport {
        method: method.to_string(),
        horizon,
        cost,
        oracle_cost,
        normalized_gap: (cost - oracle_cost) / horizon as f64,
    })
}

/// Costs of a batch of schedules, in input order.
pub(crate) fn batch_costs<S: HybridSystem>(system: &S, batch: &[Schedule]) -> Vec<f64> {
    batch
        .par_iter()
        .map(|s| schedule_cost(system, s).unwrap_or(f64::INFINITY))
        .collect()
}

/// Index of the smallest cost, lowest index on ties.
pub(crate) fn argmin(costs: &[f64]) -> Option<usize> {
    (0..costs.len()).min_by(|&a, &b| costs[a].total_cmp(&costs[b]).then(a.cmp(&b)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_arithmetic() {
        assert_eq!(measure_gap("x", 5.0, 20, 5.0, 20).unwrap().normalized_gap, 0.0);
        assert_eq!(measure_gap("x", 25.0, 20, 5.0, 20).unwrap().normalized_gap, 1.0);
        assert!(measure_gap("x", 4.0, 20, 5.0, 20).unwrap().normalized_gap < 0.0);
        assert!(measure_gap("x", 5.0, 20, 5.0, 40).is_err());
    }

    #[test]
    fn config_validation() {
        for m in [BaselineMethod::RandomShooting, BaselineMethod::Cem, BaselineMethod::Mppi, BaselineMethod::Ilqr] {
            BaselineConfig::new(m).validate().unwrap();
            assert_eq!(m.as_str().parse::<BaselineMethod>().unwrap(), m);
        }
        let base = BaselineConfig::new(BaselineMethod::Cem);
        assert!(BaselineConfig { samples: 0, ..base.clone() }.validate().is_err());
        assert!(BaselineConfig { elite_fraction: 0.0, ..base.clone() }.validate().is_err());
        assert!(BaselineConfig { elite_fraction: 1.5, ..base.clone() }.validate().is_err());
        assert!(BaselineConfig { lambda: 0.0, ..base.clone() }.validate().is_err());
        assert!(BaselineConfig { sigma: -1.0, ..base.clone() }.validate().is_err());
        assert!(BaselineConfig { smoothing: 0.0, ..base }.validate().is_err());
        assert!("ppo".parse::<BaselineMethod>().is_err());
    }

    #[test]
    fn argmin_prefers_first() {
        assert_eq!(argmin(&[3.0, 1.0, 1.0]), Some(1));
        assert_eq!(argmin(&[f64::INFINITY, 2.0]), Some(1));
        assert_eq!(argmin(&[]), None);
    }
}
