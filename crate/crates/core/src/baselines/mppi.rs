use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::BaselineConfig;
use crate::error::SolveError;
use crate::solvers::controls_cost;
use crate::systems::{ControlSystem, VectorState};

#[derive(Clone, Debug, PartialEq)]
pub struct MppiResult {
    pub controls: Vec<f64>,
    pub cost: f64,
    /// Nominal cost after each update.
    pub cost_history: Vec<f64>,
    /// Sum of the normalized weights of each iteration.
    pub weight_sums: Vec<f64>,
    /// Every rollout of some iteration diverged; `controls` is the nominal
    /// from before that iteration and `cost` is `+inf`.
    pub diverged: bool,
    pub evaluations: u64,
}

/// `w_i ∝ exp(-(J_i - J_min) / lambda)`, normalized. Diverged rollouts get
/// weight 0; `None` if all of them diverged.
pub fn mppi_weights(costs: &[f64], lambda: f64) -> Option<Vec<f64>> {
    let min = costs.iter().copied().filter(|c| c.is_finite()).min_by(f64::total_cmp)?;
    let raw: Vec<f64> = costs
        .iter()
        .map(|&c| if c.is_finite() { (-(c - min) / lambda).exp() } else { 0.0 })
        .collect();
    let total: f64 = raw.iter().sum();
    Some(raw.into_iter().map(|w| w / total).collect())
}

/// Path-integral updates of a nominal control sequence (zero by default).
///
/// Each iteration spends `samples` perturbed rollouts plus one rollout of the
/// updated nominal. Perturbed and updated controls are clamped to the bounds;
/// the weighted average uses the clamped perturbations.
pub fn mppi_continuous<S>(system: &S, config: &BaselineConfig, nominal: Option<&[f64]>) -> Result<MppiResult, SolveError>
where
    S: ControlSystem,
    S::State: VectorState,
{
    config.validate()?;
    let horizon = system.horizon();
    let (lo, hi) = system.control_bounds();
    let mut u: Vec<f64> = match nominal {
        Some(n) => n.iter().map(|v| v.clamp(lo, hi)).collect(),
        None => vec![0.0f64.clamp(lo, hi); horizon],
    };
    let mut cost = controls_cost(system, &u)?;
    let mut evaluations = 1u64;
    let per_iteration = config.samples as u64 + 1;
    let budget = config.budget.unwrap_or(1 + config.iterations as u64 * per_iteration);
    let noise = Normal::new(0.0, config.sigma).map_err(|e| SolveError::InvalidConfig(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut result = MppiResult {
        controls: Vec::new(),
        cost,
        cost_history: Vec::new(),
        weight_sums: Vec::new(),
        diverged: false,
        evaluations: 0,
    };

    while evaluations + per_iteration <= budget {
        let candidates: Vec<Vec<f64>> = (0..config.samples)
            .map(|_| u.iter().map(|&v| (v + noise.sample(&mut rng)).clamp(lo, hi)).collect())
            .collect();
        let costs: Vec<f64> = candidates
            .par_iter()
            .map(|c| controls_cost(system, c).unwrap_or(f64::INFINITY))
            .collect();
        evaluations += config.samples as u64;
        let Some(weights) = mppi_weights(&costs, config.lambda) else {
            result.diverged = true;
            cost = f64::INFINITY;
            break;
        };
        result.weight_sums.push(weights.iter().sum());
        for (k, uk) in u.iter_mut().enumerate() {
            let delta: f64 = weights.iter().zip(&candidates).map(|(w, c)| w * (c[k] - *uk)).sum();
            *uk = (*uk + delta).clamp(lo, hi);
        }
        cost = controls_cost(system, &u)?;
        evaluations += 1;
        result.cost_history.push(cost);
    }
    result.controls = u;
    result.cost = cost;
    result.evaluations = evaluations;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineMethod;
    use crate::systems::{Cartpole, CartpoleConfig};
    use proptest::prelude::*;

    #[test]
    fn hot_temperature_flattens_weights() {
        let w = mppi_weights(&[1.0, 1.0 + 1e-3, 1.0 + 2e-3], 1e9).unwrap();
        for wi in w {
            assert!((wi - 1.0 / 3.0).abs() < 1e-9);
        }
        assert_eq!(mppi_weights(&[f64::INFINITY, f64::INFINITY], 0.1), None);
        assert_eq!(mppi_weights(&[f64::INFINITY, 3.0], 0.1).unwrap(), vec![0.0, 1.0]);
    }

    proptest! {
        #[test]
        fn weights_normalized(costs in proptest::collection::vec(0.0f64..1e4, 1..40), lambda in 1e-3f64..1e3) {
            let w = mppi_weights(&costs, lambda).unwrap();
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            prop_assert!(w.iter().all(|&x| x >= 0.0));
        }
    }

    #[test]
    fn improves_on_zero_force_cartpole() {
        let sys = Cartpole::new(CartpoleConfig { horizon: 20, ..Default::default() }).unwrap();
        let cfg = BaselineConfig::new(BaselineMethod::Mppi).with_seed(4);
        let r = mppi_continuous(&sys, &cfg, None).unwrap();
        let zero = controls_cost(&sys, &[0.0; 20]).unwrap();
        assert!(r.cost < zero, "{} vs {zero}", r.cost);
        assert_eq!(r.cost_history.len(), 30);
        assert_eq!(r.evaluations, 1 + 30 * 26);
        assert!(r.weight_sums.iter().all(|s| (s - 1.0).abs() <= 1e-12));
        assert!(r.controls.iter().all(|u| (-10.0..=10.0).contains(u)));
        assert!(!r.diverged);
        assert_eq!(r, mppi_continuous(&sys, &cfg, None).unwrap());
    }

    #[test]
    fn all_diverged_keeps_nominal() {
        let sys = Cartpole::new(CartpoleConfig {
            horizon: 5,
            dt: 1e3,
            u_min: -1e300,
            u_max: 1e300,
            ..Default::default()
        })
        .unwrap();
        let cfg = BaselineConfig { iterations: 3, ..BaselineConfig::new(BaselineMethod::Mppi) };
        let r = mppi_continuous(&sys, &cfg, Some(&[0.0; 5])).unwrap();
        assert!(r.diverged);
        assert_eq!(r.cost, f64::INFINITY);
        assert_eq!(r.controls, vec![0.0; 5]);
    }
}
