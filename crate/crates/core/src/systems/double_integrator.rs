use super::{check_finite, uniform_levels, zero_level, ControlSystem, HybridSystem};
use crate::error::SystemError;
use crate::schedule::ModeId;

#[derive(Clone, Debug, PartialEq)]
pub struct DoubleIntegratorConfig {
    pub horizon: usize,
    pub dt: f64,
    pub mode_count: usize,
    pub u_min: f64,
    pub u_max: f64,
    /// `[p, v]`
    pub initial_state: [f64; 2],
    pub q_pos: f64,
    pub q_vel: f64,
    pub r: f64,
    pub qf_pos: f64,
    pub qf_vel: f64,
}

impl Default for DoubleIntegratorConfig {
    fn default() -> Self {
        Self {
            horizon: 50,
            dt: 0.1,
            mode_count: 3,
            u_min: -1.0,
            u_max: 1.0,
            initial_state: [1.0, 0.0],
            q_pos: 1.0,
            q_vel: 1.0,
            r: 0.1,
            qf_pos: 10.0,
            qf_vel: 10.0,
        }
    }
}

/// Point mass with acceleration modes, explicit Euler:
/// `v' = v + a dt`, `p' = p + v dt`.
///
/// Cost is `q_pos p^2 + q_vel v^2 + r a^2` per step and
/// `qf_pos p^2 + qf_vel v^2` at the end.
#[derive(Clone, Debug)]
pub struct DoubleIntegrator {
    config: DoubleIntegratorConfig,
    levels: Vec<f64>,
}

impl DoubleIntegrator {
    pub fn new(config: DoubleIntegratorConfig) -> Result<Self, SystemError> {
        let invalid = |msg: &str| Err(SystemError::InvalidArgument(msg.to_string()));
        if config.mode_count < 2 {
            return invalid("mode_count must be >= 2");
        }
        if !(config.u_min < config.u_max) {
            return invalid("u_min must be below u_max");
        }
        if !(config.dt > 0.0) || !config.dt.is_finite() {
            return invalid("dt must be positive");
        }
        if config.horizon == 0 {
            return invalid("horizon must be >= 1");
        }
        let weights = [config.q_pos, config.q_vel, config.r, config.qf_pos, config.qf_vel];
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return invalid("cost weights must be finite and non-negative");
        }
        let levels = uniform_levels(config.u_min, config.u_max, config.mode_count);
        Ok(Self { config, levels })
    }

    pub fn config(&self) -> &DoubleIntegratorConfig {
        &self.config
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }
}

impl HybridSystem for DoubleIntegrator {
    type State = [f64; 2];

    fn mode_count(&self) -> usize {
        self.config.mode_count
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn initial_state(&self) -> [f64; 2] {
        self.config.initial_state
    }

    fn step(&self, x: &[f64; 2], k: usize, mode: ModeId) -> Result<[f64; 2], SystemError> {
        self.step_control(x, k, self.levels[mode.0])
    }

    fn stage_cost(&self, x: &[f64; 2], mode: ModeId) -> Result<f64, SystemError> {
        self.stage_cost_control(x, self.levels[mode.0])
    }

    fn terminal_cost(&self, x: &[f64; 2]) -> Result<f64, SystemError> {
        check_finite(x, 0)?;
        Ok(self.config.qf_pos * x[0] * x[0] + self.config.qf_vel * x[1] * x[1])
    }

    fn default_mode(&self) -> ModeId {
        zero_level(&self.levels)
    }

    fn state_names(&self) -> Vec<String> {
        vec!["p".into(), "v".into()]
    }

    fn state_values(&self, x: &[f64; 2]) -> Vec<f64> {
        x.to_vec()
    }
}

impl ControlSystem for DoubleIntegrator {
    fn control_bounds(&self) -> (f64, f64) {
        (self.config.u_min, self.config.u_max)
    }

    fn mode_control(&self, mode: ModeId) -> f64 {
        self.levels[mode.0]
    }

    fn step_control(&self, x: &[f64; 2], k: usize, u: f64) -> Result<[f64; 2], SystemError> {
        check_finite(x, k)?;
        check_finite(&[u], k)?;
        let dt = self.config.dt;
        let next = [x[0] + x[1] * dt, x[1] + u * dt];
        check_finite(&next, k + 1)?;
        Ok(next)
    }

    fn stage_cost_control(&self, x: &[f64; 2], u: f64) -> Result<f64, SystemError> {
        check_finite(x, 0)?;
        let c = &self.config;
        Ok(c.q_pos * x[0] * x[0] + c.q_vel * x[1] * x[1] + c.r * u * u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euler_step_example() {
        let di = DoubleIntegrator::new(DoubleIntegratorConfig {
            dt: 0.1,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(di.levels(), &[-1.0, 0.0, 1.0]);
        let next = di.step(&[0.0, 0.0], 0, ModeId(2)).unwrap();
        assert_eq!(next[0], 0.0);
        assert!((next[1] - 0.1).abs() < 1e-15);
        let next = di.step(&[1.0, 2.0], 5, ModeId(0)).unwrap();
        assert!((next[0] - 1.2).abs() < 1e-15);
        assert!((next[1] - 1.9).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(DoubleIntegrator::new(DoubleIntegratorConfig { mode_count: 1, ..Default::default() }).is_err());
        assert!(DoubleIntegrator::new(DoubleIntegratorConfig { r: -1.0, ..Default::default() }).is_err());
    }
}
