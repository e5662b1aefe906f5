use std::f64::consts::FRAC_PI_2;

use super::{check_finite, uniform_levels, zero_level, ControlSystem, HybridSystem};
use crate::error::SystemError;
use crate::schedule::ModeId;

/// Physical constants of the cart and pole.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartpoleParams {
    pub cart_mass: f64,
    pub pole_mass: f64,
    /// Distance from pivot to the pole's center of mass.
    pub pole_half_length: f64,
    pub gravity: f64,
}

impl Default for CartpoleParams {
    fn default() -> Self {
        Self {
            cart_mass: 1.0,
            pole_mass: 0.1,
            pole_half_length: 0.5,
            gravity: 9.81,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CartpoleConfig {
    pub horizon: usize,
    pub dt: f64,
    pub mode_count: usize,
    pub u_min: f64,
    pub u_max: f64,
    /// `[theta, p, theta_dot, p_dot]`, with `theta = 0` upright.
    pub initial_state: [f64; 4],
    pub params: CartpoleParams,
    /// RK4 substeps per `dt`.
    pub substeps: usize,
}

impl Default for CartpoleConfig {
    fn default() -> Self {
        Self {
            horizon: 100,
            dt: 0.05,
            mode_count: 5,
            u_min: -10.0,
            u_max: 10.0,
            initial_state: [FRAC_PI_2, 0.0, 0.0, 0.0],
            params: CartpoleParams::default(),
            substeps: 8,
        }
    }
}

/// Cart-pole swing-up with `M` constant-force modes held for one step each.
///
/// State layout is `[theta, p, theta_dot, p_dot]`. The angle is not wrapped;
/// the cost only sees `cos(theta)`.
#[derive(Clone, Debug)]
pub struct Cartpole {
    config: CartpoleConfig,
    levels: Vec<f64>,
}

impl Cartpole {
    pub fn new(config: CartpoleConfig) -> Result<Self, SystemError> {
        let invalid = |msg: String| Err(SystemError::InvalidArgument(msg));
        if config.mode_count < 2 {
            return invalid(format!("mode_count must be >= 2 (got {})", config.mode_count));
        }
        if !(config.u_min < config.u_max) {
            return invalid(format!(
                "u_min must be below u_max (got {} and {})",
                config.u_min, config.u_max
            ));
        }
        if !(config.dt > 0.0) || !config.dt.is_finite() {
            return invalid("dt must be positive".into());
        }
        if config.horizon == 0 {
            return invalid("horizon must be >= 1".into());
        }
        if config.substeps == 0 {
            return invalid("substeps must be >= 1".into());
        }
        let p = &config.params;
        if !(p.cart_mass > 0.0 && p.pole_mass > 0.0 && p.pole_half_length > 0.0 && p.gravity >= 0.0) {
            return invalid("cartpole masses and pole length must be positive".into());
        }
        if config.initial_state.iter().any(|v| !v.is_finite()) {
            return invalid("initial_state must be finite".into());
        }
        let levels = uniform_levels(config.u_min, config.u_max, config.mode_count);
        Ok(Self { config, levels })
    }

    pub fn config(&self) -> &CartpoleConfig {
        &self.config
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    fn derivative(&self, x: &[f64; 4], force: f64) -> [f64; 4] {
        let CartpoleParams {
            cart_mass,
            pole_mass,
            pole_half_length: l,
            gravity: g,
        } = self.config.params;
        let [theta, _p, theta_dot, p_dot] = *x;
        let (sin, cos) = theta.sin_cos();
        let total = cart_mass + pole_mass;
        let temp = (force + pole_mass * l * theta_dot * theta_dot * sin) / total;
        let theta_acc = (g * sin - cos * temp) / (l * (4.0 / 3.0 - pole_mass * cos * cos / total));
        let p_acc = temp - pole_mass * l * theta_acc * cos / total;
        [theta_dot, p_dot, theta_acc, p_acc]
    }

    fn integrate(&self, x: &[f64; 4], force: f64) -> [f64; 4] {
        let h = self.config.dt / self.config.substeps as f64;
        let axpy = |a: &[f64; 4], s: f64, b: &[f64; 4]| -> [f64; 4] {
            std::array::from_fn(|i| a[i] + s * b[i])
        };
        let mut state = *x;
        for _ in 0..self.config.substeps {
            let k1 = self.derivative(&state, force);
            let k2 = self.derivative(&axpy(&state, 0.5 * h, &k1), force);
            let k3 = self.derivative(&axpy(&state, 0.5 * h, &k2), force);
            let k4 = self.derivative(&axpy(&state, h, &k3), force);
            state = std::array::from_fn(|i| {
                state[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            });
        }
        state
    }

    fn upright_error(theta: f64) -> f64 {
        let c = theta.cos() - 1.0;
        4.0 * c * c
    }
}

impl HybridSystem for Cartpole {
    type State = [f64; 4];

    fn mode_count(&self) -> usize {
        self.config.mode_count
    }

    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn dt(&self) -> f64 {
        self.config.dt
    }

    fn initial_state(&self) -> [f64; 4] {
        self.config.initial_state
    }

    fn step(&self, x: &[f64; 4], k: usize, mode: ModeId) -> Result<[f64; 4], SystemError> {
        self.step_control(x, k, self.levels[mode.0])
    }

    fn stage_cost(&self, x: &[f64; 4], mode: ModeId) -> Result<f64, SystemError> {
        self.stage_cost_control(x, self.levels[mode.0])
    }

    fn terminal_cost(&self, x: &[f64; 4]) -> Result<f64, SystemError> {
        check_finite(x, 0)?;
        Ok(Self::upright_error(x[0]))
    }

    /// The zero-force level, so default schedules start from a neutral input.
    fn default_mode(&self) -> ModeId {
        zero_level(&self.levels)
    }

    fn state_names(&self) -> Vec<String> {
        ["theta", "p", "theta_dot", "p_dot"].map(String::from).to_vec()
    }

    fn state_values(&self, x: &[f64; 4]) -> Vec<f64> {
        x.to_vec()
    }
}

impl ControlSystem for Cartpole {
    fn control_bounds(&self) -> (f64, f64) {
        (self.config.u_min, self.config.u_max)
    }

    fn mode_control(&self, mode: ModeId) -> f64 {
        self.levels[mode.0]
    }

    fn step_control(&self, x: &[f64; 4], k: usize, u: f64) -> Result<[f64; 4], SystemError> {
        check_finite(x, k)?;
        check_finite(&[u], k)?;
        let next = self.integrate(x, u);
        check_finite(&next, k + 1)?;
        Ok(next)
    }

    fn stage_cost_control(&self, x: &[f64; 4], u: f64) -> Result<f64, SystemError> {
        check_finite(x, 0)?;
        let [theta, p, theta_dot, p_dot] = *x;
        Ok(Self::upright_error(theta)
            + 0.1 * p * p
            + 0.1 * (theta_dot * theta_dot + p_dot * p_dot)
            + u * u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn default_model() -> Cartpole {
        Cartpole::new(CartpoleConfig::default()).unwrap()
    }

    #[test]
    fn defaults() {
        let c = default_model();
        assert_eq!(c.levels(), &[-10.0, -5.0, 0.0, 5.0, 10.0]);
        assert_eq!(c.horizon(), 100);
        assert_eq!(c.initial_state()[0], FRAC_PI_2);
        assert_eq!(&c.initial_state()[1..], &[0.0, 0.0, 0.0]);
        assert_eq!(c.default_mode(), ModeId(2));
        assert_eq!(c.mode_control(ModeId(2)), 0.0);
    }

    #[test]
    fn rejects_bad_config() {
        for cfg in [
            CartpoleConfig { mode_count: 1, ..Default::default() },
            CartpoleConfig { u_min: 1.0, u_max: 1.0, ..Default::default() },
            CartpoleConfig { dt: -0.1, ..Default::default() },
            CartpoleConfig { dt: 0.0, ..Default::default() },
        ] {
            assert!(matches!(Cartpole::new(cfg), Err(SystemError::InvalidArgument(_))));
        }
    }

    #[test]
    fn stage_cost_examples() {
        let c = default_model();
        let zero = c.default_mode();
        assert_eq!(c.stage_cost(&[FRAC_PI_2, 0.0, 0.0, 0.0], zero).unwrap(), 4.0 * (FRAC_PI_2.cos() - 1.0).powi(2));
        assert!((c.stage_cost(&[FRAC_PI_2, 0.0, 0.0, 0.0], zero).unwrap() - 4.0).abs() < 1e-15);
        assert_eq!(c.stage_cost(&[0.0; 4], zero).unwrap(), 0.0);
        assert_eq!(c.stage_cost_control(&[0.0; 4], 2.0).unwrap(), 4.0);
    }

    #[test]
    fn terminal_cost_examples() {
        let c = default_model();
        assert_eq!(c.terminal_cost(&[0.0; 4]).unwrap(), 0.0);
        assert_eq!(c.terminal_cost(&[PI, 0.0, 0.0, 0.0]).unwrap(), 16.0);
        assert!((c.terminal_cost(&[FRAC_PI_2, 0.0, 0.0, 0.0]).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn non_finite_state_is_reported() {
        let c = default_model();
        let bad = [f64::NAN, 0.0, 0.0, 0.0];
        assert!(matches!(c.step(&bad, 3, ModeId(0)), Err(SystemError::NonFiniteState { step: 3 })));
        assert!(c.stage_cost(&bad, ModeId(0)).is_err());
        assert!(c.terminal_cost(&[f64::INFINITY, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn equilibrium_holds() {
        let c = default_model();
        let mut x = [0.0; 4];
        for k in 0..100 {
            x = c.step(&x, k, c.default_mode()).unwrap();
            assert!(x.iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn falls_away_from_upright() {
        // horizontal pole under zero force swings downward
        let c = default_model();
        let x = c.step(&c.initial_state(), 0, c.default_mode()).unwrap();
        assert!(x[2] > 0.0);
        assert!(x[0] > FRAC_PI_2);
    }

    #[test]
    fn substep_refinement_converges() {
        let coarse = default_model();
        let fine = Cartpole::new(CartpoleConfig { substeps: 16, ..Default::default() }).unwrap();
        let modes: Vec<ModeId> = (0..100).map(|k| ModeId((k * 7 + k / 9) % 5)).collect();
        let (mut a, mut b) = (coarse.initial_state(), fine.initial_state());
        for (k, &m) in modes.iter().enumerate() {
            a = coarse.step(&a, k, m).unwrap();
            b = fine.step(&b, k, m).unwrap();
        }
        for i in 0..4 {
            assert!((a[i] - b[i]).abs() < 1e-6, "component {i}: {} vs {}", a[i], b[i]);
        }
    }

    #[test]
    fn costs_are_non_negative() {
        let c = default_model();
        let mut x = c.initial_state();
        for k in 0..100 {
            let m = ModeId((k * 3) % 5);
            assert!(c.stage_cost(&x, m).unwrap() >= 0.0);
            assert!(c.terminal_cost(&x).unwrap() >= 0.0);
            x = c.step(&x, k, m).unwrap();
        }
    }
}
