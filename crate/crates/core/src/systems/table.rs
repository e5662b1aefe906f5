use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::HybridSystem;
use crate::error::SystemError;
use crate::schedule::ModeId;

/// Finite-state system given by explicit lookup tables.
///
/// `next[s][m]` is the successor of state `s` under mode `m`; `cost[s]` is the
/// stage cost of `s` for every mode. There is no terminal cost.
#[derive(Clone, Debug, PartialEq)]
pub struct TableSystem {
    next: Vec<Vec<usize>>,
    cost: Vec<f64>,
    initial: usize,
    horizon: usize,
    dt: f64,
}

impl TableSystem {
    pub fn new(
        next: Vec<Vec<usize>>,
        cost: Vec<f64>,
        initial: usize,
        horizon: usize,
        dt: f64,
    ) -> Result<Self, SystemError> {
        let invalid = |msg: String| Err(SystemError::InvalidArgument(msg));
        if next.is_empty() {
            return invalid("table needs at least one state".into());
        }
        if next.len() != cost.len() {
            return invalid(format!("{} transition rows but {} costs", next.len(), cost.len()));
        }
        let modes = next[0].len();
        if modes == 0 {
            return invalid("table needs at least one mode".into());
        }
        for (s, row) in next.iter().enumerate() {
            if row.len() != modes {
                return invalid(format!("state {s} lists {} modes, expected {modes}", row.len()));
            }
            if let Some(bad) = row.iter().find(|&&t| t >= next.len()) {
                return invalid(format!("state {s} points to unknown state {bad}"));
            }
        }
        if cost.iter().any(|c| !c.is_finite()) {
            return invalid("table costs must be finite".into());
        }
        if initial >= next.len() {
            return invalid(format!("initial state {initial} is not a table state"));
        }
        if horizon == 0 {
            return invalid("horizon must be >= 1".into());
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return invalid("dt must be positive".into());
        }
        Ok(Self {
            next,
            cost,
            initial,
            horizon,
            dt,
        })
    }

    /// Parses one line per state: successor ids per mode, then the stage cost.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn from_text(text: &str, initial: usize, horizon: usize, dt: f64) -> Result<Self, SystemError> {
        let mut next = Vec::new();
        let mut cost = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 2 {
                return Err(SystemError::TableParse {
                    line: i + 1,
                    message: "expected successor ids followed by a cost".into(),
                });
            }
            let (ids, c) = fields.split_at(fields.len() - 1);
            let row = ids
                .iter()
                .map(|f| f.parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| SystemError::TableParse {
                    line: i + 1,
                    message: format!("bad state id: {e}"),
                })?;
            let c = c[0].parse::<f64>().map_err(|e| SystemError::TableParse {
                line: i + 1,
                message: format!("bad cost: {e}"),
            })?;
            next.push(row);
            cost.push(c);
        }
        Self::new(next, cost, initial, horizon, dt)
    }

    /// Serializes in the format read by [`TableSystem::from_text`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (row, c) in self.next.iter().zip(&self.cost) {
            for id in row {
                out.push_str(&id.to_string());
                out.push(' ');
            }
            out.push_str(&c.to_string());
            out.push('\n');
        }
        out
    }

    /// Random table with integer costs in `[0, max_cost]` and `dt = 1`, so
    /// rollout sums are exact in floating point.
    pub fn random(seed: u64, states: usize, modes: usize, horizon: usize, max_cost: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let next = (0..states)
            .map(|_| (0..modes).map(|_| rng.random_range(0..states)).collect())
            .collect();
        let cost = (0..states)
            .map(|_| f64::from(rng.random_range(0..=max_cost)))
            .collect();
        Self::new(next, cost, 0, horizon, 1.0).expect("generated table is valid")
    }

    pub fn state_count(&self) -> usize {
        self.next.len()
    }

    pub fn cost_of(&self, state: usize) -> f64 {
        self.cost[state]
    }

    pub fn successor(&self, state: usize, mode: ModeId) -> usize {
        self.next[state][mode.0]
    }

    pub fn with_horizon(&self, horizon: usize) -> Result<Self, SystemError> {
        Self::new(self.next.clone(), self.cost.clone(), self.initial, horizon, self.dt)
    }
}

impl HybridSystem for TableSystem {
    type State = usize;

    fn mode_count(&self) -> usize {
        self.next[0].len()
    }

    fn horizon(&self) -> usize {
        self.horizon
    }

    fn dt(&self) -> f64 {
        self.dt
    }

    fn initial_state(&self) -> usize {
        self.initial
    }

    fn step(&self, x: &usize, k: usize, mode: ModeId) -> Result<usize, SystemError> {
        self.next
            .get(*x)
            .and_then(|row| row.get(mode.0))
            .copied()
            .ok_or_else(|| SystemError::InvalidArgument(format!("no transition for state {x}, mode {mode} at step {k}")))
    }

    fn stage_cost(&self, x: &usize, _mode: ModeId) -> Result<f64, SystemError> {
        self.cost
            .get(*x)
            .copied()
            .ok_or_else(|| SystemError::InvalidArgument(format!("unknown state {x}")))
    }

    fn terminal_cost(&self, _x: &usize) -> Result<f64, SystemError> {
        Ok(0.0)
    }

    fn state_names(&self) -> Vec<String> {
        vec!["state".into()]
    }

    fn state_values(&self, x: &usize) -> Vec<f64> {
        vec![*x as f64]
    }
}
