//! Experiment configuration files.
//!
//! A config is a TOML document. Unknown keys are rejected everywhere, and
//! every range check reports the offending field and, when it can be found,
//! its line in the source.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hysched::baselines::{BaselineConfig, BaselineMethod, IlqrSettings};
use hysched::solvers::{AcceptancePolicy, InnerSolver, SolverConfig};
use hysched::systems::{Cartpole, CartpoleConfig, CartpoleParams, DoubleIntegrator, DoubleIntegratorConfig, TableSystem};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Solve,
    Compare,
    SweepHorizon,
    Mpc,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Solve => "solve",
            ExperimentKind::Compare => "compare",
            ExperimentKind::SweepHorizon => "sweep-horizon",
            ExperimentKind::Mpc => "mpc",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Cartpole,
    DoubleIntegrator,
    Table,
}

impl SystemKind {
    fn as_str(self) -> &'static str {
        match self {
            SystemKind::Cartpole => "cartpole",
            SystemKind::DoubleIntegrator => "double_integrator",
            SystemKind::Table => "table",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub repetitions: usize,
    /// Where run directories go. Not part of the config hash.
    #[serde(default = "default_output_dir", skip_serializing)]
    pub output_dir: PathBuf,
    pub system: SystemBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub baselines: Vec<BaselineBlock>,
    #[serde(default)]
    pub compare: CompareBlock,
    #[serde(default)]
    pub sweep: SweepBlock,
    #[serde(default)]
    pub mpc: MpcBlock,
}

fn one() -> usize {
    1
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// System parameters. Missing values take the defaults of the chosen system;
/// values that do not apply to it are errors.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemBlock {
    pub system: Option<SystemKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cart_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pole_mass: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pole_half_length: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gravity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_pos: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_vel: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qf_pos: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qf_vel: Option<f64>,
    /// Transition table, relative to the config file.
    #[serde(skip_serializing)]
    pub table_file: Option<PathBuf>,
    /// SHA-256 of the table file, filled in on load so the hash tracks content.
    #[serde(skip_deserializing, skip_serializing_if = "Option::is_none")]
    pub table_sha256: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InnerName {
    Sampled,
    Exhaustive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    FirstImprovement,
    BestOfBatch,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub inner: InnerName,
    pub policy: PolicyName,
    pub batch_size: usize,
    pub max_iterations: usize,
    pub tolerance: f64,
    /// Rollout budget per solve; absent for unlimited.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_evaluations: Option<u64>,
    pub parallel: bool,
    /// Mode for the initial schedule; absent for the system's default mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_mode: Option<usize>,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            inner: InnerName::Sampled,
            policy: PolicyName::FirstImprovement,
            batch_size: d.batch_size,
            max_iterations: d.max_iterations,
            tolerance: d.tolerance,
            max_evaluations: None,
            parallel: true,
            initial_mode: None,
        }
    }
}

impl SolverBlock {
    pub fn inner_solver(&self) -> InnerSolver {
        match self.inner {
            InnerName::Sampled => InnerSolver::Sampled,
            InnerName::Exhaustive => InnerSolver::Exhaustive,
        }
    }

    pub fn solver_config(&self, seed: u64, budget: Option<u64>) -> SolverConfig {
        SolverConfig {
            batch_size: self.batch_size,
            max_iterations: self.max_iterations,
            tolerance: self.tolerance,
            policy: match self.policy {
                PolicyName::FirstImprovement => AcceptancePolicy::FirstImprovement,
                PolicyName::BestOfBatch => AcceptancePolicy::BestOfBatch,
            },
            seed,
            max_evaluations: budget,
            parallel: self.parallel,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodName {
    RandomShooting,
    Cem,
    Mppi,
    Ilqr,
}

impl MethodName {
    pub fn method(self) -> BaselineMethod {
        match self {
            MethodName::RandomShooting => BaselineMethod::RandomShooting,
            MethodName::Cem => BaselineMethod::Cem,
            MethodName::Mppi => BaselineMethod::Mppi,
            MethodName::Ilqr => BaselineMethod::Ilqr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineBlock {
    pub method: MethodName,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Absent: 30 for MPPI, 50 otherwise. Ignored when a rollout budget applies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default = "default_fraction")]
    pub resample_fraction: f64,
    #[serde(default = "default_fraction")]
    pub elite_fraction: f64,
    #[serde(default = "default_smoothing")]
    pub smoothing: f64,
    /// MPPI temperature.
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// MPPI noise standard deviation.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_ilqr_iterations")]
    pub max_iterations: usize,
    #[serde(default = "default_ilqr_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_reg_min")]
    pub reg_min: f64,
    #[serde(default = "default_reg_max")]
    pub reg_max: f64,
    #[serde(default = "default_line_search")]
    pub line_search_steps: usize,
}

fn default_samples() -> usize {
    25
}
fn default_fraction() -> f64 {
    0.1
}
fn default_smoothing() -> f64 {
    1e-3
}
fn default_temperature() -> f64 {
    0.1
}
fn default_sigma() -> f64 {
    1.0
}
fn default_ilqr_iterations() -> usize {
    IlqrSettings::default().max_iterations
}
fn default_ilqr_tolerance() -> f64 {
    IlqrSettings::default().tolerance
}
fn default_reg_min() -> f64 {
    IlqrSettings::default().reg_min
}
fn default_reg_max() -> f64 {
    IlqrSettings::default().reg_max
}
fn default_line_search() -> usize {
    IlqrSettings::default().line_search_steps
}

impl BaselineBlock {
    pub fn new(method: MethodName) -> Self {
        Self {
            method,
            samples: default_samples(),
            iterations: None,
            resample_fraction: default_fraction(),
            elite_fraction: default_fraction(),
            smoothing: default_smoothing(),
            temperature: default_temperature(),
            sigma: default_sigma(),
            max_iterations: default_ilqr_iterations(),
            tolerance: default_ilqr_tolerance(),
            reg_min: default_reg_min(),
            reg_max: default_reg_max(),
            line_search_steps: default_line_search(),
        }
    }

    pub fn baseline_config(&self, seed: u64, budget: Option<u64>) -> BaselineConfig {
        let base = BaselineConfig::new(self.method.method());
        BaselineConfig {
            samples: self.samples,
            iterations: self.iterations.unwrap_or(base.iterations),
            budget,
            seed,
            resample_fraction: self.resample_fraction,
            elite_fraction: self.elite_fraction,
            smoothing: self.smoothing,
            lambda: self.temperature,
            sigma: self.sigma,
            ilqr: IlqrSettings {
                max_iterations: self.max_iterations,
                tolerance: self.tolerance,
                reg_min: self.reg_min,
                reg_max: self.reg_max,
                line_search_steps: self.line_search_steps,
                ..base.ilqr.clone()
            },
            ..base
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CompareBlock {
    /// Rollouts per method and run.
    pub budget: u64,
    /// Compute the iLQR reference and gap columns.
    pub oracle: bool,
    /// Horizons to compare at; empty means the system horizon.
    pub horizons: Vec<usize>,
    pub include_hybrid: bool,
}

impl Default for CompareBlock {
    fn default() -> Self {
        Self {
            budget: 25_000,
            oracle: true,
            horizons: Vec::new(),
            include_hybrid: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    pub horizons: Vec<usize>,
    pub episode_length: usize,
    /// Rollouts per receding-horizon step.
    pub budget_per_step: u64,
    pub include_hybrid: bool,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            horizons: vec![10, 20, 40, 80],
            episode_length: 100,
            budget_per_step: 2000,
            include_hybrid: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MpcBlock {
    pub horizon: usize,
    pub episode_length: usize,
    pub budget_per_step: u64,
}

impl Default for MpcBlock {
    fn default() -> Self {
        Self {
            horizon: 20,
            episode_length: 100,
            budget_per_step: 2000,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub output_dir: Option<PathBuf>,
}

/// A parsed, validated config together with what it needs at run time.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ExperimentConfig,
    /// Table contents for table systems.
    pub table_text: Option<String>,
    /// SHA-256 of the resolved config, hex.
    pub hash: String,
}

impl LoadedConfig {
    pub fn run_id(&self) -> &str {
        &self.hash[..12]
    }

    /// Builds the configured system at `horizon`.
    pub fn build_system(&self, horizon: usize) -> Result<AnySystem, CliError> {
        let s = &self.config.system;
        let err = |e: hysched::SystemError| CliError::config(None, "system", e.to_string());
        match s.system.expect("resolved") {
            SystemKind::Cartpole => {
                let x0 = s.initial_state.as_deref().expect("resolved");
                let cfg = CartpoleConfig {
                    horizon,
                    dt: s.dt.expect("resolved"),
                    mode_count: s.mode_count.expect("resolved"),
                    u_min: s.u_min.expect("resolved"),
                    u_max: s.u_max.expect("resolved"),
                    initial_state: [x0[0], x0[1], x0[2], x0[3]],
                    params: CartpoleParams {
                        cart_mass: s.cart_mass.expect("resolved"),
                        pole_mass: s.pole_mass.expect("resolved"),
                        pole_half_length: s.pole_half_length.expect("resolved"),
                        gravity: s.gravity.expect("resolved"),
                    },
                    substeps: s.substeps.expect("resolved"),
                };
                Ok(AnySystem::Cartpole(Cartpole::new(cfg).map_err(err)?))
            }
            SystemKind::DoubleIntegrator => {
                let x0 = s.initial_state.as_deref().expect("resolved");
                let cfg = DoubleIntegratorConfig {
                    horizon,
                    dt: s.dt.expect("resolved"),
                    mode_count: s.mode_count.expect("resolved"),
                    u_min: s.u_min.expect("resolved"),
                    u_max: s.u_max.expect("resolved"),
                    initial_state: [x0[0], x0[1]],
                    q_pos: s.q_pos.expect("resolved"),
                    q_vel: s.q_vel.expect("resolved"),
                    r: s.r.expect("resolved"),
                    qf_pos: s.qf_pos.expect("resolved"),
                    qf_vel: s.qf_vel.expect("resolved"),
                };
                Ok(AnySystem::DoubleIntegrator(DoubleIntegrator::new(cfg).map_err(err)?))
            }
            SystemKind::Table => {
                let text = self.table_text.as_deref().expect("table loaded");
                let initial = s.initial_state.as_deref().expect("resolved")[0] as usize;
                let t = TableSystem::from_text(text, initial, horizon, s.dt.expect("resolved")).map_err(err)?;
                Ok(AnySystem::Table(t))
            }
        }
    }

    pub fn horizon(&self) -> usize {
        self.config.system.horizon.expect("resolved")
    }
}

pub enum AnySystem {
    Cartpole(Cartpole),
    DoubleIntegrator(DoubleIntegrator),
    Table(TableSystem),
}

/// Reads and validates a config file.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<LoadedConfig, CliError> {
    let source = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&source, base, overrides)
}

/// Parses config text; `base_dir` resolves relative table paths.
pub fn parse_config(source: &str, base_dir: &Path, overrides: &Overrides) -> Result<LoadedConfig, CliError> {
    let mut config: ExperimentConfig = toml::from_str(source).map_err(|e| {
        let line = e.span().map(|s| source[..s.start].matches('\n').count() + 1);
        CliError::config(line, "", e.message().trim().to_string())
    })?;
    if let Some(seed) = overrides.seed {
        config.seed = seed;
    }
    if let Some(dir) = &overrides.output_dir {
        config.output_dir = dir.clone();
    }
    if let Some(b) = overrides.budget {
        match config.experiment {
            ExperimentKind::Solve => config.solver.max_evaluations = Some(b),
            ExperimentKind::Compare => config.compare.budget = b,
            ExperimentKind::SweepHorizon => config.sweep.budget_per_step = b,
            ExperimentKind::Mpc => config.mpc.budget_per_step = b,
        }
    }
    let v = Validator { source };
    let table_text = resolve_system(&mut config.system, base_dir, &v)?;
    validate(&config, &v)?;
    let loaded = LoadedConfig {
        hash: config_hash(&config),
        config,
        table_text,
    };
    // constructing the system runs the library's own checks
    loaded.build_system(loaded.horizon())?;
    Ok(loaded)
}

pub fn config_hash(config: &ExperimentConfig) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

struct Validator<'a> {
    source: &'a str,
}

impl Validator<'_> {
    /// 1-based line of `key = ...` inside `[section]` (the `index`-th one for arrays of tables).
    fn line_of(&self, section: &str, index: usize, key: &str) -> Option<usize> {
        let mut current = String::new();
        let mut table = false;
        let mut seen: usize = 0;
        for (i, raw) in self.source.lines().enumerate() {
            let line = raw.trim();
            if let Some(name) = line.strip_prefix("[[").and_then(|l| l.split("]]").next()) {
                current = name.trim().to_string();
                table = true;
                if current == section {
                    seen += 1;
                }
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
                current = name.trim().to_string();
                table = true;
                continue;
            }
            let in_section = if section.is_empty() {
                !table
            } else {
                current == section && (seen == 0 || seen == index + 1)
            };
            if in_section {
                if let Some(rest) = line.strip_prefix(key) {
                    if rest.trim_start().starts_with('=') {
                        return Some(i + 1);
                    }
                }
            }
        }
        None
    }

    fn error(&self, section: &str, index: Option<usize>, key: &str, message: impl Into<String>) -> CliError {
        let line = self.line_of(section, index.unwrap_or(0), key);
        let field = match (section.is_empty(), index) {
            (true, _) => key.to_string(),
            (false, Some(i)) => format!("{section}[{i}].{key}"),
            (false, None) => format!("{section}.{key}"),
        };
        CliError::config(line, &field, message.into())
    }
}

fn positive(v: f64) -> bool {
    v > 0.0 && v.is_finite()
}

/// Fills system defaults, rejects fields that do not apply and loads tables.
fn resolve_system(s: &mut SystemBlock, base_dir: &Path, v: &Validator) -> Result<Option<String>, CliError> {
    let kind = s
        .system
        .ok_or_else(|| v.error("system", None, "system", "missing field `system`"))?;
    let not_for = |present: bool, key: &str| -> Result<(), CliError> {
        if present {
            Err(v.error("system", None, key, format!("`{key}` does not apply to system {}", kind.as_str())))
        } else {
            Ok(())
        }
    };
    let cart_only = [
        (s.substeps.is_some(), "substeps"),
        (s.cart_mass.is_some(), "cart_mass"),
        (s.pole_mass.is_some(), "pole_mass"),
        (s.pole_half_length.is_some(), "pole_half_length"),
        (s.gravity.is_some(), "gravity"),
    ];
    let di_only = [
        (s.q_pos.is_some(), "q_pos"),
        (s.q_vel.is_some(), "q_vel"),
        (s.r.is_some(), "r"),
        (s.qf_pos.is_some(), "qf_pos"),
        (s.qf_vel.is_some(), "qf_vel"),
    ];
    let control = [(s.u_min.is_some(), "u_min"), (s.u_max.is_some(), "u_max")];
    let mut table_text = None;
    match kind {
        SystemKind::Cartpole => {
            for (p, k) in di_only {
                not_for(p, k)?;
            }
            not_for(s.table_file.is_some(), "table_file")?;
            let d = CartpoleConfig::default();
            s.horizon.get_or_insert(d.horizon);
            s.dt.get_or_insert(d.dt);
            s.mode_count.get_or_insert(d.mode_count);
            s.u_min.get_or_insert(d.u_min);
            s.u_max.get_or_insert(d.u_max);
            s.initial_state.get_or_insert(d.initial_state.to_vec());
            s.substeps.get_or_insert(d.substeps);
            s.cart_mass.get_or_insert(d.params.cart_mass);
            s.pole_mass.get_or_insert(d.params.pole_mass);
            s.pole_half_length.get_or_insert(d.params.pole_half_length);
            s.gravity.get_or_insert(d.params.gravity);
        }
        SystemKind::DoubleIntegrator => {
            for (p, k) in cart_only {
                not_for(p, k)?;
            }
            not_for(s.table_file.is_some(), "table_file")?;
            let d = DoubleIntegratorConfig::default();
            s.horizon.get_or_insert(d.horizon);
            s.dt.get_or_insert(d.dt);
            s.mode_count.get_or_insert(d.mode_count);
            s.u_min.get_or_insert(d.u_min);
            s.u_max.get_or_insert(d.u_max);
            s.initial_state.get_or_insert(d.initial_state.to_vec());
            s.q_pos.get_or_insert(d.q_pos);
            s.q_vel.get_or_insert(d.q_vel);
            s.r.get_or_insert(d.r);
            s.qf_pos.get_or_insert(d.qf_pos);
            s.qf_vel.get_or_insert(d.qf_vel);
        }
        SystemKind::Table => {
            for (p, k) in cart_only.into_iter().chain(di_only).chain(control) {
                not_for(p, k)?;
            }
            let file = s
                .table_file
                .clone()
                .ok_or_else(|| v.error("system", None, "table_file", "table systems need `table_file`"))?;
            let path = base_dir.join(&file);
            let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            s.table_sha256 = Some(hex::encode(Sha256::digest(text.as_bytes())));
            s.horizon.get_or_insert(10);
            s.dt.get_or_insert(1.0);
            s.initial_state.get_or_insert(vec![0.0]);
            table_text = Some(text);
        }
    }

    let horizon = s.horizon.expect("set above");
    if horizon == 0 {
        return Err(v.error("system", None, "horizon", "horizon must be >= 1"));
    }
    if !positive(s.dt.expect("set above")) {
        return Err(v.error("system", None, "dt", "dt must be positive"));
    }
    let x0 = s.initial_state.as_deref().expect("set above");
    match kind {
        SystemKind::Cartpole | SystemKind::DoubleIntegrator => {
            let m = s.mode_count.expect("set above");
            if m < 2 {
                return Err(v.error("system", None, "mode_count", format!("mode_count must be >= 2 (got {m})")));
            }
            let (lo, hi) = (s.u_min.expect("set above"), s.u_max.expect("set above"));
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(v.error("system", None, "u_max", "u_min must be below u_max"));
            }
            let dim = if kind == SystemKind::Cartpole { 4 } else { 2 };
            if x0.len() != dim || x0.iter().any(|x| !x.is_finite()) {
                return Err(v.error(
                    "system",
                    None,
                    "initial_state",
                    format!("initial_state must hold {dim} finite values"),
                ));
            }
        }
        SystemKind::Table => {
            if x0.len() != 1 || x0[0] < 0.0 || x0[0].fract() != 0.0 {
                return Err(v.error("system", None, "initial_state", "initial_state must be [state id]"));
            }
            let text = table_text.as_deref().expect("loaded above");
            let table = TableSystem::from_text(text, x0[0] as usize, horizon, s.dt.expect("set above"))
                .map_err(|e| v.error("system", None, "table_file", e.to_string()))?;
            use hysched::HybridSystem;
            let m = table.mode_count();
            if let Some(given) = s.mode_count {
                if given != m {
                    return Err(v.error(
                        "system",
                        None,
                        "mode_count",
                        format!("mode_count is {given} but the table has {m} modes"),
                    ));
                }
            }
            if m < 2 {
                return Err(v.error("system", None, "mode_count", format!("mode_count must be >= 2 (got {m})")));
            }
            s.mode_count = Some(m);
        }
    }
    if kind == SystemKind::Cartpole {
        if s.substeps == Some(0) {
            return Err(v.error("system", None, "substeps", "substeps must be >= 1"));
        }
        for (val, key) in [
            (s.cart_mass, "cart_mass"),
            (s.pole_mass, "pole_mass"),
            (s.pole_half_length, "pole_half_length"),
            (s.gravity, "gravity"),
        ] {
            if !positive(val.expect("set above")) {
                return Err(v.error("system", None, key, format!("{key} must be positive")));
            }
        }
    }
    if kind == SystemKind::DoubleIntegrator {
        for (val, key) in [(s.q_pos, "q_pos"), (s.q_vel, "q_vel"), (s.r, "r"), (s.qf_pos, "qf_pos"), (s.qf_vel, "qf_vel")] {
            let x = val.expect("set above");
            if !(x >= 0.0 && x.is_finite()) {
                return Err(v.error("system", None, key, format!("{key} must be finite and non-negative")));
            }
        }
    }
    Ok(table_text)
}

fn validate(c: &ExperimentConfig, v: &Validator) -> Result<(), CliError> {
    if c.repetitions == 0 {
        return Err(v.error("", None, "repetitions", "repetitions must be >= 1"));
    }
    let s = &c.solver;
    if s.batch_size == 0 {
        return Err(v.error("solver", None, "batch_size", "batch_size must be >= 1"));
    }
    if !(s.tolerance >= 0.0 && s.tolerance.is_finite()) {
        return Err(v.error("solver", None, "tolerance", "tolerance must be finite and >= 0"));
    }
    if s.max_evaluations == Some(0) {
        return Err(v.error("solver", None, "max_evaluations", "max_evaluations must be >= 1"));
    }
    let modes = c.system.mode_count.expect("resolved");
    if let Some(m) = s.initial_mode {
        if m >= modes {
            return Err(v.error("solver", None, "initial_mode", format!("initial_mode must be < mode_count ({modes})")));
        }
    }
    let control = c.system.system != Some(SystemKind::Table);
    for (i, b) in c.baselines.iter().enumerate() {
        let at = |key: &str, msg: &str| v.error("baselines", Some(i), key, msg);
        if b.samples == 0 {
            return Err(at("samples", "samples must be >= 1"));
        }
        if !(b.resample_fraction > 0.0 && b.resample_fraction <= 1.0) {
            return Err(at("resample_fraction", "resample_fraction must be in (0, 1]"));
        }
        if !(b.elite_fraction > 0.0 && b.elite_fraction <= 1.0) {
            return Err(at("elite_fraction", "elite_fraction must be in (0, 1]"));
        }
        if !positive(b.smoothing) {
            return Err(at("smoothing", "smoothing must be positive"));
        }
        if !positive(b.temperature) {
            return Err(at("temperature", "temperature must be positive"));
        }
        if !positive(b.sigma) {
            return Err(at("sigma", "sigma must be positive"));
        }
        if !(positive(b.reg_min) && b.reg_min <= b.reg_max && b.reg_max.is_finite()) {
            return Err(at("reg_min", "need 0 < reg_min <= reg_max"));
        }
        if b.line_search_steps == 0 {
            return Err(at("line_search_steps", "line_search_steps must be >= 1"));
        }
        if !b.method.method().is_discrete() && !control {
            return Err(at("method", "continuous-control baselines need a cartpole or double_integrator system"));
        }
        if c.experiment == ExperimentKind::SweepHorizon && !b.method.method().is_discrete() {
            return Err(at(
                "method",
                "sweep-horizon plans mode schedules; use random-shooting or cem",
            ));
        }
    }
    match c.experiment {
        ExperimentKind::Solve | ExperimentKind::Mpc => {}
        ExperimentKind::Compare => {
            let cb = &c.compare;
            if cb.budget == 0 {
                return Err(v.error("compare", None, "budget", "budget must be >= 1"));
            }
            if cb.horizons.contains(&0) {
                return Err(v.error("compare", None, "horizons", "horizons must be >= 1"));
            }
            let methods = c.baselines.iter().filter(|b| b.method != MethodName::Ilqr).count();
            if methods == 0 {
                return Err(v.error("", None, "baselines", "compare needs at least one non-ilqr baseline"));
            }
            if cb.oracle && !control {
                return Err(v.error("compare", None, "oracle", "the iLQR oracle needs a cartpole or double_integrator system"));
            }
            if c.baselines.iter().filter(|b| b.method == MethodName::Ilqr).count() > 1 {
                return Err(v.error("", None, "baselines", "at most one ilqr block configures the oracle"));
            }
        }
        ExperimentKind::SweepHorizon => {
            let sb = &c.sweep;
            if sb.horizons.is_empty() || sb.horizons.contains(&0) {
                return Err(v.error("sweep", None, "horizons", "horizons must be a non-empty list of values >= 1"));
            }
            if sb.episode_length == 0 {
                return Err(v.error("sweep", None, "episode_length", "episode_length must be >= 1"));
            }
            if sb.budget_per_step == 0 {
                return Err(v.error("sweep", None, "budget_per_step", "budget_per_step must be >= 1"));
            }
            if !sb.include_hybrid && c.baselines.is_empty() {
                return Err(v.error("sweep", None, "include_hybrid", "nothing to run"));
            }
        }
    }
    if c.experiment == ExperimentKind::Mpc {
        let m = &c.mpc;
        if m.horizon == 0 {
            return Err(v.error("mpc", None, "horizon", "horizon must be >= 1"));
        }
        if m.episode_length == 0 {
            return Err(v.error("mpc", None, "episode_length", "episode_length must be >= 1"));
        }
        if m.budget_per_step == 0 {
            return Err(v.error("mpc", None, "budget_per_step", "budget_per_step must be >= 1"));
        }
    }
    Ok(())
}
