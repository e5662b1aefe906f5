//! The four experiments and their CSV renderings.
//!
//! Every experiment returns its files as in-memory text; [`write_run`] puts
//! them on disk together with the resolved config and a manifest.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde_json::json;

use hysched::baselines::{
    cem_categorical, ilqr_oracle, measure_gap, mppi_continuous, random_shooting, BaselineConfig, CemPlanner,
    IlqrResult, MppiResult, RandomShootingPlanner,
};
use hysched::seed::derive_seed;
use hysched::solvers::{
    evaluate, evaluate_controls, run_episode, solve_iterative, EpisodeRecord, HybridPlanner, MpcController,
    SchedulePlanner,
};
use hysched::systems::{Cartpole, ControlSystem, DoubleIntegrator, TableSystem};
use hysched::{HybridSystem, ModeId, Schedule, SolveError, VectorState};

use crate::config::{AnySystem, BaselineBlock, ExperimentKind, LoadedConfig, MethodName};
use crate::error::CliError;

/// What the experiments need beyond [`HybridSystem`]: the continuous-control
/// methods, which only exist for control systems.
pub trait ExperimentSystem: HybridSystem {
    fn oracle(&self, config: &BaselineConfig) -> Option<Result<IlqrResult, SolveError>>;
    fn mppi(&self, config: &BaselineConfig) -> Option<Result<MppiResult, SolveError>>;
}

macro_rules! control_system {
    ($t:ty) => {
        impl ExperimentSystem for $t {
            fn oracle(&self, config: &BaselineConfig) -> Option<Result<IlqrResult, SolveError>> {
                Some(ilqr_oracle(self, config, None))
            }
            fn mppi(&self, config: &BaselineConfig) -> Option<Result<MppiResult, SolveError>> {
                Some(mppi_continuous(self, config, None))
            }
        }
    };
}

control_system!(Cartpole);
control_system!(DoubleIntegrator);

impl ExperimentSystem for TableSystem {
    fn oracle(&self, _: &BaselineConfig) -> Option<Result<IlqrResult, SolveError>> {
        None
    }
    fn mppi(&self, _: &BaselineConfig) -> Option<Result<MppiResult, SolveError>> {
        None
    }
}

macro_rules! with_system {
    ($any:expr, $s:ident => $body:expr) => {
        match $any {
            AnySystem::Cartpole($s) => $body,
            AnySystem::DoubleIntegrator($s) => $body,
            AnySystem::Table($s) => $body,
        }
    };
}

/// Files produced by one run, in write order.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub files: Vec<(String, String)>,
    /// Seed of each repetition.
    pub seeds: Vec<u64>,
}

impl RunOutput {
    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

pub fn repetition_seeds(loaded: &LoadedConfig) -> Vec<u64> {
    (0..loaded.config.repetitions as u64)
        .map(|r| derive_seed(loaded.config.seed, r))
        .collect()
}

pub fn run_experiment(loaded: &LoadedConfig) -> Result<RunOutput, CliError> {
    match loaded.config.experiment {
        ExperimentKind::Solve => run_solve(loaded),
        ExperimentKind::Compare => run_compare(loaded),
        ExperimentKind::SweepHorizon => run_sweep(loaded),
        ExperimentKind::Mpc => run_mpc(loaded),
    }
}

/// Writes `output` under `<output_dir>/<experiment>/<hash prefix>/` and returns that directory.
pub fn write_run(loaded: &LoadedConfig, output: &RunOutput) -> Result<PathBuf, CliError> {
    let c = &loaded.config;
    let dir = c.output_dir.join(c.experiment.as_str()).join(loaded.run_id());
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    let mut listed = Vec::new();
    for (name, content) in &output.files {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
        listed.push(json!({ "name": name, "rows": data_rows(name, content) }));
    }
    let config_json = serde_json::to_string_pretty(c).expect("config serializes") + "\n";
    let path = dir.join("config.json");
    fs::write(&path, config_json).map_err(|e| CliError::io(&path, e))?;
    let manifest = json!({
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": c.experiment.as_str(),
        "config_hash": loaded.hash,
        "seeds": output.seeds,
        "files": listed,
    });
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n")
        .map_err(|e| CliError::io(&path, e))?;
    Ok(dir)
}

fn data_rows(name: &str, content: &str) -> usize {
    let lines = content.lines().count();
    if name.ends_with(".csv") {
        lines.saturating_sub(1)
    } else {
        lines
    }
}

fn suffixed(name: &str, ext: &str, rep: usize, reps: usize) -> String {
    if reps > 1 {
        format!("{name}-{rep}.{ext}")
    } else {
        format!("{name}.{ext}")
    }
}

fn initial_schedule<S: HybridSystem>(system: &S, loaded: &LoadedConfig) -> Schedule {
    let mode = loaded.config.solver.initial_mode.map(ModeId).unwrap_or(system.default_mode());
    Schedule::constant(mode, system.horizon())
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn header<S: HybridSystem>(system: &S, first: &str, rest: &str) -> String {
    let mut h = String::from(first);
    for n in system.state_names() {
        h.push(',');
        h.push_str(&n);
    }
    h.push(',');
    h.push_str(rest);
    h.push('\n');
    h
}

fn push_state<S: HybridSystem>(out: &mut String, system: &S, x: &S::State) {
    for v in system.state_values(x) {
        let _ = write!(out, ",{v}");
    }
}

// ---------------------------------------------------------------- solve

struct SolveRun {
    files: Vec<(String, String)>,
    summary_row: String,
}

fn run_solve(loaded: &LoadedConfig) -> Result<RunOutput, CliError> {
    let system = loaded.build_system(loaded.horizon())?;
    let seeds = repetition_seeds(loaded);
    let reps = seeds.len();
    let runs: Vec<SolveRun> = with_system!(&system, s => seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| solve_once(s, loaded, r, reps, seed))
        .collect::<Result<_, _>>()?);
    let mut files = Vec::new();
    let mut summary = String::from("rep,seed,initial_cost,final_cost,accepted,evaluations,termination,terminal_cost\n");
    for run in runs {
        files.extend(run.files);
        summary.push_str(&run.summary_row);
    }
    files.push(("summary.csv".into(), summary));
    Ok(RunOutput { files, seeds })
}

fn solve_once<S: HybridSystem>(
    system: &S,
    loaded: &LoadedConfig,
    rep: usize,
    reps: usize,
    seed: u64,
) -> Result<SolveRun, CliError> {
    let solver = &loaded.config.solver;
    let config = solver.solver_config(seed, solver.max_evaluations);
    let report = solve_iterative(system, &initial_schedule(system, loaded), &config, solver.inner_solver())?;
    if !report.final_cost().is_finite() {
        return Err(CliError::Numerical(format!(
            "repetition {rep}: every schedule tried diverged (final cost {})",
            report.final_cost()
        )));
    }
    let schedule = &report.final_schedule;
    let record = evaluate(system, schedule)?;
    let rle = schedule.to_run_length().map_err(SolveError::from)?;

    let mut traj = header(system, "k", "mode,stage_cost");
    for (k, (x, c)) in record.states.iter().zip(&record.stage_costs).enumerate() {
        let _ = write!(traj, "{k}");
        push_state(&mut traj, system, x);
        if k < schedule.horizon() {
            let _ = writeln!(traj, ",{},{c}", schedule.mode_at(k));
        } else {
            let _ = writeln!(traj, ",,{c}");
        }
    }
    let summary_row = format!(
        "{rep},{seed},{},{},{},{},{},{}\n",
        report.initial_cost,
        report.final_cost(),
        report.accepted_switches.len(),
        report.evaluations,
        report.termination,
        record.terminal_cost
    );
    Ok(SolveRun {
        files: vec![
            (suffixed("report", "csv", rep, reps), report.to_csv()),
            (suffixed("schedule", "txt", rep, reps), format!("{schedule}\n")),
            (suffixed("schedule_rle", "txt", rep, reps), rle.to_string()),
            (suffixed("trajectory", "csv", rep, reps), traj),
        ],
        summary_row,
    })
}

// ---------------------------------------------------------------- compare

#[derive(Clone, Debug)]
enum Method {
    Hybrid,
    Baseline(BaselineBlock),
}

impl Method {
    fn label(&self) -> &'static str {
        match self {
            Method::Hybrid => "hybrid",
            Method::Baseline(b) => b.method.method().as_str(),
        }
    }
}

fn compare_methods(loaded: &LoadedConfig, include_hybrid: bool) -> Vec<Method> {
    let mut methods = Vec::new();
    if include_hybrid {
        methods.push(Method::Hybrid);
    }
    for b in &loaded.config.baselines {
        if b.method != MethodName::Ilqr {
            methods.push(Method::Baseline(b.clone()));
        }
    }
    methods
}

/// Final cost of one budgeted open-loop run.
fn run_method<S: ExperimentSystem>(
    system: &S,
    loaded: &LoadedConfig,
    method: &Method,
    seed: u64,
    budget: u64,
) -> Result<f64, CliError> {
    match method {
        Method::Hybrid => {
            let solver = &loaded.config.solver;
            let config = solver.solver_config(seed, Some(budget));
            let report = solve_iterative(system, &initial_schedule(system, loaded), &config, solver.inner_solver())?;
            Ok(report.final_cost())
        }
        Method::Baseline(b) => {
            let config = b.baseline_config(seed, Some(budget));
            match b.method {
                MethodName::RandomShooting => Ok(random_shooting(system, &config, None)?.cost),
                MethodName::Cem => Ok(cem_categorical(system, &config)?.cost),
                MethodName::Mppi => match system.mppi(&config) {
                    Some(r) => Ok(r?.cost),
                    None => Err(CliError::config(None, "baselines", "mppi needs a control system")),
                },
                MethodName::Ilqr => unreachable!("ilqr entries configure the oracle"),
            }
        }
    }
}

fn oracle_config(loaded: &LoadedConfig) -> BaselineConfig {
    let block = loaded
        .config
        .baselines
        .iter()
        .find(|b| b.method == MethodName::Ilqr)
        .cloned()
        .unwrap_or_else(|| BaselineBlock::new(MethodName::Ilqr));
    block.baseline_config(loaded.config.seed, None)
}

fn run_compare(loaded: &LoadedConfig) -> Result<RunOutput, CliError> {
    let c = &loaded.config;
    let cb = &c.compare;
    let horizons = if cb.horizons.is_empty() { vec![loaded.horizon()] } else { cb.horizons.clone() };
    let seeds = repetition_seeds(loaded);
    let methods = compare_methods(loaded, cb.include_hybrid);

    let mut comparison = String::from("method,horizon,budget,seed,final_cost,oracle_cost,normalized_gap\n");
    let mut summary = String::from(
        "method,horizon,budget,runs,final_cost_mean,final_cost_std,normalized_gap_mean,normalized_gap_std\n",
    );
    let mut oracle_lines = String::new();
    for &h in &horizons {
        let system = loaded.build_system(h)?;
        let oracle = if cb.oracle {
            let result = with_system!(&system, s => s.oracle(&oracle_config(loaded)))
                .ok_or_else(|| CliError::config(None, "compare.oracle", "the oracle needs a control system"))??;
            if !result.cost.is_finite() {
                return Err(CliError::Numerical(format!("iLQR oracle diverged at horizon {h}")));
            }
            let controls: Vec<String> = result.controls.iter().map(|u| u.to_string()).collect();
            let _ = writeln!(oracle_lines, "{h}: {}", controls.join(","));
            Some(result.cost)
        } else {
            None
        };

        let jobs: Vec<(usize, u64)> = (0..methods.len())
            .flat_map(|m| seeds.iter().map(move |&s| (m, s)))
            .collect();
        let costs: Vec<f64> = with_system!(&system, s => jobs
            .par_iter()
            .map(|&(m, seed)| run_method(s, loaded, &methods[m], seed, cb.budget))
            .collect::<Result<_, _>>()?);

        for (m, method) in methods.iter().enumerate() {
            let mut finals = Vec::new();
            let mut gaps = Vec::new();
            for (r, &seed) in seeds.iter().enumerate() {
                let cost = costs[m * seeds.len() + r];
                finals.push(cost);
                let _ = write!(comparison, "{},{h},{},{seed},{cost}", method.label(), cb.budget);
                match oracle {
                    Some(o) => {
                        let gap = measure_gap(method.label(), cost, h, o, h)?.normalized_gap;
                        gaps.push(gap);
                        let _ = writeln!(comparison, ",{o},{gap}");
                    }
                    None => comparison.push_str(",,\n"),
                }
            }
            let (fm, fs) = mean_std(&finals);
            let _ = write!(summary, "{},{h},{},{},{fm},{fs}", method.label(), cb.budget, seeds.len());
            if gaps.is_empty() {
                summary.push_str(",,\n");
            } else {
                let (gm, gs) = mean_std(&gaps);
                let _ = writeln!(summary, ",{gm},{gs}");
            }
        }
    }
    let mut files = vec![("comparison.csv".to_string(), comparison), ("summary.csv".to_string(), summary)];
    if cb.oracle {
        files.push(("oracle_controls.txt".into(), oracle_lines));
    }
    Ok(RunOutput { files, seeds })
}

// ---------------------------------------------------------------- closed loop

fn episode<S: HybridSystem>(
    plant: &S,
    loaded: &LoadedConfig,
    method: &Method,
    horizon: usize,
    budget: u64,
    steps: usize,
    seed: u64,
) -> Result<EpisodeRecord<S::State>, CliError> {
    fn go<S: HybridSystem, P: SchedulePlanner<S>>(
        plant: &S,
        planner: P,
        horizon: usize,
        steps: usize,
        seed: u64,
    ) -> Result<EpisodeRecord<S::State>, CliError> {
        let mut controller = MpcController::new(plant, planner, horizon, seed)?;
        Ok(run_episode(&mut controller, steps)?)
    }
    match method {
        Method::Hybrid => {
            let solver = &loaded.config.solver;
            let planner = HybridPlanner {
                config: solver.solver_config(seed, Some(budget)),
                inner: solver.inner_solver(),
            };
            go(plant, planner, horizon, steps, seed)
        }
        Method::Baseline(b) => {
            let config = b.baseline_config(seed, Some(budget));
            match b.method {
                MethodName::RandomShooting => go(plant, RandomShootingPlanner { config }, horizon, steps, seed),
                MethodName::Cem => go(plant, CemPlanner { config }, horizon, steps, seed),
                MethodName::Mppi | MethodName::Ilqr => {
                    Err(CliError::config(None, "baselines", "closed-loop runs need a schedule planner"))
                }
            }
        }
    }
}

fn run_sweep(loaded: &LoadedConfig) -> Result<RunOutput, CliError> {
    let sb = &loaded.config.sweep;
    let seeds = repetition_seeds(loaded);
    let methods: Vec<Method> = compare_methods(loaded, sb.include_hybrid);
    let plant = loaded.build_system(sb.episode_length)?;

    let mut jobs: Vec<(usize, usize, u64)> = Vec::new();
    for m in 0..methods.len() {
        for &h in &sb.horizons {
            jobs.extend(seeds.iter().map(|&s| (m, h, s)));
        }
    }
    let costs: Vec<f64> = with_system!(&plant, p => jobs
        .par_iter()
        .map(|&(m, h, seed)| {
            episode(p, loaded, &methods[m], h, sb.budget_per_step, sb.episode_length, seed).map(|e| e.cumulative_cost)
        })
        .collect::<Result<_, _>>()?);

    let mut sweep = String::from("method,H,seed,cumulative_cost\n");
    for (&(m, h, seed), cost) in jobs.iter().zip(&costs) {
        let _ = writeln!(sweep, "{},{h},{seed},{cost}", methods[m].label());
    }
    let mut summary = String::from("method,H,runs,cumulative_cost_mean,cumulative_cost_std\n");
    let mut trends = String::from("method,check,holds\n");
    let per = seeds.len();
    for (m, method) in methods.iter().enumerate() {
        let mut means = Vec::new();
        for (i, &h) in sb.horizons.iter().enumerate() {
            let start = (m * sb.horizons.len() + i) * per;
            let (mean, std) = mean_std(&costs[start..start + per]);
            let _ = writeln!(summary, "{},{h},{per},{mean},{std}", method.label());
            means.push((h, mean));
        }
        let (non_increasing, exceeds) = horizon_trends(&means);
        let _ = writeln!(trends, "{},non_increasing_from_h20,{non_increasing}", method.label());
        let _ = writeln!(trends, "{},h_max_exceeds_h20,{exceeds}", method.label());
    }
    Ok(RunOutput {
        files: vec![
            ("sweep.csv".into(), sweep),
            ("summary.csv".into(), summary),
            ("trends.csv".into(), trends),
        ],
        seeds,
    })
}

/// Whether the mean cost never rises with `H` from `H = 20` on, and whether the
/// largest horizon does worse than `H = 20`. `n/a` without an `H = 20` entry.
pub fn horizon_trends(means: &[(usize, f64)]) -> (String, String) {
    let Some(&(_, at20)) = means.iter().find(|(h, _)| *h == 20) else {
        return ("n/a".into(), "n/a".into());
    };
    let mut tail: Vec<(usize, f64)> = means.iter().copied().filter(|(h, _)| *h >= 20).collect();
    tail.sort_by_key(|(h, _)| *h);
    let non_increasing = tail.windows(2).all(|w| w[1].1 <= w[0].1);
    let (_, at_max) = tail.last().copied().expect("contains H = 20");
    (non_increasing.to_string(), (at_max > at20).to_string())
}

fn run_mpc(loaded: &LoadedConfig) -> Result<RunOutput, CliError> {
    let mb = &loaded.config.mpc;
    let seeds = repetition_seeds(loaded);
    let reps = seeds.len();
    let plant = loaded.build_system(mb.episode_length)?;
    let rendered: Vec<(String, String)> = with_system!(&plant, p => seeds
        .par_iter()
        .enumerate()
        .map(|(r, &seed)| {
            let rec = episode(p, loaded, &Method::Hybrid, mb.horizon, mb.budget_per_step, mb.episode_length, seed)?;
            Ok::<_, CliError>(render_episode(p, &rec, r, seed))
        })
        .collect::<Result<_, _>>()?);
    let mut files = Vec::new();
    let mut summary = String::from("rep,seed,cumulative_cost,terminal_cost,flagged_steps,evaluations\n");
    for (r, (csv, row)) in rendered.into_iter().enumerate() {
        files.push((suffixed("mpc", "csv", r, reps), csv));
        summary.push_str(&row);
    }
    files.push(("summary.csv".into(), summary));
    Ok(RunOutput { files, seeds })
}

fn render_episode<S: HybridSystem>(system: &S, rec: &EpisodeRecord<S::State>, rep: usize, seed: u64) -> (String, String) {
    let mut csv = header(system, "k", "mode,stage_cost,planned_cost,flagged,evaluations");
    for (k, x) in rec.states.iter().enumerate() {
        let _ = write!(csv, "{k}");
        push_state(&mut csv, system, x);
        match rec.modes.get(k) {
            Some(m) if k < rec.stage_costs.len() => {
                let _ = writeln!(
                    csv,
                    ",{m},{},{},{},{}",
                    rec.stage_costs[k],
                    rec.planned_costs[k],
                    rec.flagged_steps.contains(&k),
                    rec.step_evaluations[k]
                );
            }
            _ => csv.push_str(",,,,,\n"),
        }
    }
    let row = format!(
        "{rep},{seed},{},{},{},{}\n",
        rec.cumulative_cost,
        rec.terminal_cost,
        rec.flagged_steps.len(),
        rec.evaluations
    );
    (csv, row)
}

/// Controls applied by a schedule on a control system.
pub fn schedule_controls<S>(system: &S, schedule: &Schedule) -> Vec<f64>
where
    S: ControlSystem,
    S::State: VectorState,
{
    schedule.modes().iter().map(|&m| system.mode_control(m)).collect()
}

/// Trajectory of a control sequence, `k,<state>,u` per row.
pub fn controls_csv<S>(system: &S, controls: &[f64]) -> Result<String, CliError>
where
    S: ControlSystem,
    S::State: VectorState,
{
    let record = evaluate_controls(system, controls)?;
    let mut out = header(system, "k", "u");
    for (k, x) in record.states.iter().enumerate() {
        let _ = write!(out, "{k}");
        push_state(&mut out, system, x);
        match controls.get(k) {
            Some(u) => {
                let _ = writeln!(out, ",{u}");
            }
            None => out.push_str(",\n"),
        }
    }
    Ok(out)
}
