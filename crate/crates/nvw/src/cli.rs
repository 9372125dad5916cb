//! Command-line front end: builds a scenario from a TOML config (plus flag
//! overrides), runs the solver and writes JSON or CSV reports.
//!
//! Exit codes: 0 pass, 1 check failure, 2 solver failure, 3 invalid config.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::breaking::{detect_breaking, predict_backward, predict_forward, BreakingEvent, BreakingPrediction};
use crate::error::Error;
use crate::eulerian_data::EulerianState;
use crate::eulerian_extract::{default_eps_break, extract, TimeSlice};
use crate::goursat_solver::{residual_report, solve_state, LagrangianField, ResidualReport, SolverConfig};
use crate::reference_oracle::{breaking_horizon, l1_difference, run as run_oracle, SmoothRSState, DEFAULT_CFL};
use crate::scenarios::{
    check_hut_nonconservative, check_linear_box, config_for, dalembert, hut_profile, pad_for, BoxVariant, BumpParams,
    DiracBoxParams, HutParams, Scenario, SpikeParams,
};
use crate::wave_speed::WaveSpeedModel;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_CHECK: i32 = 1;
pub const EXIT_SOLVER: i32 = 2;
pub const EXIT_CONFIG: i32 = 3;

/// Relative energy drift allowed by the conservation report.
pub const ENERGY_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    /// Lagrangian grid step.
    pub h: f64,
    /// Eta-depth of the solved band on each side of the curve; derived from
    /// `times` when absent.
    #[serde(default, rename = "box", skip_serializing_if = "Option::is_none")]
    pub box_depth: Option<f64>,
    pub times: Vec<f64>,
    pub format: Format,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            scenario: default_scenario("linear").unwrap(),
            h: 1.0 / 256.0,
            box_depth: None,
            times: vec![0.0, 0.5, 1.0],
            format: Format::Json,
            out: PathBuf::from("nvw-out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.h > 0.0) {
            return Err(Error::InvalidInput(format!("h = {} must be positive", self.h)));
        }
        if let Some(l) = self.box_depth {
            if !(l > 0.0) {
                return Err(Error::InvalidInput(format!("box = {l} must be positive")));
            }
        }
        if self.times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("times must be finite".into()));
        }
        Ok(())
    }

    pub fn solver_config(&self, model: &WaveSpeedModel) -> SolverConfig {
        let t_past = self.times.iter().copied().fold(0.0, f64::min);
        let t_future = self.times.iter().copied().fold(0.0, f64::max);
        let mut cfg = config_for(model, self.h, t_past, t_future);
        if let Some(l) = self.box_depth {
            cfg.future_reach = None;
            cfg.past_reach = None;
            cfg.future_depth = l;
            cfg.past_depth = if t_past < 0.0 { l } else { 0.0 };
        }
        cfg
    }
}

/// Scenario with its default parameters.
pub fn default_scenario(name: &str) -> Option<Scenario> {
    Some(match name {
        "linear" => Scenario::Linear(BumpParams::default()),
        "bump" => Scenario::Bump(BumpParams {
            amp: 0.4,
            ..BumpParams::default()
        }),
        "spike" => Scenario::Spike(SpikeParams::default()),
        "hut" => Scenario::Hut(HutParams::default()),
        "dirac_box" => Scenario::DiracBox {
            params: DiracBoxParams::default(),
            variant: BoxVariant::Plain,
        },
        "dirac_box_flanked" => Scenario::DiracBox {
            params: DiracBoxParams::default(),
            variant: BoxVariant::Flanked,
        },
        _ => return None,
    })
}

pub const SCENARIOS: [&str; 6] = ["linear", "bump", "spike", "hut", "dirac_box", "dirac_box_flanked"];

#[derive(Debug, Parser)]
#[command(
    name = "nvw",
    version,
    about = "Conservative solutions of the nonlinear variational wave equation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve and write field summary, slices, energy report and events.
    Simulate(Common),
    /// Breaking predictions at every cell midpoint, both families.
    Predict(Common),
    /// Solve and write only the requested slices.
    Slice(Common),
    /// Run the scenario's own checker.
    Check(Common),
    /// Compare with the upwind oracle before the earliest predicted breaking.
    OracleDiff(Common),
    /// Print the default configuration for a scenario.
    Defaults {
        #[arg(long, default_value = "linear")]
        scenario: String,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Start from a named scenario's defaults instead of a config file.
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long = "grid-step")]
    pub grid_step: Option<f64>,
    #[arg(long = "box")]
    pub box_depth: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub times: Option<Vec<f64>>,
}

struct Failure {
    code: i32,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidInput(_) => EXIT_CONFIG,
            _ => EXIT_SOLVER,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_CONFIG,
        msg: msg.into(),
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure {
        code: EXIT_SOLVER,
        msg: format!("{}: {e}", path.display()),
    }
}

pub fn load_config(c: &Common) -> Result<RunConfig, Error> {
    let mut cfg = match (&c.config, &c.scenario) {
        (Some(p), _) => {
            let text = fs::read_to_string(p).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))?;
            toml::from_str::<RunConfig>(&text).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))?
        }
        (None, Some(name)) => RunConfig {
            scenario: default_scenario(name)
                .ok_or_else(|| Error::InvalidInput(format!("unknown scenario {name:?}; known: {SCENARIOS:?}")))?,
            ..RunConfig::default()
        },
        (None, None) => RunConfig::default(),
    };
    if c.config.is_some() {
        if let Some(name) = &c.scenario {
            return Err(Error::InvalidInput(format!(
                "--scenario {name} conflicts with --config"
            )));
        }
    }
    if let Some(o) = &c.out {
        cfg.out = o.clone();
    }
    if let Some(f) = c.format {
        cfg.format = f;
    }
    if let Some(h) = c.grid_step {
        cfg.h = h;
    }
    if let Some(l) = c.box_depth {
        cfg.box_depth = Some(l);
    }
    if let Some(t) = &c.times {
        cfg.times = t.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("nvw: {}", f.msg);
            f.code
        }
    }
}

fn dispatch(cmd: Command) -> Result<i32, Failure> {
    match cmd {
        Command::Defaults { scenario } => {
            let cfg = RunConfig {
                scenario: default_scenario(&scenario)
                    .ok_or_else(|| config_error(format!("unknown scenario {scenario:?}; known: {SCENARIOS:?}")))?,
                ..RunConfig::default()
            };
            let text = toml::to_string(&cfg).map_err(|e| config_error(e.to_string()))?;
            print!("{text}");
            Ok(EXIT_PASS)
        }
        Command::Simulate(c) => run_simulate(&load_config(&c)?),
        Command::Predict(c) => run_predict(&load_config(&c)?),
        Command::Slice(c) => run_slice(&load_config(&c)?),
        Command::Check(c) => run_check(&load_config(&c)?),
        Command::OracleDiff(c) => run_oracle_diff(&load_config(&c)?),
    }
}

fn prepare_out(cfg: &RunConfig) -> Result<(), Failure> {
    fs::create_dir_all(&cfg.out).map_err(|e| io_error(&cfg.out, e))
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<(), Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| io_error(path, e))?;
    s.push('\n');
    fs::write(path, s).map_err(|e| io_error(path, e))
}

fn write_csv_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), Failure> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| io_error(path, e))?;
    }
    w.flush().map_err(|e| io_error(path, e))
}

fn solve_cfg(cfg: &RunConfig) -> Result<(EulerianState, WaveSpeedModel, LagrangianField), Failure> {
    let (state, model) = cfg.scenario.build()?;
    let t_max = cfg.times.iter().fold(0.0f64, |m, t| m.max(t.abs()));
    let state = pad_for(&state, &model, t_max)?;
    let sc = cfg.solver_config(&model);
    let field = solve_state(&state, &model, &sc).map_err(|e| Failure {
        code: EXIT_SOLVER,
        msg: format!("solver failed: {e}"),
    })?;
    Ok((state, model, field))
}

fn slices(cfg: &RunConfig, field: &LagrangianField, model: &WaveSpeedModel) -> Result<Vec<TimeSlice>, Failure> {
    cfg.times
        .iter()
        .map(|&t| extract(field, model, t).map_err(Failure::from))
        .collect()
}

fn write_slices(cfg: &RunConfig, sl: &[TimeSlice]) -> Result<(), Failure> {
    for (k, s) in sl.iter().enumerate() {
        match cfg.format {
            Format::Json => write_json(&cfg.out.join(format!("slice_{k:03}.json")), &s.state)?,
            Format::Csv => {
                let p = cfg.out.join(format!("slice_{k:03}.csv"));
                let f = fs::File::create(&p).map_err(|e| io_error(&p, e))?;
                s.state.write_csv(f)?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldSummary {
    pub n_cols: usize,
    pub n_rows: usize,
    pub n_nodes: usize,
    pub t_range: (f64, f64),
    pub path_mismatch: f64,
    pub max_iterations: usize,
    pub residuals: ResidualReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyRow {
    pub time: f64,
    pub energy: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub e0: f64,
    pub tolerance: f64,
    pub rows: Vec<EnergyRow>,
    pub passed: bool,
}

pub fn energy_report(e0: f64, sl: &[TimeSlice]) -> EnergyReport {
    let rows: Vec<EnergyRow> = sl
        .iter()
        .map(|s| {
            let e = s.energy();
            EnergyRow {
                time: s.time,
                energy: e,
                relative_error: if e0 > 0.0 { (e - e0).abs() / e0 } else { e.abs() },
            }
        })
        .collect();
    let passed = rows.iter().all(|r| r.relative_error <= ENERGY_TOL);
    EnergyReport {
        e0,
        tolerance: ENERGY_TOL,
        rows,
        passed,
    }
}

fn run_simulate(cfg: &RunConfig) -> Result<i32, Failure> {
    let (state, model, field) = solve_cfg(cfg)?;
    prepare_out(cfg)?;
    let summary = FieldSummary {
        n_cols: field.n_cols(),
        n_rows: field.n_rows(),
        n_nodes: field.n_nodes(),
        t_range: field.t_range(),
        path_mismatch: field.path_mismatch,
        max_iterations: field.max_iterations,
        residuals: residual_report(&field, &model),
    };
    write_json(&cfg.out.join("field_summary.json"), &summary)?;
    let sl = slices(cfg, &field, &model)?;
    write_slices(cfg, &sl)?;
    let energy = energy_report(state.energy(), &sl);
    write_json(&cfg.out.join("energy.json"), &energy)?;
    let events: Vec<BreakingEvent> = detect_breaking(&field, default_eps_break(&field));
    match cfg.format {
        Format::Json => write_json(&cfg.out.join("events.json"), &events)?,
        Format::Csv => write_csv_rows(&cfg.out.join("events.csv"), &events)?,
    }
    Ok(if energy.passed { EXIT_PASS } else { EXIT_CHECK })
}

fn run_slice(cfg: &RunConfig) -> Result<i32, Failure> {
    let (_, model, field) = solve_cfg(cfg)?;
    prepare_out(cfg)?;
    let sl = slices(cfg, &field, &model)?;
    write_slices(cfg, &sl)?;
    Ok(EXIT_PASS)
}

pub fn predictions(state: &EulerianState, model: &WaveSpeedModel) -> Vec<BreakingPrediction> {
    let mut out = Vec::new();
    for m in state.midpoints() {
        if let Ok(p) = predict_backward(state, model, m) {
            out.push(p);
        }
        if let Ok(p) = predict_forward(state, model, m) {
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, Serialize)]
struct PredictionRow {
    x_bar: f64,
    family: String,
    orientation: String,
    t_l: f64,
    t_u: f64,
    applicable: bool,
    reason: String,
}

fn run_predict(cfg: &RunConfig) -> Result<i32, Failure> {
    let (state, model) = cfg.scenario.build()?;
    let rows = predictions(&state, &model);
    prepare_out(cfg)?;
    match cfg.format {
        Format::Json => write_json(&cfg.out.join("predictions.json"), &rows)?,
        Format::Csv => {
            let flat: Vec<PredictionRow> = rows
                .iter()
                .map(|p| PredictionRow {
                    x_bar: p.x_bar,
                    family: format!("{:?}", p.family).to_lowercase(),
                    orientation: p.orientation.map_or("none".into(), |o| format!("{o:?}").to_lowercase()),
                    t_l: p.t_l,
                    t_u: p.t_u,
                    applicable: p.applicable,
                    reason: p.reason.clone(),
                })
                .collect();
            write_csv_rows(&cfg.out.join("predictions.csv"), &flat)?;
        }
    }
    Ok(EXIT_PASS)
}

#[derive(Debug, Clone, Serialize)]
struct LinearCheck {
    time: f64,
    relative_linf: f64,
}

fn run_check(cfg: &RunConfig) -> Result<i32, Failure> {
    let (state, model, field) = solve_cfg(cfg)?;
    prepare_out(cfg)?;
    let path = cfg.out.join("check.json");
    let passed = match &cfg.scenario {
        Scenario::Linear(p) => {
            let scale = p.amp.abs().max(f64::MIN_POSITIVE);
            let mut rows = Vec::new();
            for s in slices(cfg, &field, &model)? {
                // interior, away from the ends lost to the domain of dependence
                let (lo, hi) = (s.state.grid[0], *s.state.grid.last().unwrap());
                let err = s
                    .state
                    .grid
                    .iter()
                    .zip(&s.state.u)
                    .filter(|(x, _)| **x > lo + 0.1 && **x < hi - 0.1)
                    .map(|(x, u)| (u - dalembert(p, s.time, *x)).abs())
                    .fold(0.0, f64::max);
                rows.push(LinearCheck {
                    time: s.time,
                    relative_linf: err / scale,
                });
            }
            write_json(&path, &rows)?;
            rows.iter().all(|r| r.relative_linf <= 1e-3)
        }
        Scenario::Hut(p) => {
            let prof = hut_profile(p)?;
            let rep = check_hut_nonconservative(&field, &model, &prof, &cfg.times)?;
            write_json(&path, &rep)?;
            rep.witness.is_some()
        }
        Scenario::DiracBox { params, variant } => {
            let cg = model.c(params.gamma_state);
            let atom_times: Vec<f64> = cfg
                .times
                .iter()
                .copied()
                .filter(|&t| t > 0.0 && t < params.alpha / cg)
                .collect();
            let eps = params.alpha / 8.0;
            let spread: Vec<f64> = [0.2, 0.4, 0.6, 0.8]
                .iter()
                .map(|f| 0.5 * params.alpha + f * eps)
                .collect();
            let rep = check_linear_box(&field, &model, params, *variant, &atom_times, &spread)?;
            write_json(&path, &rep)?;
            rep.passed
        }
        _ => {
            let rep = energy_report(state.energy(), &slices(cfg, &field, &model)?);
            write_json(&path, &rep)?;
            rep.passed
        }
    };
    Ok(if passed { EXIT_PASS } else { EXIT_CHECK })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleRow {
    pub time: f64,
    pub l1_u: f64,
    pub l1_r: f64,
    pub l1_s: f64,
}

#[derive(Debug, Clone, Serialize)]
struct OracleReport {
    horizon: Option<f64>,
    interval: (f64, f64),
    rows: Vec<OracleRow>,
    skipped: Vec<f64>,
}

fn run_oracle_diff(cfg: &RunConfig) -> Result<i32, Failure> {
    let (state, model, field) = solve_cfg(cfg)?;
    let horizon = breaking_horizon(&state, &model);
    let (g0, g1) = (state.grid[0], *state.grid.last().unwrap());
    let t_max = cfg.times.iter().copied().fold(0.0, f64::max);
    // stay inside the domain of dependence of the data
    let (lo, hi) = (g0 + 1.2 * model.kappa * t_max, g1 - 1.2 * model.kappa * t_max);
    if !(hi > lo) {
        return Err(config_error("times too large for the data interval"));
    }
    let n = ((g1 - g0) / cfg.h).round() as usize + 1;
    let mut cur = SmoothRSState::from_eulerian(&state, g0, g1, n, DEFAULT_CFL)?;
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let mut times: Vec<f64> = cfg.times.iter().copied().filter(|t| *t >= 0.0).collect();
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for t in times {
        if horizon.is_some_and(|h| t >= h) {
            skipped.push(t);
            continue;
        }
        cur = run_oracle(&cur, &model, t, horizon)?;
        let s = extract(&field, &model, t)?;
        let d = l1_difference(&cur, &s.state, lo, hi);
        rows.push(OracleRow {
            time: t,
            l1_u: d.u,
            l1_r: d.r,
            l1_s: d.s,
        });
    }
    prepare_out(cfg)?;
    let rep = OracleReport {
        horizon,
        interval: (lo, hi),
        rows,
        skipped,
    };
    match cfg.format {
        Format::Json => write_json(&cfg.out.join("oracle_diff.json"), &rep)?,
        Format::Csv => write_csv_rows(&cfg.out.join("oracle_diff.csv"), &rep.rows)?,
    }
    Ok(EXIT_PASS)
}
