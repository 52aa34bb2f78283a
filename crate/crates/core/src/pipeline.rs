//! Stage functions shared by the CLI, the benches and the acceptance suite,
//! and the workbench configuration that drives them.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FtcError, Result};
use crate::evaluation::{bar_chart_csv, compare, table, Channel, EndState, TrackingReport};
use crate::linsys::{FrequencyGrid, DEFAULT_GRID_MAX, DEFAULT_GRID_MIN, DEFAULT_GRID_POINTS};
use crate::models::{design_point, design_points, Airframe, Axis, DEFAULT_FIXTURE};
use crate::robustness::{analyze_loop, RP_POINTS, nominal_pole_report, MuEntry, MuReport, PoleSet};
use crate::simulator::{run_scenario, Case, ControllerBank, FaultScenario, ScenarioFile, SimConfig, SimLog, Variant};
use crate::synthesis::{
    closed_loop, design_plant, hover_lqr, make_wr, make_ws, refine_for_disturbance, seed_gains, tune, ClosedLoop, ControllerEntry,
    LoopWeights, SynthesisExport, TuneBudget, WeightTable, DEFAULT_WEIGHTS,
};
use crate::uncertainty::analyze_point;

/// Sensitivity and control weights from the table, complementary weight
/// from the fitted uncertainty envelope.
pub fn loop_weights(
    axis: Axis,
    point: usize,
    airframe: &Airframe,
    table: &WeightTable,
    grid: &FrequencyGrid,
) -> Result<LoopWeights> {
    let pt = design_point(point)?;
    let w = table.get(axis, point)?;
    let u = analyze_point(axis, &pt, &airframe.params, &airframe.aero, grid)?;
    Ok(LoopWeights { ws: make_ws(&w.sensitivity()), wt: u.weight.tf(), wr: make_wr(&w.control()) })
}

/// Tunes one (axis, design point) controller. Below the robust-performance
/// points the uncertainty weight alone nearly exhausts the cost, so the
/// optimum is refined for input disturbance rejection.
pub fn synthesize_one(
    axis: Axis,
    point: usize,
    airframe: &Airframe,
    table: &WeightTable,
    budget: &TuneBudget,
    grid: &FrequencyGrid,
) -> Result<ControllerEntry> {
    let pt = design_point(point)?;
    let plant = design_plant(axis, &airframe.params, &airframe.aero, pt.v_bar)?;
    let weights = loop_weights(axis, point, airframe, table, grid)?;
    let seed = seed_gains(&plant, table.get(axis, point)?.omega_b)?;
    let mut r = tune(&plant, &weights, &seed, budget, grid)?;
    if !RP_POINTS.contains(&point) {
        r = refine_for_disturbance(&plant, &weights, &r, budget, grid)?;
    }
    Ok(ControllerEntry { axis, point, v_bar: pt.v_bar, gains: r.gains, gamma: r.gamma_achieved, iterations: r.iterations })
}

/// Every (axis, point) problem in parallel plus the hover LQR baseline.
/// All failures are collected into one error.
pub fn synthesize(
    airframe: &Airframe,
    table: &WeightTable,
    points: &[usize],
    budget: &TuneBudget,
    grid: &FrequencyGrid,
    config_hash: &str,
) -> Result<SynthesisExport> {
    let jobs: Vec<(usize, Axis)> = points.iter().flat_map(|&p| Axis::ALL.map(|a| (p, a))).collect();
    let results: Vec<Result<ControllerEntry>> =
        jobs.par_iter().map(|&(p, a)| synthesize_one(a, p, airframe, table, budget, grid)).collect();
    let mut controllers = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for ((p, a), r) in jobs.iter().zip(results) {
        match r {
            Ok(c) => controllers.push(c),
            Err(e) => failures.push(format!("{a} point {p}: {e}")),
        }
    }
    if !failures.is_empty() {
        return Err(FtcError::NoStabilizingGains(failures.join("; ")));
    }
    let lqr = Axis::ALL.iter().map(|&a| hover_lqr(&airframe.params, a).map(|(h, _)| h)).collect::<Result<_>>()?;
    Ok(SynthesisExport { config_hash: config_hash.into(), seed: budget.seed, controllers, lqr })
}

/// Nominal closed loop of an exported controller on its design plant.
pub fn nominal_loop(entry: &ControllerEntry, airframe: &Airframe) -> Result<ClosedLoop> {
    let plant = design_plant(entry.axis, &airframe.params, &airframe.aero, entry.v_bar)?;
    closed_loop(&plant, &entry.gains)
}

/// Frequency grid settings for synthesis and analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { min: DEFAULT_GRID_MIN, max: DEFAULT_GRID_MAX, points: DEFAULT_GRID_POINTS }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub starts: usize,
    pub evals_per_start: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        let b = TuneBudget::default();
        Self { starts: b.starts, evals_per_start: b.evals_per_start }
    }
}

/// Workbench configuration file. Every key is optional; relative paths are
/// taken from the directory of the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkbenchConfig {
    /// Airframe fixture; the shipped one when absent.
    pub airframe: Option<PathBuf>,
    /// Design weight table; the shipped one when absent.
    pub weights: Option<PathBuf>,
    pub out: PathBuf,
    pub seed: u64,
    pub points: Vec<usize>,
    pub grid: GridConfig,
    pub tuning: TuningConfig,
    pub sim: SimConfig,
    /// Scenario files replacing the built-in cases, keyed `none`, `case1`,
    /// `case2`.
    pub scenarios: BTreeMap<String, PathBuf>,
}

impl Default for WorkbenchConfig {
    fn default() -> Self {
        Self {
            airframe: None,
            weights: None,
            out: PathBuf::from("out"),
            seed: 0,
            points: design_points().iter().map(|p| p.index).collect(),
            grid: GridConfig::default(),
            tuning: TuningConfig::default(),
            sim: SimConfig::default(),
            scenarios: BTreeMap::new(),
        }
    }
}

impl WorkbenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Reads the file and makes its relative paths absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let mut c = Self::from_toml(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [c.airframe.as_mut(), c.weights.as_mut()].into_iter().flatten() {
            fix(p);
        }
        fix(&mut c.out);
        c.scenarios.values_mut().for_each(fix);
        Ok(c)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| FtcError::Io(format!("{}: {e}", path.display())))
}

/// Pipeline stage, for exit codes and diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Synth,
    Analyze,
    Simulate,
    Evaluate,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Synth => "synth",
            Stage::Analyze => "analyze",
            Stage::Simulate => "simulate",
            Stage::Evaluate => "evaluate",
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Stage::Synth => 2,
            Stage::Analyze => 3,
            Stage::Simulate => 4,
            Stage::Evaluate => 5,
        }
    }
}

/// Outcome of the analysis stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub poles: Vec<PoleSet>,
    pub mu: MuReport,
}

impl Analysis {
    /// Every nominal loop stable and robust performance on the gated points.
    pub fn passed(&self) -> bool {
        self.poles.iter().all(|p| p.stable)
            && self.mu.entries.iter().filter(|e| RP_POINTS.contains(&e.point)).all(|e| e.rp_pass())
    }

    pub fn poles_csv(&self) -> String {
        let mut s = String::from("axis,point,stable,re,im\n");
        for p in &self.poles {
            for (re, im) in &p.poles {
                let _ = writeln!(s, "{},{},{},{re},{im}", p.axis, p.point, p.stable);
            }
        }
        s
    }
}

/// One named pass/fail check of the end-to-end run.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Outcome of the evaluation stage.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub reports: Vec<TrackingReport>,
    pub end_states: Vec<(Case, Variant, EndState)>,
}

impl Evaluation {
    pub fn gates(&self) -> Vec<Gate> {
        let mut g = Vec::new();
        for (case, v, e) in &self.end_states {
            g.push(Gate {
                name: format!("{case} {v} end state"),
                pass: e.converged(),
                detail: format!(
                    "altitude error {:.3} m, attitude error ({:.2}, {:.2}, {:.2}) deg",
                    e.altitude_error, e.attitude_error_deg[0], e.attitude_error_deg[1], e.attitude_error_deg[2]
                ),
            });
        }
        for r in &self.reports {
            for v in &r.verdicts {
                g.push(Gate { name: format!("{} {} {}", r.case, v.channel.name(), if v.channel == Channel::Altitude { "spread" } else { "ordering" }), pass: v.pass, detail: v.detail.clone() });
            }
        }
        g
    }
}

/// Resolved configuration with its inputs loaded.
#[derive(Debug, Clone)]
pub struct Workbench {
    pub config: WorkbenchConfig,
    pub airframe: Airframe,
    pub weights: WeightTable,
    pub grid: FrequencyGrid,
    /// Hash of the configuration and the contents of every input file.
    pub config_hash: String,
}

impl Workbench {
    pub fn new(mut config: WorkbenchConfig) -> Result<Self> {
        config.sim.seed = config.seed;
        let airframe_text = match &config.airframe {
            Some(p) => read(p)?,
            None => DEFAULT_FIXTURE.to_string(),
        };
        let weights_text = match &config.weights {
            Some(p) => read(p)?,
            None => DEFAULT_WEIGHTS.to_string(),
        };
        let airframe = Airframe::from_toml(&airframe_text)?;
        let weights = WeightTable::from_toml(&weights_text)?;
        for p in &config.points {
            design_point(*p)?;
        }
        let mut scenarios = BTreeMap::new();
        for (k, p) in &config.scenarios {
            ScenarioFile::load(p)?.scenario()?;
            scenarios.insert(k.parse::<Case>()?.name().to_string(), p.clone());
        }
        config.scenarios = scenarios;
        let grid = FrequencyGrid::logspace(config.grid.min, config.grid.max, config.grid.points)?;

        let mut h = Sha256::new();
        let mut hashed = config.clone();
        hashed.out = PathBuf::new();
        h.update(toml::to_string(&hashed)?.as_bytes());
        h.update(airframe_text.as_bytes());
        h.update(weights_text.as_bytes());
        for p in config.scenarios.values() {
            h.update(read(p)?.as_bytes());
        }
        let config_hash = hex::encode(h.finalize());
        Ok(Self { config, airframe, weights, grid, config_hash })
    }

    /// Defaults when `path` is `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        Self::new(match path {
            Some(p) => WorkbenchConfig::load(p)?,
            None => WorkbenchConfig::default(),
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.out
    }

    pub fn export_path(&self) -> PathBuf {
        self.out_dir().join("synthesis.toml")
    }

    pub fn log_path(&self, case: Case, variant: Variant) -> PathBuf {
        self.out_dir().join(format!("sim_{case}_{variant}.csv"))
    }

    pub fn budget(&self) -> TuneBudget {
        TuneBudget { starts: self.config.tuning.starts, evals_per_start: self.config.tuning.evals_per_start, seed: self.config.seed }
    }

    /// `# config_hash` and `# seed` lines heading every text artifact.
    fn stamp(&self) -> String {
        format!("# config_hash = {}\n# seed = {}\n", self.config_hash, self.config.seed)
    }

    fn write(&self, name: &str, body: &str) -> Result<()> {
        std::fs::create_dir_all(self.out_dir())?;
        std::fs::write(self.out_dir().join(name), format!("{}{body}", self.stamp()))?;
        Ok(())
    }

    /// Tunes every configured point and writes the export and a summary.
    pub fn synth(&self) -> Result<SynthesisExport> {
        let export =
            synthesize(&self.airframe, &self.weights, &self.config.points, &self.budget(), &self.grid, &self.config_hash)?;
        std::fs::create_dir_all(self.out_dir())?;
        export.save(&self.export_path())?;
        let mut s = String::from("axis,point,v_bar,kp_outer,kp,ki,kd,tau_f,gamma,iterations\n");
        for c in &export.controllers {
            let g = c.gains;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{}",
                c.axis, c.point, c.v_bar, g.kp_outer, g.kp, g.ki, g.kd, g.tau_f, c.gamma, c.iterations
            );
        }
        self.write("synthesis_summary.csv", &s)?;
        Ok(export)
    }

    pub fn load_export(&self) -> Result<SynthesisExport> {
        SynthesisExport::load(&self.export_path())
            .map_err(|e| FtcError::Io(format!("{}: {e}", self.export_path().display())))
    }

    /// Nominal poles and mu of every exported controller. Unstable loops get
    /// infinite mu.
    pub fn analyze(&self, export: &SynthesisExport) -> Result<Analysis> {
        let mut poles = Vec::new();
        let mut mu = MuReport::default();
        for c in &export.controllers {
            let cl = nominal_loop(c, &self.airframe)?;
            poles.extend(nominal_pole_report(&[(c.axis, c.point, &cl)]));
            let w = loop_weights(c.axis, c.point, &self.airframe, &self.weights, &self.grid)?;
            mu.entries.push(match analyze_loop(c.axis, c.point, &cl, &w.ws, &w.wt, &self.grid) {
                Ok(e) => e,
                Err(FtcError::UnstableNominal) => MuEntry {
                    axis: c.axis,
                    point: c.point,
                    mu_rs: f64::INFINITY,
                    mu_rp: f64::INFINITY,
                    w_rs: 0.0,
                    w_rp: 0.0,
                },
                Err(e) => return Err(e),
            });
        }
        let a = Analysis { poles, mu };
        self.write("poles.csv", &a.poles_csv())?;
        self.write("mu.csv", &a.mu.to_csv())?;
        self.write("mu_table.txt", &a.mu.summary_table())?;
        Ok(a)
    }

    /// Scenario, simulation settings and the variant the scenario file asks
    /// for, if any.
    pub fn scenario(&self, case: Case) -> Result<(FaultScenario, SimConfig, Option<Variant>)> {
        let mut cfg = self.config.sim.clone();
        match self.config.scenarios.get(case.name()) {
            Some(p) => {
                let f = ScenarioFile::load(p)?;
                let mut s = f.scenario()?;
                s.name = case.name().into();
                if let Some(dt) = f.sim.dt {
                    cfg.dt = dt;
                }
                if let Some(d) = f.sim.duration {
                    cfg.duration = d;
                }
                Ok((s, cfg, f.controller.variant))
            }
            None => Ok((case.scenario(), cfg, None)),
        }
    }

    /// Runs one scenario and writes its log.
    pub fn simulate(&self, export: &SynthesisExport, case: Case, variant: Variant) -> Result<SimLog> {
        let bank = ControllerBank::from_export(export)?;
        let (scenario, cfg, _) = self.scenario(case)?;
        let log = run_scenario(&self.airframe, &bank, &scenario, variant, &cfg, &self.config_hash)?;
        std::fs::create_dir_all(self.out_dir())?;
        log.save(&self.log_path(case, variant))?;
        Ok(log)
    }

    /// Every faulted case and variant, in parallel.
    pub fn simulate_all(&self, export: &SynthesisExport) -> Vec<(Case, Variant, Result<SimLog>)> {
        let jobs: Vec<(Case, Variant)> =
            Case::FAULTED.iter().flat_map(|&c| Variant::ALL.map(|v| (c, v))).collect();
        jobs.par_iter().map(|&(c, v)| (c, v, self.simulate(export, c, v))).collect()
    }

    /// Reads the faulted-case logs from the output directory and compares
    /// them.
    pub fn evaluate(&self) -> Result<Evaluation> {
        let mut reports = Vec::new();
        let mut end_states = Vec::new();
        for case in Case::FAULTED {
            let mut logs = Vec::with_capacity(3);
            for v in Variant::ALL {
                let p = self.log_path(case, v);
                let log = SimLog::from_csv(&read(&p)?)?;
                end_states.push((case, v, EndState::of(&log)?));
                logs.push(log);
            }
            reports.push(compare(case.name(), &logs)?);
        }
        let ev = Evaluation { reports, end_states };
        let mut csv = String::new();
        let mut verdicts = String::new();
        for (i, r) in ev.reports.iter().enumerate() {
            let (c, v) = (r.to_csv(), r.verdicts_csv());
            let skip = usize::from(i > 0);
            csv.extend(c.lines().skip(skip).map(|l| format!("{l}\n")));
            verdicts.extend(v.lines().skip(skip).map(|l| format!("{l}\n")));
        }
        self.write("tracking.csv", &csv)?;
        self.write("tracking_verdicts.csv", &verdicts)?;
        self.write("tracking.txt", &table(&ev.reports))?;
        for c in Channel::ALL {
            self.write(&format!("bars_{}.csv", c.name()), &bar_chart_csv(&ev.reports, c))?;
        }
        Ok(ev)
    }
}

/// Caps the global worker pool. Has no effect once the pool is running.
pub fn init_threads(n: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| FtcError::InvalidParameter(format!("thread pool: {e}")))
}
