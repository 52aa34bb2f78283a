//! `ftc-workbench`: synthesis, robustness analysis, simulation and
//! evaluation of the fault-tolerant attitude controllers.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ftc_core::pipeline::{init_threads, Stage, Workbench, WorkbenchConfig};
use ftc_core::simulator::{Case, Variant};
use ftc_core::synthesis::SynthesisExport;
use ftc_core::FtcError;

/// Exit code when a run completes but a pass/fail gate does not hold.
const GATE_FAILED: u8 = 1;
/// Exit code for command-line usage errors.
const USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "ftc-workbench", version, about = "Gain-scheduled passive fault-tolerant control workbench")]
struct Cli {
    /// Workbench configuration file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory, overrides the configuration.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Optimizer and simulation seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Design points to synthesize, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    points: Option<Vec<usize>>,
    /// Fault case: 1, 2 or none.
    #[arg(long, global = true)]
    case: Option<Case>,
    /// Controller: lqr, shif or gs_shif.
    #[arg(long, global = true)]
    variant: Option<Variant>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Tune every (axis, design point) controller and the hover LQR.
    Synth,
    /// Nominal poles and mu-analysis of the exported controllers.
    Analyze,
    /// Run fault scenarios; all faulted cases and variants by default.
    Simulate,
    /// RMSE table and ordering verdicts from the simulation logs.
    Evaluate,
    /// Synth, analyze, the six faulted simulations and evaluate.
    All,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn at(stage: Stage) -> impl Fn(FtcError) -> Failure {
        move |e| Failure { code: stage.exit_code() as u8, message: format!("{}: {e}", stage.name()) }
    }
}

type Outcome = Result<bool, Failure>;

fn workbench(cli: &Cli, stage: Stage) -> Result<Workbench, Failure> {
    let mut config = match &cli.config {
        Some(p) => WorkbenchConfig::load(p),
        None => Ok(WorkbenchConfig::default()),
    }
    .map_err(Failure::at(stage))?;
    if let Some(o) = &cli.out {
        config.out = o.clone();
    }
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(p) = &cli.points {
        config.points = p.clone();
    }
    Workbench::new(config).map_err(Failure::at(stage))
}

fn synth(wb: &Workbench) -> Result<SynthesisExport, Failure> {
    let export = wb.synth().map_err(Failure::at(Stage::Synth))?;
    println!("axis   point  v_bar   gamma   kp_outer        kp        ki        kd");
    for c in &export.controllers {
        let g = c.gains;
        println!(
            "{:<6} {:>5} {:>6.1} {:>7.4} {:>10.4} {:>9.4} {:>9.4} {:>9.5}",
            c.axis.name(),
            c.point,
            c.v_bar,
            c.gamma,
            g.kp_outer,
            g.kp,
            g.ki,
            g.kd
        );
    }
    println!("wrote {}", wb.export_path().display());
    Ok(export)
}

fn analyze(wb: &Workbench, export: &SynthesisExport) -> Outcome {
    let a = wb.analyze(export).map_err(Failure::at(Stage::Analyze))?;
    print!("{}", a.mu.summary_table());
    let unstable: Vec<String> =
        a.poles.iter().filter(|p| !p.stable).map(|p| format!("{} point {}", p.axis, p.point)).collect();
    if !unstable.is_empty() {
        println!("unstable nominal loops: {}", unstable.join(", "));
    }
    let pass = a.passed();
    println!("robust performance on points 3-6: {}", if pass { "PASS" } else { "FAIL" });
    Ok(pass)
}

fn simulate(wb: &Workbench, export: &SynthesisExport, case: Option<Case>, variant: Option<Variant>) -> Outcome {
    let cases = case.map(|c| vec![c]).unwrap_or(Case::FAULTED.to_vec());
    for c in cases {
        let file_variant = wb.scenario(c).map_err(Failure::at(Stage::Simulate))?.2;
        let variants = variant.or(file_variant).map(|v| vec![v]).unwrap_or(Variant::ALL.to_vec());
        for v in variants {
            let log = wb.simulate(export, c, v).map_err(Failure::at(Stage::Simulate))?;
            let reach = log.meta.t_reach.map(|t| format!("{t:.2} s")).unwrap_or_else(|| "-".into());
            println!("{c} {v}: stall speed at {reach}, {} samples, {}", log.records.len(), wb.log_path(c, v).display());
        }
    }
    Ok(true)
}

fn evaluate(wb: &Workbench) -> Outcome {
    let ev = wb.evaluate().map_err(Failure::at(Stage::Evaluate))?;
    print!("{}", ftc_core::evaluation::table(&ev.reports));
    Ok(ev.reports.iter().all(|r| r.passed()))
}

fn all(wb: &Workbench) -> Outcome {
    let export = synth(wb)?;
    let rp = analyze(wb, &export)?;
    let mut ok = rp;
    for (c, v, r) in wb.simulate_all(&export) {
        match r {
            Ok(log) => println!("{c} {v}: stall speed at {:.2} s", log.meta.t_reach.unwrap_or(f64::NAN)),
            Err(e) => return Err(Failure::at(Stage::Simulate)(e)),
        }
    }
    let ev = wb.evaluate().map_err(Failure::at(Stage::Evaluate))?;
    print!("{}", ftc_core::evaluation::table(&ev.reports));
    for g in ev.gates() {
        println!("{:<4} {}: {}", if g.pass { "PASS" } else { "FAIL" }, g.name, g.detail);
        ok &= g.pass;
    }
    Ok(ok)
}

fn run(cli: &Cli) -> Outcome {
    if let Ok(n) = std::env::var("FTC_WORKBENCH_THREADS") {
        let n: usize = n
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| Failure { code: USAGE, message: format!("FTC_WORKBENCH_THREADS must be a positive integer, got '{n}'") })?;
        init_threads(n).map_err(|e| Failure { code: USAGE, message: e.to_string() })?;
    }
    match cli.command {
        Command::Synth => synth(&workbench(cli, Stage::Synth)?).map(|_| true),
        Command::Analyze => {
            let wb = workbench(cli, Stage::Analyze)?;
            analyze(&wb, &wb.load_export().map_err(Failure::at(Stage::Analyze))?)
        }
        Command::Simulate => {
            let wb = workbench(cli, Stage::Simulate)?;
            simulate(&wb, &wb.load_export().map_err(Failure::at(Stage::Simulate))?, cli.case, cli.variant)
        }
        Command::Evaluate => evaluate(&workbench(cli, Stage::Evaluate)?),
        Command::All => all(&workbench(cli, Stage::Synth)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(GATE_FAILED),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
