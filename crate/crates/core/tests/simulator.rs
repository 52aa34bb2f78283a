use std::collections::BTreeMap;
use std::sync::OnceLock;

use ftc_core::models::Airframe;
use ftc_core::pipeline::{synthesize, Workbench, WorkbenchConfig};
use ftc_core::simulator::{
    check_passive, run_scenario, Case, ControllerBank, FaultScenario, SimConfig, SimLog, SimRecord, Variant,
};
use ftc_core::synthesis::{SynthesisExport, TuneBudget, WeightTable};
use ftc_core::FtcError;

fn export() -> &'static SynthesisExport {
    static E: OnceLock<SynthesisExport> = OnceLock::new();
    E.get_or_init(|| {
        let af = Airframe::fixture();
        let grid = ftc_core::linsys::FrequencyGrid::logspace(1e-3, 1e3, 400).unwrap();
        synthesize(&af, &WeightTable::fixture(), &[1, 2, 3, 4, 5, 6], &TuneBudget::default(), &grid, "test").unwrap()
    })
}

fn bank() -> ControllerBank {
    ControllerBank::from_export(export()).unwrap()
}

fn fly(scenario: &FaultScenario, variant: Variant, cfg: &SimConfig) -> SimLog {
    run_scenario(&Airframe::fixture(), &bank(), scenario, variant, cfg, "test").unwrap()
}

fn same_records(a: &SimLog, b: &SimLog) -> bool {
    a.records.len() == b.records.len()
        && a.records.iter().zip(&b.records).all(|(x, y)| bits(x) == bits(y))
}

/// Every numeric field as raw bits.
fn bits(r: &SimRecord) -> Vec<u64> {
    let mut v = vec![r.t, r.airspeed, r.v_sched];
    v.extend(r.pos);
    v.extend(r.vel);
    v.extend(r.quat);
    v.extend(r.omega);
    v.extend(r.euler);
    v.extend(r.refs);
    v.extend(r.command);
    v.extend(r.actuated);
    v.extend(r.effective);
    v.extend(r.gains);
    v.into_iter().map(f64::to_bits).collect()
}

#[test]
fn runs_are_bit_identical() {
    let cfg = SimConfig::default();
    let a = fly(&FaultScenario::case1(), Variant::GsShif, &cfg);
    let b = fly(&FaultScenario::case1(), Variant::GsShif, &cfg);
    assert!(same_records(&a, &b));
    assert_eq!(a.meta, b.meta);
}

#[test]
fn noisy_schedule_is_seeded() {
    let mut cfg = SimConfig { airspeed_noise: 0.3, seed: 7, ..SimConfig::default() };
    let a = fly(&FaultScenario::case1(), Variant::GsShif, &cfg);
    let b = fly(&FaultScenario::case1(), Variant::GsShif, &cfg);
    assert!(same_records(&a, &b));
    cfg.seed = 8;
    let c = fly(&FaultScenario::case1(), Variant::GsShif, &cfg);
    assert!(!same_records(&a, &c));
}

#[test]
fn zero_losses_match_no_fault() {
    let cfg = SimConfig::default();
    let mut zero = FaultScenario::case2();
    zero.losses.values_mut().for_each(|l| *l = 0.0);
    for v in Variant::ALL {
        let a = fly(&FaultScenario::none(), v, &cfg);
        let b = fly(&zero, v, &cfg);
        assert!(same_records(&a, &b), "{v}");
    }
}

#[test]
fn fault_changes_nothing_before_onset() {
    let cfg = SimConfig::default();
    let a = fly(&FaultScenario::none(), Variant::Shif, &cfg);
    let b = fly(&FaultScenario::case2(), Variant::Shif, &cfg);
    let before = |l: &SimLog| l.records.iter().take_while(|r| r.t < 22.0).map(bits).collect::<Vec<_>>();
    assert!(!before(&a).is_empty());
    assert_eq!(before(&a), before(&b));
    assert!(!same_records(&a, &b));
}

#[test]
fn passive_contract_holds() {
    let af = Airframe::fixture();
    let b = bank();
    for v in Variant::ALL {
        let log = fly(&FaultScenario::case2(), v, &SimConfig::default());
        check_passive(&log, &af, &b, v).unwrap();
        // gains depend on airspeed only, not on the fault
        let mut tampered = log.clone();
        let k = tampered.records.iter().position(|r| r.t >= 22.0).unwrap();
        tampered.records[k].gains[1] *= 1.0 + 1e-12;
        assert!(check_passive(&tampered, &af, &b, v).is_err());
    }
}

#[test]
fn csv_round_trip_is_exact() {
    let log = fly(&FaultScenario::case1(), Variant::Lqr, &SimConfig::default());
    let back = SimLog::from_csv(&log.to_csv()).unwrap();
    assert_eq!(back.meta, log.meta);
    assert!(same_records(&log, &back));
    assert_eq!(back.records.iter().map(|r| r.mode).collect::<Vec<_>>(), log.records.iter().map(|r| r.mode).collect::<Vec<_>>());
}

#[test]
fn run_ends_after_settling() {
    let cfg = SimConfig::default();
    let log = fly(&FaultScenario::case1(), Variant::Shif, &cfg);
    let reach = log.meta.t_reach.unwrap();
    let end = log.last().unwrap().t;
    assert!(end >= reach + cfg.settle - 1e-9 && end < reach + cfg.settle + 0.01 + 1e-9, "{reach} {end}");
    let dt_log = cfg.dt * cfg.log_every as f64;
    for w in log.records.windows(2) {
        assert!((w[1].t - w[0].t - dt_log).abs() < 1e-9);
    }
}

#[test]
fn short_cap_times_out() {
    let cfg = SimConfig { duration: 21.0, ..SimConfig::default() };
    let r = run_scenario(&Airframe::fixture(), &bank(), &FaultScenario::case1(), Variant::Lqr, &cfg, "test");
    assert!(matches!(r, Err(FtcError::TransitionTimeout { .. })));
}

#[test]
fn bad_step_rejected() {
    let cfg = SimConfig { dt: 0.01, ..SimConfig::default() };
    let r = run_scenario(&Airframe::fixture(), &bank(), &FaultScenario::none(), Variant::Lqr, &cfg, "test");
    assert!(matches!(r, Err(FtcError::InvalidParameter(_))));
}

#[test]
fn scenario_file_overrides_case() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("late.toml");
    std::fs::write(
        &path,
        "[fault]\ntime = 24.0\nlosses = { rotor2b = 0.3 }\n\n[controller]\nvariant = \"shif\"\n\n[sim]\ndt = 0.002\n",
    )
    .unwrap();
    let cfg = WorkbenchConfig {
        out: dir.path().join("out"),
        scenarios: BTreeMap::from([("case1".to_string(), path)]),
        ..Default::default()
    };
    let wb = Workbench::new(cfg).unwrap();
    let (s, sim, variant) = wb.scenario(Case::One).unwrap();
    assert_eq!(s.onset, 24.0);
    assert_eq!(s.losses.get("rotor2b"), Some(&0.3));
    assert_eq!(s.losses.len(), 1);
    assert_eq!(sim.dt, 0.002);
    assert_eq!(variant, Some(Variant::Shif));
    let (builtin, _, none) = wb.scenario(Case::Two).unwrap();
    assert_eq!(builtin, FaultScenario::case2());
    assert_eq!(none, None);

    let log = wb.simulate(export(), Case::One, Variant::Shif).unwrap();
    assert_eq!(log.meta.dt, 0.002);
    assert_eq!(log.meta.fault_onset, 24.0);
    assert!(wb.log_path(Case::One, Variant::Shif).exists());
}

#[test]
fn bad_scenario_file_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[fault]\nlosses = { rotor9z = 0.5 }\n").unwrap();
    let cfg = WorkbenchConfig { scenarios: BTreeMap::from([("case1".to_string(), path)]), ..Default::default() };
    assert!(matches!(Workbench::new(cfg), Err(FtcError::InvalidParameter(_))));
}
