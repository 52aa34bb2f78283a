use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use ftc_core::allocator::{allocate, ActuatorCommand, EffectivenessMatrix};
use ftc_core::linsys::{hinf_norm, FrequencyGrid};
use ftc_core::models::{design_point, Airframe, Axis};
use ftc_core::pipeline::{loop_weights, nominal_loop, synthesize_one};
use ftc_core::robustness::analyze_loop;
use ftc_core::simulator::{run_scenario, ControllerBank, FaultScenario, SimConfig, Variant};
use ftc_core::synthesis::{design_plant, SynthesisExport, TuneBudget, WeightTable};
use ftc_core::uncertainty::analyze_point;

fn grid() -> FrequencyGrid {
    FrequencyGrid::logspace(1e-3, 1e3, 400).unwrap()
}

fn export(af: &Airframe) -> SynthesisExport {
    ftc_core::pipeline::synthesize(af, &WeightTable::fixture(), &[1, 2, 3, 4, 5, 6], &TuneBudget::default(), &grid(), "bench")
        .unwrap()
}

fn linear(c: &mut Criterion) {
    let af = Airframe::fixture();
    let g = grid();
    let e = export(&af);
    let entry = *e.get(Axis::Pitch, 4).unwrap();
    let cl = nominal_loop(&entry, &af).unwrap();

    c.bench_function("hinf_norm closed-loop T", |b| b.iter(|| hinf_norm(black_box(&cl.t)).unwrap()));
    c.bench_function("uncertainty envelope and fit", |b| {
        let pt = design_point(4).unwrap();
        b.iter(|| analyze_point(Axis::Pitch, black_box(&pt), &af.params, &af.aero, &g).unwrap())
    });
    c.bench_function("mu analysis one loop", |b| {
        let w = loop_weights(Axis::Pitch, 4, &af, &WeightTable::fixture(), &g).unwrap();
        b.iter(|| analyze_loop(Axis::Pitch, 4, black_box(&cl), &w.ws, &w.wt, &g).unwrap())
    });
    c.bench_function("design plant", |b| b.iter(|| design_plant(Axis::Yaw, &af.params, &af.aero, black_box(7.0)).unwrap()));
}

fn tuning(c: &mut Criterion) {
    let af = Airframe::fixture();
    let g = grid();
    let table = WeightTable::fixture();
    let mut group = c.benchmark_group("synthesis");
    group.sample_size(10);
    group.bench_function("tune pitch point 4", |b| {
        b.iter(|| synthesize_one(Axis::Pitch, 4, &af, &table, &TuneBudget::default(), &g).unwrap())
    });
    group.finish();
}

fn allocation(c: &mut Criterion) {
    let af = Airframe::fixture();
    let e = EffectivenessMatrix::new(&af.params, &af.aero).unwrap();
    let trim = ActuatorCommand::hover_trim(&af.params);
    let w = [af.params.weight(), 3.0, -2.0, 0.4];
    c.bench_function("allocate", |b| b.iter(|| allocate(&e, black_box(w), black_box(6.0), &trim)));
}

fn simulation(c: &mut Criterion) {
    let af = Airframe::fixture();
    let bank = ControllerBank::from_export(&export(&af)).unwrap();
    let mut group = c.benchmark_group("simulation");
    group.sample_size(10);
    group.bench_function("case 1 gs_shif", |b| {
        b.iter(|| run_scenario(&af, &bank, &FaultScenario::case1(), Variant::GsShif, &SimConfig::default(), "bench").unwrap())
    });
    group.finish();
}

criterion_group!(benches, linear, tuning, allocation, simulation);
criterion_main!(benches);
