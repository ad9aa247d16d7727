use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use magspec_core::counting::{bound_correction_branch, bound_correction_eigfn};
use magspec_core::dynamics::{integrate_flow, FlowOptions, PhaseState};
use magspec_core::edge::QuadOptions;
use magspec_core::model2d::{oracle_count_2d, OracleProblem};
use magspec_core::oscillator::{eigenpair, solve_spectrum};
use magspec_core::{BoundaryCondition, ModelParams, OscillatorGrid, PotentialField};

const D: BoundaryCondition = BoundaryCondition::Dirichlet;

fn oscillator(c: &mut Criterion) {
    let grid = OscillatorGrid::default();
    c.bench_function("eigenpair n=2 eta=1", |b| {
        b.iter(|| eigenpair(black_box(1.0), D, 2, &grid).unwrap())
    });
    c.bench_function("solve_spectrum n<=4 eta=0", |b| {
        b.iter(|| solve_spectrum(black_box(0.0), D, 4, &grid).unwrap())
    });
}

fn counting(c: &mut Criterion) {
    let grid = OscillatorGrid::default();
    let mut g = c.benchmark_group("bound_correction");
    g.sample_size(10);
    g.bench_function("branch hbar=0.2", |b| {
        b.iter(|| bound_correction_branch(D, 1.0, black_box(0.2), &grid).unwrap())
    });
    g.bench_function("eigfn hbar=0.5", |b| {
        b.iter(|| bound_correction_eigfn(D, 1.0, black_box(0.5), &grid, &QuadOptions::default()).unwrap())
    });
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let params = ModelParams::new(4.0, 0.1).unwrap();
    let p = OracleProblem {
        l1: 1.0,
        l2: 1.0,
        n1: 40,
        n2: 40,
        bc: D,
        v: PotentialField::constant(-1.0),
        params,
        cap: 10_000,
    };
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    g.bench_function("count 40x40", |b| b.iter(|| oracle_count_2d(&p, black_box(0.0)).unwrap()));
    g.finish();
}

fn billiard(c: &mut Criterion) {
    let params = ModelParams::new(10.0, 0.1).unwrap();
    let w = PotentialField::constant(1.0);
    let s = PhaseState::at_boundary(0.0, 0.0, 1.0).unwrap();
    c.bench_function("flow 20 hops", |b| {
        b.iter(|| integrate_flow(&s, &w, &params, black_box(20.0 * std::f64::consts::FRAC_PI_2 / 10.0), &FlowOptions::default()).unwrap())
    });
}

criterion_group!(benches, oscillator, counting, oracle, billiard);
criterion_main!(benches);
