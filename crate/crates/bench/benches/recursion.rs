use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use gasket_bench::sample_z;
use gasket_walk::green::{assemble_blocks, invert_shifted, iterate, sextet_at_level};
use gasket_walk::observables::exit_distributions;
use gasket_walk::oracle::{evolve_absorbing, Absorb};
use gasket_walk::passage::passage_green;
use gasket_walk::{CircleGrid, CoinKind, DirectedState, Direction, Site};

fn step(c: &mut Criterion) {
    let s = sextet_at_level(sample_z(), 0.5, 3).unwrap();
    c.bench_function("iterate one level", |b| b.iter(|| iterate(black_box(&s)).unwrap()));
    let blk = assemble_blocks(&s);
    c.bench_function("block inverse", |b| b.iter(|| invert_shifted(black_box(&blk)).unwrap()));
}

fn deep(c: &mut Criterion) {
    let mut g = c.benchmark_group("sextet at level");
    for n in [5u32, 15, 25] {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| sextet_at_level(sample_z(), 0.5, n).unwrap()));
    }
    g.finish();
}

fn scan(c: &mut Criterion) {
    let mut g = c.benchmark_group("exit distributions");
    g.sample_size(10);
    for nodes in [1024usize, 4096] {
        let grid = CircleGrid::trapezoid(nodes);
        g.bench_with_input(BenchmarkId::new("levels 1..10", nodes), &grid, |b, grid| b.iter(|| exit_distributions(10, grid, CoinKind::Quantum).unwrap()));
    }
    g.finish();
}

fn passage(c: &mut Criterion) {
    let mut g = c.benchmark_group("passage green");
    for n in 1u32..=3 {
        g.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| b.iter(|| passage_green(sample_z(), n, CoinKind::Quantum).unwrap()));
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let start = DirectedState::new(Site::ORIGIN, Direction::new(0).unwrap());
    c.bench_function("absorbing evolution level 3, 120 steps", |b| {
        b.iter(|| evolve_absorbing(3, start, 120, Absorb::Tau, CoinKind::Quantum).unwrap())
    });
}

criterion_group!(benches, step, deep, scan, passage, oracle);
criterion_main!(benches);
