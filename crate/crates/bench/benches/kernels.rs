use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use galop_bench::Fixture;
use galop_core::fem::assemble_bilinear;
use galop_core::harness::ProblemKind;
use galop_core::opnet::{loss_gradient, Batch, OptimizerConfig, TrainConfig, TrainState, run_epochs};
use galop_core::oracle::{solve_burgers_newton, solve_linear};
use std::hint::black_box;

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for problem in [ProblemKind::Bc1, ProblemKind::Eq2, ProblemKind::Domain1, ProblemKind::Domain2] {
        let f = Fixture::new(problem, 1);
        let d = &f.disc;
        group.bench_function(problem.name(), |b| {
            b.iter(|| assemble_bilinear(black_box(&d.problem), &d.mesh, &d.dofmap).unwrap())
        });
    }
    let f = Fixture::new(ProblemKind::Domain2, 1);
    let s = &f.train.samples[0];
    group.bench_function("load/domain2", |b| {
        b.iter(|| f.system().assemble_load(&f.disc.mesh, &f.disc.dofmap, &|p| s.eval(p)).unwrap())
    });
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("oracle");
    let f = Fixture::new(ProblemKind::Domain2, 1);
    group.bench_function("lu/domain2", |b| b.iter(|| solve_linear(f.system(), black_box(&f.train.loads[0])).unwrap()));
    let f = Fixture::new(ProblemKind::Eq2, 1);
    group.bench_function("newton/eq2", |b| {
        b.iter(|| solve_burgers_newton(f.system(), black_box(&f.train.loads[0]), None, 1e-12, 20).unwrap())
    });
    group.finish();
}

fn network(c: &mut Criterion) {
    let mut group = c.benchmark_group("network");
    let f = Fixture::new(ProblemKind::Bc1, 50);
    let net = f.network();
    let all: Vec<usize> = (0..f.train.len()).collect();
    let batch = Batch::from_dataset(&net, f.system(), &f.train, f.disc.dofmap.dof_coords(), &all).unwrap();
    group.bench_function("forward/bc1_batch50", |b| b.iter(|| net.forward_batch(black_box(&batch.inputs)).unwrap()));
    group.bench_function("loss_gradient/bc1_batch50", |b| b.iter(|| loss_gradient(&net, black_box(&batch), 0).unwrap()));

    let f = Fixture::new(ProblemKind::Eq2, 50);
    let net = f.network();
    let batch = Batch::from_dataset(&net, f.system(), &f.train, f.disc.dofmap.dof_coords(), &all).unwrap();
    group.bench_function("loss_gradient/eq2_batch50", |b| b.iter(|| loss_gradient(&net, black_box(&batch), 0).unwrap()));
    group.finish();
}

fn training(c: &mut Criterion) {
    let mut group = c.benchmark_group("train_epoch");
    group.sample_size(20);
    let f = Fixture::new(ProblemKind::Bc1, 50);
    for (name, optimizer) in [("adam", OptimizerConfig::adam(1e-3)), ("lbfgs", OptimizerConfig::lbfgs())] {
        let config = TrainConfig {
            epochs: 1,
            optimizer,
            ..TrainConfig::default()
        };
        group.bench_function(name, |b| {
            b.iter_batched(
                || TrainState::new(f.network(), config),
                |mut state| {
                    run_epochs(&mut state, f.system(), &f.train, f.disc.dofmap.dof_coords(), 1).unwrap();
                    state
                },
                BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, assembly, oracle, network, training);
criterion_main!(benches);
