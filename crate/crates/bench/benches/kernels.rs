use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wan_bench::ex1_fixture;
use wan_core::autodiff::Tape;
use wan_core::experiments::{preset_config, ProblemId};
use wan_core::losses::{evaluate, LossKind, Prepared, Test, Trial, Wrt};
use wan_core::networks::ModelKind;
use wan_core::theory_lab::{random_instance, verify_suite, Ascent, Fault};

fn losses(c: &mut Criterion) {
    let f = ex1_fixture(200, ModelKind::XnodeRecursive).unwrap();
    let prep = Prepared::new(&f.pde, &f.batch, true, false).unwrap();
    let mut spec = preset_config(ProblemId::Ex1).loss_spec();
    let mut g = c.benchmark_group("loss_200pts");
    g.sample_size(10);
    for kind in [LossKind::Wan, LossKind::Cwan] {
        spec.kind = kind;
        for wrt in [Wrt::Theta, Wrt::Eta] {
            g.bench_function(format!("{}_{wrt:?}", kind.name()), |b| {
                b.iter(|| evaluate(&f.pde, &spec, Trial::Net(&f.u), Some(Test::Net(&f.v)), &prep, wrt).unwrap())
            });
        }
    }
    g.finish();
}

fn sampling(c: &mut Criterion) {
    let f = ex1_fixture(10, ModelKind::Dnn).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    c.bench_function("sample_interior_1000", |b| b.iter(|| f.pde.domain.sample_interior(1000, &mut rng)));
}

fn tape(c: &mut Criterion) {
    c.bench_function("tape_second_derivative", |b| {
        b.iter(|| {
            let t = Tape::new();
            let x = t.input(black_box(0.3));
            let y = (x * x).sin() * x.exp();
            let d = t.grad(y, &[x]).unwrap()[0];
            t.grad(d, &[x]).unwrap()[0].value()
        })
    });
}

fn theory(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (op, w, gamma) = random_instance(&mut rng);
    c.bench_function("shifted_sup_random", |b| b.iter(|| op.shifted_sup(&w, gamma, Ascent::default()).unwrap()));
    let mut g = c.benchmark_group("verify");
    g.sample_size(10);
    g.bench_function("suite", |b| b.iter(|| verify_suite(Fault::None)));
    g.finish();
}

criterion_group!(benches, losses, sampling, tape, theory);
criterion_main!(benches);
