use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use phokern::fock::permanent;
use phokern::kernels::{Evaluator, PhotonicSetup};
use phokern::{Engine, Execution, FockState, Kernel, MeshConfig};

fn points(n: usize, d: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect()
}

fn gram_exec(c: &mut Criterion) {
    let setup = PhotonicSetup::new(MeshConfig::square(6).unwrap(), FockState::central_pair(6).unwrap()).unwrap();
    let mut group = c.benchmark_group("quantum_gram");
    group.sample_size(20);
    for n in [40, 100] {
        let xs = points(n, 30);
        let eval = Evaluator::new(Kernel::Quantum, Some(setup.clone())).unwrap();
        for exec in [Execution::Sequential, Execution::Parallel] {
            let id = BenchmarkId::new(format!("{exec:?}").to_lowercase(), n);
            group.bench_with_input(id, &xs, |b, xs| b.iter(|| eval.gram(xs, Engine::Exact, exec).unwrap()));
        }
    }
    group.finish();

    let mut group = c.benchmark_group("sampled_gram");
    group.sample_size(10);
    let xs = points(40, 30);
    let eval = Evaluator::new(Kernel::Quantum, Some(setup)).unwrap();
    let engine = Engine::Sampled { shots: 50_000, seed: 1 };
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_function(format!("{exec:?}").to_lowercase(), |b| {
            b.iter(|| eval.gram(&xs, engine, exec).unwrap())
        });
    }
    group.finish();
}

fn ryser(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut group = c.benchmark_group("permanent");
    for q in [2, 4, 8, 12] {
        let a = DMatrix::from_fn(q, q, |_, _| Complex64::new(rng.random(), rng.random()));
        group.bench_with_input(BenchmarkId::from_parameter(q), &a, |b, a| b.iter(|| permanent(a).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, gram_exec, ryser);
criterion_main!(benches);
