//! Acceptance criteria, one test each. Every test prints a single
//! `criterion N: PASS|FAIL` line with the measured numbers before asserting.

mod common;

use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng;

use common::*;
use phokern::experiment::{
    run_cells, run_distinguishability_sweep, run_unbunching_check, summarize, summary_for, EngineChoice,
    ExperimentConfig, KernelChoice,
};
use phokern::fock::{enumerate_configurations, full_distribution, permanent};
use phokern::kernels::{Evaluator, PhotonicSetup};
use phokern::linalg;
use phokern::shots::{distribution_fidelity, multinomial_sigma, reference_shot_budget};
use phokern::svm::{self, kkt_residual};
use phokern::taskgen::{geometric_difference, generate_task, model_complexity, LabelRule, DEFAULT_LAMBDA};
use phokern::{DistinguishabilityModel, Engine, Execution, FockState, Kernel, MeshConfig, MeshUnitary};

fn setup6() -> PhotonicSetup {
    PhotonicSetup::new(MeshConfig::square(6).unwrap(), FockState::central_pair(6).unwrap()).unwrap()
}

fn base_config(dir: &std::path::Path) -> ExperimentConfig {
    ExperimentConfig {
        sizes: vec![40],
        repeats: 5,
        output_dir: dir.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

#[test]
fn criterion_01_fock_counting() {
    let start = Instant::now();
    let full = enumerate_configurations(6, 2, false).unwrap();
    let cf = enumerate_configurations(6, 2, true).unwrap();
    let elapsed = start.elapsed();
    let pass = full.len() == 21 && cf.len() == 15 && elapsed.as_secs_f64() < 1e-3;
    report(
        1,
        pass,
        &format!("{} states, {} collision-free, {:?}", full.len(), cf.len(), elapsed),
    );
    assert!(pass);
}

#[test]
fn criterion_02_hom_dip() {
    let bs = MeshUnitary::beam_splitter();
    let input = FockState::new(vec![1, 1]).unwrap();
    let q = full_distribution(&bs, &input, DistinguishabilityModel::INDISTINGUISHABLE).unwrap();
    let c = full_distribution(&bs, &input, DistinguishabilityModel::DISTINGUISHABLE).unwrap();
    let s = |v: Vec<usize>| FockState::new(v).unwrap();
    let errs = [
        q.probability(&s(vec![1, 1])),
        (q.probability(&s(vec![2, 0])) - 0.5).abs(),
        (q.probability(&s(vec![0, 2])) - 0.5).abs(),
        (c.probability(&s(vec![1, 1])) - 0.5).abs(),
    ];
    let worst = errs.iter().cloned().fold(0.0, f64::max);
    let pass = worst <= 1e-12;
    report(
        2,
        pass,
        &format!(
            "quantum P(1,1)={:.3e}, coherent P(1,1)={:.6}, max error {worst:.1e}",
            q.probability(&s(vec![1, 1])),
            c.probability(&s(vec![1, 1]))
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_03_permanent_oracle() {
    let mut r = rng(2024);
    let mats: Vec<_> = (0..100).map(|i| complex_gaussian(1 + i % 6, 1 + i % 6, &mut r)).collect();
    let start = Instant::now();
    let fast: Vec<_> = mats.iter().map(|a| permanent(a).unwrap()).collect();
    let elapsed = start.elapsed();
    let worst = mats
        .iter()
        .zip(&fast)
        .map(|(a, f)| {
            let slow = naive_permanent(a);
            (f - slow).norm() / slow.norm()
        })
        .fold(0.0, f64::max);
    let pass = worst <= 1e-12 && elapsed.as_secs_f64() < 1.0;
    report(3, pass, &format!("max relative error {worst:.2e} over 100 matrices, Ryser time {elapsed:?}"));
    assert!(pass);
}

#[test]
fn criterion_04_two_photon_distribution() {
    let psi = FockState::new(vec![0, 0, 1, 1, 0, 0]).unwrap();
    let (mut worst, mut worst_norm) = (0.0f64, 0.0f64);
    for seed in 0..50 {
        let u = haar_unitary(6, 9000 + seed);
        let dist = full_distribution(&u, &psi, DistinguishabilityModel::INDISTINGUISHABLE).unwrap();
        let oracle = two_photon_probabilities(u.matrix(), 2, 3);
        assert_eq!(dist.entries().len(), oracle.len());
        for (t, p) in dist.entries() {
            worst = worst.max((p - oracle[t.occupations()]).abs());
        }
        worst_norm = worst_norm
            .max((dist.total() - 1.0).abs())
            .max((oracle.values().sum::<f64>() - 1.0).abs());
    }
    let pass = worst < 1e-10 && worst_norm <= 1e-10;
    report(
        4,
        pass,
        &format!("max abs error {worst:.2e}, max normalization error {worst_norm:.2e} over 50 unitaries"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_geometric_difference_saturation() {
    // The identity y^T (K_C+λI)^{-1} y = g² y^T (K_Q+λI)^{-1} y holds exactly
    // at λ = 0. For λ > 0 the right side carries an extra factor
    // v^T K_Q (K_Q+λI)^{-1} v < 1, so the exact statement is checked with an
    // unregularized K_Q side and the size of that factor is reported.
    let setup = setup6();
    let mut worst_exact = 0.0f64;
    let mut worst_consistent = 0.0f64;
    let mut literal_regularized = 0.0f64;
    let mut worst_unit = 0.0f64;
    for seed in 0..5 {
        let task = generate_task(&setup, 40, 0.0, seed, LabelRule::default(), Execution::Parallel).unwrap();
        let g = &task.geometric;
        let s_c = model_complexity(&task.coherent_gram.values, &g.raw_labels, 0.0).unwrap();
        let s_q = model_complexity(&task.quantum_gram.values, &g.raw_labels, 0.0).unwrap();
        worst_exact = worst_exact.max((s_c - g.g * g.g * s_q).abs() / s_c);

        let kq = &task.quantum_gram.values;
        let kc = &task.coherent_gram.values;
        let reg = geometric_difference(kq, kc, DEFAULT_LAMBDA, LabelRule::default()).unwrap();
        let s_c = model_complexity(kc, &reg.raw_labels, DEFAULT_LAMBDA).unwrap();
        let s_q0 = model_complexity(kq, &reg.raw_labels, 0.0).unwrap();
        let s_ql = model_complexity(kq, &reg.raw_labels, DEFAULT_LAMBDA).unwrap();
        worst_consistent = worst_consistent.max((s_c - reg.g * reg.g * s_q0).abs() / s_c);
        literal_regularized = literal_regularized.max((s_c - reg.g * reg.g * s_ql).abs() / s_c);

        let same = geometric_difference(kq, kq, 0.0, LabelRule::default()).unwrap();
        worst_unit = worst_unit.max((same.g - 1.0).abs());
    }
    let pass = worst_exact <= 1e-6 && worst_consistent <= 1e-6 && worst_unit <= 1e-10;
    report(
        5,
        pass,
        &format!(
            "λ=0 saturation rel. error {worst_exact:.2e}; λ=0.02 with unregularized K_Q side {worst_consistent:.2e} \
             (both-sides-regularized form off by {literal_regularized:.2e}); |g-1| for K_Q=K_C {worst_unit:.2e}"
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_06_svm_against_qp_oracle() {
    let mut r = rng(606);
    let mut agree = 0usize;
    let mut total = 0usize;
    let mut worst_kkt = 0.0f64;
    for problem in 0..20 {
        let n = 10 + problem % 21;
        let d = 3;
        let xs: Vec<Vec<f64>> = (0..n + 15).map(|_| (0..d).map(|_| r.random()).collect()).collect();
        let gamma = 2.0;
        let kern = |a: &[f64], b: &[f64]| phokern::kernels::gaussian_kernel(a, b, gamma);
        let k = DMatrix::from_fn(n, n, |i, j| kern(&xs[i], &xs[j]));
        let k_test = DMatrix::from_fn(15, n, |i, j| kern(&xs[n + i], &xs[j]));
        // Labels from a smooth rule with some flips, both classes present.
        let mut y: Vec<i8> = xs[..n]
            .iter()
            .map(|x| if x[0] + 0.5 * x[1] > 0.75 { 1 } else { -1 })
            .collect();
        for _ in 0..2 {
            let i = r.random_range(0..n);
            y[i] = -y[i];
        }
        y[0] = 1;
        y[1] = -1;
        let c = 10.0;
        let model = svm::train(&k, &y, c).unwrap();
        worst_kkt = worst_kkt.max(kkt_residual(&model, &k).unwrap());
        let (alpha, bias) = qp_oracle(&k, &y, c, 60_000);
        let oracle_pred: Vec<i8> = (0..15)
            .map(|i| {
                let f: f64 = (0..n).map(|j| alpha[j] * f64::from(y[j]) * k_test[(i, j)]).sum::<f64>() + bias;
                if f < 0.0 {
                    -1
                } else {
                    1
                }
            })
            .collect();
        let pred = model.predict(&k_test).unwrap();
        agree += pred.iter().zip(&oracle_pred).filter(|(a, b)| a == b).count();
        total += 15;
    }
    let pass = agree == total && worst_kkt < 1e-6;
    report(
        6,
        pass,
        &format!("{agree}/{total} test decisions agree with the QP oracle, max KKT residual {worst_kkt:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_07_kernel_separation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        kernels: vec![KernelChoice::Quantum, KernelChoice::Coherent, KernelChoice::Gaussian],
        ..base_config(dir.path())
    };
    let start = Instant::now();
    let rows = summarize(&run_cells(&cfg).unwrap());
    let elapsed = start.elapsed();
    let a = |k| summary_for(&rows, 40, k).unwrap().mean_test;
    let (a_q, a_c, a_g) = (a(KernelChoice::Quantum), a(KernelChoice::Coherent), a(KernelChoice::Gaussian));
    let checks = [
        ("a_Q > a_C", a_q > a_c),
        ("a_Q - a_C >= 0.05", a_q - a_c >= 0.05),
        ("a_G < 0.60", a_g < 0.60),
        ("a_Q > a_G", a_q > a_g),
        ("a_C > a_G", a_c > a_g),
        ("runtime < 5 min", elapsed.as_secs() < 300),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    let pass = failed.is_empty();
    report(
        7,
        pass,
        &format!(
            "a_Q={a_q:.3} a_C={a_c:.3} a_G={a_g:.3} in {elapsed:.1?}{}",
            if pass { String::new() } else { format!("; unmet: {}", failed.join(", ")) }
        ),
    );
    assert!(pass, "unmet: {failed:?}");
}

#[test]
fn criterion_08_distinguishability_endpoints() {
    let dir = tempfile::tempdir().unwrap();
    let mut identical = true;
    for engine in [EngineChoice::Exact, EngineChoice::Sampled { shots: 20_000 }] {
        let cfg = ExperimentConfig {
            kernels: vec![KernelChoice::Quantum, KernelChoice::Coherent],
            engine,
            ..base_config(dir.path())
        };
        let reference = run_cells(&cfg).unwrap();
        let (_, sweep) = run_distinguishability_sweep(&[0.0, 0.25, 0.5, 0.75, 1.0], &cfg).unwrap();
        for rec in &reference {
            let r = if rec.kernel == KernelChoice::Quantum { 1.0 } else { 0.0 };
            let twin = sweep
                .iter()
                .find(|s| s.repeat == rec.repeat && s.kernel == KernelChoice::Partial(r))
                .unwrap();
            identical &= twin.test_accuracy.to_bits() == rec.test_accuracy.to_bits()
                && twin.train_accuracy.to_bits() == rec.train_accuracy.to_bits()
                && twin.min_eigenvalue.to_bits() == rec.min_eigenvalue.to_bits();
        }
    }
    // Gram matrices themselves, sampled engine with a shared seed.
    let setup = setup6();
    let mut r = rng(8);
    let xs: Vec<Vec<f64>> = (0..12).map(|_| (0..30).map(|_| r.random()).collect()).collect();
    let engine = Engine::Sampled { shots: 5_000, seed: 3 };
    let gram = |k| Evaluator::new(k, Some(setup.clone())).unwrap().gram(&xs, engine, Execution::Parallel).unwrap();
    identical &= gram(Kernel::Partial { r: 1.0 }).values == gram(Kernel::Quantum).values;
    identical &= gram(Kernel::Partial { r: 0.0 }).values == gram(Kernel::Coherent).values;

    let mut worst_mix = 0.0f64;
    for seed in 0..20 {
        let u = haar_unitary(6, 800 + seed);
        let psi = FockState::central_pair(6).unwrap();
        let q = full_distribution(&u, &psi, DistinguishabilityModel::INDISTINGUISHABLE).unwrap();
        let c = full_distribution(&u, &psi, DistinguishabilityModel::DISTINGUISHABLE).unwrap();
        for rv in [0.25, 0.5, 0.75] {
            let mixed = full_distribution(&u, &psi, DistinguishabilityModel::new(rv).unwrap()).unwrap();
            for (t, p) in mixed.entries() {
                let expect = rv * q.probability(t) + (1.0 - rv) * c.probability(t);
                worst_mix = worst_mix.max((p - expect).abs());
            }
        }
    }
    let pass = identical && worst_mix <= 1e-12;
    report(
        8,
        pass,
        &format!("endpoints bit-identical: {identical}; max mixture deviation {worst_mix:.2e}"),
    );
    assert!(pass);
}

#[test]
fn criterion_09_shot_noise() {
    let setup = setup6();
    let shots = reference_shot_budget();
    let task = generate_task(&setup, 40, DEFAULT_LAMBDA, 99, LabelRule::default(), Execution::Parallel).unwrap();
    let xs = &task.dataset.points;
    let mut ratios = Vec::new();
    for (kernel, exact) in [(Kernel::Quantum, &task.quantum_gram), (Kernel::Coherent, &task.coherent_gram)] {
        let sampled = Evaluator::new(kernel, Some(setup.clone()))
            .unwrap()
            .gram(xs, Engine::Sampled { shots, seed: 5 }, Execution::Parallel)
            .unwrap();
        let (mut err2, mut bound2, mut count) = (0.0, 0.0, 0.0);
        for i in 0..40 {
            for j in (i + 1)..40 {
                let p = exact.get(i, j);
                err2 += (sampled.get(i, j) - p).powi(2);
                bound2 += multinomial_sigma(p, shots).powi(2);
                count += 1.0;
            }
        }
        ratios.push(((err2 / count).sqrt(), (bound2 / count).sqrt()));
    }
    let rms_ok = ratios.iter().all(|(e, b)| *e <= 2.0 * b);

    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        kernels: vec![KernelChoice::Quantum, KernelChoice::Coherent],
        ..base_config(dir.path())
    };
    let exact = summarize(&run_cells(&cfg).unwrap());
    let sampled = summarize(
        &run_cells(&ExperimentConfig {
            engine: EngineChoice::Sampled { shots },
            ..cfg.clone()
        })
        .unwrap(),
    );
    let gaps: Vec<f64> = exact.iter().zip(&sampled).map(|(e, s)| (e.mean_test - s.mean_test).abs()).collect();
    let acc_ok = gaps.iter().all(|&g| g <= 0.1);
    let pass = rms_ok && acc_ok;
    report(
        9,
        pass,
        &format!(
            "RMS error / bound: quantum {:.2e}/{:.2e}, coherent {:.2e}/{:.2e}; \
             |a_exact - a_sampled|: quantum {:.3}, coherent {:.3} at {shots} shots",
            ratios[0].0, ratios[0].1, ratios[1].0, ratios[1].1, gaps[0], gaps[1]
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_10_unbunching() {
    let dir = tempfile::tempdir().unwrap();
    let (rows, records) = run_unbunching_check(&base_config(dir.path())).unwrap();
    let acc = |k: KernelChoice| -> Vec<f64> {
        records.iter().filter(|r| r.kernel == k).map(|r| r.test_accuracy).collect()
    };
    let (q, u, c) = (acc(KernelChoice::Quantum), acc(KernelChoice::Unbunching), acc(KernelChoice::Coherent));
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mean_abs_gap = q.iter().zip(&u).map(|(a, b)| (a - b).abs()).sum::<f64>() / q.len() as f64;
    let unb = rows.iter().find(|r| r.kernel == KernelChoice::Unbunching).unwrap();

    // Training must survive an indefinite unbunching Gram: push one below zero.
    let setup = setup6();
    let mut r = rng(10);
    let xs: Vec<Vec<f64>> = (0..30).map(|_| (0..30).map(|_| r.random()).collect()).collect();
    let mut k = Evaluator::new(Kernel::Unbunching, Some(setup))
        .unwrap()
        .gram(&xs, Engine::Exact, Execution::Parallel)
        .unwrap()
        .values;
    let shift = linalg::min_eigenvalue(&k).unwrap() + 0.05;
    for i in 0..30 {
        k[(i, i)] -= shift;
    }
    let indefinite_min = linalg::min_eigenvalue(&k).unwrap();
    let y: Vec<i8> = (0..30).map(|i| if xs[i][0] > 0.5 { 1 } else { -1 }).collect();
    let survives = indefinite_min < 0.0 && svm::train(&k, &y, 10.0).is_ok();

    let pass = mean_abs_gap <= 0.1 && mean(&u) > mean(&c) && unb.min_eigenvalue.is_finite() && survives;
    report(
        10,
        pass,
        &format!(
            "a_Q={:.3} a_U={:.3} a_C={:.3}, mean |a_U-a_Q|={mean_abs_gap:.3}; unbunching min eigenvalue {:.3e} \
             ({} of {} indefinite); SVM on indefinite Gram (λ_min={indefinite_min:.2e}) trains: {survives}",
            mean(&q),
            mean(&u),
            mean(&c),
            unb.min_eigenvalue,
            unb.indefinite_runs,
            unb.runs
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_11_fidelity() {
    let cf = enumerate_configurations(6, 2, true).unwrap();
    let uniform: Vec<(FockState, f64)> = cf.iter().map(|s| (s.clone(), 1.0 / 15.0)).collect();
    let point = |s: &FockState| -> phokern::OutputDistribution {
        let entries = cf.iter().map(|t| (t.clone(), if t == s { 1.0 } else { 0.0 })).collect();
        phokern::OutputDistribution::from_entries(entries, phokern::fock::StatisticsKind::Quantum, 1e-10).unwrap()
    };
    let theory_uniform =
        phokern::OutputDistribution::from_entries(uniform.clone(), phokern::fock::StatisticsKind::Quantum, 1e-10)
            .unwrap();
    let same = distribution_fidelity(&theory_uniform, &uniform).unwrap();
    let disjoint = distribution_fidelity(&point(&cf[0]), &[(cf[1].clone(), 1.0)]).unwrap();
    let mixed = distribution_fidelity(&point(&cf[4]), &uniform).unwrap();
    let errs = [(same - 1.0).abs(), disjoint.abs(), (mixed - (1.0f64 / 15.0).sqrt()).abs()];
    let pass = errs.iter().all(|&e| e <= 1e-12);
    report(
        11,
        pass,
        &format!("identical {same:.15}, disjoint {disjoint:.1}, uniform vs point {mixed:.6}"),
    );
    assert!(pass);
}
