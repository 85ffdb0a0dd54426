use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array1;
use rand::Rng as _;

use jobbias_core::bias::{bias_profiles, BiasWeightMode};
use jobbias_core::cohort::{synth_cohort, SynthConfig};
use jobbias_core::exec::ExecMode;
use jobbias_core::experiment::planted_cohort;
use jobbias_core::rng;
use jobbias_core::trainer::{evaluate, MaskPlan, MaskSchedule, Model, Penalty, StudentSequence};

const MODES: [ExecMode; 2] = [ExecMode::Sequential, ExecMode::Parallel];

fn sequences(n: usize, steps: usize, dim: usize) -> Vec<StudentSequence> {
    let mut r = rng::rng(7);
    (0..n)
        .map(|i| StudentSequence {
            student_id: format!("s{i}"),
            major_id: Some(1),
            inputs: (0..steps)
                .map(|_| Array1::from_iter((0..dim).map(|_| r.random_range(0.0..1.0))))
                .collect(),
            demographics: [0.0, 1.0, 0.0, 1.0],
            label: u8::from(r.random_bool(0.5)),
        })
        .collect()
}

fn lstm_gradient(c: &mut Criterion) {
    let seqs = sequences(2000, 6, 3);
    let model = Model::init(3, 16, 1).unwrap();
    let plan = MaskPlan::Sampled {
        rate: 0.3,
        schedule: MaskSchedule::PerSequence,
        seed: 1,
        epoch: 0,
    };
    let mut g = c.benchmark_group("lstm_full_batch_gradient");
    g.sample_size(20);
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| evaluate(&model, &seqs, &Penalty::L2, plan, mode).unwrap())
        });
    }
    g.finish();
}

fn chi_square_profiles(c: &mut Criterion) {
    let cohort = synth_cohort(&SynthConfig {
        num_majors: 64,
        num_students: 4000,
        ..planted_cohort()
    })
    .unwrap();
    let mut g = c.benchmark_group("bias_profiles");
    for mode in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(format!("{mode:?}")), &mode, |b, &mode| {
            b.iter(|| bias_profiles(&cohort, BiasWeightMode::AsWritten, mode).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, lstm_gradient, chi_square_profiles);
criterion_main!(benches);
