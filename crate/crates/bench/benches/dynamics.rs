use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nemo::experiment::ExperimentConfig;
use nemo::language::{sample_sentence, Lexicon, Organ};
use nemo::lazy::{lazy_candidates, InputLaw};
use nemo::{k_cap, projection_setup, rng, Activity, Backend, ClampMap, StepPlan};
use rand::Rng;

fn cap(c: &mut Criterion) {
    let mut r = rng::stream(0, "bench");
    let inputs: Vec<f64> = (0..100_000)
        .map(|_| f64::from(r.random_range(0u32..60)))
        .collect();
    c.bench_function("k_cap n=1e5 k=100", |b| {
        b.iter(|| k_cap(black_box(&inputs), 100))
    });
}

fn candidates(c: &mut Criterion) {
    let law = InputLaw::new(&[(100, 0.05), (50, 0.05)]);
    let support: Vec<u32> = (0..5000).map(|i| i * 20).collect();
    let mut r = rng::stream(0, "bench");
    c.bench_function("lazy_candidates n=1e6 k=100", |b| {
        b.iter(|| lazy_candidates(&law, 1_000_000, black_box(&support), 100, &mut r))
    });
}

fn projection_step(c: &mut Criterion) {
    for backend in [Backend::Explicit, Backend::Lazy] {
        let (net, stim, t) = projection_setup(10_000, 100, 0.01, 0.1, backend, 0).unwrap();
        let plan = StepPlan::new(ClampMap::new().with(stim), Activity::Only(vec![t]), true);
        c.bench_function(&format!("projection step n=1e4 ({backend})"), |b| {
            b.iter_batched_ref(
                || net.clone(),
                |net| {
                    net.step_with(&plan).unwrap();
                },
                BatchSize::LargeInput,
            )
        });
    }
}

fn sentence(c: &mut Criterion) {
    let cfg = ExperimentConfig::desk();
    let lexicon = Lexicon::build(cfg.l, cfg.organ.contexts, 0).unwrap();
    let mut organ = Organ::build(cfg.organ.clone(), lexicon).unwrap();
    let mut r = rng::stream(0, "sentences");
    for _ in 0..20 {
        let s = sample_sentence(organ.lexicon(), cfg.organ.order, &mut r);
        organ.feed_sentence(&s).unwrap();
    }
    c.bench_function("desk organ sentence (4 steps)", |b| {
        b.iter(|| {
            let s = sample_sentence(organ.lexicon(), cfg.organ.order, &mut r);
            organ.feed_sentence(&s).unwrap();
        })
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = cap, candidates, projection_step, sentence
}
criterion_main!(benches);
