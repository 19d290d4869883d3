//! Hot-path timings: GRU forward and backward sweeps, example gradients,
//! epoch sampling, one optimizer batch, and a full ranking evaluation.

use std::hint::black_box;

use cne_bench::{fixture, SEED};
use cne_core::encoder::{gru_backward, gru_forward, EmbeddingTable, EncoderKind, GruParams};
use cne_core::evaluator::{evaluate_lp, EvalOptions, EvalSides};
use cne_core::graph::split_edges;
use cne_core::sampler::{epoch_stream, TrainingExample};
use cne_core::trainer::{example_gradients, train_batch};
use criterion::{criterion_group, criterion_main, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bench_gru(c: &mut Criterion) {
    let (d, h, seq, vocab) = (64, 128, 64, 1000);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let table = EmbeddingTable::init(vocab, d, &mut rng);
    let params = GruParams::init(d, h, &mut rng);
    let ids: Vec<u32> = (0..seq as u32).map(|i| (i * 13) % vocab as u32).collect();

    c.bench_function("gru_forward_64x64x128", |b| {
        b.iter(|| gru_forward(black_box(&params), &table, black_box(&ids)))
    });

    let (last, trace) = gru_forward(&params, &table, &ids);
    c.bench_function("gru_backward_64x64x128", |b| {
        b.iter(|| gru_backward(black_box(&params), &table, &trace, black_box(&last)))
    });
}

fn bench_example_gradients(c: &mut Criterion) {
    let fx = fixture(EncoderKind::Gru, 32, 64);
    let ex = TrainingExample {
        center: 0,
        positive: 1,
        negatives: vec![150, 151, 152, 153],
        edge_type: 0,
    };
    c.bench_function("example_gradients_gru32x64_k4", |b| {
        b.iter(|| example_gradients(black_box(&fx.state), "link", &ex, &fx.attrs, 1.0).unwrap())
    });
}

fn bench_epoch_stream(c: &mut Criterion) {
    let fx = fixture(EncoderKind::Mean, 32, 32);
    c.bench_function("epoch_stream_200n_r2_l10", |b| {
        b.iter(|| epoch_stream(black_box(&fx.graph), 2, 10, 2, 4, 0, SEED))
    });
}

fn bench_train_batch(c: &mut Criterion) {
    let fx = fixture(EncoderKind::Mean, 32, 32);
    let examples: Vec<TrainingExample> =
        epoch_stream(&fx.graph, 2, 10, 2, 4, 0, SEED).into_iter().take(256).collect();
    c.bench_function("train_batch_mean32_b256", |b| {
        b.iter_batched(
            || fx.state.clone(),
            |mut state| train_batch(&mut state, "link", &examples, &fx.attrs, 1.0, 1e-3).unwrap(),
            criterion::BatchSize::LargeInput,
        )
    });
}

fn bench_evaluate(c: &mut Criterion) {
    let fx = fixture(EncoderKind::Mean, 32, 32);
    let (train_g, test) = split_edges(&fx.graph, 0.2, SEED);
    let opts = EvalOptions {
        ks: vec![10],
        sample_nodes: 100_000,
        seed: SEED,
        edge_type: None,
        sides: EvalSides::Phi1,
    };
    c.bench_function("evaluate_lp_200n", |b| {
        b.iter(|| evaluate_lp(black_box(&fx.state), &train_g, &test, &fx.attrs, &opts).unwrap())
    });
}

criterion_group!(
    benches,
    bench_gru,
    bench_example_gradients,
    bench_epoch_stream,
    bench_train_batch,
    bench_evaluate
);
criterion_main!(benches);
