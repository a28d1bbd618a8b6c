use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use specdiar::affinity::{cosine_affinity, prune_rows, symmetrize, PruningConfig};
use specdiar::kmeans::kmeans;
use specdiar::pipeline::diarize;
use specdiar::spectral::{eig_sym, estimate_k, laplacian, spectral_embed};
use specdiar::{KMeansConfig, PipelineConfig};
use specdiar_bench::recording;

const SIZES: [usize; 3] = [100, 200, 400];

fn affinity_and_eig(c: &mut Criterion) {
    let mut group = c.benchmark_group("affinity_eig");
    for n in SIZES {
        let emb = recording(4, n, 1);
        let prune = PruningConfig::new(0.1).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(emb.len()), &emb, |b, emb| {
            b.iter(|| {
                let raw = cosine_affinity(emb).unwrap();
                let sym = symmetrize(&prune_rows(&raw, prune));
                black_box(eig_sym(&laplacian(&sym)).unwrap())
            })
        });
    }
    group.finish();
}

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("kmeans");
    for n in SIZES {
        let emb = recording(4, n, 2);
        let raw = cosine_affinity(&emb).unwrap();
        let sym = symmetrize(&prune_rows(&raw, PruningConfig::new(0.1).unwrap()));
        let dec = eig_sym(&laplacian(&sym)).unwrap();
        let points = spectral_embed(&dec, estimate_k(&dec, 10)).unwrap().points;
        group.bench_with_input(
            BenchmarkId::from_parameter(emb.len()),
            &points,
            |b, points| {
                b.iter(|| black_box(kmeans(points, 4, 42, &KMeansConfig::default()).unwrap()))
            },
        );
    }
    group.finish();
}

fn full_diarize(c: &mut Criterion) {
    let mut group = c.benchmark_group("diarize");
    group.sample_size(20);
    let cfg = PipelineConfig::default().with_alpha(0.1);
    for n in SIZES {
        let emb = recording(4, n, 3);
        group.bench_with_input(BenchmarkId::from_parameter(emb.len()), &emb, |b, emb| {
            b.iter(|| black_box(diarize(emb, &cfg).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, affinity_and_eig, clustering, full_diarize);
criterion_main!(benches);
