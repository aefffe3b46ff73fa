use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use morcela::analysis::{frequency_slope, TokenInstance};
use morcela::linking::LinkingKind;
use morcela::regression::{compare_specs, kfold_cv, CvConfig};
use morcela::rng;
use morcela::synth::{self, SynthConfig};
use morcela::unigram::count_chunks;
use morcela::Execution;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn label(exec: Execution) -> &'static str {
    match exec {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    }
}

fn bench_cv(c: &mut Criterion) {
    let corpus = synth::corpus(&SynthConfig::default(), Execution::default()).unwrap();
    let kinds = [
        LinkingKind::Slor,
        LinkingKind::MorcelaBeta1,
        LinkingKind::MorcelaGamma0,
        LinkingKind::Morcela,
    ];
    let mut g = c.benchmark_group("cv");
    for exec in MODES {
        let cfg = CvConfig::new(10, 0).with_exec(exec);
        g.bench_function(BenchmarkId::new("kfold_morcela", label(exec)), |b| {
            b.iter(|| kfold_cv(&corpus.records, &corpus.judgments, LinkingKind::Morcela, &cfg).unwrap())
        });
        g.bench_function(BenchmarkId::new("compare_4", label(exec)), |b| {
            b.iter(|| compare_specs(&corpus.records, &corpus.judgments, &kinds, &cfg).unwrap())
        });
    }
    g.finish();
}

fn bench_recovery(c: &mut Criterion) {
    let mut g = c.benchmark_group("recovery");
    g.sample_size(10);
    for exec in MODES {
        g.bench_function(BenchmarkId::new("20_corpora", label(exec)), |b| {
            b.iter(|| {
                for seed in 0..20 {
                    let cfg = SynthConfig { n_sentences: 500, seed, ..SynthConfig::default() };
                    let corpus = synth::corpus(&cfg, exec).unwrap();
                    let cv = CvConfig::new(5, seed).with_exec(exec);
                    black_box(kfold_cv(&corpus.records, &corpus.judgments, LinkingKind::Morcela, &cv).unwrap());
                }
            })
        });
    }
    g.finish();
}

fn bench_unigram(c: &mut Criterion) {
    let vocab = 50_000;
    let mut r = rng::seeded(1);
    let stream: Vec<u32> = (0..4_000_000).map(|_| rng::below(&mut r, vocab as u64) as u32).collect();
    let chunks: Vec<&[u32]> = stream.chunks(1 << 16).collect();
    let table = morcela::unigram::table_from_counts(
        &count_chunks(&chunks, vocab, Execution::default()).unwrap(),
        morcela::unigram::Smoothing::Additive { alpha: 1.0 },
    )
    .unwrap();
    let instances: Vec<TokenInstance> = stream
        .iter()
        .map(|&t| TokenInstance { token_id: t, cond_logprob: -10.0 * rng::unit(&mut r) })
        .collect();

    let mut g = c.benchmark_group("unigram");
    g.sample_size(20);
    for exec in MODES {
        g.bench_function(BenchmarkId::new("count_chunks_4m", label(exec)), |b| {
            b.iter(|| count_chunks(&chunks, vocab, exec).unwrap())
        });
        g.bench_function(BenchmarkId::new("frequency_slope_4m", label(exec)), |b| {
            b.iter(|| frequency_slope(&instances, &table, None, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_cv, bench_recovery, bench_unigram);
criterion_main!(benches);
