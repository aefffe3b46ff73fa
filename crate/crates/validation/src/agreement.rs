//! Library results against the independent oracles. Kept as unit tests so
//! they run before the acceptance binary.

use morcela::analysis::{self, TokenInstance};
use morcela::data::{self, RatingTable, SdConvention};
use morcela::linking::{self, design_matrix, LinkingKind};
use morcela::regression::{self, aic, bic, CvConfig};
use morcela::rng;
use morcela::synth::{self, SynthConfig};
use morcela::unigram::{self, Smoothing};
use morcela::Execution;
use crate as oracle;

#[test]
fn cross_validated_r_matches_brute_force_loop() {
    for seed in 0..20u64 {
        let cfg = SynthConfig {
            n_sentences: 103 + seed as usize,
            beta: 0.4 + 0.03 * seed as f64,
            gamma: seed as f64,
            noise: 0.4,
            seed,
            ..SynthConfig::default()
        };
        let c = synth::corpus(&cfg, Execution::Sequential).unwrap();
        for kind in LinkingKind::ALL {
            let x = design_matrix(&c.records, kind).unwrap();
            let y: Vec<f64> = c.records.iter().map(|r| c.judgments.get(r.sentence_id()).unwrap()).collect();
            let k = 2 + (seed as usize % 9);
            let fit = regression::fit_design(&x, &y, kind, &CvConfig::new(k, seed)).unwrap();
            let want = oracle::cv_mean_r(&x.rows, &y, k, seed);
            assert!((fit.mean_r - want).abs() < 1e-10, "{kind} seed {seed}");
            let w = oracle::ols_normal_equations(&x.rows, &y);
            let coefs: Vec<f64> = fit.coefficients.values().copied().collect();
            for (a, b) in coefs.iter().zip(&w) {
                assert!((a - b).abs() < 1e-8, "{kind}: {a} vs {b}");
            }
            let sse = oracle::sse(&x.rows, &y, &w);
            assert!((fit.sse_full - sse).abs() <= 1e-9 * sse.max(1.0));
        }
    }
}

#[test]
fn fold_partition_matches_oracle() {
    for (n, k, seed) in [(10, 5, 0), (11, 5, 1), (1450, 5, 42), (37, 7, 3)] {
        assert_eq!(regression::fold_indices(n, k, seed), oracle::folds(n, k, seed));
    }
}

#[test]
fn information_criteria_match_formula() {
    let mut g = rng::seeded(12);
    for _ in 0..1000 {
        let n = 2 + rng::below(&mut g, 5000) as usize;
        let k = 1 + rng::below(&mut g, 6) as usize;
        let sse = 1e-3 + 1e4 * rng::unit(&mut g);
        let (a, b) = oracle::aic_bic(n, k, sse);
        assert!((aic(n, k, sse).unwrap() - a).abs() <= 1e-9 * a.abs().max(1.0));
        assert!((bic(n, k, sse).unwrap() - b).abs() <= 1e-9 * b.abs().max(1.0));
    }
}

#[test]
fn features_match_compensated_token_sums() {
    let mut g = rng::seeded(13);
    for i in 0..2000 {
        let rec = oracle::random_record(&mut g, i, 200);
        let f = linking::features(&rec).unwrap();
        let l = rec.length() as f64;
        let p = oracle::sum(rec.lm_logprobs().iter().copied());
        let u = oracle::sum(rec.unigram_logprobs().unwrap().iter().copied());
        assert!((f.p_over_l - p / l).abs() < 1e-12);
        assert!((f.u_over_l - u / l).abs() < 1e-12);
        assert_eq!(f.inv_l, 1.0 / l);
        assert!((linking::logprob_score(&rec) - l * f.p_over_l).abs() < 1e-12 * p.abs().max(1.0));
    }
}

#[test]
fn judgments_are_means_of_oracle_z_scores() {
    let mut g = rng::seeded(14);
    let mut table = RatingTable::new();
    for p in 0..25 {
        for s in 0..40 {
            if rng::unit(&mut g) < 0.7 {
                table
                    .insert(format!("p{p}"), format!("s{s}"), 1 + rng::below(&mut g, 7) as i64)
                    .unwrap();
            }
        }
    }
    let moments = oracle::participant_moments(&table);
    let z = data::z_normalize(&table, SdConvention::Population).unwrap();
    let j = data::aggregate_judgments(&z).unwrap();
    for (sentence, &got) in &j.values {
        let zs: Vec<f64> = table
            .iter()
            .filter(|(_, s, _)| s == sentence)
            .map(|(p, _, r)| {
                let (_, m, sd) = moments.iter().find(|(id, _, _)| id == p).unwrap();
                (f64::from(r) - m) / sd
            })
            .collect();
        assert!((got - oracle::mean(&zs)).abs() < 1e-12);
    }
}

#[test]
fn slope_r_matches_pearson_oracle_and_ignores_order_and_duplication() {
    let vocab = 500;
    let mut g = rng::seeded(15);
    let table = unigram::count_unigrams(
        (0..50_000).map(|_| (rng::unit(&mut g).powi(2) * vocab as f64) as u32),
        vocab,
        Smoothing::Additive { alpha: 1.0 },
    )
    .unwrap();
    let xs: Vec<TokenInstance> = (0..200_000)
        .map(|_| {
            let t = rng::below(&mut g, vocab as u64) as u32;
            TokenInstance {
                token_id: t,
                cond_logprob: (0.3 * table.log_prob(t).unwrap() + oracle::normal(&mut g, -3.0, 2.0)).min(0.0),
            }
        })
        .collect();
    let rep = analysis::frequency_slope(&xs, &table, None, Execution::Parallel).unwrap();
    let x: Vec<f64> = xs.iter().map(|i| table.log_prob(i.token_id).unwrap()).collect();
    let y: Vec<f64> = xs.iter().map(|i| i.cond_logprob).collect();
    assert!((rep.r - oracle::pearson(&x, &y)).abs() < 1e-12);
    assert!((rep.slope - oracle::slope(&x, &y)).abs() < 1e-10);

    let mut shuffled = xs.clone();
    rng::shuffle(&mut g, &mut shuffled);
    let rs = analysis::frequency_slope(&shuffled, &table, None, Execution::Sequential).unwrap();
    assert!((rs.slope - rep.slope).abs() < 1e-12 && (rs.r - rep.r).abs() < 1e-12);

    let doubled: Vec<TokenInstance> = xs.iter().chain(&xs).copied().collect();
    let rd = analysis::frequency_slope(&doubled, &table, None, Execution::default()).unwrap();
    assert!((rd.slope - rep.slope).abs() < 1e-12 && (rd.r - rep.r).abs() < 1e-12);
    assert_eq!(rd.n_instances, 2 * rep.n_instances);
}

#[test]
fn counted_table_matches_direct_frequencies() {
    let mut g = rng::seeded(16);
    let vocab = 64;
    let stream: Vec<u32> = (0..10_000).map(|_| rng::below(&mut g, 40) as u32).collect();
    let none = unigram::count_unigrams(stream.iter().copied(), vocab, Smoothing::None).unwrap();
    let add = unigram::count_unigrams(stream.iter().copied(), vocab, Smoothing::Additive { alpha: 0.5 }).unwrap();
    let n = stream.len() as f64;
    for t in 0..vocab as u32 {
        let c = stream.iter().filter(|&&s| s == t).count() as f64;
        match none.log_prob(t) {
            Some(lp) => assert!((lp - (c / n).ln()).abs() < 1e-12),
            None => assert_eq!(c, 0.0),
        }
        let want = ((c + 0.5) / (n + 0.5 * vocab as f64)).ln();
        assert!((add.log_prob(t).unwrap() - want).abs() < 1e-12);
    }
}
