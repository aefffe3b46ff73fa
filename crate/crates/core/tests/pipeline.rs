use std::path::Path;

use morcela::data::{self, JudgmentVector, SdConvention};
use morcela::linking::LinkingKind;
use morcela::regression::{aic, bic, compare_specs, kfold_cv, CvConfig};
use morcela::synth::{self, SynthConfig};
use morcela::{Error, Execution};

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn three_participant_judgments() {
    let table = data::parse_ratings(fixture("ratings_3p.csv")).unwrap();
    let z = data::z_normalize(&table, SdConvention::Population).unwrap();
    let j = data::aggregate_judgments(&z).unwrap();
    // p1: mean 4, sd √6; p2: mean 3, sd √2; p3: mean 4, sd 1.
    let r6 = 6f64.sqrt();
    let r2 = 2f64.sqrt();
    let want = [
        ("s1", (-3.0 / r6 - 1.0 / r2 - 1.0) / 3.0, 3),
        ("s2", (0.0 - 1.0 / r2 + 1.0) / 3.0, 3),
        ("s3", (3.0 / r6 + r2) / 2.0, 2),
    ];
    for (s, v, count) in want {
        assert!((j.get(s).unwrap() - v).abs() < 1e-12, "{s}");
        assert_eq!(j.participant_counts[s], count);
    }
}

fn noiseless(beta: f64, gamma: f64) -> synth::SynthCorpus {
    let cfg = SynthConfig {
        n_sentences: 400,
        beta,
        gamma,
        noise: 0.0,
        seed: 5,
        ..SynthConfig::default()
    };
    synth::corpus(&cfg, Execution::default()).unwrap()
}

#[test]
fn noiseless_morcela_is_recovered() {
    let c = noiseless(0.7, 15.0);
    let fit = kfold_cv(&c.records, &c.judgments, LinkingKind::Morcela, &CvConfig::new(5, 1)).unwrap();
    assert!(fit.mean_r >= 0.999, "mean_r = {}", fit.mean_r);
    assert!((fit.beta_hat.unwrap() - 0.7).abs() < 1e-8);
    assert!((fit.gamma_hat.unwrap() - 15.0).abs() < 1e-6);
    assert_eq!(fit.k, 4);
    assert_eq!(fit.fold_r.len(), 5);
}

#[test]
fn slor_trails_morcela_when_beta_is_not_one() {
    let c = noiseless(0.5, 10.0);
    let cfg = CvConfig::new(5, 2);
    let m = kfold_cv(&c.records, &c.judgments, LinkingKind::Morcela, &cfg).unwrap();
    let s = kfold_cv(&c.records, &c.judgments, LinkingKind::Slor, &cfg).unwrap();
    assert!(s.mean_r < m.mean_r);
    assert_eq!(s.beta_hat, Some(1.0));
    assert_eq!(s.gamma_hat, Some(0.0));
}

#[test]
fn comparison_ranks_by_bic_and_is_self_consistent() {
    let cfg = SynthConfig {
        n_sentences: 600,
        beta: 0.5,
        gamma: 20.0,
        noise: 0.3,
        seed: 9,
        ..SynthConfig::default()
    };
    let c = synth::corpus(&cfg, Execution::default()).unwrap();
    let kinds = [
        LinkingKind::Slor,
        LinkingKind::MorcelaBeta1,
        LinkingKind::MorcelaGamma0,
        LinkingKind::Morcela,
    ];
    let cmp = compare_specs(&c.records, &c.judgments, &kinds, &CvConfig::new(5, 3)).unwrap();
    let rows = cmp.rows();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0].linking_function, LinkingKind::Morcela);
    for w in rows.windows(2) {
        assert!(w[0].bic <= w[1].bic);
    }
    for r in &rows {
        assert!((aic(r.n, r.predictors, r.sse).unwrap() - r.aic).abs() < 1e-9);
        assert!((bic(r.n, r.predictors, r.sse).unwrap() - r.bic).abs() < 1e-9);
    }
    let table = cmp.render_table();
    assert!(table.starts_with("Linking Function"));
    assert_eq!(table.lines().count(), 5);
}

#[test]
fn slor_generated_target_prefers_fewest_predictors() {
    let cfg = SynthConfig {
        n_sentences: 1000,
        beta: 1.0,
        gamma: 0.0,
        noise: 0.5,
        seed: 21,
        ..SynthConfig::default()
    };
    let c = synth::corpus(&cfg, Execution::default()).unwrap();
    let cmp = compare_specs(
        &c.records,
        &c.judgments,
        &[LinkingKind::Morcela, LinkingKind::MorcelaBeta1, LinkingKind::Slor],
        &CvConfig::new(5, 4),
    )
    .unwrap();
    assert_eq!(cmp.fits[0].spec.kind, LinkingKind::Slor);
}

#[test]
fn execution_mode_does_not_change_results() {
    let c = noiseless(0.9, 5.0);
    let kinds = [LinkingKind::LogProb, LinkingKind::Slor, LinkingKind::Morcela];
    let seq = compare_specs(
        &c.records,
        &c.judgments,
        &kinds,
        &CvConfig::new(4, 8).with_exec(Execution::Sequential),
    )
    .unwrap();
    let par = compare_specs(
        &c.records,
        &c.judgments,
        &kinds,
        &CvConfig::new(4, 8).with_exec(Execution::Parallel),
    )
    .unwrap();
    assert_eq!(seq, par);
}

#[test]
fn files_round_trip_into_the_same_fit() {
    let c = noiseless(0.6, 8.0);
    let dir = tempfile::tempdir().unwrap();
    let scores = dir.path().join("scores.jsonl");
    let judgments = dir.path().join("judgments.csv");
    data::write_score_file(&scores, &c.records).unwrap();
    c.judgments.write_csv(&judgments).unwrap();
    let records = data::parse_score_file(&scores).unwrap();
    let gold = JudgmentVector::read_csv(&judgments).unwrap();
    assert_eq!(records, c.records);
    assert_eq!(gold, c.judgments);
    let cfg = CvConfig::new(5, 0);
    assert_eq!(
        kfold_cv(&records, &gold, LinkingKind::Morcela, &cfg).unwrap(),
        kfold_cv(&c.records, &c.judgments, LinkingKind::Morcela, &cfg).unwrap()
    );
}

#[test]
fn unigrams_from_a_table_feed_the_fit() {
    let c = noiseless(0.8, 3.0);
    let bare: Vec<_> = c
        .records
        .iter()
        .map(|r| {
            data::SentenceRecord::new(
                r.sentence_id(),
                None,
                r.token_ids().to_vec(),
                r.lm_logprobs().to_vec(),
                None,
            )
            .unwrap()
        })
        .collect();
    assert!(matches!(
        kfold_cv(&bare, &c.judgments, LinkingKind::Slor, &CvConfig::default()),
        Err(Error::MissingUnigrams(_))
    ));
    let attached = data::attach_unigrams(&bare, &c.vocab.table, None).unwrap();
    assert_eq!(attached, c.records);
}

#[test]
fn missing_judgment_is_an_error() {
    let c = noiseless(0.8, 3.0);
    let mut gold = c.judgments.clone();
    let first = c.records[0].sentence_id().to_owned();
    gold.values.remove(&first);
    let err = kfold_cv(&c.records, &gold, LinkingKind::Morcela, &CvConfig::default()).unwrap_err();
    assert!(matches!(err, Error::MissingJudgment(s) if s == first));
}
