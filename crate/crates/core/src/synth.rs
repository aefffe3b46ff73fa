//! Seeded synthetic corpora with a known linking function behind the
//! judgments. Used by tests, benches and fixtures.

use rand_distr::{Distribution, Normal};

use crate::data::{JudgmentVector, SentenceRecord};
use crate::error::Result;
use crate::exec::{self, Execution};
use crate::rng;
use crate::unigram::{table_from_aggregate, GenerationAggregate, Smoothing, UnigramTable};

const NOISE_SALT: u64 = 0x0005_eed0_fa11_u64;

/// Zipfian vocabulary with its exact unigram table.
#[derive(Debug, Clone)]
pub struct Vocab {
    pub table: UnigramTable,
    cdf: Vec<f64>,
}

impl Vocab {
    /// `p(t) ∝ (t + 1)^-s` over `size` tokens.
    pub fn zipf(size: usize, s: f64) -> Result<Self> {
        let weights: Vec<f64> = (0..size).map(|t| ((t + 1) as f64).powf(-s)).collect();
        let z: f64 = weights.iter().sum();
        let mass: Vec<f64> = weights.iter().map(|w| w / z).collect();
        let mut cdf = Vec::with_capacity(size);
        let mut acc = 0.0;
        for m in &mass {
            acc += m;
            cdf.push(acc);
        }
        let table = table_from_aggregate(&GenerationAggregate::new(mass, 1)?, Smoothing::None)?;
        Ok(Vocab { table, cdf })
    }

    pub fn sample(&self, g: &mut rng::Rng) -> u32 {
        let x = rng::unit(g) * self.cdf[self.cdf.len() - 1];
        self.cdf.partition_point(|&c| c <= x).min(self.cdf.len() - 1) as u32
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthConfig {
    pub n_sentences: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub vocab_size: usize,
    pub beta: f64,
    pub gamma: f64,
    /// Judgment noise sd as a fraction of the clean judgment sd.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_sentences: 1450,
            min_len: 3,
            max_len: 34,
            vocab_size: 2000,
            beta: 0.6,
            gamma: 12.0,
            noise: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<SentenceRecord>,
    pub judgments: JudgmentVector,
    /// Standardized noiseless judgments, in record order.
    pub clean: Vec<f64>,
    pub vocab: Vocab,
}

pub fn sentence_id(i: usize) -> String {
    format!("s{i:05}")
}

/// Sentences whose per-token LM log-probabilities track the unigram
/// log-probabilities plus a sentence-level quality offset.
pub fn records(cfg: &SynthConfig, vocab: &Vocab, exec: Execution) -> Result<Vec<SentenceRecord>> {
    assert!(cfg.min_len >= 1 && cfg.min_len <= cfg.max_len);
    let quality = Normal::new(-1.5, 0.7).expect("valid sd");
    let token_noise = Normal::new(0.0, 1.2).expect("valid sd");
    exec::try_map_indexed(exec, cfg.n_sentences, |i| {
        let mut g = rng::seeded_stream(cfg.seed, i as u64);
        let len = cfg.min_len + rng::below(&mut g, (cfg.max_len - cfg.min_len + 1) as u64) as usize;
        let q = quality.sample(&mut g);
        let mut ids = Vec::with_capacity(len);
        let mut lm = Vec::with_capacity(len);
        let mut uni = Vec::with_capacity(len);
        for _ in 0..len {
            let t = vocab.sample(&mut g);
            let u = vocab.table.log_prob(t).expect("zipf table has full support");
            ids.push(t);
            uni.push(u);
            lm.push((0.5 * u + q + token_noise.sample(&mut g)).min(0.0));
        }
        SentenceRecord::new(sentence_id(i), None, ids, lm, Some(uni))
    })
}

/// Standardizes `scores` and adds Gaussian noise with sd `noise`.
///
/// Returns the clean standardized values and the noisy judgments keyed by
/// each record's sentence id.
pub fn judge(
    records: &[SentenceRecord],
    scores: &[f64],
    noise: f64,
    seed: u64,
) -> (Vec<f64>, JudgmentVector) {
    assert_eq!(records.len(), scores.len());
    let n = scores.len() as f64;
    let m = scores.iter().sum::<f64>() / n;
    let sd = (scores.iter().map(|s| (s - m) * (s - m)).sum::<f64>() / n).sqrt();
    let clean: Vec<f64> = scores
        .iter()
        .map(|s| if sd > 0.0 { (s - m) / sd } else { 0.0 })
        .collect();
    let mut g = rng::seeded_stream(seed ^ NOISE_SALT, 0);
    let eps = Normal::new(0.0, noise.max(0.0)).expect("finite sd");
    let mut out = JudgmentVector::default();
    for (rec, &c) in records.iter().zip(&clean) {
        let y = if noise > 0.0 { c + eps.sample(&mut g) } else { c };
        out.values.insert(rec.sentence_id().to_owned(), y);
        out.participant_counts.insert(rec.sentence_id().to_owned(), 1);
    }
    (clean, out)
}

/// Standard-normal judgments unrelated to the records.
pub fn random_judgments(records: &[SentenceRecord], seed: u64) -> JudgmentVector {
    let mut g = rng::seeded_stream(seed ^ NOISE_SALT, 1);
    let std = Normal::new(0.0, 1.0).expect("unit sd");
    let mut out = JudgmentVector::default();
    for rec in records {
        out.values.insert(rec.sentence_id().to_owned(), std.sample(&mut g));
        out.participant_counts.insert(rec.sentence_id().to_owned(), 1);
    }
    out
}

/// A corpus whose judgments follow `(p - βu + γ)/ℓ` up to scale and noise.
pub fn corpus(cfg: &SynthConfig, exec: Execution) -> Result<SynthCorpus> {
    let vocab = Vocab::zipf(cfg.vocab_size, 1.1)?;
    let records = records(cfg, &vocab, exec)?;
    let scores: Vec<f64> = records
        .iter()
        .map(|r| {
            let u = r.unigram_logprob().expect("synthetic records carry unigrams");
            (r.lm_logprob() - cfg.beta * u + cfg.gamma) / r.length() as f64
        })
        .collect();
    let (clean, judgments) = judge(&records, &scores, cfg.noise, cfg.seed);
    Ok(SynthCorpus {
        records,
        judgments,
        clean,
        vocab,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_is_deterministic_across_modes() {
        let cfg = SynthConfig {
            n_sentences: 64,
            ..SynthConfig::default()
        };
        let a = corpus(&cfg, Execution::Sequential).unwrap();
        let b = corpus(&cfg, Execution::Parallel).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.judgments, b.judgments);
    }

    #[test]
    fn records_respect_bounds() {
        let cfg = SynthConfig {
            n_sentences: 200,
            ..SynthConfig::default()
        };
        let c = corpus(&cfg, Execution::default()).unwrap();
        for r in &c.records {
            assert!((3..=34).contains(&r.length()));
            assert!(r.lm_logprobs().iter().all(|&v| v <= 0.0));
        }
        let n = c.clean.len() as f64;
        let m = c.clean.iter().sum::<f64>() / n;
        assert!(m.abs() < 1e-12);
    }

    #[test]
    fn zipf_sampling_prefers_frequent_tokens() {
        let v = Vocab::zipf(50, 1.1).unwrap();
        let mut g = rng::seeded(1);
        let mut counts = [0usize; 50];
        for _ in 0..20_000 {
            counts[v.sample(&mut g) as usize] += 1;
        }
        assert!(counts[0] > counts[10] && counts[10] > counts[49]);
    }
}
