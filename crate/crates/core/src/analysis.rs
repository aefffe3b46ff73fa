//! Inter-annotator upper bound and the conditional-log-likelihood vs.
//! unigram-frequency slope.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{z_normalize, RatingTable, SdConvention};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::regression::{pearson, FitResult};
use crate::rng;
use crate::unigram::UnigramTable;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterGroup {
    pub mean_r: f64,
    pub per_repeat: Vec<f64>,
    pub seed: u64,
}

/// Split-half correlation of per-sentence mean z-scores.
///
/// Ratings are z-normalized per participant first. For each repeat, every
/// sentence's ratings are shuffled and split in half (an odd one out goes to a
/// randomly chosen side), and the two vectors of half-means are correlated.
/// Repeat `i` draws from its own random stream, so adding repeats never
/// changes earlier ones.
pub fn inter_group_correlation(
    ratings: &RatingTable,
    seed: u64,
    repeats: usize,
    sd: SdConvention,
    exec: Execution,
) -> Result<InterGroup> {
    if repeats == 0 {
        return Err(Error::InvalidArgument("repeats must be at least 1".into()));
    }
    let z = z_normalize(ratings, sd)?;
    let mut per_sentence: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for ((_, s), &v) in &z {
        per_sentence.entry(s.as_str()).or_default().push(v);
    }
    if let Some((s, _)) = per_sentence.iter().find(|(_, v)| v.len() < 2) {
        return Err(Error::SingleRating((*s).to_owned()));
    }
    let sentences: Vec<&Vec<f64>> = per_sentence.values().collect();

    let per_repeat = exec::try_map_indexed(exec, repeats, |rep| {
        let mut g = rng::seeded_stream(seed, rep as u64);
        let mut left = Vec::with_capacity(sentences.len());
        let mut right = Vec::with_capacity(sentences.len());
        let mut buf = Vec::new();
        for values in &sentences {
            buf.clear();
            buf.extend_from_slice(values);
            rng::shuffle(&mut g, &mut buf);
            let mut cut = buf.len() / 2;
            if buf.len() % 2 == 1 && rng::coin(&mut g) {
                cut += 1;
            }
            let (a, b) = buf.split_at(cut);
            left.push(a.iter().sum::<f64>() / a.len() as f64);
            right.push(b.iter().sum::<f64>() / b.len() as f64);
        }
        pearson(&left, &right)
    })?;
    let mean_r = per_repeat.iter().sum::<f64>() / per_repeat.len() as f64;
    Ok(InterGroup {
        mean_r,
        per_repeat,
        seed,
    })
}

/// One occurrence of a token with the LM's conditional log-probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TokenInstance {
    pub token_id: u32,
    pub cond_logprob: f64,
}

/// Reads `token_id<TAB>cond_logprob` rows.
pub fn read_instances(path: impl AsRef<Path>) -> Result<Vec<TokenInstance>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (Some(t), Some(lp), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::parse(path, lineno, "expected token_id<TAB>cond_logprob"));
        };
        let token_id = t
            .trim()
            .parse()
            .map_err(|e| Error::parse(path, lineno, format!("token_id: {e}")))?;
        let cond_logprob: f64 = lp
            .trim()
            .parse()
            .map_err(|e| Error::parse(path, lineno, format!("cond_logprob: {e}")))?;
        if !cond_logprob.is_finite() || cond_logprob > 0.0 {
            return Err(Error::parse(
                path,
                lineno,
                format!("cond_logprob {cond_logprob} must be finite and <= 0"),
            ));
        }
        out.push(TokenInstance {
            token_id,
            cond_logprob,
        });
    }
    Ok(out)
}

pub fn write_instances(path: impl AsRef<Path>, instances: &[TokenInstance]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for i in instances {
        writeln!(w, "{}\t{}", i.token_id, i.cond_logprob).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Mergeable first and second moments of (x, y) pairs.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SuffStats {
    pub n: u64,
    pub mean_x: f64,
    pub mean_y: f64,
    /// Σ (x - x̄)²
    pub m2_x: f64,
    /// Σ (y - ȳ)²
    pub m2_y: f64,
    /// Σ (x - x̄)(y - ȳ)
    pub c_xy: f64,
}

impl SuffStats {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let n = self.n as f64;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / n;
        self.mean_y += dy / n;
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * (y - self.mean_y);
        self.c_xy += dx * (y - self.mean_y);
    }

    pub fn merge(&self, other: &SuffStats) -> SuffStats {
        if self.n == 0 {
            return *other;
        }
        if other.n == 0 {
            return *self;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let dx = other.mean_x - self.mean_x;
        let dy = other.mean_y - self.mean_y;
        let w = na * nb / n;
        SuffStats {
            n: self.n + other.n,
            mean_x: self.mean_x + dx * nb / n,
            mean_y: self.mean_y + dy * nb / n,
            m2_x: self.m2_x + other.m2_x + dx * dx * w,
            m2_y: self.m2_y + other.m2_y + dy * dy * w,
            c_xy: self.c_xy + other.c_xy + dx * dy * w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeReport {
    /// Nats of conditional log-likelihood per nat of unigram log-probability.
    pub slope: f64,
    pub intercept: f64,
    /// Pearson r; 0 when the conditional log-likelihood is constant.
    pub r: f64,
    pub n_instances: u64,
}

impl SlopeReport {
    pub fn from_stats(s: &SuffStats) -> Result<Self> {
        if s.n < 2 {
            return Err(Error::TooFewObservations {
                n: s.n as usize,
                required: 2,
            });
        }
        if s.m2_x == 0.0 {
            return Err(Error::ConstantInput("unigram log-probabilities"));
        }
        let slope = s.c_xy / s.m2_x;
        let r = if s.m2_y == 0.0 {
            0.0
        } else {
            (s.c_xy / (s.m2_x.sqrt() * s.m2_y.sqrt())).clamp(-1.0, 1.0)
        };
        Ok(SlopeReport {
            slope,
            intercept: s.mean_y - slope * s.mean_x,
            r,
            n_instances: s.n,
        })
    }
}

/// Instances per independently accumulated chunk.
pub const SLOPE_CHUNK: usize = 1 << 16;

/// OLS of per-instance conditional log-probability on the token's unigram
/// log-probability.
///
/// Instances are accumulated in fixed-size chunks and merged in chunk order,
/// so sequential and parallel runs agree exactly.
pub fn frequency_slope(
    instances: &[TokenInstance],
    table: &UnigramTable,
    oov_floor: Option<f64>,
    exec: Execution,
) -> Result<SlopeReport> {
    let chunks: Vec<&[TokenInstance]> = instances.chunks(SLOPE_CHUNK).collect();
    let partials = exec::try_map_indexed(exec, chunks.len(), |c| {
        let mut s = SuffStats::default();
        for inst in chunks[c] {
            let x = match (table.log_prob(inst.token_id), oov_floor) {
                (Some(lp), _) => lp,
                (None, Some(f)) => f,
                (None, None) => {
                    return Err(Error::OutOfVocabulary {
                        token: inst.token_id,
                        sentence_id: "<instance file>".into(),
                    })
                }
            };
            s.push(x, inst.cond_logprob);
        }
        Ok(s)
    })?;
    let total = partials
        .iter()
        .fold(SuffStats::default(), |acc, s| acc.merge(s));
    SlopeReport::from_stats(&total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFitRow {
    pub model_id: String,
    pub slope: f64,
    pub mean_r: f64,
    pub beta_hat: Option<f64>,
}

/// Joins slope reports with fits, one row per model in `order`.
pub fn slope_vs_fit_report(
    slopes: &BTreeMap<String, SlopeReport>,
    fits: &BTreeMap<String, FitResult>,
    order: &[String],
) -> Result<Vec<SlopeFitRow>> {
    let slope_keys: Vec<&String> = slopes.keys().collect();
    let fit_keys: Vec<&String> = fits.keys().collect();
    if slope_keys != fit_keys {
        return Err(Error::KeyMismatch(format!(
            "slope models {slope_keys:?} vs fit models {fit_keys:?}"
        )));
    }
    let mut sorted_order: Vec<&String> = order.iter().collect();
    sorted_order.sort();
    if sorted_order != slope_keys {
        return Err(Error::KeyMismatch(format!(
            "declared order {order:?} must list each model exactly once"
        )));
    }
    Ok(order
        .iter()
        .map(|id| SlopeFitRow {
            model_id: id.clone(),
            slope: slopes[id].slope,
            mean_r: fits[id].mean_r,
            beta_hat: fits[id].beta_hat,
        })
        .collect())
}

pub fn write_slope_fit_csv<W: Write>(rows: &[SlopeFitRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::io("<report>", std::io::Error::other(e));
    w.write_record(["model_id", "slope", "mean_r", "beta_hat"])
        .map_err(io)?;
    for r in rows {
        w.write_record([
            r.model_id.clone(),
            r.slope.to_string(),
            r.mean_r.to_string(),
            r.beta_hat.map(|b| b.to_string()).unwrap_or_default(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::io("<report>", e))
}
