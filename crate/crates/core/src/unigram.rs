//! Unigram log-probability tables.
//!
//! Two estimators are supported:
//!
//! * **counted**: exact token counts over a tokenized corpus, normalized once.
//!   Counting can be split into shards and merged ([`merge_counts`]); merging
//!   is exact integer addition, so any chunking gives the same table.
//! * **generated**: a model's own unigram marginal, estimated by summing its
//!   full next-token distribution at every position of sampled sequences and
//!   dividing by the number of positions. The mass is averaged jointly over
//!   all (sequence, position) pairs.
//!
//! Every table satisfies `Σ exp(log_prob) = 1` over its support.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

/// Normalization tolerance for tables read from disk.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Smoothing {
    /// Only tokens with nonzero mass are in the table.
    None,
    /// Zero-mass tokens get probability `exp(log_floor)`, then the whole
    /// table is renormalized.
    Floor { log_floor: f64 },
    /// Add-α over the full vocabulary.
    Additive { alpha: f64 },
}

impl Smoothing {
    fn validate(self) -> Result<Self> {
        match self {
            Smoothing::None => Ok(self),
            Smoothing::Floor { log_floor } if log_floor.is_finite() && log_floor <= 0.0 => {
                Ok(self)
            }
            Smoothing::Additive { alpha } if alpha.is_finite() && alpha > 0.0 => Ok(self),
            other => Err(Error::InvalidSmoothing(format!("{other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableSource {
    Counted,
    Generated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnigramTable {
    log_probs: Vec<Option<f64>>,
    total_tokens_observed: u64,
    smoothing: Smoothing,
    source: TableSource,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TableMeta {
    vocab_size: usize,
    total_tokens_observed: u64,
    smoothing: Smoothing,
    source: TableSource,
}

impl UnigramTable {
    pub fn vocab_size(&self) -> usize {
        self.log_probs.len()
    }

    pub fn total_tokens_observed(&self) -> u64 {
        self.total_tokens_observed
    }

    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    pub fn source(&self) -> TableSource {
        self.source
    }

    /// Log-probability of `token`, or `None` if it is outside the support.
    pub fn log_prob(&self, token: u32) -> Option<f64> {
        self.log_probs.get(token as usize).copied().flatten()
    }

    /// (token, log-probability) pairs over the support, ascending by token.
    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.log_probs
            .iter()
            .enumerate()
            .filter_map(|(t, lp)| lp.map(|lp| (t as u32, lp)))
    }

    pub fn support_size(&self) -> usize {
        self.iter().count()
    }

    /// `Σ exp(log_prob)` over the support.
    pub fn total_probability(&self) -> f64 {
        self.iter().map(|(_, lp)| lp.exp()).sum()
    }

    /// Sidecar metadata path for a table TSV: `<tsv>.json`.
    pub fn sidecar_path(tsv: &Path) -> PathBuf {
        let mut s = tsv.as_os_str().to_owned();
        s.push(".json");
        PathBuf::from(s)
    }

    /// Writes `token_id<TAB>log_prob` rows and the JSON sidecar.
    pub fn write(&self, tsv: impl AsRef<Path>) -> Result<()> {
        let tsv = tsv.as_ref();
        let file = File::create(tsv).map_err(|e| Error::io(tsv, e))?;
        let mut w = BufWriter::new(file);
        for (t, lp) in self.iter() {
            writeln!(w, "{t}\t{lp}").map_err(|e| Error::io(tsv, e))?;
        }
        w.flush().map_err(|e| Error::io(tsv, e))?;

        let meta = TableMeta {
            vocab_size: self.vocab_size(),
            total_tokens_observed: self.total_tokens_observed,
            smoothing: self.smoothing,
            source: self.source,
        };
        let sidecar = Self::sidecar_path(tsv);
        let json = serde_json::to_string_pretty(&meta)?;
        std::fs::write(&sidecar, json + "\n").map_err(|e| Error::io(&sidecar, e))
    }

    /// Reads a table and its sidecar, validating every row and the
    /// normalization invariant.
    pub fn read(tsv: impl AsRef<Path>) -> Result<Self> {
        let tsv = tsv.as_ref();
        let sidecar = Self::sidecar_path(tsv);
        let meta_src = std::fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
        let meta: TableMeta =
            serde_json::from_str(&meta_src).map_err(|e| Error::parse(&sidecar, e.line(), e))?;
        let smoothing = meta.smoothing.validate()?;
        if meta.vocab_size == 0 {
            return Err(Error::parse(&sidecar, 1, "vocab_size must be positive"));
        }

        let mut log_probs = vec![None; meta.vocab_size];
        let file = File::open(tsv).map_err(|e| Error::io(tsv, e))?;
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(tsv, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (t, lp) = parse_tsv_pair::<f64>(&line).ok_or_else(|| {
                Error::parse(tsv, lineno, "expected token_id<TAB>log_prob")
            })?;
            if !lp.is_finite() || lp > 0.0 {
                return Err(Error::parse(
                    tsv,
                    lineno,
                    format!("log-probability {lp} must be finite and <= 0"),
                ));
            }
            let slot = log_probs.get_mut(t as usize).ok_or_else(|| {
                Error::at_line(
                    tsv,
                    lineno,
                    Error::TokenOutOfRange {
                        token: t,
                        vocab_size: meta.vocab_size,
                    },
                )
            })?;
            if slot.replace(lp).is_some() {
                return Err(Error::parse(tsv, lineno, format!("duplicate token {t}")));
            }
        }
        let table = UnigramTable {
            log_probs,
            total_tokens_observed: meta.total_tokens_observed,
            smoothing,
            source: meta.source,
        };
        let total = table.total_probability();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::parse(
                tsv,
                0,
                format!("table is not normalized: sum of probabilities = {total}"),
            ));
        }
        Ok(table)
    }
}

fn parse_tsv_pair<V: std::str::FromStr>(line: &str) -> Option<(u32, V)> {
    let mut it = line.split('\t');
    let t = it.next()?.trim().parse().ok()?;
    let v = it.next()?.trim().parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some((t, v))
}

/// Exact integer token counts over a fixed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawCounts {
    counts: Vec<u64>,
}

impl RawCounts {
    pub fn new(vocab_size: usize) -> Self {
        Self {
            counts: vec![0; vocab_size],
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Self {
        Self { counts }
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn get(&self, token: u32) -> u64 {
        self.counts.get(token as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn add(&mut self, token: u32) -> Result<()> {
        let vocab_size = self.vocab_size();
        let slot = self
            .counts
            .get_mut(token as usize)
            .ok_or(Error::TokenOutOfRange { token, vocab_size })?;
        *slot += 1;
        Ok(())
    }

    pub fn extend<I: IntoIterator<Item = u32>>(&mut self, tokens: I) -> Result<()> {
        tokens.into_iter().try_for_each(|t| self.add(t))
    }

    pub fn merge(&mut self, other: &RawCounts) -> Result<()> {
        if other.vocab_size() != self.vocab_size() {
            return Err(Error::VocabMismatch {
                left: self.vocab_size(),
                right: other.vocab_size(),
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    /// Reads a `token_id<TAB>count` shard. Tokens not listed have count 0.
    pub fn read_tsv(path: impl AsRef<Path>, vocab_size: usize) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut out = RawCounts::new(vocab_size);
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let lineno = idx + 1;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let (t, c) = parse_tsv_pair::<u64>(&line)
                .ok_or_else(|| Error::parse(path, lineno, "expected token_id<TAB>count"))?;
            let slot = out.counts.get_mut(t as usize).ok_or_else(|| {
                Error::at_line(path, lineno, Error::TokenOutOfRange { token: t, vocab_size })
            })?;
            *slot += c;
        }
        Ok(out)
    }

    /// Writes nonzero counts as `token_id<TAB>count`.
    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (t, &c) in self.counts.iter().enumerate() {
            if c > 0 {
                writeln!(w, "{t}\t{c}").map_err(|e| Error::io(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Elementwise sum of count shards.
pub fn merge_counts(shards: &[RawCounts]) -> Result<RawCounts> {
    let (first, rest) = shards
        .split_first()
        .ok_or_else(|| Error::Empty("no count shards".into()))?;
    let mut out = first.clone();
    for s in rest {
        out.merge(s)?;
    }
    Ok(out)
}

/// Turns nonnegative masses into normalized log-probabilities.
fn normalize(masses: &[f64], smoothing: Smoothing) -> Result<Vec<Option<f64>>> {
    let total: f64 = masses.iter().sum();
    let v = masses.len() as f64;
    let out = match smoothing {
        Smoothing::None => {
            if total <= 0.0 {
                return Err(Error::ZeroMass);
            }
            let ln_total = total.ln();
            masses
                .iter()
                .map(|&m| (m > 0.0).then(|| m.ln() - ln_total))
                .collect()
        }
        Smoothing::Additive { alpha } => {
            let ln_denom = (total + alpha * v).ln();
            masses
                .iter()
                .map(|&m| Some((m + alpha).ln() - ln_denom))
                .collect()
        }
        Smoothing::Floor { log_floor } => {
            if total <= 0.0 {
                return Err(Error::ZeroMass);
            }
            let zeros = masses.iter().filter(|&&m| m <= 0.0).count() as f64;
            // Observed tokens keep relative frequency m / total; each zero-mass
            // token gets exp(log_floor); everything is then divided by z.
            let ln_z = (zeros * log_floor.exp()).ln_1p();
            let ln_total = total.ln();
            masses
                .iter()
                .map(|&m| {
                    Some(if m > 0.0 {
                        m.ln() - ln_total - ln_z
                    } else {
                        log_floor - ln_z
                    })
                })
                .collect()
        }
    };
    Ok(out)
}

/// Builds a counted table from raw counts.
pub fn table_from_counts(counts: &RawCounts, smoothing: Smoothing) -> Result<UnigramTable> {
    let smoothing = smoothing.validate()?;
    let total = counts.total();
    if total == 0 {
        return Err(Error::Empty("token stream".into()));
    }
    let masses: Vec<f64> = counts.counts.iter().map(|&c| c as f64).collect();
    Ok(UnigramTable {
        log_probs: normalize(&masses, smoothing)?,
        total_tokens_observed: total,
        smoothing,
        source: TableSource::Counted,
    })
}

/// Counts a token stream and normalizes it into a table.
pub fn count_unigrams<I>(tokens: I, vocab_size: usize, smoothing: Smoothing) -> Result<UnigramTable>
where
    I: IntoIterator<Item = u32>,
{
    let mut counts = RawCounts::new(vocab_size);
    counts.extend(tokens)?;
    table_from_counts(&counts, smoothing)
}

/// Counts each chunk independently (in parallel when enabled) and merges the
/// shards in chunk order.
pub fn count_chunks<C>(chunks: &[C], vocab_size: usize, exec: Execution) -> Result<RawCounts>
where
    C: AsRef<[u32]> + Sync,
{
    let shards = exec::try_map_indexed(exec, chunks.len(), |i| {
        let mut c = RawCounts::new(vocab_size);
        c.extend(chunks[i].as_ref().iter().copied())?;
        Ok::<_, Error>(c)
    })?;
    if shards.is_empty() {
        return Ok(RawCounts::new(vocab_size));
    }
    merge_counts(&shards)
}

/// Summed next-token distributions from sampled generations.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationAggregate {
    prob_mass: Vec<f64>,
    positions_accumulated: u64,
}

/// Relative tolerance for `Σ prob_mass = positions_accumulated`.
pub const AGGREGATE_MASS_TOL: f64 = 1e-6;

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum MassRepr {
    Dense(Vec<f64>),
    Sparse(std::collections::BTreeMap<String, f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AggregateJson {
    positions_accumulated: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vocab_size: Option<usize>,
    prob_mass: MassRepr,
}

impl GenerationAggregate {
    pub fn new(prob_mass: Vec<f64>, positions_accumulated: u64) -> Result<Self> {
        if positions_accumulated == 0 {
            return Err(Error::InvalidArgument(
                "positions_accumulated must be at least 1".into(),
            ));
        }
        if prob_mass.is_empty() {
            return Err(Error::Empty("prob_mass".into()));
        }
        if let Some(bad) = prob_mass.iter().find(|m| !m.is_finite() || **m < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "probability mass {bad} must be finite and nonnegative"
            )));
        }
        let mass: f64 = prob_mass.iter().sum();
        if mass == 0.0 {
            return Err(Error::ZeroMass);
        }
        let positions = positions_accumulated as f64;
        if (mass - positions).abs() > AGGREGATE_MASS_TOL * positions {
            return Err(Error::InconsistentAggregate {
                mass,
                positions: positions_accumulated,
            });
        }
        Ok(Self {
            prob_mass,
            positions_accumulated,
        })
    }

    pub fn prob_mass(&self) -> &[f64] {
        &self.prob_mass
    }

    pub fn positions_accumulated(&self) -> u64 {
        self.positions_accumulated
    }

    pub fn vocab_size(&self) -> usize {
        self.prob_mass.len()
    }

    /// Accepts a dense `prob_mass` array, or a `{"token": mass}` object
    /// together with `vocab_size`.
    pub fn from_json(src: &str) -> Result<Self> {
        let raw: AggregateJson = serde_json::from_str(src)?;
        let mass = match raw.prob_mass {
            MassRepr::Dense(v) => {
                if let Some(vs) = raw.vocab_size {
                    if vs != v.len() {
                        return Err(Error::VocabMismatch {
                            left: vs,
                            right: v.len(),
                        });
                    }
                }
                v
            }
            MassRepr::Sparse(map) => {
                let vs = raw.vocab_size.ok_or_else(|| {
                    Error::InvalidArgument("sparse prob_mass requires vocab_size".into())
                })?;
                let mut v = vec![0.0; vs];
                for (k, m) in map {
                    let t: u32 = k.parse().map_err(|_| {
                        Error::InvalidArgument(format!("invalid token id {k:?}"))
                    })?;
                    *v.get_mut(t as usize).ok_or(Error::TokenOutOfRange {
                        token: t,
                        vocab_size: vs,
                    })? += m;
                }
                v
            }
        };
        Self::new(mass, raw.positions_accumulated)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let src = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&src).map_err(|e| match e {
            Error::Json(j) => Error::parse(path, j.line(), j),
            other => Error::at_line(path, 0, other),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&AggregateJson {
            positions_accumulated: self.positions_accumulated,
            vocab_size: None,
            prob_mass: MassRepr::Dense(self.prob_mass.clone()),
        })
        .expect("aggregate serialization cannot fail")
    }
}

/// Builds a generated table: each token's share of the total accumulated
/// mass, with `smoothing` applied to zero-mass tokens.
///
/// The divisor is the summed mass itself, which equals
/// `positions_accumulated` up to the producer's rounding; this keeps the
/// table exactly normalized.
pub fn table_from_aggregate(agg: &GenerationAggregate, smoothing: Smoothing) -> Result<UnigramTable> {
    let smoothing = smoothing.validate()?;
    Ok(UnigramTable {
        log_probs: normalize(&agg.prob_mass, smoothing)?,
        total_tokens_observed: agg.positions_accumulated,
        smoothing,
        source: TableSource::Generated,
    })
}
