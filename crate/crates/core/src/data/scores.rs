use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::unigram::UnigramTable;

/// One scored sentence: per-token LM log-probabilities (nats) and, once
/// attached, per-token unigram log-probabilities.
///
/// The effective length is the number of scored tokens. Tokens the LM did not
/// score (e.g. an unconditioned first token) are expected to be absent from
/// the record entirely.
#[derive(Debug, Clone, PartialEq)]
pub struct SentenceRecord {
    sentence_id: String,
    text: Option<String>,
    token_ids: Vec<u32>,
    lm_logprobs: Vec<f64>,
    unigram_logprobs: Option<Vec<f64>>,
}

fn check_logprobs(sentence_id: &str, what: &str, values: &[f64]) -> Result<()> {
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::InvalidRecord {
                sentence_id: sentence_id.to_owned(),
                message: format!("non-finite {what} log-probability at token {i}"),
            });
        }
        if v > 0.0 {
            return Err(Error::InvalidRecord {
                sentence_id: sentence_id.to_owned(),
                message: format!("positive log-probability {v} ({what}) at token {i}"),
            });
        }
    }
    Ok(())
}

impl SentenceRecord {
    pub fn new(
        sentence_id: impl Into<String>,
        text: Option<String>,
        token_ids: Vec<u32>,
        lm_logprobs: Vec<f64>,
        unigram_logprobs: Option<Vec<f64>>,
    ) -> Result<Self> {
        let sentence_id = sentence_id.into();
        let invalid = |message: String| Error::InvalidRecord {
            sentence_id: sentence_id.clone(),
            message,
        };
        if lm_logprobs.is_empty() {
            return Err(invalid("no scored tokens (length must be at least 1)".into()));
        }
        if token_ids.len() != lm_logprobs.len() {
            return Err(invalid(format!(
                "length mismatch: {} token_ids vs {} token_lm_logprobs",
                token_ids.len(),
                lm_logprobs.len()
            )));
        }
        check_logprobs(&sentence_id, "lm", &lm_logprobs)?;
        if let Some(u) = &unigram_logprobs {
            if u.len() != lm_logprobs.len() {
                return Err(invalid(format!(
                    "length mismatch: {} token_unigram_logprobs vs {} scored tokens",
                    u.len(),
                    lm_logprobs.len()
                )));
            }
            check_logprobs(&sentence_id, "unigram", u)?;
        }
        Ok(Self {
            sentence_id,
            text,
            token_ids,
            lm_logprobs,
            unigram_logprobs,
        })
    }

    pub fn sentence_id(&self) -> &str {
        &self.sentence_id
    }

    pub fn text(&self) -> Option<&str> {
        self.text.as_deref()
    }

    pub fn token_ids(&self) -> &[u32] {
        &self.token_ids
    }

    pub fn lm_logprobs(&self) -> &[f64] {
        &self.lm_logprobs
    }

    pub fn unigram_logprobs(&self) -> Option<&[f64]> {
        self.unigram_logprobs.as_deref()
    }

    /// Number of scored tokens, ℓ.
    pub fn length(&self) -> usize {
        self.lm_logprobs.len()
    }

    /// Sentence LM log-probability, p.
    pub fn lm_logprob(&self) -> f64 {
        self.lm_logprobs.iter().sum()
    }

    /// Sentence unigram log-probability, u, if attached.
    pub fn unigram_logprob(&self) -> Option<f64> {
        self.unigram_logprobs.as_ref().map(|u| u.iter().sum())
    }

    pub fn with_unigrams(mut self, unigram_logprobs: Vec<f64>) -> Result<Self> {
        if unigram_logprobs.len() != self.length() {
            return Err(Error::InvalidRecord {
                sentence_id: self.sentence_id,
                message: "unigram log-probabilities do not match scored length".into(),
            });
        }
        check_logprobs(&self.sentence_id, "unigram", &unigram_logprobs)?;
        self.unigram_logprobs = Some(unigram_logprobs);
        Ok(self)
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    sentence_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    token_ids: Vec<u32>,
    token_lm_logprobs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    token_unigram_logprobs: Option<Vec<f64>>,
    /// Accepted for producers that emit it; checked against the token count.
    #[serde(default, skip_serializing)]
    length_ell: Option<usize>,
}

/// Parses one JSONL score line.
pub fn parse_score_line(line: &str) -> Result<SentenceRecord> {
    let raw: RecordLine = serde_json::from_str(line)?;
    if let Some(ell) = raw.length_ell {
        if ell != raw.token_lm_logprobs.len() {
            return Err(Error::InvalidRecord {
                sentence_id: raw.sentence_id,
                message: format!(
                    "length mismatch: length_ell {ell} vs {} token_lm_logprobs",
                    raw.token_lm_logprobs.len()
                ),
            });
        }
    }
    SentenceRecord::new(
        raw.sentence_id,
        raw.text,
        raw.token_ids,
        raw.token_lm_logprobs,
        raw.token_unigram_logprobs,
    )
}

/// Reads a JSONL score file. Blank lines are skipped; every other line must
/// be a complete record. Order is preserved and sentence ids must be unique.
pub fn parse_score_file(path: impl AsRef<Path>) -> Result<Vec<SentenceRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = match parse_score_line(&line) {
            Ok(r) => r,
            Err(Error::Json(e)) => return Err(Error::parse(path, lineno, e)),
            Err(e) => return Err(Error::at_line(path, lineno, e)),
        };
        if !seen.insert(rec.sentence_id.clone()) {
            return Err(Error::at_line(
                path,
                lineno,
                Error::DuplicateSentence(rec.sentence_id),
            ));
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn score_line(rec: &SentenceRecord) -> String {
    let raw = RecordLine {
        sentence_id: rec.sentence_id.clone(),
        text: rec.text.clone(),
        token_ids: rec.token_ids.clone(),
        token_lm_logprobs: rec.lm_logprobs.clone(),
        token_unigram_logprobs: rec.unigram_logprobs.clone(),
        length_ell: None,
    };
    serde_json::to_string(&raw).expect("record serialization cannot fail")
}

pub fn write_score_file(path: impl AsRef<Path>, records: &[SentenceRecord]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        writeln!(w, "{}", score_line(rec)).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Fills in per-token unigram log-probabilities from `table`.
///
/// Tokens the table does not cover get `oov_floor` when one is given;
/// otherwise they are an error. Re-applying with the same table is a no-op.
pub fn attach_unigrams(
    records: &[SentenceRecord],
    table: &UnigramTable,
    oov_floor: Option<f64>,
) -> Result<Vec<SentenceRecord>> {
    if let Some(f) = oov_floor {
        if !f.is_finite() || f > 0.0 {
            return Err(Error::InvalidSmoothing(format!(
                "OOV floor must be a finite log-probability <= 0, got {f}"
            )));
        }
    }
    records
        .iter()
        .map(|rec| {
            let u = rec
                .token_ids
                .iter()
                .map(|&t| match (table.log_prob(t), oov_floor) {
                    (Some(lp), _) => Ok(lp),
                    (None, Some(floor)) => Ok(floor),
                    (None, None) => Err(Error::OutOfVocabulary {
                        token: t,
                        sentence_id: rec.sentence_id.clone(),
                    }),
                })
                .collect::<Result<Vec<f64>>>()?;
            let mut out = rec.clone();
            out.unigram_logprobs = Some(u);
            Ok(out)
        })
        .collect()
}
