//! Linking functions from (p, u, ℓ) to acceptability scores, and the
//! regression feature map used to fit them.
//!
//! With p the sentence LM log-probability, u the sentence unigram
//! log-probability and ℓ the number of scored tokens:
//!
//! ```text
//! LogProb        p
//! SLOR           (p - u) / ℓ
//! MORCELA        (p - β·u + γ) / ℓ
//!                = SLOR + (1 - β)·u/ℓ + γ/ℓ
//! ```
//!
//! The two ablations fix one MORCELA parameter at its SLOR value:
//! `MorcelaBeta1` (β = 1, γ free) and `MorcelaGamma0` (γ = 0, β free).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::SentenceRecord;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinkingKind {
    LogProb,
    Slor,
    Morcela,
    MorcelaBeta1,
    MorcelaGamma0,
}

impl LinkingKind {
    pub const ALL: [LinkingKind; 5] = [
        LinkingKind::LogProb,
        LinkingKind::Slor,
        LinkingKind::Morcela,
        LinkingKind::MorcelaBeta1,
        LinkingKind::MorcelaGamma0,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LinkingKind::LogProb => "logprob",
            LinkingKind::Slor => "slor",
            LinkingKind::Morcela => "morcela",
            LinkingKind::MorcelaBeta1 => "morcela_beta1",
            LinkingKind::MorcelaGamma0 => "morcela_gamma0",
        }
    }

    /// Regression columns, excluding the intercept.
    pub fn columns(self) -> &'static [Column] {
        use Column::*;
        match self {
            LinkingKind::LogProb => &[P],
            LinkingKind::Slor => &[SlorTerm],
            LinkingKind::MorcelaBeta1 => &[SlorTerm, InvL],
            LinkingKind::MorcelaGamma0 => &[POverL, UOverL],
            LinkingKind::Morcela => &[POverL, UOverL, InvL],
        }
    }

    /// Predictor count including the intercept.
    pub fn predictors(self) -> usize {
        self.columns().len() + 1
    }

    /// The β / γ a kind pins, if any.
    pub fn fixed_beta(self) -> Option<f64> {
        match self {
            LinkingKind::Slor | LinkingKind::MorcelaBeta1 => Some(1.0),
            _ => None,
        }
    }

    pub fn fixed_gamma(self) -> Option<f64> {
        match self {
            LinkingKind::Slor | LinkingKind::MorcelaGamma0 => Some(0.0),
            _ => None,
        }
    }

    pub fn has_linking_params(self) -> bool {
        self != LinkingKind::LogProb
    }
}

impl fmt::Display for LinkingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LinkingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        match norm.as_str() {
            "logprob" | "log_prob" => Ok(LinkingKind::LogProb),
            "slor" => Ok(LinkingKind::Slor),
            "morcela" => Ok(LinkingKind::Morcela),
            "morcela_beta1" | "morcela_beta=1" => Ok(LinkingKind::MorcelaBeta1),
            "morcela_gamma0" | "morcela_gamma=0" => Ok(LinkingKind::MorcelaGamma0),
            _ => Err(Error::InvalidArgument(format!(
                "unknown linking function {s:?} (expected one of logprob, slor, morcela, morcela_beta1, morcela_gamma0)"
            ))),
        }
    }
}

/// A regression column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    P,
    POverL,
    UOverL,
    InvL,
    SlorTerm,
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::P => "p",
            Column::POverL => "p_over_l",
            Column::UOverL => "u_over_l",
            Column::InvL => "inv_l",
            Column::SlorTerm => "p_minus_u_over_l",
        }
    }
}

pub const INTERCEPT: &str = "intercept";

/// A linking parameter: pinned to a value, or estimated from data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode", content = "value")]
pub enum Param {
    Fixed(f64),
    Free,
}

impl Param {
    pub fn value(self) -> Option<f64> {
        match self {
            Param::Fixed(v) => Some(v),
            Param::Free => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkingSpec {
    pub kind: LinkingKind,
    pub beta: Param,
    pub gamma: Param,
}

impl LinkingSpec {
    /// The spec with the kind's own fixed/free pattern.
    pub fn new(kind: LinkingKind) -> Self {
        let pin = |v: Option<f64>| v.map_or(Param::Free, Param::Fixed);
        let (beta, gamma) = if kind.has_linking_params() {
            (pin(kind.fixed_beta()), pin(kind.fixed_gamma()))
        } else {
            (Param::Fixed(1.0), Param::Fixed(0.0))
        };
        Self { kind, beta, gamma }
    }

    /// A fully pinned MORCELA-family spec for scoring with known parameters.
    pub fn with_params(kind: LinkingKind, beta: f64, gamma: f64) -> Result<Self> {
        let base = Self::new(kind);
        let clash = |fixed: Option<f64>, v: f64| fixed.is_some_and(|f| f != v);
        if !kind.has_linking_params() {
            return Err(Error::InvalidArgument(
                "logprob has no linking parameters".into(),
            ));
        }
        if clash(kind.fixed_beta(), beta) || clash(kind.fixed_gamma(), gamma) {
            return Err(Error::InvalidArgument(format!(
                "{kind} pins beta={:?}, gamma={:?}",
                base.beta.value(),
                base.gamma.value()
            )));
        }
        Ok(Self {
            kind,
            beta: Param::Fixed(beta),
            gamma: Param::Fixed(gamma),
        })
    }

    pub fn is_fully_fixed(&self) -> bool {
        matches!((self.beta, self.gamma), (Param::Fixed(_), Param::Fixed(_)))
    }

    /// Scores a record; needs every parameter pinned.
    pub fn score(&self, rec: &SentenceRecord) -> Result<f64> {
        match (self.kind, self.beta, self.gamma) {
            (LinkingKind::LogProb, _, _) => Ok(logprob_score(rec)),
            (LinkingKind::Slor, _, _) => slor_score(rec),
            (_, Param::Fixed(b), Param::Fixed(g)) => morcela_score(rec, b, g),
            _ => Err(Error::InvalidArgument(format!(
                "{} has free parameters; fit it before scoring",
                self.kind
            ))),
        }
    }
}

impl fmt::Display for LinkingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)
    }
}

/// (p/ℓ, u/ℓ, 1/ℓ) for one sentence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub p_over_l: f64,
    pub u_over_l: f64,
    pub inv_l: f64,
}

struct Pul {
    p: f64,
    u: f64,
    l: f64,
}

fn pul(rec: &SentenceRecord) -> Result<Pul> {
    let u = rec
        .unigram_logprob()
        .ok_or_else(|| Error::MissingUnigrams(rec.sentence_id().to_owned()))?;
    Ok(Pul {
        p: rec.lm_logprob(),
        u,
        l: rec.length() as f64,
    })
}

pub fn features(rec: &SentenceRecord) -> Result<FeatureVector> {
    let Pul { p, u, l } = pul(rec)?;
    Ok(FeatureVector {
        p_over_l: p / l,
        u_over_l: u / l,
        inv_l: 1.0 / l,
    })
}

pub fn logprob_score(rec: &SentenceRecord) -> f64 {
    rec.lm_logprob()
}

pub fn slor_score(rec: &SentenceRecord) -> Result<f64> {
    let Pul { p, u, l } = pul(rec)?;
    Ok((p - u) / l)
}

pub fn morcela_score(rec: &SentenceRecord, beta: f64, gamma: f64) -> Result<f64> {
    let Pul { p, u, l } = pul(rec)?;
    Ok((p - beta * u + gamma) / l)
}

fn column_value(col: Column, rec: &SentenceRecord) -> Result<f64> {
    Ok(match col {
        Column::P => rec.lm_logprob(),
        Column::POverL => features(rec)?.p_over_l,
        Column::UOverL => features(rec)?.u_over_l,
        Column::InvL => 1.0 / rec.length() as f64,
        Column::SlorTerm => slor_score(rec)?,
    })
}

/// Row-major n×m design matrix (no intercept column) and its column names.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub rows: Vec<Vec<f64>>,
    pub columns: Vec<&'static str>,
}

impl DesignMatrix {
    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.columns.len()
    }
}

pub fn design_matrix(records: &[SentenceRecord], kind: LinkingKind) -> Result<DesignMatrix> {
    if records.is_empty() {
        return Err(Error::Empty("records".into()));
    }
    let cols = kind.columns();
    let rows = records
        .iter()
        .map(|rec| cols.iter().map(|&c| column_value(c, rec)).collect())
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(DesignMatrix {
        rows,
        columns: cols.iter().map(|c| c.name()).collect(),
    })
}
