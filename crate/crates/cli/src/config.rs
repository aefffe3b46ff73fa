use std::path::{Path, PathBuf};

use anyhow::Context;
use morcela::data::SdConvention;
use morcela::unigram::Smoothing;
use morcela::LinkingKind;
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// Default floor for zero-mass tokens in generated tables: ln(1e-9).
pub const DEFAULT_LOG_FLOOR: f64 = -20.72326583694641;

/// Every setting a subcommand can take.
///
/// The same shape is read from a TOML file and built from flags; flags win.
/// The resolved config is echoed into every report, minus the output path.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratings: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scores: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unigram: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub judgments: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instances: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aggregate: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tokens: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub shards: Vec<PathBuf>,
    /// `model_id=path` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slopes: Vec<String>,
    /// `model_id=path` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub order: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vocab_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spec: Option<LinkingKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub specs: Vec<LinkingKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sd: Option<SdConvention>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smoothing: Option<SmoothingKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oov_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sequential: Option<bool>,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SmoothingKind {
    None,
    Additive,
    Floor,
}

macro_rules! prefer {
    ($self:ident, $file:ident; $($opt:ident),*; $($vec:ident),*) => {{
        $( if $self.$opt.is_none() { $self.$opt = $file.$opt.clone(); } )*
        $( if $self.$vec.is_empty() { $self.$vec = $file.$vec.clone(); } )*
    }};
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let src = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&src)
            .map_err(|e| UsageError(format!("invalid config {}: {e}", path.display())).into())
    }

    /// Fills every unset field from `file`.
    pub fn with_fallback(mut self, file: &RunConfig) -> Self {
        prefer!(self, file;
            ratings, scores, unigram, judgments, instances, aggregate, fit, vocab_size, spec,
            beta, gamma, k_folds, seed, repeats, sd, smoothing, alpha, log_floor, oov_floor,
            sequential, out;
            tokens, shards, slopes, fits, order, specs);
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn k_folds(&self) -> usize {
        self.k_folds.unwrap_or(morcela::regression::DEFAULT_FOLDS)
    }

    pub fn exec(&self) -> morcela::Execution {
        if self.sequential.unwrap_or(false) {
            morcela::Execution::Sequential
        } else {
            morcela::Execution::default()
        }
    }

    /// Smoothing with per-source defaults: add-one for counted tables, a
    /// floor for generated ones.
    pub fn smoothing(&self, generated: bool) -> Smoothing {
        let kind = self.smoothing.unwrap_or(if generated {
            SmoothingKind::Floor
        } else {
            SmoothingKind::Additive
        });
        match kind {
            SmoothingKind::None => Smoothing::None,
            SmoothingKind::Additive => Smoothing::Additive {
                alpha: self.alpha.unwrap_or(1.0),
            },
            SmoothingKind::Floor => Smoothing::Floor {
                log_floor: self.log_floor.unwrap_or(DEFAULT_LOG_FLOOR),
            },
        }
    }

    pub fn require<'a, T>(field: &'a Option<T>, name: &str) -> anyhow::Result<&'a T> {
        field
            .as_ref()
            .ok_or_else(|| UsageError(format!("missing required setting `{name}`")).into())
    }

    /// The echo embedded in reports; paths are rendered as given.
    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config is always serializable")
    }
}
