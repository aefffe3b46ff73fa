//! Subcommands of the `morcela` binary.
//!
//! Each `cmd_*` resolves its inputs from a [`RunConfig`], runs the library
//! and returns the report it would write, so the binary and the tests share
//! one code path.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use morcela::analysis::{self, InterGroup, SlopeFitRow, SlopeReport};
use morcela::data::{self, JudgmentVector, SentenceRecord};
use morcela::linking::LinkingSpec;
use morcela::regression::{self, Comparison, ComparisonRow, CvConfig, FitResult};
use morcela::unigram::{self, GenerationAggregate, RawCounts, UnigramTable};
use morcela::LinkingKind;
use serde::Serialize;

pub mod args;
pub mod config;
pub mod report;

pub use config::RunConfig;
pub use report::Envelope;

/// Bad invocation or configuration; exits with status 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Fails fast, before any computation, on inputs that cannot be read.
fn check_inputs(paths: &[&Path]) -> anyhow::Result<()> {
    for p in paths {
        std::fs::metadata(p).with_context(|| format!("input {} is not readable", p.display()))?;
    }
    Ok(())
}

/// Machine-readable code and exit status for an error chain.
pub fn classify(err: &anyhow::Error) -> (&'static str, i32) {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return ("usage", 2);
        }
        if let Some(e) = cause.downcast_ref::<morcela::Error>() {
            let status = if matches!(e.root(), morcela::Error::Empty(_)) { 2 } else { 1 };
            return (e.code(), status);
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return ("io", 1);
        }
    }
    ("error", 1)
}

/// `code: message: cause: ...` on one line.
pub fn render_error(err: &anyhow::Error) -> String {
    let (code, _) = classify(err);
    let chain: Vec<String> = err.chain().map(|c| c.to_string()).collect();
    format!("morcela-error[{code}]: {}", chain.join(": "))
}

#[derive(Debug, Clone, Serialize)]
pub struct JudgmentSummary {
    pub participants: usize,
    pub sentences: usize,
    pub ratings: usize,
}

/// ratings CSV → per-sentence mean z-scores.
pub fn cmd_judgments(cfg: &RunConfig) -> anyhow::Result<(JudgmentVector, Envelope<JudgmentSummary>)> {
    let ratings_path = RunConfig::require(&cfg.ratings, "ratings")?;
    check_inputs(&[ratings_path])?;
    let table = data::parse_ratings(ratings_path)?;
    let z = data::z_normalize(&table, cfg.sd.unwrap_or_default())?;
    let judgments = data::aggregate_judgments(&z)?;
    let summary = JudgmentSummary {
        participants: table.participant_count(),
        sentences: table.sentence_count(),
        ratings: table.len(),
    };
    let env = Envelope::new("judgments", cfg, None, &[ratings_path], summary)?;
    Ok((judgments, env))
}

/// Split-half agreement between rater groups.
pub fn cmd_agreement(cfg: &RunConfig) -> anyhow::Result<Envelope<InterGroup>> {
    let ratings_path = RunConfig::require(&cfg.ratings, "ratings")?;
    check_inputs(&[ratings_path])?;
    let table = data::parse_ratings(ratings_path)?;
    let ig = analysis::inter_group_correlation(
        &table,
        cfg.seed(),
        cfg.repeats.unwrap_or(1),
        cfg.sd.unwrap_or_default(),
        cfg.exec(),
    )?;
    Envelope::new("agreement", cfg, Some(cfg.seed()), &[ratings_path], ig)
}

/// Score records, with unigram log-probabilities attached when a table is
/// configured.
fn load_records(cfg: &RunConfig) -> anyhow::Result<Vec<SentenceRecord>> {
    let scores = RunConfig::require(&cfg.scores, "scores")?;
    let records = data::parse_score_file(scores)?;
    if records.is_empty() {
        return Err(morcela::Error::Empty(format!("score file {}", scores.display())).into());
    }
    match &cfg.unigram {
        Some(path) => {
            let table = UnigramTable::read(path)?;
            Ok(data::attach_unigrams(&records, &table, cfg.oov_floor)?)
        }
        None => Ok(records),
    }
}

fn fit_inputs(cfg: &RunConfig) -> anyhow::Result<Vec<&Path>> {
    let mut inputs = vec![RunConfig::require(&cfg.scores, "scores")?.as_path()];
    if let Some(u) = &cfg.unigram {
        inputs.push(u);
    }
    inputs.push(RunConfig::require(&cfg.judgments, "judgments")?);
    check_inputs(&inputs)?;
    Ok(inputs)
}

fn cv_config(cfg: &RunConfig) -> CvConfig {
    CvConfig::new(cfg.k_folds(), cfg.seed()).with_exec(cfg.exec())
}

/// Cross-validated fit of one linking function.
pub fn cmd_fit(cfg: &RunConfig) -> anyhow::Result<Envelope<FitResult>> {
    let inputs = fit_inputs(cfg)?;
    let kind = *RunConfig::require(&cfg.spec, "spec")?;
    let records = load_records(cfg)?;
    let judgments = JudgmentVector::read_csv(RunConfig::require(&cfg.judgments, "judgments")?)?;
    let fit = regression::kfold_cv(&records, &judgments, kind, &cv_config(cfg))
        .with_context(|| format!("fitting {kind}"))?;
    Envelope::new("fit", cfg, Some(cfg.seed()), &inputs, fit)
}

pub const DEFAULT_COMPARE: [LinkingKind; 4] = [
    LinkingKind::Slor,
    LinkingKind::MorcelaBeta1,
    LinkingKind::MorcelaGamma0,
    LinkingKind::Morcela,
];

/// Fits several linking functions and ranks them by BIC.
pub fn cmd_compare(cfg: &RunConfig) -> anyhow::Result<(Comparison, Envelope<Vec<ComparisonRow>>)> {
    let inputs = fit_inputs(cfg)?;
    let kinds: Vec<LinkingKind> = if cfg.specs.is_empty() {
        DEFAULT_COMPARE.to_vec()
    } else {
        cfg.specs.clone()
    };
    let records = load_records(cfg)?;
    let judgments = JudgmentVector::read_csv(RunConfig::require(&cfg.judgments, "judgments")?)?;
    let cmp = regression::compare_specs(&records, &judgments, &kinds, &cv_config(cfg))?;
    let env = Envelope::new("compare", cfg, Some(cfg.seed()), &inputs, cmp.rows())?;
    Ok((cmp, env))
}

#[derive(Debug, Clone, Serialize)]
pub struct TableSummary {
    pub vocab_size: usize,
    pub support_size: usize,
    pub total_tokens_observed: u64,
    pub smoothing: unigram::Smoothing,
}

impl From<&UnigramTable> for TableSummary {
    fn from(t: &UnigramTable) -> Self {
        TableSummary {
            vocab_size: t.vocab_size(),
            support_size: t.support_size(),
            total_tokens_observed: t.total_tokens_observed(),
            smoothing: t.smoothing(),
        }
    }
}

/// Whitespace-separated token ids.
pub fn read_token_file(path: &Path) -> anyhow::Result<Vec<u32>> {
    let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        for tok in line.split_whitespace() {
            let id = tok.parse().map_err(|e| {
                anyhow!("{}:{}: bad token id {tok:?}: {e}", path.display(), i + 1)
            })?;
            out.push(id);
        }
    }
    Ok(out)
}

/// Counted table from token files and/or count shards.
pub fn cmd_unigram_count(cfg: &RunConfig) -> anyhow::Result<(UnigramTable, Envelope<TableSummary>)> {
    if cfg.tokens.is_empty() && cfg.shards.is_empty() {
        return Err(usage("unigram count needs --tokens or --shards"));
    }
    let vocab = *RunConfig::require(&cfg.vocab_size, "vocab_size")?;
    let inputs: Vec<&Path> = cfg.tokens.iter().chain(&cfg.shards).map(PathBuf::as_path).collect();
    check_inputs(&inputs)?;
    let chunks = cfg
        .tokens
        .iter()
        .map(|p| read_token_file(p))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let mut shards = vec![unigram::count_chunks(&chunks, vocab, cfg.exec())?];
    for p in &cfg.shards {
        shards.push(RawCounts::read_tsv(p, vocab)?);
    }
    let counts = unigram::merge_counts(&shards)?;
    if counts.total() == 0 {
        return Err(morcela::Error::Empty("token stream".into()).into());
    }
    let table = unigram::table_from_counts(&counts, cfg.smoothing(false))?;
    let env = Envelope::new("unigram count", cfg, None, &inputs, TableSummary::from(&table))?;
    Ok((table, env))
}

/// Generated table from a summed next-token distribution.
pub fn cmd_unigram_from_aggregate(
    cfg: &RunConfig,
) -> anyhow::Result<(UnigramTable, Envelope<TableSummary>)> {
    let path = RunConfig::require(&cfg.aggregate, "aggregate")?;
    check_inputs(&[path])?;
    let agg = GenerationAggregate::read(path)?;
    let table = unigram::table_from_aggregate(&agg, cfg.smoothing(true))?;
    let env = Envelope::new("unigram from-aggregate", cfg, None, &[path], TableSummary::from(&table))?;
    Ok((table, env))
}

/// Regression slope of conditional log-likelihood on unigram log-probability.
pub fn cmd_slope(cfg: &RunConfig) -> anyhow::Result<Envelope<SlopeReport>> {
    let instances = RunConfig::require(&cfg.instances, "instances")?;
    let table_path = RunConfig::require(&cfg.unigram, "unigram")?;
    check_inputs(&[instances, table_path])?;
    let table = UnigramTable::read(table_path)?;
    let xs = analysis::read_instances(instances)?;
    let report = analysis::frequency_slope(&xs, &table, cfg.oov_floor, cfg.exec())?;
    Envelope::new("slope", cfg, None, &[instances, table_path], report)
}

fn parse_pairs(pairs: &[String], what: &str) -> anyhow::Result<Vec<(String, PathBuf)>> {
    pairs
        .iter()
        .map(|p| {
            p.split_once('=')
                .map(|(id, path)| (id.to_owned(), PathBuf::from(path)))
                .ok_or_else(|| usage(format!("{what} entries are model_id=path, got {p:?}")))
        })
        .collect()
}

/// Joins per-model slope reports with per-model fits.
pub fn cmd_report(cfg: &RunConfig) -> anyhow::Result<Envelope<Vec<SlopeFitRow>>> {
    let slope_paths = parse_pairs(&cfg.slopes, "slope")?;
    let fit_paths = parse_pairs(&cfg.fits, "fit")?;
    if slope_paths.is_empty() {
        return Err(usage("report needs at least one --slope model_id=path"));
    }
    let inputs: Vec<&Path> = slope_paths.iter().chain(&fit_paths).map(|(_, p)| p.as_path()).collect();
    check_inputs(&inputs)?;
    let mut slopes = BTreeMap::new();
    for (id, p) in &slope_paths {
        if slopes.insert(id.clone(), report::read_result::<SlopeReport>(p)?).is_some() {
            return Err(usage(format!("model {id} given twice")));
        }
    }
    let mut fits = BTreeMap::new();
    for (id, p) in &fit_paths {
        if fits.insert(id.clone(), report::read_result::<FitResult>(p)?).is_some() {
            return Err(usage(format!("model {id} given twice")));
        }
    }
    let order: Vec<String> = if cfg.order.is_empty() {
        slope_paths.iter().map(|(id, _)| id.clone()).collect()
    } else {
        cfg.order.clone()
    };
    let rows = analysis::slope_vs_fit_report(&slopes, &fits, &order)?;
    Envelope::new("report", cfg, None, &inputs, rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredSentence {
    pub sentence_id: String,
    pub spec: String,
    pub score: f64,
}

/// Scores every record with a fixed or previously fitted linking function.
pub fn cmd_score(cfg: &RunConfig) -> anyhow::Result<(Vec<ScoredSentence>, Envelope<LinkingSpec>)> {
    let scores = RunConfig::require(&cfg.scores, "scores")?;
    let mut inputs = vec![scores.as_path()];
    inputs.extend(cfg.unigram.as_deref());
    inputs.extend(cfg.fit.as_deref());
    check_inputs(&inputs)?;
    let spec = match (&cfg.fit, cfg.spec) {
        (Some(p), _) => {
            let fit: FitResult = report::read_result(p)?;
            match fit.fitted_spec() {
                Some(s) => s,
                None => LinkingSpec::new(fit.spec.kind),
            }
        }
        (None, Some(kind)) if !kind.has_linking_params() || kind == LinkingKind::Slor => {
            LinkingSpec::new(kind)
        }
        (None, Some(kind)) => {
            let beta = cfg.beta.or(kind.fixed_beta());
            let gamma = cfg.gamma.or(kind.fixed_gamma());
            match (beta, gamma) {
                (Some(b), Some(g)) => LinkingSpec::with_params(kind, b, g)?,
                _ => return Err(usage(format!("{kind} needs --beta/--gamma or --fit"))),
            }
        }
        (None, None) => return Err(usage("score needs --spec or --fit")),
    };
    let records = load_records(cfg)?;
    let label = spec.kind.name().to_owned();
    let rows = records
        .iter()
        .map(|r| {
            Ok(ScoredSentence {
                sentence_id: r.sentence_id().to_owned(),
                spec: label.clone(),
                score: spec.score(r)?,
            })
        })
        .collect::<morcela::Result<Vec<_>>>()?;
    let env = Envelope::new("score", cfg, None, &inputs, spec)?;
    Ok((rows, env))
}

pub fn scores_csv(rows: &[ScoredSentence]) -> String {
    let mut s = String::from("sentence_id,spec,score\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", csv_field(&r.sentence_id), r.spec, r.score));
    }
    s
}

pub fn report_csv(rows: &[SlopeFitRow]) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    analysis::write_slope_fit_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf)?)
}

pub fn comparison_csv(cmp: &Comparison) -> anyhow::Result<String> {
    let mut buf = Vec::new();
    cmp.write_csv(&mut buf)?;
    Ok(String::from_utf8(buf)?)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}
