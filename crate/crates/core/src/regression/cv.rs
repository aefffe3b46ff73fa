use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::criteria::{aic, bic};
use super::ols::{ols_fit, pearson, OlsFit};
use crate::data::{JudgmentVector, SentenceRecord};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::linking::{design_matrix, DesignMatrix, LinkingKind, LinkingSpec, INTERCEPT};
use crate::rng;

/// |a| at or below this makes β and γ undefined.
pub const DEGENERACY_EPS: f64 = 1e-10;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CvConfig {
    pub k_folds: usize,
    pub seed: u64,
    pub exec: Execution,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            k_folds: DEFAULT_FOLDS,
            seed: 0,
            exec: Execution::default(),
        }
    }
}

impl CvConfig {
    pub fn new(k_folds: usize, seed: u64) -> Self {
        Self {
            k_folds,
            seed,
            ..Self::default()
        }
    }

    pub fn with_exec(self, exec: Execution) -> Self {
        Self { exec, ..self }
    }
}

/// Recovers (β, γ) from fitted coefficients in `kind`'s column order.
///
/// The p-term weight a scales the whole linking function, so MORCELA's
/// parameters are ratios against it: the u/ℓ weight is -a·β and the 1/ℓ
/// weight is a·γ. Parameters a kind pins are returned at their pinned value;
/// `LogProb` has none.
pub fn derive_params(kind: LinkingKind, coefficients: &[f64]) -> Result<(Option<f64>, Option<f64>)> {
    if coefficients.len() != kind.predictors() {
        return Err(Error::LengthMismatch {
            left: kind.predictors(),
            right: coefficients.len(),
        });
    }
    if !kind.has_linking_params() {
        return Ok((None, None));
    }
    let a = coefficients[0];
    if a.is_nan() || a.abs() <= DEGENERACY_EPS {
        return Err(Error::DegenerateFit { a });
    }
    let (beta, gamma) = match kind {
        LinkingKind::Slor => (1.0, 0.0),
        LinkingKind::Morcela => (-coefficients[1] / a, coefficients[2] / a),
        LinkingKind::MorcelaBeta1 => (1.0, coefficients[1] / a),
        LinkingKind::MorcelaGamma0 => (-coefficients[1] / a, 0.0),
        LinkingKind::LogProb => unreachable!(),
    };
    Ok((Some(beta), Some(gamma)))
}

/// Pairs each record with its gold judgment, preserving record order.
pub fn align<'a>(
    records: &'a [SentenceRecord],
    judgments: &JudgmentVector,
) -> Result<(Vec<&'a SentenceRecord>, Vec<f64>)> {
    if records.is_empty() {
        return Err(Error::Empty("records".into()));
    }
    let y = records
        .iter()
        .map(|r| {
            judgments
                .get(r.sentence_id())
                .ok_or_else(|| Error::MissingJudgment(r.sentence_id().to_owned()))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok((records.iter().collect(), y))
}

/// Fold index sets: a seeded shuffle cut into `k` contiguous runs whose
/// sizes differ by at most one (the first `n % k` folds get the extra item).
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let perm = rng::permutation(seed, n);
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        folds.push(perm[start..start + len].to_vec());
        start += len;
    }
    folds
}

/// Out-of-fold evaluation of one design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub fold_r: Vec<f64>,
    pub mean_r: f64,
    /// Pearson r over all out-of-fold predictions at once.
    pub pooled_r: f64,
    pub predictions: Vec<f64>,
}

/// Shuffled k-fold CV: fit on k-1 folds, predict the held-out fold, and
/// correlate predictions with the gold values per fold.
pub fn cross_validate(x: &DesignMatrix, y: &[f64], cfg: &CvConfig) -> Result<CvOutcome> {
    let n = x.n();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            left: n,
            right: y.len(),
        });
    }
    if cfg.k_folds < 2 {
        return Err(Error::InvalidArgument("k_folds must be at least 2".into()));
    }
    let required = cfg.k_folds * (x.m() + 2);
    if n < required {
        return Err(Error::TooFewObservations { n, required });
    }
    let folds = fold_indices(n, cfg.k_folds, cfg.seed);
    let per_fold = exec::try_map_indexed(cfg.exec, folds.len(), |f| {
        let mut in_test = vec![false; n];
        for &i in &folds[f] {
            in_test[i] = true;
        }
        let (train_x, train_y): (Vec<Vec<f64>>, Vec<f64>) = (0..n)
            .filter(|&i| !in_test[i])
            .map(|i| (x.rows[i].clone(), y[i]))
            .unzip();
        let fit = ols_fit(&train_x, &train_y)?;
        let preds: Vec<f64> = folds[f].iter().map(|&i| fit.predict(&x.rows[i])).collect();
        let gold: Vec<f64> = folds[f].iter().map(|&i| y[i]).collect();
        let r = pearson(&preds, &gold).map_err(|e| match e {
            Error::ConstantInput("x") => Error::ConstantInput("predictions of a test fold"),
            Error::ConstantInput("y") => Error::ConstantInput("gold judgments of a test fold"),
            other => other,
        })?;
        Ok::<_, Error>((r, preds))
    })?;

    let mut predictions = vec![0.0; n];
    let mut fold_r = Vec::with_capacity(folds.len());
    for (fold, (r, preds)) in folds.iter().zip(per_fold) {
        fold_r.push(r);
        for (&i, p) in fold.iter().zip(preds) {
            predictions[i] = p;
        }
    }
    let mean_r = fold_r.iter().sum::<f64>() / fold_r.len() as f64;
    let pooled_r = pearson(&predictions, y)?;
    Ok(CvOutcome {
        fold_r,
        mean_r,
        pooled_r,
        predictions,
    })
}

/// Everything reported for one linking function on one dataset.
///
/// Coefficients, β̂/γ̂, SSE and the information criteria come from a fit on
/// all of the data; the correlations come from cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub spec: LinkingSpec,
    pub coefficients: IndexMap<String, f64>,
    pub beta_hat: Option<f64>,
    pub gamma_hat: Option<f64>,
    pub sse_full: f64,
    pub n: usize,
    pub k: usize,
    pub aic: f64,
    pub bic: f64,
    pub fold_r: Vec<f64>,
    pub mean_r: f64,
    pub pooled_r: f64,
    /// r between full-data fitted values and gold (no held-out data).
    pub full_data_r: f64,
    pub k_folds: usize,
    pub seed: u64,
}

impl FitResult {
    /// The fitted linking function with every parameter pinned, if it has any.
    pub fn fitted_spec(&self) -> Option<LinkingSpec> {
        match (self.beta_hat, self.gamma_hat) {
            (Some(b), Some(g)) => LinkingSpec::with_params(self.spec.kind, b, g).ok(),
            _ => None,
        }
    }
}

/// Full-data fit and k-fold CV of one linking function.
pub fn kfold_cv(
    records: &[SentenceRecord],
    judgments: &JudgmentVector,
    kind: LinkingKind,
    cfg: &CvConfig,
) -> Result<FitResult> {
    let (aligned, y) = align(records, judgments)?;
    let owned: Vec<SentenceRecord> = aligned.into_iter().cloned().collect();
    let x = design_matrix(&owned, kind)?;
    fit_design(&x, &y, kind, cfg)
}

/// [`kfold_cv`] on an already-built design matrix.
pub fn fit_design(x: &DesignMatrix, y: &[f64], kind: LinkingKind, cfg: &CvConfig) -> Result<FitResult> {
    if x.m() != kind.columns().len() {
        return Err(Error::LengthMismatch {
            left: kind.columns().len(),
            right: x.m(),
        });
    }
    let cv = cross_validate(x, y, cfg)?;
    let full: OlsFit = ols_fit(&x.rows, y)?;
    let (beta_hat, gamma_hat) = derive_params(kind, &full.coefficients)?;
    let fitted: Vec<f64> = x.rows.iter().map(|r| full.predict(r)).collect();
    let full_data_r = pearson(&fitted, y)?;

    let mut coefficients = IndexMap::new();
    for (name, &w) in x.columns.iter().zip(full.slopes()) {
        coefficients.insert((*name).to_owned(), w);
    }
    coefficients.insert(INTERCEPT.to_owned(), full.intercept());

    let n = x.n();
    let k = kind.predictors();
    Ok(FitResult {
        spec: LinkingSpec::new(kind),
        coefficients,
        beta_hat,
        gamma_hat,
        sse_full: full.sse,
        n,
        k,
        aic: aic(n, k, full.sse)?,
        bic: bic(n, k, full.sse)?,
        fold_r: cv.fold_r,
        mean_r: cv.mean_r,
        pooled_r: cv.pooled_r,
        full_data_r,
        k_folds: cfg.k_folds,
        seed: cfg.seed,
    })
}

/// One row of a model-selection table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub linking_function: LinkingKind,
    pub aic: f64,
    pub bic: f64,
    pub sse: f64,
    pub predictors: usize,
    pub n: usize,
    pub mean_r: f64,
    pub pooled_r: f64,
    pub full_data_r: f64,
    pub beta_hat: Option<f64>,
    pub gamma_hat: Option<f64>,
}

impl From<&FitResult> for ComparisonRow {
    fn from(f: &FitResult) -> Self {
        Self {
            linking_function: f.spec.kind,
            aic: f.aic,
            bic: f.bic,
            sse: f.sse_full,
            predictors: f.k,
            n: f.n,
            mean_r: f.mean_r,
            pooled_r: f.pooled_r,
            full_data_r: f.full_data_r,
            beta_hat: f.beta_hat,
            gamma_hat: f.gamma_hat,
        }
    }
}

/// Fits ranked by ascending BIC (ties keep input order).
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub fits: Vec<FitResult>,
}

impl Comparison {
    pub fn rows(&self) -> Vec<ComparisonRow> {
        self.fits.iter().map(ComparisonRow::from).collect()
    }

    const HEADER: [&'static str; 11] = [
        "linking_function",
        "aic",
        "bic",
        "sse",
        "predictors",
        "n",
        "mean_r",
        "pooled_r",
        "full_data_r",
        "beta_hat",
        "gamma_hat",
    ];

    /// Full-precision CSV.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut w = csv::Writer::from_writer(out);
        let io = |e: csv::Error| Error::io("<comparison>", std::io::Error::other(e));
        w.write_record(Self::HEADER).map_err(io)?;
        for r in self.rows() {
            w.write_record([
                r.linking_function.name().to_owned(),
                r.aic.to_string(),
                r.bic.to_string(),
                r.sse.to_string(),
                r.predictors.to_string(),
                r.n.to_string(),
                r.mean_r.to_string(),
                r.pooled_r.to_string(),
                r.full_data_r.to_string(),
                opt(r.beta_hat),
                opt(r.gamma_hat),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| Error::io("<comparison>", e))
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f)
    }

    /// Human-readable table, four decimals.
    pub fn render_table(&self) -> String {
        let mut s = format!(
            "{:<16} {:>12} {:>12} {:>10} {:>10} {:>8}\n",
            "Linking Function", "AIC", "BIC", "SSE", "Predictors", "mean r"
        );
        for r in self.rows() {
            s.push_str(&format!(
                "{:<16} {:>12.4} {:>12.4} {:>10.4} {:>10} {:>8.4}\n",
                r.linking_function.name(),
                r.aic,
                r.bic,
                r.sse,
                r.predictors,
                r.mean_r
            ));
        }
        s
    }
}

/// Fits every linking function and ranks them by BIC.
pub fn compare_specs(
    records: &[SentenceRecord],
    judgments: &JudgmentVector,
    kinds: &[LinkingKind],
    cfg: &CvConfig,
) -> Result<Comparison> {
    if kinds.len() < 2 {
        return Err(Error::InvalidArgument(
            "comparison needs at least two linking functions".into(),
        ));
    }
    let (aligned, y) = align(records, judgments)?;
    let owned: Vec<SentenceRecord> = aligned.into_iter().cloned().collect();
    let mut fits = exec::try_map_indexed(cfg.exec, kinds.len(), |i| {
        let x = design_matrix(&owned, kinds[i])?;
        fit_design(&x, &y, kinds[i], cfg)
    })?;
    fits.sort_by(|a, b| a.bic.total_cmp(&b.bic));
    Ok(Comparison { fits })
}
