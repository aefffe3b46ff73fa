//! Least-squares fitting of linking functions, cross-validated Pearson
//! evaluation, and AIC/BIC model selection.

mod criteria;
mod cv;
mod ols;

pub use criteria::{aic, bic};
pub use cv::{
    align, compare_specs, cross_validate, derive_params, fit_design, fold_indices, kfold_cv,
    Comparison, ComparisonRow, CvConfig, CvOutcome, FitResult, DEFAULT_FOLDS, DEGENERACY_EPS,
};
pub use ols::{ols_fit, pearson, OlsFit, RANK_TOL};
