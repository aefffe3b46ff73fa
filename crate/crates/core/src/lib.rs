//! Linking functions from LM log-probabilities to acceptability judgments.
//!
//! Sentence-level scores are built from the summed LM log-probability `p`,
//! the summed unigram log-probability `u` and the token count `ℓ`:
//!
//! | kind            | score                 |
//! |-----------------|-----------------------|
//! | `logprob`       | `p`                   |
//! | `slor`          | `(p - u) / ℓ`         |
//! | `morcela`       | `(p - βu + γ) / ℓ`    |
//!
//! Free parameters are estimated by least squares against z-normalized
//! human ratings and evaluated with seeded k-fold cross-validation.

pub mod analysis;
pub mod data;
mod error;
pub mod exec;
pub mod linking;
pub mod regression;
pub mod rng;
pub mod synth;
pub mod unigram;

pub use error::{Error, Result};
pub use exec::Execution;
pub use linking::{LinkingKind, LinkingSpec, Param};
pub use regression::{compare_specs, kfold_cv, Comparison, CvConfig, FitResult};
