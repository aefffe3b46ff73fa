use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A line or row of an input file could not be parsed or failed validation.
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    /// A semantic error attributed to a specific input line.
    #[error("{path}:{line}: {source}")]
    AtLine {
        path: PathBuf,
        line: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sentence {sentence_id}: {message}")]
    InvalidRecord { sentence_id: String, message: String },

    #[error("duplicate sentence_id {0:?}")]
    DuplicateSentence(String),

    #[error("duplicate rating for participant {participant:?}, sentence {sentence:?}")]
    DuplicateRating { participant: String, sentence: String },

    #[error("rating {rating} out of Likert range [1, 7]")]
    RatingOutOfRange { rating: i64 },

    #[error("participant {0:?} has zero rating variance")]
    ZeroVariance(String),

    #[error("participant {participant:?} has {count} rating(s); at least 2 are required")]
    TooFewRatings { participant: String, count: usize },

    #[error("sentence {0:?} has a single rating; cannot split into two groups")]
    SingleRating(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("token {token} in sentence {sentence_id:?} is not covered by the unigram table")]
    OutOfVocabulary { token: u32, sentence_id: String },

    #[error("token {token} is outside the vocabulary (size {vocab_size})")]
    TokenOutOfRange { token: u32, vocab_size: usize },

    #[error("sentence {0:?} has no unigram log-probabilities attached")]
    MissingUnigrams(String),

    #[error("vocabulary mismatch: {left} vs {right}")]
    VocabMismatch { left: usize, right: usize },

    #[error("invalid smoothing: {0}")]
    InvalidSmoothing(String),

    #[error("generation aggregate has zero total probability mass")]
    ZeroMass,

    #[error("generation aggregate mass {mass} inconsistent with {positions} accumulated positions")]
    InconsistentAggregate { mass: f64, positions: u64 },

    #[error("design matrix is rank deficient (condition estimate {condition:.3e})")]
    RankDeficient { condition: f64 },

    #[error("too few observations: n = {n}, need at least {required}")]
    TooFewObservations { n: usize, required: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("zero variance in {0}")]
    ConstantInput(&'static str),

    #[error("degenerate fit: |a| = {a:e} is at or below the threshold; linking parameters undefined")]
    DegenerateFit { a: f64 },

    #[error("no judgment for sentence {0:?}")]
    MissingJudgment(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("model id mismatch: {0}")]
    KeyMismatch(String),

    #[error("{0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable, machine-readable error class.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::AtLine { source, .. } => source.code(),
            Error::InvalidRecord { .. } => "invalid_record",
            Error::DuplicateSentence(_) => "duplicate_sentence",
            Error::DuplicateRating { .. } => "duplicate_rating",
            Error::RatingOutOfRange { .. } => "rating_range",
            Error::ZeroVariance(_) => "zero_variance",
            Error::TooFewRatings { .. } => "too_few_ratings",
            Error::SingleRating(_) => "single_rating",
            Error::Empty(_) => "empty_input",
            Error::OutOfVocabulary { .. } => "oov",
            Error::TokenOutOfRange { .. } => "token_range",
            Error::MissingUnigrams(_) => "missing_unigrams",
            Error::VocabMismatch { .. } => "vocab_mismatch",
            Error::InvalidSmoothing(_) => "invalid_smoothing",
            Error::ZeroMass => "zero_mass",
            Error::InconsistentAggregate { .. } => "inconsistent_aggregate",
            Error::RankDeficient { .. } => "rank_deficient",
            Error::TooFewObservations { .. } => "too_few_observations",
            Error::LengthMismatch { .. } => "length_mismatch",
            Error::ConstantInput(_) => "constant_input",
            Error::DegenerateFit { .. } => "degenerate_fit",
            Error::MissingJudgment(_) => "missing_judgment",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::KeyMismatch(_) => "key_mismatch",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_line(path: impl Into<PathBuf>, line: usize, source: Error) -> Self {
        Error::AtLine {
            path: path.into(),
            line,
            source: Box::new(source),
        }
    }

    /// The innermost error, with any line context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLine { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl ToString) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.to_string(),
        }
    }
}
