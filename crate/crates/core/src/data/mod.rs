//! Score-file and rating ingestion, per-participant z-normalization, and
//! aggregation to per-sentence gold judgments.

mod ratings;
mod scores;

pub use ratings::{
    aggregate_judgments, parse_ratings, z_normalize, JudgmentVector, NormalizedRatings,
    RatingTable, SdConvention, LIKERT_MAX, LIKERT_MIN,
};
pub use scores::{
    attach_unigrams, parse_score_file, parse_score_line, score_line, write_score_file,
    SentenceRecord,
};
