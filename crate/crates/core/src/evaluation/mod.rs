//! Transfer strength, content preservation, the random-pair lower bound, and
//! Spearman correlation.

mod metrics;
mod report;
mod strength;

pub use metrics::{
    content_preservation, cosine, lower_bound, mean_preservation, ranks, sentence_embedding, spearman, PairMean,
    LOWER_BOUND_PAIRS,
};
pub use report::{
    evaluate_model, score_outputs, transfer_to_opposite, EvalReport, OutputScores, Transferred, CSV_HEADER,
};
pub use strength::{style_of_score, transfer_strength, StrengthClassifier, StrengthConfig, THRESHOLD};

#[cfg(test)]
mod tests;
