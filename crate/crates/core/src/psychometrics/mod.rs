//! Reliability and similarity statistics.

mod alpha;
mod correlation;
mod regression;

pub use alpha::{alpha_report, cronbach_alpha, random_alpha_baseline, AlphaReport};
pub use correlation::{
    correlation_matrix, fisher_ci, pearson, to_dissimilarity, vectorize_upper, DissimilarityMethod,
    LabelPair, SimilarityMatrix,
};
pub use regression::{regress_similarities, RegressionReport};
