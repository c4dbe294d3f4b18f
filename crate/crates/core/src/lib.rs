//! Questionnaire item embedding differentials.
//!
//! Item embeddings from any sentence-embedding model carry a large shared
//! component (common features of natural language) that pushes every pair of
//! items towards positive similarity. Subtracting the questionnaire-mean
//! embedding from each item removes that component and lets negative
//! inter-dimension correlations surface. The rest of the crate validates the
//! recovered structure against human reference data:
//!
//! - [`corpus`]: questionnaire specs, reference matrices, variant merging
//! - [`embed`]: embedding sets from files, an HTTP endpoint, or a seeded RNG
//! - [`squid`]: mean subtraction and aggregation to dimensions
//! - [`psychometrics`]: Cronbach's alpha, Pearson matrices, Fisher intervals, regression
//! - [`mds`]: SMACOF (ordinal and ratio), classical scaling, PCA
//! - [`alignment`]: Procrustes fits, congruence coefficients, null test
//! - [`pipeline`] and [`figures`]: end-to-end runs and SVG output

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod alignment;
pub mod corpus;
pub mod embed;
mod error;
pub mod figures;
pub mod matrix;
pub mod mds;
pub mod pipeline;
pub mod psychometrics;
pub mod pvqrr;
pub mod rng;
pub mod squid;

pub use error::{Error, Result};
pub use matrix::SymmetricMatrix;

/// Row-major view over a labeled set of equal-length vectors.
pub trait VectorRows {
    fn labels(&self) -> &[String];
    fn dim(&self) -> usize;
    fn row(&self, i: usize) -> &[f64];

    fn len(&self) -> usize {
        self.labels().len()
    }

    fn is_empty(&self) -> bool {
        self.labels().is_empty()
    }
}
