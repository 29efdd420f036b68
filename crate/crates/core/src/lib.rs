//! Core algorithms for classifying firms with an imbalanced label and
//! analysing the survival of the resulting groups.
//!
//! The modules follow the pipeline order: [`dataset`] and [`cleansing`]
//! prepare a table, [`resampling`] splits and rebalances it,
//! [`classifiers`] fits seven probabilistic learners, [`evaluation`] and
//! [`mixture`] pick cutoffs and blend the two best learners, and
//! [`survival`] and [`cox`] analyse time-to-exit by predicted group.

// `!(x > 0.0)` is used deliberately so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod classifiers;
pub mod cleansing;
pub mod cox;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod linalg;
pub mod mixture;
pub mod resampling;
pub mod rng;
pub mod special;
pub mod stats;
pub mod survival;

pub use dataset::{ColumnData, ColumnKind, ColumnSpec, Dataset, Role, SyntheticSpec};
pub use error::{Error, Result};
