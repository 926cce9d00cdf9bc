//! Citation-network imbalance analysis toolkit.
//!
//! Ingests a paper/citation corpus, randomizes citations under three
//! degree-preserving reference models (random-draws, homophilic-draws,
//! preferential-draws), and quantifies group-level over/under-citation with
//! Z-score significance tests and matched-pair comparisons. A synthetic
//! corpus generator with controllable homophily, preferential attachment,
//! and planted citation bias supports calibration and power testing.

pub mod corpus;
pub mod harvest;
pub mod imbalance;
pub mod matching;
pub mod synthgen;
pub mod nullmodels;
pub mod error;
pub mod stats;

pub use error::{Error, Result};
