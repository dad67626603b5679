//! Temporal and causal event relation classification over dependency-parsed
//! text, with self-contained BiLSTM models, training, evaluation, and a CLI.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod features;
pub mod model;
pub mod nn;
pub mod train;

pub use error::{Result, SercError};

// The guide's code blocks, compiled and run as doc-tests so they stay in
// sync with the library.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/joint.md")]
    mod joint {}
    #[doc = include_str!("../../../book/src/checkpoints.md")]
    mod checkpoints {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
