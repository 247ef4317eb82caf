//! Pronoun translation evaluation.
//!
//! The crate covers the whole pipeline: tokenizing parallel text, word
//! alignment by EM, mining pronoun mismatches between reference and system
//! translations, generating single-substitution noisy candidates, a pairwise
//! ranking model over pronoun representations, and agreement statistics for
//! human judgments.

pub mod aligner;
pub mod corpus;
pub mod error;
pub mod metrics;
pub mod miner;
pub mod model;
pub mod numerics;
pub mod synthetic;
pub mod trainer;

pub use error::{Error, Result};
