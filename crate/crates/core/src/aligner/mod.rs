//! Word alignment: IBM Model 1 EM with an optional diagonal distortion prior,
//! Viterbi decoding, and symmetrization of the two alignment directions.

mod em;
mod links;
mod symmetrize;

pub use em::{
    align_corpus, em_train, viterbi_align, AlignMode, AlignerConfig, AlignmentModel, DiagonalParams,
    UNSEEN_FLOOR,
};
pub use links::{read_pharaoh, write_pharaoh, LinkSet};
pub use symmetrize::{symmetrize, Heuristic};

/// A parallel sentence pair as lower-cased token sequences.
pub type TokenPair = (Vec<String>, Vec<String>);
