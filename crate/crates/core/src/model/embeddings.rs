use std::path::Path;

use super::Vocab;
use crate::error::{read_utf8, Error, Result};
use crate::numerics::Tensor2;

/// Copies vectors from a `word v1 … vd` text file into the rows of
/// `embeddings` for words in the vocabulary. A leading `count dim` header
/// line is skipped. Returns the number of rows filled.
pub fn load_embeddings(path: &Path, vocab: &Vocab, embeddings: &mut Tensor2) -> Result<usize> {
    let text = read_utf8(path)?;
    let d = embeddings.cols();
    let mut filled = vec![false; vocab.len()];
    for (n, line) in text.lines().enumerate() {
        let mut fields = line.split_whitespace();
        let Some(word) = fields.next() else { continue };
        let rest: Vec<&str> = fields.collect();
        if n == 0 && rest.len() == 1 && word.parse::<usize>().is_ok() && rest[0].parse::<usize>().is_ok() {
            continue;
        }
        if rest.len() != d {
            return Err(Error::parse(path, n + 1, format!("{} values, expected {d}", rest.len())));
        }
        let id = vocab.id(word);
        if id == 0 && word != super::UNK || filled[id] {
            continue;
        }
        let row = embeddings.row_mut(id);
        for (slot, v) in row.iter_mut().zip(&rest) {
            *slot = v.parse().map_err(|_| Error::parse(path, n + 1, format!("bad value `{v}`")))?;
        }
        filled[id] = true;
    }
    Ok(filled.iter().filter(|&&f| f).count())
}
