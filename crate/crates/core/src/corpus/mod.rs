//! Sentences, documents and context windows, plus the corpus file formats.

mod lexicon;
mod manifest;
mod tokenize;

pub use lexicon::{pronoun_indices, Category, ErrorKind, PronounLexicon};
pub use manifest::{build_manifest, ManifestRow, TestSuiteManifest};
pub use tokenize::{detokenize, tokenize, Token};

use std::path::Path;
use std::str::FromStr;

use crate::error::{read_utf8, Error, Result};

/// Default number of preceding sentences shown as context.
pub const DEFAULT_CONTEXT: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SentenceRec {
    pub doc_id: usize,
    pub index_in_doc: usize,
    /// The raw line the tokens were taken from.
    pub text: String,
    pub tokens: Vec<Token>,
}

impl SentenceRec {
    pub fn new(doc_id: usize, index_in_doc: usize, text: &str) -> Self {
        SentenceRec {
            doc_id,
            index_in_doc,
            text: text.to_string(),
            tokens: tokenize(text),
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn lower_forms(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.lower.clone()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: usize,
    pub sentences: Vec<SentenceRec>,
}

impl Document {
    pub fn from_lines<S: AsRef<str>>(id: usize, lines: &[S]) -> Self {
        Document {
            id,
            sentences: lines
                .iter()
                .enumerate()
                .map(|(i, l)| SentenceRec::new(id, i, l.as_ref()))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextWindow {
    /// Oldest first.
    pub sentences: Vec<SentenceRec>,
    pub k: usize,
}

impl ContextWindow {
    pub fn empty(k: usize) -> Self {
        ContextWindow {
            sentences: Vec::new(),
            k,
        }
    }

    pub fn texts(&self) -> Vec<String> {
        self.sentences.iter().map(|s| s.text.clone()).collect()
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(SentenceRec::len).sum()
    }
}

/// The up to `k` sentences immediately preceding sentence `i` of `doc`.
pub fn context_of(doc: &Document, i: usize, k: usize) -> Result<ContextWindow> {
    if i >= doc.len() {
        return Err(Error::OutOfRange {
            index: i,
            len: doc.len(),
        });
    }
    let start = i.saturating_sub(k);
    Ok(ContextWindow {
        sentences: doc.sentences[start..i].to_vec(),
        k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One sentence per line; the whole file is one document.
    Flat,
    /// Documents separated by blank lines.
    DocBlocks,
}

impl FromStr for CorpusFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "flat" => Ok(CorpusFormat::Flat),
            "doc-blocks" => Ok(CorpusFormat::DocBlocks),
            other => Err(format!("unknown corpus format `{other}` (expected flat or doc-blocks)")),
        }
    }
}

pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Document>> {
    let text = read_utf8(path)?;
    Ok(parse_corpus(&text, format))
}

pub fn parse_corpus(text: &str, format: CorpusFormat) -> Vec<Document> {
    if text.is_empty() {
        return Vec::new();
    }
    let lines: Vec<&str> = text.lines().map(|l| l.trim_end_matches('\r')).collect();
    match format {
        // blank lines in a flat file are kept so line numbers stay parallel
        CorpusFormat::Flat => vec![Document::from_lines(0, &lines)],
        CorpusFormat::DocBlocks => {
            let mut docs = Vec::new();
            let mut block: Vec<&str> = Vec::new();
            for line in lines {
                if line.trim().is_empty() {
                    if !block.is_empty() {
                        docs.push(Document::from_lines(docs.len(), &block));
                        block.clear();
                    }
                } else {
                    block.push(line);
                }
            }
            if !block.is_empty() {
                docs.push(Document::from_lines(docs.len(), &block));
            }
            docs
        }
    }
}

/// All sentences of a corpus in document order.
pub fn flatten(docs: &[Document]) -> impl Iterator<Item = &SentenceRec> {
    docs.iter().flat_map(|d| d.sentences.iter())
}
