//! Mining pronoun mismatches between reference and system translations and
//! turning them into ranking pairs.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::aligner::LinkSet;
use crate::corpus::{context_of, pronoun_indices, tokenize, Document, PronounLexicon, SentenceRec, Token};
use crate::error::{read_utf8, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PronounMismatch {
    pub ref_index: usize,
    pub sys_index: usize,
    pub ref_form: String,
    pub sys_form: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PairLabel {
    RefBetter,
    Unlabeled,
}

/// Byte spans of one mismatched pronoun in the reference and the other side.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HighlightSpan {
    #[serde(rename = "ref")]
    pub reference: (usize, usize),
    pub sys: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankingPair {
    pub id: String,
    pub lang_pair: String,
    pub ref_context: Vec<String>,
    #[serde(rename = "ref")]
    pub reference: String,
    pub sys_context: Vec<String>,
    pub sys: String,
    pub ref_pronouns: Vec<usize>,
    pub sys_pronouns: Vec<usize>,
    pub mismatch_forms: Vec<(String, String)>,
    pub source_text: Option<String>,
    pub label: PairLabel,
    /// Parallel to `mismatch_forms`; empty for hand-built pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub highlight_spans: Vec<HighlightSpan>,
}

impl RankingPair {
    /// Checks pronoun indices against the tokenized sentences and the context bound.
    pub fn validate(&self, k: usize) -> Result<()> {
        let check = |text: &str, idx: &[usize], side: &str| -> Result<()> {
            let n = tokenize(text).len();
            if idx.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!("pair {}: {side} pronoun indices not increasing", self.id)));
            }
            match idx.iter().find(|&&i| i >= n) {
                Some(&i) => Err(Error::Invalid(format!(
                    "pair {}: {side} pronoun index {i} outside a {n}-token sentence",
                    self.id
                ))),
                None => Ok(()),
            }
        };
        check(&self.reference, &self.ref_pronouns, "ref")?;
        check(&self.sys, &self.sys_pronouns, "sys")?;
        if self.ref_context.len() > k || self.sys_context.len() > k {
            return Err(Error::Invalid(format!("pair {}: context longer than {k}", self.id)));
        }
        Ok(())
    }

    fn dedup_key(&self) -> (String, String, Vec<String>, Vec<String>) {
        (
            self.reference.clone(),
            self.sys.clone(),
            self.ref_context.clone(),
            self.sys_context.clone(),
        )
    }
}

/// Aligned pronoun pairs whose forms differ. `links` are (system, reference)
/// position pairs.
pub fn find_mismatches(
    reference: &SentenceRec,
    system: &SentenceRec,
    links: &LinkSet,
    lexicon: &PronounLexicon,
) -> Vec<PronounMismatch> {
    let mut out: Vec<PronounMismatch> = links
        .iter()
        .filter_map(|(si, ri)| {
            let r = reference.tokens.get(ri)?;
            let s = system.tokens.get(si)?;
            (lexicon.is_pronoun(r) && lexicon.is_pronoun(s) && r.lower != s.lower).then(|| PronounMismatch {
                ref_index: ri,
                sys_index: si,
                ref_form: r.lower.clone(),
                sys_form: s.lower.clone(),
            })
        })
        .collect();
    out.sort_by_key(|m| (m.ref_index, m.sys_index));
    out
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

/// Surface for `form` replacing `tokens[index]`: capitalized at the start of
/// the sentence, upper-cased when replacing an all-caps word, `I` always
/// capitalized, lower case otherwise.
fn cased_form(tokens: &[Token], index: usize, form: &str) -> String {
    let replaced = &tokens[index].surface;
    let initial = !tokens[..index]
        .iter()
        .any(|t| t.surface.chars().any(char::is_alphanumeric));
    if form == "i" {
        "I".to_string()
    } else if initial {
        capitalize(form)
    } else if replaced.chars().count() > 1 && replaced.chars().all(|c| !c.is_lowercase()) {
        form.to_uppercase()
    } else {
        form.to_lowercase()
    }
}

/// The reference with the mismatched pronoun replaced by the system's form.
pub fn make_noisy_candidate(reference: &SentenceRec, mismatch: &PronounMismatch) -> SentenceRec {
    let idx = mismatch.ref_index;
    let surface = cased_form(&reference.tokens, idx, &mismatch.sys_form);
    let (start, end) = reference.tokens[idx].span;
    let text = format!("{}{}{}", &reference.text[..start], surface, &reference.text[end..]);
    let shift = surface.len() as isize - (end - start) as isize;
    let tokens = reference
        .tokens
        .iter()
        .enumerate()
        .map(|(i, t)| match i.cmp(&idx) {
            std::cmp::Ordering::Less => t.clone(),
            std::cmp::Ordering::Equal => Token::new(&surface, start),
            std::cmp::Ordering::Greater => Token {
                span: (
                    (t.span.0 as isize + shift) as usize,
                    (t.span.1 as isize + shift) as usize,
                ),
                ..t.clone()
            },
        })
        .collect();
    SentenceRec {
        doc_id: reference.doc_id,
        index_in_doc: reference.index_in_doc,
        text,
        tokens,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HarvestMode {
    /// One pair per sentence with mismatches: reference vs the full system output.
    RefVsSys,
    /// One pair per mismatch: reference vs a single-substitution noisy candidate.
    RefVsNoisy,
}

impl FromStr for HarvestMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ref-vs-sys" | "sys" => Ok(HarvestMode::RefVsSys),
            "ref-vs-noisy" | "noisy" => Ok(HarvestMode::RefVsNoisy),
            other => Err(format!("unknown harvest mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HarvestOptions<'a> {
    pub mode: HarvestMode,
    pub context_k: usize,
    pub lang_pair: String,
    /// Source documents, parallel to the references; shown to annotators only.
    pub source: Option<&'a [Document]>,
}

fn check_parallel(a: &[Document], b: &[Document], what: &str) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Invalid(format!(
            "{what}: {} documents vs {} reference documents",
            b.len(),
            a.len()
        )));
    }
    for (da, db) in a.iter().zip(b) {
        if da.len() != db.len() {
            return Err(Error::Invalid(format!(
                "{what}: document {} has {} sentences vs {} in the reference",
                da.id,
                db.len(),
                da.len()
            )));
        }
    }
    Ok(())
}

/// Builds ranking pairs from parallel reference and system documents.
/// `alignments` holds one (system, reference) link set per sentence in
/// document order.
pub fn harvest(
    ref_docs: &[Document],
    sys_docs: &[Document],
    alignments: &[LinkSet],
    lexicon: &PronounLexicon,
    opts: &HarvestOptions<'_>,
) -> Result<Vec<RankingPair>> {
    check_parallel(ref_docs, sys_docs, "system corpus")?;
    if let Some(src) = opts.source {
        check_parallel(ref_docs, src, "source corpus")?;
    }
    let total: usize = ref_docs.iter().map(Document::len).sum();
    if alignments.len() != total {
        return Err(Error::Invalid(format!(
            "{} alignment lines for {total} sentences",
            alignments.len()
        )));
    }

    let mut pairs = Vec::new();
    let mut line = 0;
    for (d, (rdoc, sdoc)) in ref_docs.iter().zip(sys_docs).enumerate() {
        for i in 0..rdoc.len() {
            let links = &alignments[line];
            line += 1;
            let r = &rdoc.sentences[i];
            let s = &sdoc.sentences[i];
            let mismatches = find_mismatches(r, s, links, lexicon);
            if mismatches.is_empty() {
                continue;
            }
            let ref_context = context_of(rdoc, i, opts.context_k)?.texts();
            let source_text = opts.source.map(|src| src[d].sentences[i].text.clone());
            let id = format!("d{d}s{i}");
            match opts.mode {
                HarvestMode::RefVsSys => pairs.push(RankingPair {
                    id,
                    lang_pair: opts.lang_pair.clone(),
                    ref_context,
                    reference: r.text.clone(),
                    sys_context: context_of(sdoc, i, opts.context_k)?.texts(),
                    sys: s.text.clone(),
                    ref_pronouns: pronoun_indices(r, lexicon),
                    sys_pronouns: pronoun_indices(s, lexicon),
                    mismatch_forms: mismatches
                        .iter()
                        .map(|m| (m.ref_form.clone(), m.sys_form.clone()))
                        .collect(),
                    source_text,
                    label: PairLabel::RefBetter,
                    highlight_spans: mismatches
                        .iter()
                        .map(|m| HighlightSpan {
                            reference: r.tokens[m.ref_index].span,
                            sys: s.tokens[m.sys_index].span,
                        })
                        .collect(),
                }),
                HarvestMode::RefVsNoisy => {
                    for (n, m) in mismatches.iter().enumerate() {
                        let noisy = make_noisy_candidate(r, m);
                        pairs.push(RankingPair {
                            id: format!("{id}m{n}"),
                            lang_pair: opts.lang_pair.clone(),
                            ref_context: ref_context.clone(),
                            reference: r.text.clone(),
                            sys_context: ref_context.clone(),
                            sys: noisy.text.clone(),
                            ref_pronouns: pronoun_indices(r, lexicon),
                            sys_pronouns: pronoun_indices(&noisy, lexicon),
                            mismatch_forms: vec![(m.ref_form.clone(), m.sys_form.clone())],
                            source_text: source_text.clone(),
                            label: PairLabel::RefBetter,
                            highlight_spans: vec![HighlightSpan {
                                reference: r.tokens[m.ref_index].span,
                                sys: noisy.tokens[m.ref_index].span,
                            }],
                        });
                    }
                }
            }
        }
    }
    Ok(dedup_pairs(pairs))
}

/// Drops pairs whose reference, other side and both contexts repeat an
/// earlier pair; the first occurrence is kept.
pub fn dedup_pairs(pairs: Vec<RankingPair>) -> Vec<RankingPair> {
    let mut seen = HashSet::new();
    pairs.into_iter().filter(|p| seen.insert(p.dedup_key())).collect()
}

pub fn read_pairs(path: &Path) -> Result<Vec<RankingPair>> {
    read_utf8(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, n + 1, e.to_string())))
        .collect()
}

pub fn write_pairs(path: &Path, pairs: &[RankingPair]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for p in pairs {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementEntry {
    pub ac1: f64,
    /// Fraction of non-tie judgments preferring the reference.
    pub pct_ref: f64,
    pub n: usize,
}

impl AgreementEntry {
    pub fn retainable(&self, tau: f64) -> bool {
        self.ac1 >= tau && self.pct_ref > 0.5
    }
}

/// Agreement statistics per (reference form, system form).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AgreementTable(pub BTreeMap<(String, String), AgreementEntry>);

const TABLE_HEADER: &str = "ref_form\tsys_form\tac1\tpct_ref\tn";

impl AgreementTable {
    pub fn get(&self, ref_form: &str, sys_form: &str) -> Option<&AgreementEntry> {
        self.0.get(&(ref_form.to_string(), sys_form.to_string()))
    }

    pub fn insert(&mut self, ref_form: &str, sys_form: &str, entry: AgreementEntry) {
        self.0.insert((ref_form.to_string(), sys_form.to_string()), entry);
    }

    pub fn to_tsv(&self) -> String {
        let mut out = format!("{TABLE_HEADER}\n");
        for ((r, s), e) in &self.0 {
            out.push_str(&format!("{r}\t{s}\t{}\t{}\t{}\n", e.ac1, e.pct_ref, e.n));
        }
        out
    }

    /// Parses the TSV form; the header line is optional.
    pub fn parse_tsv(text: &str, origin: &Path) -> Result<Self> {
        let mut table = AgreementTable::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() || (n == 0 && line == TABLE_HEADER) {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 5 {
                return Err(Error::parse(origin, n + 1, "expected 5 tab-separated columns"));
            }
            let bad = |what: &str| Error::parse(origin, n + 1, format!("bad {what}"));
            let entry = AgreementEntry {
                ac1: cols[2].parse().map_err(|_| bad("ac1"))?,
                pct_ref: cols[3].parse().map_err(|_| bad("pct_ref"))?,
                n: cols[4].parse().map_err(|_| bad("n"))?,
            };
            if !(-1.0..=1.0).contains(&entry.ac1) || !(0.0..=1.0).contains(&entry.pct_ref) {
                return Err(Error::parse(origin, n + 1, "coefficient or fraction out of range"));
            }
            table.insert(cols[0], cols[1], entry);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_tsv(&read_utf8(path)?, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// Form pairs missing from the table disqualify the pair.
    Strict,
    /// Form pairs missing from the table are ignored.
    Permissive,
}

/// Keeps pairs whose every mismatch form pair has agreement ≥ `tau` and a
/// majority preferring the reference.
pub fn filter_pairs(
    pairs: &[RankingPair],
    table: &AgreementTable,
    tau: f64,
    mode: FilterMode,
) -> Result<Vec<RankingPair>> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::Invalid(format!("threshold must be in [0,1], got {tau}")));
    }
    Ok(pairs
        .iter()
        .filter(|p| {
            p.mismatch_forms.iter().all(|(r, s)| match table.get(r, s) {
                Some(e) => e.retainable(tau),
                None => mode == FilterMode::Permissive,
            })
        })
        .cloned()
        .collect())
}
