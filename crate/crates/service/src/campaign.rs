//! Campaigns and blinded task rendering.
//!
//! Presentation order and the A/B assignment are pure functions of the
//! campaign seed, the annotator id and the item id, so a restarted service
//! serves exactly what it served before.

use std::collections::HashSet;

use anaphora_core::corpus::tokenize;
use anaphora_core::metrics::Role;
use anaphora_core::miner::RankingPair;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::CampaignConfig;
use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Campaign {
    pub id: String,
    pub config: CampaignConfig,
    /// The sampled items, in file order.
    pub pairs: Vec<RankingPair>,
}

/// Half-open range of Unicode scalar values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Candidate {
    pub text: String,
    pub highlight: CharSpan,
}

/// What an annotator sees for one item. Nothing in it says which candidate
/// is the reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Task {
    pub item_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    /// Preceding sentences, oldest first.
    pub context: Vec<String>,
    pub candidate_a: Candidate,
    pub candidate_b: Candidate,
    /// Index of the bold sentence in `context` followed by the candidate.
    pub bold_sentence: usize,
    /// 0-based position of this item in the annotator's order.
    pub position: usize,
    pub total: usize,
}

pub(crate) fn valid_id(id: &str) -> bool {
    !id.is_empty() && id.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_' || b == b'.') && !id.starts_with('.')
}

/// First eight bytes of SHA-256 over the seed and length-prefixed parts.
fn digest(seed: u64, parts: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    for p in parts {
        h.update((p.len() as u64).to_le_bytes());
        h.update(p.as_bytes());
    }
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("sha256 is 32 bytes"))
}

type ByteSpan = (usize, usize);

/// Byte span of the single pronoun substitution, taken from the miner's
/// spans when present and from the token difference otherwise.
fn mismatch_spans(pair: &RankingPair) -> std::result::Result<(ByteSpan, ByteSpan), String> {
    if let [hs] = pair.highlight_spans.as_slice() {
        return Ok((hs.reference, hs.sys));
    }
    if !pair.highlight_spans.is_empty() {
        return Err(format!("{} highlight spans", pair.highlight_spans.len()));
    }
    let (r, s) = (tokenize(&pair.reference), tokenize(&pair.sys));
    if r.len() != s.len() {
        return Err("candidates differ in length and carry no highlight span".into());
    }
    let diffs: Vec<usize> = (0..r.len()).filter(|&i| r[i].lower != s[i].lower).collect();
    match diffs.as_slice() {
        [i] => Ok((r[*i].span, s[*i].span)),
        _ => Err(format!("{} differing tokens and no highlight span", diffs.len())),
    }
}

fn char_span(text: &str, (start, end): (usize, usize)) -> std::result::Result<CharSpan, String> {
    if start >= end || text.get(start..end).is_none() {
        return Err(format!("span {start}..{end} does not fit `{text}`"));
    }
    Ok(CharSpan { start: text[..start].chars().count(), end: text[..end].chars().count() })
}

fn highlights(pair: &RankingPair) -> std::result::Result<(CharSpan, CharSpan), String> {
    let (r, s) = mismatch_spans(pair)?;
    Ok((char_span(&pair.reference, r)?, char_span(&pair.sys, s)?))
}

impl Campaign {
    /// Validates the pairs and draws the item sample.
    pub fn create(id: &str, pairs: Vec<RankingPair>, config: CampaignConfig) -> Result<Self> {
        let invalid = |m: String| Err(ServiceError::InvalidCampaign(m));
        if !valid_id(id) {
            return invalid(format!("campaign id `{id}` must be letters, digits, '-', '_' or '.'"));
        }
        if pairs.is_empty() {
            return invalid("the pairs file holds no pairs".into());
        }
        let multi: Vec<&str> = pairs.iter().filter(|p| p.mismatch_forms.len() != 1).map(|p| p.id.as_str()).collect();
        if !multi.is_empty() {
            return invalid(format!("pairs without exactly one mismatch: {}", multi.join(", ")));
        }
        let mut seen = HashSet::new();
        if let Some(dup) = pairs.iter().find(|p| !seen.insert(p.id.as_str())) {
            return invalid(format!("duplicate item id `{}`", dup.id));
        }
        let bad: Vec<String> =
            pairs.iter().filter_map(|p| highlights(p).err().map(|e| format!("{} ({e})", p.id))).collect();
        if !bad.is_empty() {
            return invalid(format!("pairs without a usable pronoun span: {}", bad.join(", ")));
        }
        if config.annotators.is_empty() {
            return invalid("no annotators registered".into());
        }
        let mut names = HashSet::new();
        for a in &config.annotators {
            if !valid_id(a) || !names.insert(a) {
                return invalid(format!("bad or repeated annotator id `{a}`"));
            }
        }
        let pairs = match config.sample_size {
            Some(0) => return invalid("sample_size must be positive".into()),
            Some(n) if n > pairs.len() => {
                return invalid(format!("sample_size {n} exceeds the {} available pairs", pairs.len()))
            }
            Some(n) => {
                let mut keys: Vec<(u64, usize)> =
                    pairs.iter().enumerate().map(|(i, p)| (digest(config.seed, &["sample", &p.id]), i)).collect();
                keys.sort();
                let mut keep: Vec<usize> = keys[..n].iter().map(|&(_, i)| i).collect();
                keep.sort_unstable();
                keep.into_iter().map(|i| pairs[i].clone()).collect()
            }
            None => pairs,
        };
        Ok(Campaign { id: id.to_string(), config, pairs })
    }

    pub fn has_annotator(&self, annotator: &str) -> bool {
        self.config.annotators.iter().any(|a| a == annotator)
    }

    /// Item indices in the order `annotator` sees them.
    pub fn order(&self, annotator: &str) -> Vec<usize> {
        let mut keys: Vec<(u64, &str, usize)> = self
            .pairs
            .iter()
            .enumerate()
            .map(|(i, p)| (digest(self.config.seed, &["order", annotator, &p.id]), p.id.as_str(), i))
            .collect();
        keys.sort();
        keys.into_iter().map(|(_, _, i)| i).collect()
    }

    /// Roles shown as (A, B) to `annotator` for `item_id`.
    pub fn displayed_order(&self, annotator: &str, item_id: &str) -> (Role, Role) {
        if digest(self.config.seed, &["ab", annotator, item_id]) & 1 == 0 {
            (Role::Reference, Role::Noisy)
        } else {
            (Role::Noisy, Role::Reference)
        }
    }

    /// The blinded task for item `index` at `position` in the annotator's order.
    pub fn render(&self, annotator: &str, index: usize, position: usize) -> Task {
        let pair = &self.pairs[index];
        let (rh, sh) = highlights(pair).expect("spans are checked when the campaign is created");
        let reference = Candidate { text: pair.reference.clone(), highlight: rh };
        let noisy = Candidate { text: pair.sys.clone(), highlight: sh };
        let (candidate_a, candidate_b) = match self.displayed_order(annotator, &pair.id) {
            (Role::Reference, _) => (reference, noisy),
            _ => (noisy, reference),
        };
        let k = self.config.context_k;
        let context = pair.ref_context[pair.ref_context.len().saturating_sub(k)..].to_vec();
        Task {
            item_id: pair.id.clone(),
            source: if self.config.show_source { pair.source_text.clone() } else { None },
            bold_sentence: context.len(),
            context,
            candidate_a,
            candidate_b,
            position,
            total: self.pairs.len(),
        }
    }
}
