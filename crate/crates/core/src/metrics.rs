//! Agreement statistics over human pairwise judgments.
//!
//! AC1 follows Gwet's multi-rater formulation (Gwet 2008, "Computing
//! inter-rater reliability and its variance in the presence of high
//! agreement"): with `r_iq` raters putting item `i` in category `q` and
//! `r_i` raters on item `i`,
//!
//! ```text
//! p_a = mean_i Σ_q r_iq (r_iq − 1) / (r_i (r_i − 1))
//! π_q = mean_i r_iq / r_i
//! p_e = Σ_q π_q (1 − π_q) / (Q − 1)
//! AC1 = (p_a − p_e) / (1 − p_e)
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{read_utf8, Error, Result};
use crate::miner::{AgreementEntry, AgreementTable, RankingPair};
use crate::trainer::{form_key, EvalReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
    #[serde(rename = "tie")]
    Tie,
    #[serde(rename = "neither")]
    Neither,
    #[serde(rename = "invalid")]
    Invalid,
}

impl std::str::FromStr for Choice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A" => Ok(Choice::A),
            "B" => Ok(Choice::B),
            "tie" => Ok(Choice::Tie),
            "neither" => Ok(Choice::Neither),
            "invalid" => Ok(Choice::Invalid),
            other => Err(format!("unknown choice `{other}`")),
        }
    }
}

/// Which candidate a display position held.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Reference,
    Noisy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgmentRecord {
    pub item_id: String,
    pub annotator_id: String,
    /// Roles shown as (A, B).
    #[serde(default)]
    pub displayed_order: Option<(Role, Role)>,
    pub choice: Choice,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    ReferenceBetter,
    NoisyBetter,
    Tie,
}

impl Category {
    fn index(self) -> usize {
        self as usize
    }
}

/// Per-item category votes after un-blinding and exclusions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Assignments {
    /// item → annotator → category
    pub items: BTreeMap<String, BTreeMap<String, Category>>,
    /// Items dropped because some annotator chose "neither".
    pub excluded_neither: usize,
    /// Items dropped because some annotator chose "invalid".
    pub excluded_invalid: usize,
}

impl Assignments {
    pub fn annotators(&self) -> BTreeSet<&str> {
        self.items.values().flat_map(|m| m.keys().map(String::as_str)).collect()
    }

    /// Items where at least two annotators voted.
    pub fn rated_items(&self) -> impl Iterator<Item = (&String, &BTreeMap<String, Category>)> {
        self.items.iter().filter(|(_, v)| v.len() >= 2)
    }
}

/// Maps A/B choices back to reference/noisy. The last record per
/// (item, annotator) wins; items with any neither/invalid vote are dropped.
pub fn normalize_judgments(records: &[JudgmentRecord]) -> Result<Assignments> {
    let mut latest: BTreeMap<(&str, &str), &JudgmentRecord> = BTreeMap::new();
    for r in records {
        latest.insert((&r.item_id, &r.annotator_id), r);
    }
    let mut out = Assignments::default();
    let mut neither = HashSet::new();
    let mut invalid = HashSet::new();
    for ((item, annotator), r) in latest {
        let (a, b) = r
            .displayed_order
            .ok_or_else(|| Error::Invalid(format!("judgment on {item} by {annotator} has no displayed order")))?;
        if a == b {
            return Err(Error::Invalid(format!("judgment on {item} shows the same candidate twice")));
        }
        let as_cat = |role: Role| match role {
            Role::Reference => Category::ReferenceBetter,
            Role::Noisy => Category::NoisyBetter,
        };
        let cat = match r.choice {
            Choice::A => as_cat(a),
            Choice::B => as_cat(b),
            Choice::Tie => Category::Tie,
            Choice::Neither => {
                neither.insert(item);
                continue;
            }
            Choice::Invalid => {
                invalid.insert(item);
                continue;
            }
        };
        out.items.entry(item.to_string()).or_default().insert(annotator.to_string(), cat);
    }
    for item in neither.iter().chain(&invalid) {
        out.items.remove(*item);
    }
    out.excluded_neither = neither.len();
    out.excluded_invalid = invalid.len();
    Ok(out)
}

/// AC1 over items given as lists of category indices in `0..q`, one per rater.
pub fn gwet_ac1(items: &[Vec<usize>], q: usize) -> Result<f64> {
    if q < 2 {
        return Err(Error::Invalid("AC1 needs at least two categories".into()));
    }
    if items.is_empty() {
        return Err(Error::InsufficientRaters("no rated items".into()));
    }
    let n = items.len() as f64;
    let mut pa = 0.0;
    let mut pi = vec![0.0; q];
    for (i, votes) in items.iter().enumerate() {
        if votes.len() < 2 {
            return Err(Error::InsufficientRaters(format!("item {i} has {} rating(s)", votes.len())));
        }
        let mut counts = vec![0usize; q];
        for &c in votes {
            if c >= q {
                return Err(Error::OutOfRange { index: c, len: q });
            }
            counts[c] += 1;
        }
        let r = votes.len() as f64;
        pa += counts.iter().map(|&k| (k * k.saturating_sub(1)) as f64).sum::<f64>() / (r * (r - 1.0));
        for (p, &k) in pi.iter_mut().zip(&counts) {
            *p += k as f64 / r;
        }
    }
    pa /= n;
    let pe = pi.iter().map(|p| (p / n) * (1.0 - p / n)).sum::<f64>() / (q - 1) as f64;
    if (1.0 - pe).abs() < 1e-15 {
        return Err(Error::DegenerateAgreement);
    }
    Ok((pa - pe) / (1.0 - pe))
}

fn category_table<'a>(items: impl Iterator<Item = &'a BTreeMap<String, Category>>, drop_ties: bool) -> Vec<Vec<usize>> {
    items
        .filter(|votes| votes.len() >= 2 && !(drop_ties && votes.values().any(|c| *c == Category::Tie)))
        .map(|votes| votes.values().map(|c| c.index()).collect())
        .collect()
}

/// Mean over annotators of the share of their non-tie votes for the reference.
pub fn avg_pct_ref(assignments: &Assignments) -> Result<f64> {
    let mut per: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for votes in assignments.items.values() {
        for (a, c) in votes {
            let e = per.entry(a).or_default();
            match c {
                Category::ReferenceBetter => {
                    e.0 += 1;
                    e.1 += 1;
                }
                Category::NoisyBetter => e.1 += 1,
                Category::Tie => {}
            }
        }
    }
    let fracs: Vec<f64> = per.values().filter(|(_, n)| *n > 0).map(|(r, n)| *r as f64 / *n as f64).collect();
    if fracs.is_empty() {
        return Err(Error::InsufficientRaters("no annotator has a non-tie judgment".into()));
    }
    Ok(fracs.iter().sum::<f64>() / fracs.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub ac1_incl_ties: f64,
    /// Absent when every rated item has a tie vote.
    pub ac1_excl_ties: Option<f64>,
    pub avg_pct_ref: f64,
    pub n_items: usize,
    pub n_items_excl_ties: usize,
    pub n_annotators: usize,
    pub excluded_neither: usize,
    pub excluded_invalid: usize,
}

/// Table-level agreement over items with at least two votes.
pub fn agreement_report(assignments: &Assignments) -> Result<AgreementReport> {
    let incl = category_table(assignments.items.values(), false);
    if assignments.annotators().len() < 2 || incl.is_empty() {
        return Err(Error::InsufficientRaters(
            "need two annotators with at least one item in common".into(),
        ));
    }
    let excl = category_table(assignments.items.values(), true);
    Ok(AgreementReport {
        ac1_incl_ties: gwet_ac1(&incl, 3)?,
        ac1_excl_ties: if excl.is_empty() { None } else { Some(gwet_ac1(&excl, 2)?) },
        avg_pct_ref: avg_pct_ref(assignments)?,
        n_items: incl.len(),
        n_items_excl_ties: excl.len(),
        n_annotators: assignments.annotators().len(),
        excluded_neither: assignments.excluded_neither,
        excluded_invalid: assignments.excluded_invalid,
    })
}

/// AC1 (ties included) and reference preference per (ref_form, sys_form),
/// over items with at least two votes.
pub fn agreement_by_pronoun_pair(
    assignments: &Assignments,
    forms: &HashMap<String, (String, String)>,
) -> Result<AgreementTable> {
    let mut groups: BTreeMap<&(String, String), Vec<&BTreeMap<String, Category>>> = BTreeMap::new();
    for (item, votes) in assignments.rated_items() {
        let key = forms
            .get(item)
            .ok_or_else(|| Error::Invalid(format!("no pronoun forms known for item {item}")))?;
        groups.entry(key).or_default().push(votes);
    }
    let mut table = AgreementTable::default();
    for ((r, s), items) in groups {
        let ac1 = gwet_ac1(&category_table(items.iter().copied(), false), 3)?;
        let (refs, non_tie) = items.iter().flat_map(|v| v.values()).fold((0, 0), |(r, n), c| match c {
            Category::ReferenceBetter => (r + 1, n + 1),
            Category::NoisyBetter => (r, n + 1),
            Category::Tie => (r, n),
        });
        let pct_ref = if non_tie == 0 { 0.0 } else { refs as f64 / non_tie as f64 };
        table.insert(r, s, AgreementEntry { ac1, pct_ref, n: items.len() });
    }
    Ok(table)
}

/// Item id → mismatch forms, for single-mismatch pairs.
pub fn forms_by_item(pairs: &[RankingPair]) -> HashMap<String, (String, String)> {
    pairs
        .iter()
        .filter_map(|p| p.mismatch_forms.first().map(|f| (p.id.clone(), f.clone())))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairErrorRow {
    pub ref_form: String,
    pub sys_form: String,
    pub count: usize,
    pub accuracy: f64,
    pub seen_in_training: bool,
}

/// Model accuracy per mismatch form pair, flagged by whether the form pair
/// occurs in the training pairs.
pub fn pronoun_pair_error_report(report: &EvalReport, train: &[RankingPair]) -> Vec<PairErrorRow> {
    let seen: HashSet<String> = train
        .iter()
        .flat_map(|p| p.mismatch_forms.iter().map(|(r, s)| form_key(r, s)))
        .collect();
    report
        .per_pair
        .iter()
        .map(|(key, acc)| {
            let (r, s) = key.split_once(':').unwrap_or((key, ""));
            PairErrorRow {
                ref_form: r.to_string(),
                sys_form: s.to_string(),
                count: acc.n,
                accuracy: acc.accuracy(),
                seen_in_training: seen.contains(key),
            }
        })
        .collect()
}

pub fn error_report_tsv(rows: &[PairErrorRow]) -> String {
    let mut out = String::from("ref_form\tsys_form\tcount\taccuracy\tseen_in_training\n");
    for r in rows {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            r.ref_form, r.sys_form, r.count, r.accuracy, r.seen_in_training
        ));
    }
    out
}

pub fn read_judgments(path: &Path) -> Result<Vec<JudgmentRecord>> {
    read_utf8(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| serde_json::from_str(l).map_err(|e| Error::parse(path, n + 1, e.to_string())))
        .collect()
}

pub fn write_judgments(path: &Path, records: &[JudgmentRecord]) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(|e| Error::io(path, e))?);
    for r in records {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    f.flush().map_err(|e| Error::io(path, e))
}
