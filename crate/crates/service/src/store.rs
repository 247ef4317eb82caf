//! Campaign state backed by an append-only JSON-lines journal per campaign.
//!
//! On disk, `<dir>/<id>.campaign.json` holds the campaign definition and
//! `<dir>/<id>.journal.jsonl` one entry per accepted submission. Each entry
//! is written with a single `write` and synced before the submission is
//! acknowledged; opening the store replays every journal.

use std::collections::{BTreeMap, HashMap};
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anaphora_core::metrics::{
    agreement_by_pronoun_pair, agreement_report, forms_by_item, normalize_judgments, AgreementReport, Choice,
    JudgmentRecord,
};
use serde::{Deserialize, Serialize};

use crate::campaign::{valid_id, Campaign, Task};
use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum JournalEntry {
    Judgment { record: JudgmentRecord },
    /// A resubmission; `previous` is the choice it replaced.
    Revision { record: JudgmentRecord, previous: Choice },
}

impl JournalEntry {
    pub fn record(&self) -> &JudgmentRecord {
        match self {
            JournalEntry::Judgment { record } | JournalEntry::Revision { record, .. } => record,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ack {
    pub item_id: String,
    pub choice: Choice,
    /// Set when this submission replaced an earlier one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub previous: Option<Choice>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextTask {
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    pub judged: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairAgreementRow {
    pub ref_form: String,
    pub sys_form: String,
    pub ac1: f64,
    pub pct_ref: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub report: AgreementReport,
    pub by_pronoun_pair: Vec<PairAgreementRow>,
}

struct CampaignState {
    campaign: Campaign,
    index: HashMap<String, usize>,
    orders: HashMap<String, Vec<usize>>,
    /// Latest judgment per (annotator, item).
    current: BTreeMap<(String, String), JudgmentRecord>,
    entries: Vec<JournalEntry>,
    journal_path: PathBuf,
    journal: File,
}

impl CampaignState {
    fn new(campaign: Campaign, journal_path: PathBuf) -> Result<Self> {
        let journal = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&journal_path)
            .map_err(|e| ServiceError::io(&journal_path, e))?;
        let index = campaign.pairs.iter().enumerate().map(|(i, p)| (p.id.clone(), i)).collect();
        let orders = campaign.config.annotators.iter().map(|a| (a.clone(), campaign.order(a))).collect();
        Ok(CampaignState { campaign, index, orders, current: BTreeMap::new(), entries: vec![], journal_path, journal })
    }

    fn apply(&mut self, entry: JournalEntry) {
        let r = entry.record();
        self.current.insert((r.annotator_id.clone(), r.item_id.clone()), r.clone());
        self.entries.push(entry);
    }

    fn check_ids(&self, annotator: &str, item_id: Option<&str>) -> Result<()> {
        if !self.campaign.has_annotator(annotator) {
            return Err(ServiceError::UnknownAnnotator(annotator.to_string()));
        }
        match item_id {
            Some(item) if !self.index.contains_key(item) => Err(ServiceError::UnknownItem(item.to_string())),
            _ => Ok(()),
        }
    }

    fn replay(&mut self) -> Result<()> {
        let path = self.journal_path.clone();
        let bytes = std::fs::read(&path).map_err(|e| ServiceError::io(&path, e))?;
        let complete = match bytes.iter().rposition(|&b| b == b'\n') {
            Some(p) => p + 1,
            None => 0,
        };
        if complete < bytes.len() {
            // a torn final write was never acknowledged
            log::warn!("{}: dropping {} bytes of an incomplete entry", path.display(), bytes.len() - complete);
            self.journal.set_len(complete as u64).map_err(|e| ServiceError::io(&path, e))?;
        }
        let text = std::str::from_utf8(&bytes[..complete])
            .map_err(|e| ServiceError::Journal { path: path.clone(), line: 0, message: e.to_string() })?;
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let bad = |message: String| ServiceError::Journal { path: path.clone(), line: n + 1, message };
            let entry: JournalEntry = serde_json::from_str(line).map_err(|e| bad(e.to_string()))?;
            let r = entry.record();
            self.check_ids(&r.annotator_id, Some(&r.item_id)).map_err(|e| bad(e.to_string()))?;
            self.apply(entry);
        }
        Ok(())
    }

    fn append(&mut self, entry: &JournalEntry) -> Result<()> {
        let mut line = serde_json::to_vec(entry)?;
        line.push(b'\n');
        let path = &self.journal_path;
        self.journal.write_all(&line).map_err(|e| ServiceError::io(path, e))?;
        self.journal.sync_data().map_err(|e| ServiceError::io(path, e))
    }
}

pub struct Store {
    dir: PathBuf,
    campaigns: BTreeMap<String, CampaignState>,
}

fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl Store {
    /// Opens (creating if needed) a data directory and replays its journals.
    pub fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| ServiceError::io(dir, e))?;
        let mut store = Store { dir: dir.to_path_buf(), campaigns: BTreeMap::new() };
        let mut defs: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|e| ServiceError::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.to_string_lossy().ends_with(".campaign.json"))
            .collect();
        defs.sort();
        for path in defs {
            let text = std::fs::read_to_string(&path).map_err(|e| ServiceError::io(&path, e))?;
            let campaign: Campaign = serde_json::from_str(&text)?;
            let mut state = CampaignState::new(campaign, store.journal_path_for(&path))?;
            state.replay()?;
            log::info!("campaign {}: {} journal entries", state.campaign.id, state.entries.len());
            store.campaigns.insert(state.campaign.id.clone(), state);
        }
        Ok(store)
    }

    fn journal_path_for(&self, def: &Path) -> PathBuf {
        let name = def.file_name().unwrap_or_default().to_string_lossy();
        self.dir.join(format!("{}.journal.jsonl", name.trim_end_matches(".campaign.json")))
    }

    /// Registers a campaign. Re-adding an identical definition is a no-op
    /// returning `false`; a different definition under the same id is an error.
    pub fn add_campaign(&mut self, campaign: Campaign) -> Result<bool> {
        if !valid_id(&campaign.id) {
            return Err(ServiceError::InvalidCampaign(format!("bad campaign id `{}`", campaign.id)));
        }
        if let Some(existing) = self.campaigns.get(&campaign.id) {
            return if existing.campaign == campaign {
                Ok(false)
            } else {
                Err(ServiceError::InvalidCampaign(format!(
                    "campaign `{}` already exists with a different definition",
                    campaign.id
                )))
            };
        }
        let def = self.dir.join(format!("{}.campaign.json", campaign.id));
        let tmp = self.dir.join(format!(".{}.campaign.json.tmp", campaign.id));
        let mut f = File::create(&tmp).map_err(|e| ServiceError::io(&tmp, e))?;
        f.write_all(&serde_json::to_vec_pretty(&campaign)?).map_err(|e| ServiceError::io(&tmp, e))?;
        f.sync_all().map_err(|e| ServiceError::io(&tmp, e))?;
        std::fs::rename(&tmp, &def).map_err(|e| ServiceError::io(&def, e))?;
        let state = CampaignState::new(campaign, self.journal_path_for(&def))?;
        self.campaigns.insert(state.campaign.id.clone(), state);
        Ok(true)
    }

    fn state(&self, id: &str) -> Result<&CampaignState> {
        self.campaigns.get(id).ok_or_else(|| ServiceError::UnknownCampaign(id.to_string()))
    }

    pub fn campaign(&self, id: &str) -> Result<&Campaign> {
        self.state(id).map(|s| &s.campaign)
    }

    pub fn campaign_ids(&self) -> impl Iterator<Item = &str> {
        self.campaigns.keys().map(String::as_str)
    }

    /// The first item in the annotator's order without a judgment.
    pub fn next_task(&self, id: &str, annotator: &str) -> Result<NextTask> {
        let st = self.state(id)?;
        st.check_ids(annotator, None)?;
        let order = &st.orders[annotator];
        let total = order.len();
        let pending = |&i: &usize| !st.current.contains_key(&(annotator.to_string(), st.campaign.pairs[i].id.clone()));
        let judged = order.iter().filter(|i| !pending(i)).count();
        let task = order
            .iter()
            .position(pending)
            .map(|pos| st.campaign.render(annotator, order[pos], pos));
        Ok(NextTask { done: task.is_none(), task, judged, total })
    }

    /// Records a judgment durably. A resubmission for the same item replaces
    /// the earlier one and is journaled as a revision.
    pub fn submit(&mut self, id: &str, annotator: &str, item_id: &str, choice: &str) -> Result<Ack> {
        let st = self.campaigns.get_mut(id).ok_or_else(|| ServiceError::UnknownCampaign(id.to_string()))?;
        st.check_ids(annotator, Some(item_id))?;
        let choice: Choice = choice.parse().map_err(ServiceError::BadRequest)?;
        let record = JudgmentRecord {
            item_id: item_id.to_string(),
            annotator_id: annotator.to_string(),
            displayed_order: Some(st.campaign.displayed_order(annotator, item_id)),
            choice,
            timestamp: now_millis(),
        };
        let previous = st.current.get(&(annotator.to_string(), item_id.to_string())).map(|r| r.choice);
        let entry = match previous {
            Some(previous) => JournalEntry::Revision { record, previous },
            None => JournalEntry::Judgment { record },
        };
        st.append(&entry)?;
        st.apply(entry);
        Ok(Ack { item_id: item_id.to_string(), choice, previous })
    }

    /// Every journal entry, revisions included, in arrival order.
    pub fn entries(&self, id: &str) -> Result<&[JournalEntry]> {
        self.state(id).map(|s| s.entries.as_slice())
    }

    /// Current judgments, one per (annotator, item).
    pub fn judgments(&self, id: &str) -> Result<Vec<JudgmentRecord>> {
        Ok(self.state(id)?.current.values().cloned().collect())
    }

    /// Current judgments as JSON lines.
    pub fn export(&self, id: &str) -> Result<String> {
        let mut out = String::new();
        for r in self.judgments(id)? {
            out.push_str(&serde_json::to_string(&r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn report(&self, id: &str) -> Result<CampaignReport> {
        let st = self.state(id)?;
        let records: Vec<JudgmentRecord> = st.current.values().cloned().collect();
        let assignments = normalize_judgments(&records)?;
        let report = agreement_report(&assignments)?;
        let table = agreement_by_pronoun_pair(&assignments, &forms_by_item(&st.campaign.pairs))?;
        let by_pronoun_pair = table
            .0
            .into_iter()
            .map(|((ref_form, sys_form), e)| PairAgreementRow { ref_form, sys_form, ac1: e.ac1, pct_ref: e.pct_ref, n: e.n })
            .collect();
        Ok(CampaignReport { report, by_pronoun_pair })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::campaign::tests::fixture_pairs;
    use crate::config::CampaignConfig;

    fn campaign(n: usize) -> Campaign {
        let cfg = CampaignConfig { seed: 5, annotators: vec!["ann1".into(), "ann2".into()], ..CampaignConfig::default() };
        Campaign::create("study", fixture_pairs(n), cfg).unwrap()
    }

    #[test]
    fn walks_every_item_once() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path()).unwrap();
        assert!(store.add_campaign(campaign(7)).unwrap());
        assert!(!store.add_campaign(campaign(7)).unwrap());
        assert!(store.add_campaign(campaign(6)).is_err());
        let mut seen = vec![];
        loop {
            let next = store.next_task("study", "ann1").unwrap();
            assert_eq!(next.judged, seen.len());
            let Some(task) = next.task else { break };
            assert_eq!(task.position, seen.len());
            store.submit("study", "ann1", &task.item_id, "A").unwrap();
            seen.push(task.item_id);
        }
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 7);
        assert!(store.next_task("study", "ann1").unwrap().done);
        assert_eq!(store.next_task("study", "ann2").unwrap().judged, 0);
    }

    #[test]
    fn errors_leave_state_alone() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path()).unwrap();
        store.add_campaign(campaign(3)).unwrap();
        assert!(matches!(store.submit("study", "ann1", "p0", "C"), Err(ServiceError::BadRequest(_))));
        assert!(matches!(store.submit("study", "zed", "p0", "A"), Err(ServiceError::UnknownAnnotator(_))));
        assert!(matches!(store.submit("study", "ann1", "p9", "A"), Err(ServiceError::UnknownItem(_))));
        assert!(matches!(store.submit("other", "ann1", "p0", "A"), Err(ServiceError::UnknownCampaign(_))));
        assert!(store.entries("study").unwrap().is_empty());
        let journal = std::fs::read(dir.path().join("study.journal.jsonl")).unwrap();
        assert!(journal.is_empty());
    }

    #[test]
    fn resubmission_is_audited() {
        let dir = tempfile::tempdir().unwrap();
        let mut store = Store::open(dir.path()).unwrap();
        store.add_campaign(campaign(3)).unwrap();
        assert_eq!(store.submit("study", "ann1", "p1", "A").unwrap().previous, None);
        assert_eq!(store.submit("study", "ann1", "p1", "tie").unwrap().previous, Some(Choice::A));
        let j = store.judgments("study").unwrap();
        assert_eq!(j.len(), 1);
        assert_eq!(j[0].choice, Choice::Tie);
        assert!(matches!(store.entries("study").unwrap()[1], JournalEntry::Revision { previous: Choice::A, .. }));
    }

    #[test]
    fn replays_and_drops_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        {
            let mut store = Store::open(dir.path()).unwrap();
            store.add_campaign(campaign(4)).unwrap();
            store.submit("study", "ann1", "p0", "A").unwrap();
            store.submit("study", "ann2", "p0", "B").unwrap();
            store.submit("study", "ann2", "p0", "tie").unwrap();
        }
        let path = dir.path().join("study.journal.jsonl");
        let mut f = OpenOptions::new().append(true).open(&path).unwrap();
        f.write_all(b"{\"kind\":\"judg").unwrap();
        drop(f);
        let mut store = Store::open(dir.path()).unwrap();
        assert_eq!(store.entries("study").unwrap().len(), 3);
        assert_eq!(store.judgments("study").unwrap().len(), 2);
        store.submit("study", "ann1", "p1", "B").unwrap();
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.entries("study").unwrap().len(), 4);

        std::fs::write(&path, "not json\n").unwrap();
        assert!(matches!(Store::open(dir.path()), Err(ServiceError::Journal { line: 1, .. })));
    }
}
