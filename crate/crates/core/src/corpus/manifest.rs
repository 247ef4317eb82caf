//! Test-suite manifest: per source language, which years are covered and how
//! many distinct source contexts the suite holds.
//!
//! Suite layout:
//!
//! ```text
//! <root>/<Language>/<year>.txt
//! ```
//!
//! Each year file holds one source context per line (a source sentence with
//! its preceding sentences, serialized on one line). Blank lines are ignored,
//! files whose stem is not a four-digit year are ignored, and a context that
//! occurs in several files is counted once.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use crate::error::{read_utf8, Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestRow {
    pub language: String,
    pub years: Vec<u16>,
    pub unique_source_contexts: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TestSuiteManifest {
    pub rows: Vec<ManifestRow>,
}

const HEADER: &str = "language\tyears\tunique_source_contexts";

fn year_of(path: &Path) -> Option<u16> {
    let stem = path.file_stem()?.to_str()?;
    if stem.len() == 4 && stem.bytes().all(|b| b.is_ascii_digit()) {
        stem.parse().ok()
    } else {
        None
    }
}

pub fn build_manifest(suite_root: &Path) -> Result<TestSuiteManifest> {
    let read_dir = std::fs::read_dir(suite_root).map_err(|e| Error::io(suite_root, e))?;
    let mut languages: BTreeMap<String, std::path::PathBuf> = BTreeMap::new();
    let mut seen_folded = BTreeSet::new();
    for entry in read_dir {
        let entry = entry.map_err(|e| Error::io(suite_root, e))?;
        let path = entry.path();
        if !path.is_dir() {
            continue;
        }
        let name = entry.file_name().to_string_lossy().into_owned();
        if !seen_folded.insert(name.to_lowercase()) {
            return Err(Error::Invalid(format!("duplicated language directory `{name}`")));
        }
        languages.insert(name, path);
    }

    let mut rows = Vec::new();
    for (language, dir) in languages {
        let mut files: Vec<(u16, std::path::PathBuf)> = std::fs::read_dir(&dir)
            .map_err(|e| Error::io(&dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .filter_map(|p| year_of(&p).map(|y| (y, p)))
            .collect();
        if files.is_empty() {
            return Err(Error::Invalid(format!(
                "language directory `{language}` has no year files"
            )));
        }
        files.sort();
        let mut contexts = HashSet::new();
        for (_, file) in &files {
            for line in read_utf8(file)?.lines() {
                let line = line.trim();
                if !line.is_empty() {
                    contexts.insert(line.to_string());
                }
            }
        }
        let mut years: Vec<u16> = files.iter().map(|(y, _)| *y).collect();
        years.dedup();
        rows.push(ManifestRow {
            language,
            years,
            unique_source_contexts: contexts.len(),
        });
    }
    Ok(TestSuiteManifest { rows })
}

impl TestSuiteManifest {
    pub fn to_tsv(&self) -> String {
        let mut out = String::from(HEADER);
        out.push('\n');
        for r in &self.rows {
            let years: Vec<String> = r.years.iter().map(u16::to_string).collect();
            out.push_str(&format!(
                "{}\t{}\t{}\n",
                r.language,
                years.join(","),
                r.unique_source_contexts
            ));
        }
        out
    }

    pub fn parse_tsv(text: &str, origin: &Path) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end_matches('\r') == HEADER => {}
            _ => return Err(Error::parse(origin, 1, format!("expected header `{HEADER}`"))),
        }
        let mut rows = Vec::new();
        let mut seen = BTreeSet::new();
        for (n, line) in lines {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(origin, n + 1, "expected 3 tab-separated columns"));
            }
            if !seen.insert(cols[0].to_string()) {
                return Err(Error::parse(origin, n + 1, format!("duplicate language `{}`", cols[0])));
            }
            let years = if cols[1].is_empty() {
                Vec::new()
            } else {
                cols[1]
                    .split(',')
                    .map(|y| y.parse::<u16>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| Error::parse(origin, n + 1, format!("bad year list: {e}")))?
            };
            let count = cols[2]
                .parse()
                .map_err(|e| Error::parse(origin, n + 1, format!("bad count: {e}")))?;
            rows.push(ManifestRow {
                language: cols[0].to_string(),
                years,
                unique_source_contexts: count,
            });
        }
        Ok(TestSuiteManifest { rows })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse_tsv(&read_utf8(path)?, path)
    }
}
