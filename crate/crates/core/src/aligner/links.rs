use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{read_utf8, Error, Result};

/// Links `(i, j)` from source position `i` to target position `j`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct LinkSet(BTreeSet<(usize, usize)>);

impl LinkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, i: usize, j: usize) -> bool {
        self.0.insert((i, j))
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.0.contains(&(i, j))
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Swaps the roles of source and target.
    pub fn transposed(&self) -> LinkSet {
        self.iter().map(|(i, j)| (j, i)).collect()
    }

    pub fn intersection(&self, other: &LinkSet) -> LinkSet {
        LinkSet(self.0.intersection(&other.0).copied().collect())
    }

    pub fn union(&self, other: &LinkSet) -> LinkSet {
        LinkSet(self.0.union(&other.0).copied().collect())
    }

    pub fn is_subset(&self, other: &LinkSet) -> bool {
        self.0.is_subset(&other.0)
    }

    /// Checks every link against the sentence lengths.
    pub fn validate(&self, source_len: usize, target_len: usize) -> Result<()> {
        for (i, j) in self.iter() {
            if i >= source_len || j >= target_len {
                return Err(Error::Invalid(format!(
                    "link {i}-{j} outside a {source_len}x{target_len} sentence pair"
                )));
            }
        }
        Ok(())
    }
}

impl FromIterator<(usize, usize)> for LinkSet {
    fn from_iter<T: IntoIterator<Item = (usize, usize)>>(iter: T) -> Self {
        LinkSet(iter.into_iter().collect())
    }
}

/// Pharaoh format: space-separated `i-j` links.
impl fmt::Display for LinkSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (n, (i, j)) in self.iter().enumerate() {
            if n > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{i}-{j}")?;
        }
        Ok(())
    }
}

impl FromStr for LinkSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let mut set = LinkSet::new();
        for link in s.split_whitespace() {
            let (i, j) = link
                .split_once('-')
                .ok_or_else(|| format!("malformed link `{link}`"))?;
            let i = i.parse().map_err(|_| format!("malformed link `{link}`"))?;
            let j = j.parse().map_err(|_| format!("malformed link `{link}`"))?;
            if !set.insert(i, j) {
                return Err(format!("duplicate link `{link}`"));
            }
        }
        Ok(set)
    }
}

pub fn read_pharaoh(path: &Path) -> Result<Vec<LinkSet>> {
    read_utf8(path)?
        .lines()
        .enumerate()
        .map(|(n, l)| l.trim_end_matches('\r').parse().map_err(|m: String| Error::parse(path, n + 1, m)))
        .collect()
}

pub fn write_pharaoh(path: &Path, links: &[LinkSet]) -> Result<()> {
    let mut out = String::new();
    for l in links {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
