//! Campaign configuration as flat `key = value` text.
//!
//! ```text
//! # lines starting with '#' are comments
//! seed = 42
//! show_source = false
//! context_k = 2
//! sample_size = 500
//! annotators = ann1, ann2, ann3
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ServiceError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub seed: u64,
    pub show_source: bool,
    pub context_k: usize,
    /// Number of pairs drawn from the file; all of them when absent.
    pub sample_size: Option<usize>,
    pub annotators: Vec<String>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig { seed: 0, show_source: false, context_k: 2, sample_size: None, annotators: vec![] }
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

impl CampaignConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = CampaignConfig::default();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| ServiceError::Config { line: n + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err(format!("expected key = value, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            let number = |v: &str| v.parse::<u64>().map_err(|_| err(format!("`{key}` needs a non-negative integer, got `{v}`")));
            match key {
                "seed" => cfg.seed = number(value)?,
                "show_source" => {
                    cfg.show_source = parse_bool(value).ok_or_else(|| err(format!("`show_source` needs true or false, got `{value}`")))?
                }
                "context_k" => cfg.context_k = number(value)? as usize,
                "sample_size" => cfg.sample_size = Some(number(value)? as usize),
                "annotators" => {
                    cfg.annotators = value.split(',').map(str::trim).filter(|a| !a.is_empty()).map(String::from).collect()
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ServiceError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "seed = {}\nshow_source = {}\ncontext_k = {}\n",
            self.seed, self.show_source, self.context_k
        );
        if let Some(n) = self.sample_size {
            out.push_str(&format!("sample_size = {n}\n"));
        }
        out.push_str(&format!("annotators = {}\n", self.annotators.join(", ")));
        out
    }
}
