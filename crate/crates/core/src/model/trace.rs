use std::path::Path;

use crate::error::{read_utf8, Error, Result};
use crate::numerics::Tensor2;

/// Attention weights of each pronoun slot over the context and sentence tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionTrace {
    /// M × tokens; masked rows are zero.
    pub weights: Tensor2,
    pub tokens: Vec<String>,
    /// Surface of each unmasked slot's pronoun.
    pub slots: Vec<String>,
    pub mask: Vec<bool>,
}

impl AttentionTrace {
    /// The same trace with masked rows removed.
    pub fn compact(&self) -> AttentionTrace {
        let keep: Vec<usize> = (0..self.mask.len()).filter(|&i| self.mask[i]).collect();
        AttentionTrace {
            weights: self.weights.gather_rows(&keep),
            tokens: self.tokens.clone(),
            slots: self.slots.clone(),
            mask: vec![true; keep.len()],
        }
    }

    /// Header row of token surfaces, then `slot_form<TAB>w1<TAB>…` per
    /// unmasked slot.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("slot");
        for t in &self.tokens {
            out.push('\t');
            out.push_str(t);
        }
        out.push('\n');
        let rows = (0..self.mask.len()).filter(|&i| self.mask[i]);
        for (form, i) in self.slots.iter().zip(rows) {
            out.push_str(form);
            for w in self.weights.row(i) {
                out.push('\t');
                out.push_str(&w.to_string());
            }
            out.push('\n');
        }
        out
    }
}

pub fn export_attention(trace: &AttentionTrace, path: &Path) -> Result<()> {
    std::fs::write(path, trace.to_tsv()).map_err(|e| Error::io(path, e))
}

/// Reads an exported trace; the result is in compact form.
pub fn parse_attention(path: &Path) -> Result<AttentionTrace> {
    let text = read_utf8(path)?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::parse(path, 1, "empty attention file"))?;
    let mut cols = header.split('\t');
    if cols.next() != Some("slot") {
        return Err(Error::parse(path, 1, "header must start with `slot`"));
    }
    let tokens: Vec<String> = cols.map(str::to_string).collect();
    let mut slots = Vec::new();
    let mut values = Vec::new();
    for (n, line) in lines.enumerate() {
        let mut cols = line.split('\t');
        slots.push(cols.next().unwrap_or_default().to_string());
        let row: Vec<f64> = cols
            .map(|c| c.parse().map_err(|_| Error::parse(path, n + 2, format!("bad weight `{c}`"))))
            .collect::<Result<_>>()?;
        if row.len() != tokens.len() {
            return Err(Error::parse(path, n + 2, format!("{} weights for {} tokens", row.len(), tokens.len())));
        }
        values.extend(row);
    }
    Ok(AttentionTrace {
        weights: Tensor2::from_vec(slots.len(), tokens.len(), values)?,
        tokens,
        mask: vec![true; slots.len()],
        slots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell() {
        let t = AttentionTrace {
            weights: Tensor2::row_vector(vec![1.0]),
            tokens: vec!["it".into()],
            slots: vec!["it".into()],
            mask: vec![true],
        };
        assert_eq!(t.to_tsv(), "slot\tit\nit\t1\n");
    }

    #[test]
    fn round_trip_drops_masked_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.tsv");
        let weights = Tensor2::from_rows(&[vec![0.1, 0.2, 0.7], vec![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], vec![0.0; 3]]).unwrap();
        let t = AttentionTrace {
            weights,
            tokens: vec!["He".into(), "saw".into(), "her".into()],
            slots: vec!["He".into(), "her".into()],
            mask: vec![true, true, false],
        };
        export_attention(&t, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(parse_attention(&path).unwrap(), t.compact());
    }
}
