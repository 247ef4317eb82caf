//! Binary checkpoints: magic, format version, config JSON, vocabulary and
//! named little-endian f64 blocks.

use std::path::Path;

use super::{Model, ModelConfig, ModelParameters, Vocab};
use crate::error::{Error, Result};
use crate::numerics::{BiLstmParams, LstmParams, Tensor2};

const MAGIC: &[u8; 8] = b"APEVCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    out.extend_from_slice(&(b.len() as u64).to_le_bytes());
    out.extend_from_slice(b);
}

pub fn to_bytes(model: &Model) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    put_bytes(&mut out, &serde_json::to_vec(&model.config)?);
    put_bytes(&mut out, &serde_json::to_vec(model.vocab.words())?);
    let blocks = model.params.blocks();
    out.extend_from_slice(&(blocks.len() as u32).to_le_bytes());
    for (name, t) in blocks {
        put_bytes(&mut out, name.as_bytes());
        out.extend_from_slice(&(t.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(t.cols() as u64).to_le_bytes());
        for v in t.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Checkpoint(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<usize> {
        usize::try_from(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
            .map_err(|_| Error::Checkpoint("length overflow".into()))
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.u64()?;
        self.take(n)
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<Model> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file".into()));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let config: ModelConfig = serde_json::from_slice(r.bytes()?)?;
    let words: Vec<String> = serde_json::from_slice(r.bytes()?)?;
    if words.first().map(String::as_str) != Some(super::UNK) {
        return Err(Error::Checkpoint("vocabulary must start with the unknown word".into()));
    }
    let vocab = Vocab::from_words(&words[1..]);
    if vocab.len() != words.len() {
        return Err(Error::Checkpoint("duplicate vocabulary entries".into()));
    }
    let count = r.u32()? as usize;
    let mut blocks = std::collections::HashMap::new();
    for _ in 0..count {
        let name = String::from_utf8(r.bytes()?.to_vec()).map_err(|_| Error::Checkpoint("block name not UTF-8".into()))?;
        let rows = r.u64()?;
        let cols = r.u64()?;
        let n = rows.checked_mul(cols).ok_or_else(|| Error::Checkpoint("block size overflow".into()))?;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("block size overflow".into()))?)?;
        let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        if blocks.insert(name.clone(), Tensor2::from_vec(rows, cols, values)?).is_some() {
            return Err(Error::Checkpoint(format!("duplicate block `{name}`")));
        }
    }
    if r.pos != buf.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    let mut take = |name: &str| blocks.remove(name).ok_or_else(|| Error::Checkpoint(format!("missing block `{name}`")));
    let lstm = match config.encoder {
        super::Encoder::Bilstm => {
            let mut dir = |d: &str| -> Result<LstmParams> {
                Ok(LstmParams {
                    w_ih: take(&format!("lstm.{d}.w_ih"))?,
                    w_hh: take(&format!("lstm.{d}.w_hh"))?,
                    bias: take(&format!("lstm.{d}.bias"))?,
                })
            };
            Some(BiLstmParams { fwd: dir("fwd")?, bwd: dir("bwd")? })
        }
        super::Encoder::Embeddings => None,
    };
    let params = ModelParameters {
        embeddings: take("embeddings")?,
        lstm,
        ln_gain: take("ln.gain")?,
        ln_bias: take("ln.bias")?,
        z: take("z")?,
        w: take("w")?,
    };
    if let Some(extra) = blocks.keys().next() {
        return Err(Error::Checkpoint(format!("unexpected block `{extra}`")));
    }
    Model::from_parts(config, vocab, params)
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    std::fs::write(path, to_bytes(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    from_bytes(&std::fs::read(path).map_err(|e| Error::io(path, e))?)
}
