//! The pronoun-focused ranking scorer: embeddings, optional BiLSTM encoder,
//! pronoun-query attention with residual and layer norm, and two bias-free
//! linear heads.

mod checkpoint;
mod embeddings;
mod trace;

pub use checkpoint::{from_bytes as checkpoint_from_bytes, load_checkpoint, save_checkpoint, to_bytes as checkpoint_bytes, CHECKPOINT_VERSION};
pub use embeddings::load_embeddings;
pub use trace::{export_attention, parse_attention, AttentionTrace};

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{pronoun_indices, tokenize, ContextWindow, PronounLexicon, SentenceRec};
use crate::error::{Error, Result};
use crate::miner::RankingPair;
use crate::numerics::{
    bilstm_backward, bilstm_forward, layer_norm_backward, layer_norm_forward, matmul, matmul_at, matmul_bt,
    softmax_rows, softmax_rows_backward, BiLstmCache, BiLstmParams, LayerNormCache, Tensor2, LN_EPS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ContextMode {
    /// No context.
    #[serde(rename = "NC")]
    Nc,
    /// Each side with its own preceding sentences.
    #[serde(rename = "RC")]
    Rc,
    /// Both sides with the reference's preceding sentences.
    #[serde(rename = "CRC")]
    Crc,
}

impl fmt::Display for ContextMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ContextMode::Nc => "NC",
            ContextMode::Rc => "RC",
            ContextMode::Crc => "CRC",
        })
    }
}

impl FromStr for ContextMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "NC" => Ok(ContextMode::Nc),
            "RC" => Ok(ContextMode::Rc),
            "CRC" => Ok(ContextMode::Crc),
            _ => Err(format!("unknown context mode `{s}` (expected NC, RC or CRC)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Encoder {
    /// K is the raw embedding rows.
    Embeddings,
    Bilstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scorer {
    Attention,
    /// Mean of the pronoun rows through the `z` head and a scalar `w`.
    Average,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d: usize,
    pub h: usize,
    pub v: usize,
    pub max_slots: usize,
    pub context_mode: ContextMode,
    pub encoder: Encoder,
    pub scorer: Scorer,
    pub margin: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            d: 32,
            h: 32,
            v: 1,
            max_slots: 12,
            context_mode: ContextMode::Nc,
            encoder: Encoder::Bilstm,
            scorer: Scorer::Attention,
            margin: 0.1,
        }
    }
}

impl ModelConfig {
    /// Raw embeddings with the averaged pronoun head.
    pub fn average_baseline(d: usize) -> Self {
        ModelConfig {
            d,
            encoder: Encoder::Embeddings,
            scorer: Scorer::Average,
            ..ModelConfig::default()
        }
    }

    /// Width of the rows of K.
    pub fn key_dim(&self) -> usize {
        match self.encoder {
            Encoder::Embeddings => self.d,
            Encoder::Bilstm => 2 * self.h,
        }
    }

    /// Length of the `w` head.
    pub fn head_len(&self) -> usize {
        match self.scorer {
            Scorer::Attention => self.max_slots,
            Scorer::Average => 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.v == 0 || self.max_slots == 0 || (self.encoder == Encoder::Bilstm && self.h == 0) {
            return Err(Error::Invalid("d, h, v and max_slots must be positive".into()));
        }
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return Err(Error::Invalid(format!("margin must be positive, got {}", self.margin)));
        }
        Ok(())
    }
}

pub const UNK: &str = "<unk>";

/// Lower-cased word list; id 0 is the unknown word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn from_words<I: IntoIterator<Item = S>, S: AsRef<str>>(words: I) -> Self {
        let mut v = Vocab { words: vec![UNK.to_string()], index: HashMap::from([(UNK.to_string(), 0)]) };
        for w in words {
            let w = w.as_ref().to_lowercase();
            if !v.index.contains_key(&w) {
                v.index.insert(w.clone(), v.words.len());
                v.words.push(w);
            }
        }
        v
    }

    /// Sorted vocabulary of every token in the given texts.
    pub fn build<'a, I: IntoIterator<Item = &'a str>>(texts: I) -> Self {
        let set: BTreeSet<String> = texts
            .into_iter()
            .flat_map(|t| tokenize(t).into_iter().map(|tok| tok.lower))
            .collect();
        Vocab::from_words(set)
    }

    pub fn from_pairs(pairs: &[RankingPair]) -> Self {
        Vocab::build(pairs.iter().flat_map(|p| {
            [p.reference.as_str(), p.sys.as_str()]
                .into_iter()
                .chain(p.ref_context.iter().map(String::as_str))
                .chain(p.sys_context.iter().map(String::as_str))
        }))
    }

    pub fn id(&self, word: &str) -> usize {
        self.index
            .get(word)
            .or_else(|| self.index.get(&word.to_lowercase()))
            .copied()
            .unwrap_or(0)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    /// v × d
    pub embeddings: Tensor2,
    pub lstm: Option<BiLstmParams>,
    /// 1 × key_dim; unused by the average scorer.
    pub ln_gain: Tensor2,
    pub ln_bias: Tensor2,
    /// 1 × key_dim
    pub z: Tensor2,
    /// 1 × head_len
    pub w: Tensor2,
}

impl ModelParameters {
    pub fn init(config: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = config.key_dim();
        let embeddings = Tensor2::uniform(config.v, config.d, 0.5, &mut rng);
        let lstm = (config.encoder == Encoder::Bilstm).then(|| BiLstmParams::init(config.d, config.h, &mut rng));
        let z = Tensor2::uniform(1, dim, 1.0 / (dim as f64).sqrt(), &mut rng);
        let w = Tensor2::uniform(1, config.head_len(), 1.0, &mut rng);
        let mut ln_gain = Tensor2::zeros(1, dim);
        ln_gain.fill(1.0);
        ModelParameters { embeddings, lstm, ln_gain, ln_bias: Tensor2::zeros(1, dim), z, w }
    }

    pub fn zeros_like(&self) -> Self {
        let z = |t: &Tensor2| Tensor2::zeros(t.rows(), t.cols());
        ModelParameters {
            embeddings: z(&self.embeddings),
            lstm: self.lstm.as_ref().map(BiLstmParams::zeros_like),
            ln_gain: z(&self.ln_gain),
            ln_bias: z(&self.ln_bias),
            z: z(&self.z),
            w: z(&self.w),
        }
    }

    /// Named blocks in a fixed order.
    pub fn blocks(&self) -> Vec<(&'static str, &Tensor2)> {
        let mut out = vec![("embeddings", &self.embeddings)];
        if let Some(l) = &self.lstm {
            out.extend([
                ("lstm.fwd.w_ih", &l.fwd.w_ih),
                ("lstm.fwd.w_hh", &l.fwd.w_hh),
                ("lstm.fwd.bias", &l.fwd.bias),
                ("lstm.bwd.w_ih", &l.bwd.w_ih),
                ("lstm.bwd.w_hh", &l.bwd.w_hh),
                ("lstm.bwd.bias", &l.bwd.bias),
            ]);
        }
        out.extend([("ln.gain", &self.ln_gain), ("ln.bias", &self.ln_bias), ("z", &self.z), ("w", &self.w)]);
        out
    }

    pub fn blocks_mut(&mut self) -> Vec<(&'static str, &mut Tensor2)> {
        let mut out = vec![("embeddings", &mut self.embeddings)];
        if let Some(l) = &mut self.lstm {
            out.extend([
                ("lstm.fwd.w_ih", &mut l.fwd.w_ih),
                ("lstm.fwd.w_hh", &mut l.fwd.w_hh),
                ("lstm.fwd.bias", &mut l.fwd.bias),
                ("lstm.bwd.w_ih", &mut l.bwd.w_ih),
                ("lstm.bwd.w_hh", &mut l.bwd.w_hh),
                ("lstm.bwd.bias", &mut l.bwd.bias),
            ]);
        }
        out.extend([
            ("ln.gain", &mut self.ln_gain),
            ("ln.bias", &mut self.ln_bias),
            ("z", &mut self.z),
            ("w", &mut self.w),
        ]);
        out
    }

    pub fn num_values(&self) -> usize {
        self.blocks().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.blocks().iter().flat_map(|(_, t)| t.as_slice().iter().copied()).collect()
    }

    pub fn assign_flat(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.num_values(), "flat parameter length");
        let mut off = 0;
        for (_, t) in self.blocks_mut() {
            let n = t.len();
            t.as_mut_slice().copy_from_slice(&values[off..off + n]);
            off += n;
        }
    }

    pub fn add_assign(&mut self, other: &ModelParameters) {
        for ((_, a), (_, b)) in self.blocks_mut().into_iter().zip(other.blocks()) {
            a.add_assign(b);
        }
    }

    pub fn scale(&mut self, s: f64) {
        for (_, t) in self.blocks_mut() {
            t.scale(s);
        }
    }

    pub fn norm(&self) -> f64 {
        self.blocks().iter().map(|(_, t)| t.sum_squares()).sum::<f64>().sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.blocks().iter().all(|(_, t)| t.is_finite())
    }

    fn check_shapes(&self, config: &ModelConfig) -> Result<()> {
        let dim = config.key_dim();
        let want = |t: &Tensor2, r: usize, c: usize, name: &str| {
            if t.shape() == (r, c) {
                Ok(())
            } else {
                Err(Error::Shape(format!("{name} is {:?}, expected ({r}, {c})", t.shape())))
            }
        };
        want(&self.embeddings, config.v, config.d, "embeddings")?;
        want(&self.ln_gain, 1, dim, "ln.gain")?;
        want(&self.ln_bias, 1, dim, "ln.bias")?;
        want(&self.z, 1, dim, "z")?;
        want(&self.w, 1, config.head_len(), "w")?;
        match (&self.lstm, config.encoder) {
            (None, Encoder::Embeddings) => Ok(()),
            (Some(l), Encoder::Bilstm) => {
                for p in [&l.fwd, &l.bwd] {
                    want(&p.w_ih, 4 * config.h, config.d, "lstm w_ih")?;
                    want(&p.w_hh, 4 * config.h, config.h, "lstm w_hh")?;
                    want(&p.bias, 1, 4 * config.h, "lstm bias")?;
                }
                Ok(())
            }
            _ => Err(Error::Shape("LSTM parameters do not match the encoder".into())),
        }
    }
}

/// One side of a comparison: context sentences, the target sentence and the
/// positions of its pronouns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScoringInput {
    pub context: Vec<Vec<String>>,
    pub sentence: Vec<String>,
    pub pronouns: Vec<usize>,
}

fn surfaces(text: &str) -> Vec<String> {
    tokenize(text).into_iter().map(|t| t.surface).collect()
}

impl ScoringInput {
    pub fn new(context: &ContextWindow, sentence: &SentenceRec, lexicon: &PronounLexicon) -> Self {
        ScoringInput {
            context: context
                .sentences
                .iter()
                .map(|s| s.tokens.iter().map(|t| t.surface.clone()).collect())
                .collect(),
            sentence: sentence.tokens.iter().map(|t| t.surface.clone()).collect(),
            pronouns: pronoun_indices(sentence, lexicon),
        }
    }

    /// Tokenizes raw texts; pronoun positions come from the lexicon.
    pub fn from_texts(context: &[String], sentence: &str, lexicon: &PronounLexicon) -> Self {
        let rec = SentenceRec::new(0, 0, sentence);
        ScoringInput {
            context: context.iter().map(|c| surfaces(c)).collect(),
            pronouns: pronoun_indices(&rec, lexicon),
            sentence: rec.tokens.into_iter().map(|t| t.surface).collect(),
        }
    }

    /// The reference and system sides of a pair under a context mode.
    pub fn from_pair(pair: &RankingPair, mode: ContextMode) -> (ScoringInput, ScoringInput) {
        let ctx = |c: &[String]| c.iter().map(|s| surfaces(s)).collect::<Vec<_>>();
        let (rc, sc) = match mode {
            ContextMode::Nc => (vec![], vec![]),
            ContextMode::Rc => (ctx(&pair.ref_context), ctx(&pair.sys_context)),
            ContextMode::Crc => (ctx(&pair.ref_context), ctx(&pair.ref_context)),
        };
        (
            ScoringInput { context: rc, sentence: surfaces(&pair.reference), pronouns: pair.ref_pronouns.clone() },
            ScoringInput { context: sc, sentence: surfaces(&pair.sys), pronouns: pair.sys_pronouns.clone() },
        )
    }

    /// Context tokens followed by sentence tokens.
    pub fn tokens(&self) -> Vec<String> {
        self.context.iter().flatten().chain(&self.sentence).cloned().collect()
    }

    pub fn sentence_offset(&self) -> usize {
        self.context.iter().map(Vec::len).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedInput {
    /// One row per context and sentence token.
    pub k: Tensor2,
    pub sentence_offset: usize,
    /// M × key_dim, zero rows beyond the pronoun count.
    pub pronoun_slots: Tensor2,
    pub slot_mask: Vec<bool>,
    pub tokens: Vec<String>,
    /// Rows of `k` feeding the unmasked slots.
    pub slot_positions: Vec<usize>,
}

impl EncodedInput {
    pub fn active_slots(&self) -> usize {
        self.slot_positions.len()
    }
}

#[derive(Debug, Clone)]
enum HeadCache {
    Attention {
        p: Tensor2,
        attn: Tensor2,
        ln: LayerNormCache,
        b: Tensor2,
        u: Vec<f64>,
    },
    Average {
        mean: Vec<f64>,
        q: f64,
    },
}

/// Everything the backward pass needs from one forward run.
#[derive(Debug, Clone)]
pub struct Forward {
    ids: Vec<usize>,
    x: Tensor2,
    lstm: Option<BiLstmCache>,
    pub enc: EncodedInput,
    head: HeadCache,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub params: ModelParameters,
}

impl Model {
    /// Fresh model with `config.v` taken from the vocabulary.
    pub fn new(mut config: ModelConfig, vocab: Vocab, seed: u64) -> Result<Self> {
        config.v = vocab.len();
        config.validate()?;
        let params = ModelParameters::init(&config, seed);
        Ok(Model { config, vocab, params })
    }

    pub fn from_parts(config: ModelConfig, vocab: Vocab, params: ModelParameters) -> Result<Self> {
        config.validate()?;
        if vocab.len() != config.v {
            return Err(Error::Shape(format!("vocabulary of {} for v = {}", vocab.len(), config.v)));
        }
        params.check_shapes(&config)?;
        Ok(Model { config, vocab, params })
    }

    fn slot_positions(&self, input: &ScoringInput) -> Result<Vec<usize>> {
        if input.pronouns.is_empty() {
            return Err(Error::Unscorable);
        }
        if let Some(&bad) = input.pronouns.iter().find(|&&i| i >= input.sentence.len()) {
            return Err(Error::OutOfRange { index: bad, len: input.sentence.len() });
        }
        let m = input.pronouns.len().min(self.config.max_slots);
        if input.pronouns.len() > m {
            log::warn!(
                "{} pronouns in `{}`; keeping the first {m}",
                input.pronouns.len(),
                input.sentence.join(" ")
            );
        }
        let off = input.sentence_offset();
        Ok(input.pronouns[..m].iter().map(|i| off + i).collect())
    }

    pub fn forward(&self, input: &ScoringInput) -> Result<Forward> {
        let positions = self.slot_positions(input)?;
        let tokens = input.tokens();
        let ids: Vec<usize> = tokens.iter().map(|t| self.vocab.id(t)).collect();
        let x = self.params.embeddings.gather_rows(&ids);
        let (k, lstm) = match &self.params.lstm {
            Some(p) => {
                let cache = bilstm_forward(&x, p)?;
                (cache.out.clone(), Some(cache))
            }
            None => (x.clone(), None),
        };
        let dim = k.cols();
        let m = positions.len();
        let mut pronoun_slots = Tensor2::zeros(self.config.max_slots, dim);
        for (s, &pos) in positions.iter().enumerate() {
            pronoun_slots.row_mut(s).copy_from_slice(k.row(pos));
        }
        let mut slot_mask = vec![false; self.config.max_slots];
        slot_mask[..m].fill(true);
        let enc = EncodedInput {
            sentence_offset: input.sentence_offset(),
            k,
            pronoun_slots,
            slot_mask,
            tokens,
            slot_positions: positions,
        };

        let w = self.params.w.as_slice();
        let z = self.params.z.as_slice();
        let (head, y) = match self.config.scorer {
            Scorer::Attention => {
                let p = enc.k.gather_rows(&enc.slot_positions);
                let scale = 1.0 / (dim as f64).sqrt();
                let mut s = matmul_bt(&p, &enc.k)?;
                s.scale(scale);
                let attn = softmax_rows(&s, None)?;
                let mut zin = matmul(&attn, &enc.k)?;
                zin.add_assign(&p);
                let (b, ln) = layer_norm_forward(&zin, self.params.ln_gain.as_slice(), self.params.ln_bias.as_slice(), LN_EPS)?;
                let u: Vec<f64> = (0..m).map(|i| b.row(i).iter().zip(z).map(|(a, c)| a * c).sum()).collect();
                let y = u.iter().zip(w).map(|(a, c)| a * c).sum();
                (HeadCache::Attention { p, attn, ln, b, u }, y)
            }
            Scorer::Average => {
                let mut mean = vec![0.0; dim];
                for &pos in &enc.slot_positions {
                    for (a, v) in mean.iter_mut().zip(enc.k.row(pos)) {
                        *a += v;
                    }
                }
                mean.iter_mut().for_each(|a| *a /= m as f64);
                let q: f64 = mean.iter().zip(z).map(|(a, c)| a * c).sum();
                let y = q * w[0];
                (HeadCache::Average { mean, q }, y)
            }
        };
        Ok(Forward { ids, x, lstm, enc, head, y })
    }

    /// Adds `dy · ∂y/∂θ` into `grads`.
    pub fn backward(&self, fwd: &Forward, dy: f64, grads: &mut ModelParameters) -> Result<()> {
        let enc = &fwd.enc;
        let dim = enc.k.cols();
        let z = self.params.z.as_slice();
        let w = self.params.w.as_slice();
        let mut dk = Tensor2::zeros(enc.k.rows(), dim);
        match &fwd.head {
            HeadCache::Attention { p, attn, ln, b, u } => {
                let m = u.len();
                let mut db = Tensor2::zeros(m, dim);
                for i in 0..m {
                    grads.w.as_mut_slice()[i] += u[i] * dy;
                    let du = w[i] * dy;
                    let gz = grads.z.as_mut_slice();
                    for c in 0..dim {
                        gz[c] += du * b[(i, c)];
                        db[(i, c)] = du * z[c];
                    }
                }
                let (dzin, dgain, dbias) = layer_norm_backward(ln, self.params.ln_gain.as_slice(), &db);
                for c in 0..dim {
                    grads.ln_gain.as_mut_slice()[c] += dgain[c];
                    grads.ln_bias.as_mut_slice()[c] += dbias[c];
                }
                let mut dp = dzin.clone();
                let da = matmul_bt(&dzin, &enc.k)?;
                dk.add_assign(&matmul_at(attn, &dzin)?);
                let mut ds = softmax_rows_backward(attn, &da);
                ds.scale(1.0 / (dim as f64).sqrt());
                dp.add_assign(&matmul(&ds, &enc.k)?);
                dk.add_assign(&matmul_at(&ds, p)?);
                for (i, &pos) in enc.slot_positions.iter().enumerate() {
                    for (a, v) in dk.row_mut(pos).iter_mut().zip(dp.row(i)) {
                        *a += v;
                    }
                }
            }
            HeadCache::Average { mean, q } => {
                let m = enc.active_slots() as f64;
                grads.w.as_mut_slice()[0] += q * dy;
                let dq = w[0] * dy;
                for (g, a) in grads.z.as_mut_slice().iter_mut().zip(mean) {
                    *g += a * dq;
                }
                for &pos in &enc.slot_positions {
                    for (a, zc) in dk.row_mut(pos).iter_mut().zip(z) {
                        *a += zc * dq / m;
                    }
                }
            }
        }
        let dx = match (&self.params.lstm, &fwd.lstm, &mut grads.lstm) {
            (Some(p), Some(cache), Some(g)) => bilstm_backward(&fwd.x, p, cache, &dk, g),
            _ => dk,
        };
        for (t, &id) in fwd.ids.iter().enumerate() {
            for (a, v) in grads.embeddings.row_mut(id).iter_mut().zip(dx.row(t)) {
                *a += v;
            }
        }
        Ok(())
    }

    pub fn encode(&self, input: &ScoringInput) -> Result<EncodedInput> {
        // the head is cheap next to the encoder, so reuse the full pass
        self.forward(input).map(|f| f.enc)
    }

    /// `B` (M × key_dim, zero rows for masked slots) and the attention trace.
    pub fn pronoun_attention(&self, input: &ScoringInput) -> Result<(Tensor2, AttentionTrace)> {
        let mut cfg = self.clone();
        cfg.config.scorer = Scorer::Attention;
        let fwd = cfg.forward(input)?;
        let HeadCache::Attention { attn, b, .. } = &fwd.head else { unreachable!() };
        let mm = self.config.max_slots;
        let n = fwd.enc.k.rows();
        let mut full_b = Tensor2::zeros(mm, b.cols());
        let mut weights = Tensor2::zeros(mm, n);
        for i in 0..b.rows() {
            full_b.row_mut(i).copy_from_slice(b.row(i));
            weights.row_mut(i).copy_from_slice(attn.row(i));
        }
        let slots = fwd.enc.slot_positions.iter().map(|&p| fwd.enc.tokens[p].clone()).collect();
        let trace = AttentionTrace { weights, tokens: fwd.enc.tokens.clone(), slots, mask: fwd.enc.slot_mask.clone() };
        Ok((full_b, trace))
    }

    /// `y = Σ_m (B z)_m w_m` over unmasked slots.
    pub fn score(&self, b: &Tensor2, mask: &[bool]) -> f64 {
        let z = self.params.z.as_slice();
        let w = self.params.w.as_slice();
        (0..b.rows())
            .filter(|&i| mask[i])
            .map(|i| b.row(i).iter().zip(z).map(|(a, c)| a * c).sum::<f64>() * w[i])
            .sum()
    }

    /// Mean of the unmasked pronoun rows through `z` and the scalar `w`.
    pub fn baseline_score(&self, enc: &EncodedInput) -> Result<f64> {
        let m = enc.slot_mask.iter().filter(|&&b| b).count();
        if m == 0 {
            return Err(Error::Unscorable);
        }
        let dim = enc.pronoun_slots.cols();
        let mut mean = vec![0.0; dim];
        for i in (0..enc.slot_mask.len()).filter(|&i| enc.slot_mask[i]) {
            for (a, v) in mean.iter_mut().zip(enc.pronoun_slots.row(i)) {
                *a += v;
            }
        }
        mean.iter_mut().for_each(|a| *a /= m as f64);
        let q: f64 = mean.iter().zip(self.params.z.as_slice()).map(|(a, c)| a * c).sum();
        Ok(q * self.params.w.as_slice()[0])
    }

    pub fn score_input(&self, input: &ScoringInput) -> Result<f64> {
        self.forward(input).map(|f| f.y)
    }

    pub fn score_pair(&self, r: &ScoringInput, s: &ScoringInput) -> Result<(f64, f64)> {
        Ok((self.score_input(r)?, self.score_input(s)?))
    }

    /// Scores of the reference and system sides of a pair under the
    /// configured context mode.
    pub fn score_ranking_pair(&self, pair: &RankingPair) -> Result<(f64, f64)> {
        let (r, s) = ScoringInput::from_pair(pair, self.config.context_mode);
        self.score_pair(&r, &s)
    }
}
