//! Lexical translation model trained by expectation maximization.
//!
//! `Model1` uses a uniform alignment prior over the source positions plus the
//! null word. `Diagonal` replaces it with the log-linear distortion prior
//!
//! ```text
//! p(a_j = 0)          = p0
//! p(a_j = i), i >= 1  = (1 - p0) * exp(-λ |i/m - j/n|) / Σ_i' exp(-λ |i'/m - j/n|)
//! ```
//!
//! with 1-based positions, `m` source words and `n` target words. The prior
//! parameters are fixed during training, so every EM iteration is a proper
//! EM step on the lexical table and the corpus log-likelihood cannot decrease.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use super::{symmetrize, Heuristic, LinkSet, TokenPair};
use crate::error::{read_utf8, Error, Result};

pub const NULL_WORD: &str = "<null>";

/// Smallest translation probability used when decoding; unseen words get it.
pub const UNSEEN_FLOOR: f64 = 1e-9;

const FORMAT_TAG: &str = "#anaphora-ttable v1";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagonalParams {
    /// λ, how strongly links are pulled towards the diagonal.
    pub tension: f64,
    /// p0, probability of aligning to the null word.
    pub null_prob: f64,
}

impl Default for DiagonalParams {
    fn default() -> Self {
        DiagonalParams {
            tension: 4.0,
            null_prob: 0.08,
        }
    }
}

impl DiagonalParams {
    pub fn new(tension: f64, null_prob: f64) -> Result<Self> {
        if !(tension > 0.0) || !tension.is_finite() {
            return Err(Error::Invalid(format!("tension must be positive, got {tension}")));
        }
        if !(0.0..1.0).contains(&null_prob) {
            return Err(Error::Invalid(format!("null probability must be in [0,1), got {null_prob}")));
        }
        Ok(DiagonalParams { tension, null_prob })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlignMode {
    Model1,
    Diagonal,
}

impl AlignMode {
    fn as_str(self) -> &'static str {
        match self {
            AlignMode::Model1 => "model1",
            AlignMode::Diagonal => "diagonal",
        }
    }
}

impl FromStr for AlignMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "model1" => Ok(AlignMode::Model1),
            "diagonal" => Ok(AlignMode::Diagonal),
            other => Err(format!("unknown alignment mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AlignerConfig {
    pub model1_iterations: usize,
    pub diagonal_iterations: usize,
    pub params: DiagonalParams,
    pub heuristic: Heuristic,
}

impl Default for AlignerConfig {
    fn default() -> Self {
        AlignerConfig {
            model1_iterations: 5,
            diagonal_iterations: 5,
            params: DiagonalParams::default(),
            heuristic: Heuristic::GrowDiagFinalAnd,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Vocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    fn intern(&mut self, w: &str) -> u32 {
        if let Some(&id) = self.index.get(w) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(w.to_string());
        self.index.insert(w.to_string(), id);
        id
    }

    fn get(&self, w: &str) -> Option<u32> {
        self.index.get(w).copied()
    }
}

#[derive(Debug, Clone)]
pub struct AlignmentModel {
    /// Source id 0 is the null word.
    source: Vocab,
    target: Vocab,
    table: HashMap<(u32, u32), f64>,
    /// Set until the first M-step: every t(f|e) equals this value.
    uniform: Option<f64>,
    params: DiagonalParams,
    mode: AlignMode,
    log_likelihoods: Vec<f64>,
}

type IdPair = (Vec<Option<u32>>, Vec<Option<u32>>);

impl AlignmentModel {
    /// A model with a uniform lexical table over the corpus target vocabulary.
    pub fn new(corpus: &[TokenPair], params: DiagonalParams) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::Invalid("alignment corpus is empty".into()));
        }
        let mut source = Vocab::default();
        source.intern(NULL_WORD);
        let mut target = Vocab::default();
        for (n, (s, t)) in corpus.iter().enumerate() {
            if s.is_empty() || t.is_empty() {
                return Err(Error::Invalid(format!("sentence pair {n} has an empty side")));
            }
            s.iter().for_each(|w| {
                source.intern(w);
            });
            t.iter().for_each(|w| {
                target.intern(w);
            });
        }
        let uniform = 1.0 / target.words.len() as f64;
        Ok(AlignmentModel {
            source,
            target,
            table: HashMap::new(),
            uniform: Some(uniform),
            params,
            mode: AlignMode::Model1,
            log_likelihoods: Vec::new(),
        })
    }

    pub fn mode(&self) -> AlignMode {
        self.mode
    }

    pub fn params(&self) -> DiagonalParams {
        self.params
    }

    /// Corpus log-likelihood measured at the start of each EM iteration.
    pub fn log_likelihoods(&self) -> &[f64] {
        &self.log_likelihoods
    }

    pub fn target_vocab_size(&self) -> usize {
        self.target.words.len()
    }

    /// Raw t(target | source); `None` as source means the null word.
    pub fn translation_prob(&self, source: Option<&str>, target: &str) -> f64 {
        let e = match source {
            None => Some(0),
            Some(w) => self.source.get(w),
        };
        self.raw_prob(e, self.target.get(target))
    }

    fn raw_prob(&self, e: Option<u32>, f: Option<u32>) -> f64 {
        match (e, f) {
            (Some(e), Some(f)) => match self.uniform {
                Some(u) => u,
                None => self.table.get(&(e, f)).copied().unwrap_or(0.0),
            },
            _ => 0.0,
        }
    }

    fn encode(&self, src: &[String], tgt: &[String]) -> IdPair {
        (
            src.iter().map(|w| self.source.get(w)).collect(),
            tgt.iter().map(|w| self.target.get(w)).collect(),
        )
    }

    /// Alignment prior over `0..=m` (0 = null) for 0-based target position `j`.
    fn prior(&self, mode: AlignMode, j: usize, m: usize, n: usize) -> Vec<f64> {
        match mode {
            AlignMode::Model1 => vec![1.0 / (m + 1) as f64; m + 1],
            AlignMode::Diagonal => {
                let DiagonalParams { tension, null_prob } = self.params;
                let jr = (j + 1) as f64 / n as f64;
                let mut p = vec![null_prob];
                let raw: Vec<f64> = (1..=m)
                    .map(|i| (-tension * (i as f64 / m as f64 - jr).abs()).exp())
                    .collect();
                let z: f64 = raw.iter().sum();
                p.extend(raw.iter().map(|r| (1.0 - null_prob) * r / z));
                p
            }
        }
    }

    /// Per target position, the joint weights prior(i) * t(f_j | e_i) over `0..=m`.
    fn joint(&self, mode: AlignMode, pair: &IdPair, floor: f64) -> Vec<Vec<f64>> {
        let (src, tgt) = pair;
        let (m, n) = (src.len(), tgt.len());
        let sources: Vec<Option<u32>> = std::iter::once(Some(0)).chain(src.iter().copied()).collect();
        (0..n)
            .map(|j| {
                let prior = self.prior(mode, j, m, n);
                sources
                    .iter()
                    .zip(&prior)
                    .map(|(&e, &p)| p * self.raw_prob(e, tgt[j]).max(floor))
                    .collect()
            })
            .collect()
    }

    /// One EM iteration; returns the log-likelihood of the parameters it started from.
    fn em_step(&mut self, corpus: &[IdPair], mode: AlignMode) -> f64 {
        let mut counts: HashMap<(u32, u32), f64> = HashMap::new();
        let mut ll = 0.0;
        for pair in corpus {
            let src: Vec<u32> = std::iter::once(0).chain(pair.0.iter().map(|e| e.unwrap())).collect();
            for (j, weights) in self.joint(mode, pair, 0.0).into_iter().enumerate() {
                let f = pair.1[j].unwrap();
                let denom: f64 = weights.iter().sum();
                ll += denom.max(f64::MIN_POSITIVE).ln();
                if denom <= 0.0 {
                    continue;
                }
                for (i, w) in weights.into_iter().enumerate() {
                    *counts.entry((src[i], f)).or_insert(0.0) += w / denom;
                }
            }
        }
        let mut totals: HashMap<u32, f64> = HashMap::new();
        for (&(e, _), &c) in &counts {
            *totals.entry(e).or_insert(0.0) += c;
        }
        for ((e, _), c) in counts.iter_mut() {
            *c /= totals[e];
        }
        self.table = counts;
        self.uniform = None;
        self.mode = mode;
        self.log_likelihoods.push(ll);
        ll
    }

    fn train(&mut self, corpus: &[TokenPair], iterations: usize, mode: AlignMode) {
        let ids: Vec<IdPair> = corpus.iter().map(|(s, t)| self.encode(s, t)).collect();
        for _ in 0..iterations {
            self.em_step(&ids, mode);
        }
    }

    /// Corpus log-likelihood under the current parameters and mode.
    pub fn log_likelihood(&self, corpus: &[TokenPair]) -> f64 {
        corpus
            .iter()
            .map(|(s, t)| {
                self.joint(self.mode, &self.encode(s, t), 0.0)
                    .iter()
                    .map(|w| w.iter().sum::<f64>().max(f64::MIN_POSITIVE).ln())
                    .sum::<f64>()
            })
            .sum()
    }

    /// Posterior p(a_j = i | pair) indexed `[j][i]`, `i = 0` being the null
    /// word, with the decode-time floor applied to translation probabilities.
    pub fn posteriors(&self, src: &[String], tgt: &[String]) -> Vec<Vec<f64>> {
        self.joint(self.mode, &self.encode(src, tgt), UNSEEN_FLOOR)
            .into_iter()
            .map(|w| {
                let z: f64 = w.iter().sum();
                w.into_iter().map(|x| x / z).collect()
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut rows: Vec<(&str, &str, f64)> = self
            .table
            .iter()
            .map(|(&(e, f), &p)| {
                (
                    self.source.words[e as usize].as_str(),
                    self.target.words[f as usize].as_str(),
                    p,
                )
            })
            .collect();
        rows.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut out = format!(
            "{FORMAT_TAG}\tmode={}\ttension={}\tnull_prob={}\tsource_vocab={}\ttarget_vocab={}\n",
            self.mode.as_str(),
            self.params.tension,
            self.params.null_prob,
            self.source.words.len() - 1,
            self.target.words.len(),
        );
        for (e, f, p) in rows {
            out.push_str(&format!("{e}\t{f}\t{p}\n"));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_utf8(path)?;
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        let mut fields = header.split('\t');
        if fields.next() != Some(FORMAT_TAG) {
            return Err(Error::parse(path, 1, format!("expected `{FORMAT_TAG}` header")));
        }
        let mut kv = HashMap::new();
        for f in fields {
            let (k, v) = f.split_once('=').ok_or_else(|| Error::parse(path, 1, format!("bad header field `{f}`")))?;
            kv.insert(k, v);
        }
        let get = |k: &str| kv.get(k).copied().ok_or_else(|| Error::parse(path, 1, format!("missing `{k}`")));
        let num = |k: &str| -> Result<f64> {
            get(k)?.parse().map_err(|_| Error::parse(path, 1, format!("bad `{k}`")))
        };
        let mode = get("mode")?.parse().map_err(|m: String| Error::parse(path, 1, m))?;
        let params = DiagonalParams::new(num("tension")?, num("null_prob")?)?;

        let mut source = Vocab::default();
        source.intern(NULL_WORD);
        let mut target = Vocab::default();
        let mut table = HashMap::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(path, n + 2, "expected `source<TAB>target<TAB>prob`"));
            }
            let p: f64 = cols[2].parse().map_err(|_| Error::parse(path, n + 2, "bad probability"))?;
            let key = (source.intern(cols[0]), target.intern(cols[1]));
            table.insert(key, p);
        }
        Ok(AlignmentModel {
            source,
            target,
            table,
            uniform: None,
            params,
            mode,
            log_likelihoods: Vec::new(),
        })
    }
}

/// Runs `iterations` EM iterations from a uniform table.
pub fn em_train(
    corpus: &[TokenPair],
    iterations: usize,
    mode: AlignMode,
    params: DiagonalParams,
) -> Result<AlignmentModel> {
    if iterations == 0 {
        return Err(Error::Invalid("iterations must be positive".into()));
    }
    let mut model = AlignmentModel::new(corpus, params)?;
    model.train(corpus, iterations, mode);
    Ok(model)
}

impl AlignerConfig {
    /// Model 1 warm-up followed by diagonal-prior iterations.
    pub fn train(&self, corpus: &[TokenPair]) -> Result<AlignmentModel> {
        if self.model1_iterations + self.diagonal_iterations == 0 {
            return Err(Error::Invalid("iterations must be positive".into()));
        }
        let mut model = AlignmentModel::new(corpus, self.params)?;
        model.train(corpus, self.model1_iterations, AlignMode::Model1);
        model.train(corpus, self.diagonal_iterations, AlignMode::Diagonal);
        Ok(model)
    }
}

/// Links every target word to its most probable source word, or to nothing
/// when the null word is strictly more probable. Ties between source words go
/// to the lowest position.
pub fn viterbi_align(src: &[String], tgt: &[String], model: &AlignmentModel) -> Result<LinkSet> {
    if src.is_empty() || tgt.is_empty() {
        return Err(Error::Invalid("cannot align an empty sentence".into()));
    }
    let mut links = LinkSet::new();
    for (j, weights) in model.joint(model.mode, &model.encode(src, tgt), UNSEEN_FLOOR).iter().enumerate() {
        let mut best = 1;
        for (i, &w) in weights.iter().enumerate().skip(2) {
            if w > weights[best] {
                best = i;
            }
        }
        if weights[best] >= weights[0] {
            links.insert(best - 1, j);
        }
    }
    Ok(links)
}

/// Trains both directions and returns symmetrized (source, target) links per pair.
pub fn align_corpus(corpus: &[TokenPair], config: &AlignerConfig) -> Result<Vec<LinkSet>> {
    let reversed: Vec<TokenPair> = corpus.iter().map(|(s, t)| (t.clone(), s.clone())).collect();
    let forward = config.train(corpus)?;
    let backward = config.train(&reversed)?;
    corpus
        .iter()
        .map(|(s, t)| {
            let f = viterbi_align(s, t, &forward)?;
            let b = viterbi_align(t, s, &backward)?.transposed();
            Ok(symmetrize(&f, &b, config.heuristic))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pair(s: &str, t: &str) -> TokenPair {
        (
            s.split_whitespace().map(String::from).collect(),
            t.split_whitespace().map(String::from).collect(),
        )
    }

    fn toy() -> Vec<TokenPair> {
        vec![pair("la maison", "the house"), pair("la fleur", "the flower")]
    }

    #[test]
    fn toy_corpus_learns_article() {
        let m = em_train(&toy(), 20, AlignMode::Model1, DiagonalParams::default()).unwrap();
        assert!(m.translation_prob(Some("la"), "the") > 0.9, "{}", m.translation_prob(Some("la"), "the"));
        for e in [None, Some("la"), Some("maison"), Some("fleur")] {
            let row: f64 = ["the", "house", "flower"].iter().map(|f| m.translation_prob(e, f)).sum();
            assert!((row - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn single_identical_pair() {
        let m = em_train(&[pair("a", "a")], 1, AlignMode::Model1, DiagonalParams::default()).unwrap();
        assert_eq!(m.translation_prob(Some("a"), "a"), 1.0);
    }

    #[test]
    fn first_likelihood_is_uniform_model() {
        let corpus = vec![pair("a b c", "x y"), pair("b", "y z w"), pair("c a", "x")];
        let m = em_train(&corpus, 3, AlignMode::Model1, DiagonalParams::default()).unwrap();
        // every target word has probability 1/|V_f| under any source position
        let target_tokens = 2.0 + 3.0 + 1.0;
        let expected = -target_tokens * (4.0f64).ln();
        assert!((m.log_likelihoods()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(em_train(&[], 1, AlignMode::Model1, DiagonalParams::default()).is_err());
        assert!(em_train(&toy(), 0, AlignMode::Model1, DiagonalParams::default()).is_err());
        assert!(em_train(&[pair("a", "")], 1, AlignMode::Model1, DiagonalParams::default()).is_err());
        assert!(DiagonalParams::new(0.0, 0.1).is_err());
        assert!(DiagonalParams::new(1.0, 1.0).is_err());
        let m = em_train(&toy(), 1, AlignMode::Model1, DiagonalParams::default()).unwrap();
        assert!(viterbi_align(&[], &["the".into()], &m).is_err());
    }

    #[test]
    fn viterbi_toy() {
        let m = em_train(&toy(), 20, AlignMode::Model1, DiagonalParams::default()).unwrap();
        let (s, t) = pair("la maison", "the house");
        // enumeration over the 3x2 table of joint weights
        let post = m.posteriors(&s, &t);
        let mut brute = LinkSet::new();
        for (j, row) in post.iter().enumerate() {
            let best = (1..row.len()).fold(1, |b, i| if row[i] > row[b] { i } else { b });
            if row[best] >= row[0] {
                brute.insert(best - 1, j);
            }
        }
        let links = viterbi_align(&s, &t, &m).unwrap();
        assert_eq!(links, brute);
        assert_eq!(links, "0-0 1-1".parse().unwrap());
    }

    #[test]
    fn one_token_pair() {
        let a = vec!["a".to_string()];
        let b = vec!["b".to_string()];
        // the null word splits its mass over b and d, so a-b beats null-b
        let m = em_train(&[pair("a", "b"), pair("c", "d")], 5, AlignMode::Model1, DiagonalParams::default()).unwrap();
        assert!(m.translation_prob(Some("a"), "b") > m.translation_prob(None, "b"));
        assert_eq!(viterbi_align(&a, &b, &m).unwrap(), "0-0".parse().unwrap());
        // `a` mostly produces x, while b is better explained by null
        let corpus = [pair("a", "x"), pair("a", "x"), pair("a", "x b"), pair("c", "b")];
        let m = em_train(&corpus, 5, AlignMode::Model1, DiagonalParams::default()).unwrap();
        assert!(m.translation_prob(Some("a"), "b") < m.translation_prob(None, "b"));
        assert!(viterbi_align(&a, &b, &m).unwrap().is_empty());
    }

    #[test]
    fn unseen_target_word_uses_floor_and_diagonal() {
        let corpus = vec![pair("a b c", "x y z")];
        let m = em_train(&corpus, 5, AlignMode::Diagonal, DiagonalParams::default()).unwrap();
        let src: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
        let tgt: Vec<String> = ["x", "q", "z"].iter().map(|s| s.to_string()).collect();
        // for `q` every candidate scores floor * prior; the prior at j=2 of 3
        // peaks at i=2 and beats the null prior 0.08:
        // exp(-4|2/3-2/3|) / (exp(-4/3) + 1 + exp(-4/3)) * 0.92 ≈ 0.726
        let post = m.posteriors(&src, &tgt);
        let z = 2.0 * (-4.0f64 / 3.0).exp() + 1.0;
        assert!((post[1][2] - 0.92 / z).abs() < 1e-12);
        let links = viterbi_align(&src, &tgt, &m).unwrap();
        assert!(links.contains(1, 1));
        assert_eq!(links, viterbi_align(&src, &tgt, &m).unwrap());
    }

    #[test]
    fn posteriors_match_enumeration() {
        let corpus = vec![pair("a b c", "x y"), pair("b c", "y z w"), pair("a c", "x w")];
        for mode in [AlignMode::Model1, AlignMode::Diagonal] {
            let m = em_train(&corpus, 4, mode, DiagonalParams::default()).unwrap();
            for (s, t) in &corpus {
                let post = m.posteriors(s, t);
                let (mm, n) = (s.len(), t.len());
                let src: Vec<Option<&str>> = std::iter::once(None).chain(s.iter().map(|w| Some(w.as_str()))).collect();
                // enumerate every alignment vector a in (m+1)^n
                let mut marg = vec![vec![0.0; mm + 1]; n];
                let mut total = 0.0;
                let combos = (mm + 1).pow(n as u32);
                for code in 0..combos {
                    let mut a = vec![0; n];
                    let mut c = code;
                    for slot in a.iter_mut() {
                        *slot = c % (mm + 1);
                        c /= mm + 1;
                    }
                    let mut p = 1.0;
                    for j in 0..n {
                        let prior = match mode {
                            AlignMode::Model1 => 1.0 / (mm + 1) as f64,
                            AlignMode::Diagonal => {
                                let h = |i: usize| (-4.0 * (i as f64 / mm as f64 - (j + 1) as f64 / n as f64).abs()).exp();
                                if a[j] == 0 {
                                    0.08
                                } else {
                                    0.92 * h(a[j]) / (1..=mm).map(h).sum::<f64>()
                                }
                            }
                        };
                        p *= prior * m.translation_prob(src[a[j]], &t[j]).max(UNSEEN_FLOOR);
                    }
                    total += p;
                    for j in 0..n {
                        marg[j][a[j]] += p;
                    }
                }
                for j in 0..n {
                    for i in 0..=mm {
                        assert!((post[j][i] - marg[j][i] / total).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn diagonal_degenerates_to_model1() {
        let corpus = vec![pair("a b c", "x y z"), pair("b c a", "y z x"), pair("c a b", "z w x")];
        let m1 = em_train(&corpus, 3, AlignMode::Model1, DiagonalParams::default()).unwrap();
        // λ → 0 flattens the distortion; with p0 = 1/(m+1) it equals Model 1
        let mut diag = m1.clone();
        diag.params = DiagonalParams::new(1e-6, 0.25).unwrap();
        diag.mode = AlignMode::Diagonal;
        for (s, t) in &corpus {
            let a = m1.posteriors(s, t);
            let b = diag.posteriors(s, t);
            for (ra, rb) in a.iter().zip(&b) {
                for (x, y) in ra.iter().zip(rb) {
                    assert!((x - y).abs() < 1e-6);
                }
            }
        }
        let ll1 = m1.log_likelihood(&corpus);
        let ll2 = diag.log_likelihood(&corpus);
        assert!((ll1 - ll2).abs() < 1e-6 * ll1.abs());
    }

    #[test]
    fn save_load_round_trip() {
        let m = AlignerConfig::default().train(&toy()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("model.tsv");
        m.save(&p).unwrap();
        let back = AlignmentModel::load(&p).unwrap();
        assert_eq!(back.mode(), AlignMode::Diagonal);
        assert_eq!(back.params(), m.params());
        for e in [None, Some("la"), Some("maison"), Some("fleur")] {
            for f in ["the", "house", "flower"] {
                assert_eq!(back.translation_prob(e, f).to_bits(), m.translation_prob(e, f).to_bits());
            }
        }
        let (s, t) = pair("la fleur", "the flower");
        assert_eq!(viterbi_align(&s, &t, &back).unwrap(), viterbi_align(&s, &t, &m).unwrap());
    }

    #[test]
    fn align_corpus_symmetrizes() {
        let corpus = vec![
            pair("la maison bleue", "the blue house"),
            pair("la fleur", "the flower"),
            pair("la maison", "the house"),
            pair("fleur bleue", "blue flower"),
        ];
        let links = align_corpus(&corpus, &AlignerConfig::default()).unwrap();
        assert_eq!(links.len(), 4);
        for (l, (s, t)) in links.iter().zip(&corpus) {
            l.validate(s.len(), t.len()).unwrap();
        }
        assert!(links[1].contains(0, 0));
    }

    fn corpus_strategy() -> impl Strategy<Value = Vec<TokenPair>> {
        let sent = || proptest::collection::vec(0u8..5, 1..5);
        proptest::collection::vec((sent(), sent()), 1..6).prop_map(|pairs| {
            pairs
                .into_iter()
                .map(|(s, t)| {
                    (
                        s.iter().map(|w| format!("s{w}")).collect(),
                        t.iter().map(|w| format!("t{w}")).collect(),
                    )
                })
                .collect()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn em_is_monotone(corpus in corpus_strategy(), diagonal in any::<bool>()) {
            let mode = if diagonal { AlignMode::Diagonal } else { AlignMode::Model1 };
            let m = em_train(&corpus, 20, mode, DiagonalParams::default()).unwrap();
            let mut lls = m.log_likelihoods().to_vec();
            lls.push(m.log_likelihood(&corpus));
            for w in lls.windows(2) {
                prop_assert!(w[1] >= w[0] - 1e-9, "{} -> {}", w[0], w[1]);
            }
            // rows normalized after the last M-step
            let mut rows: HashMap<u32, f64> = HashMap::new();
            for (&(e, _), &p) in &m.table {
                prop_assert!((0.0..=1.0).contains(&p));
                *rows.entry(e).or_insert(0.0) += p;
            }
            for (_, s) in rows {
                prop_assert!((s - 1.0).abs() < 1e-9);
            }
        }
    }
}
