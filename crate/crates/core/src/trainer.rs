//! Pairwise ranking training and accuracy evaluation.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::miner::RankingPair;
use crate::model::{load_embeddings, Model, ModelConfig, ModelParameters, ScoringInput, Vocab};

/// `max(0, margin − y_r + y_s)`. Zero exactly when `y_r >= y_s + margin`,
/// and exactly `margin` for equal scores.
pub fn hinge_loss(y_r: f64, y_s: f64, margin: f64) -> f64 {
    if y_r >= y_s + margin {
        0.0
    } else {
        // rounding must not turn a violated margin into a zero loss
        (margin - (y_r - y_s)).max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub clip_norm: f64,
    /// Adds wall-clock seconds to each log record; logs then differ between runs.
    pub record_wall_time: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 32,
            max_epochs: 30,
            patience: 5,
            seed: 1,
            clip_norm: 5.0,
            record_wall_time: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.adam_eps, self.clip_norm].iter().all(|v| *v > 0.0 && v.is_finite());
        let betas = [self.beta1, self.beta2].iter().all(|b| (0.0..1.0).contains(b) && *b > 0.0);
        if !positive || !betas || self.batch_size == 0 || self.max_epochs == 0 || self.patience == 0 {
            return Err(Error::Invalid("training hyperparameters must be positive".into()));
        }
        if self.patience > self.max_epochs {
            return Err(Error::Invalid(format!(
                "patience {} exceeds max epochs {}",
                self.patience, self.max_epochs
            )));
        }
        Ok(())
    }
}

/// Adaptive-moment optimizer over every parameter block.
#[derive(Debug, Clone)]
pub struct Adam {
    m: ModelParameters,
    v: ModelParameters,
    t: i32,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
}

impl Adam {
    pub fn new(params: &ModelParameters, cfg: &TrainConfig) -> Self {
        Adam {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.adam_eps,
        }
    }

    pub fn step(&mut self, params: &mut ModelParameters, grads: &ModelParameters) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        let blocks = params
            .blocks_mut()
            .into_iter()
            .zip(grads.blocks())
            .zip(self.m.blocks_mut().into_iter().zip(self.v.blocks_mut()));
        for (((_, p), (_, g)), ((_, m), (_, v))) in blocks {
            let (p, g, m, v) = (p.as_mut_slice(), g.as_slice(), m.as_mut_slice(), v.as_mut_slice());
            for i in 0..p.len() {
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g[i];
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g[i] * g[i];
                p[i] -= self.lr * (m[i] / c1) / ((v[i] / c2).sqrt() + self.eps);
            }
        }
    }
}

/// Rescales `grads` so its global norm is at most `max_norm`.
pub fn clip_grad_norm(grads: &mut ModelParameters, max_norm: f64) -> f64 {
    let norm = grads.norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub mean_loss: f64,
    pub dev_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub records: Vec<EpochRecord>,
    pub best_epoch: usize,
}

impl TrainingLog {
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_jsonl()?.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

struct Prepared<'a> {
    pair: &'a RankingPair,
    r: ScoringInput,
    s: ScoringInput,
}

fn prepare<'a>(pairs: &'a [RankingPair], model_cfg: &ModelConfig) -> Vec<Prepared<'a>> {
    pairs
        .iter()
        .map(|pair| {
            let (r, s) = ScoringInput::from_pair(pair, model_cfg.context_mode);
            Prepared { pair, r, s }
        })
        .collect()
}

fn scored<T>(res: Result<T>, pair: &RankingPair) -> Result<T> {
    res.map_err(|e| match e {
        Error::Unscorable => Error::Invalid(format!("pair {} has a side without pronouns", pair.id)),
        other => other,
    })
}

/// Trains a fresh model on `train`, early-stopping on `dev` accuracy, and
/// returns the best-dev model with the per-epoch log.
pub fn train(
    train: &[RankingPair],
    dev: &[RankingPair],
    cfg: &TrainConfig,
    model_cfg: &ModelConfig,
    embeddings: Option<&Path>,
) -> Result<(Model, TrainingLog)> {
    cfg.validate()?;
    if train.is_empty() || dev.is_empty() {
        return Err(Error::Invalid("training and dev sets must be non-empty".into()));
    }
    let mut model = Model::new(model_cfg.clone(), Vocab::from_pairs(train), cfg.seed)?;
    if let Some(path) = embeddings {
        let n = load_embeddings(path, &model.vocab, &mut model.params.embeddings)?;
        log::info!("initialized {n} of {} embedding rows from {}", model.vocab.len(), path.display());
    }
    let data = prepare(train, &model.config);
    let margin = model.config.margin;
    let mut adam = Adam::new(&model.params, cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, Model)> = None;
    let mut stale = 0;
    let start = Instant::now();

    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut total_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let mut grads = model.params.zeros_like();
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let item = &data[i];
                let fr = scored(model.forward(&item.r), item.pair)?;
                let fs = scored(model.forward(&item.s), item.pair)?;
                let loss = hinge_loss(fr.y, fs.y, margin);
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { epoch, pair_id: item.pair.id.clone(), y_r: fr.y, y_s: fs.y });
                }
                total_loss += loss;
                if loss > 0.0 {
                    model.backward(&fr, -scale, &mut grads)?;
                    model.backward(&fs, scale, &mut grads)?;
                }
            }
            clip_grad_norm(&mut grads, cfg.clip_norm);
            adam.step(&mut model.params, &grads);
        }
        let dev_accuracy = evaluate_accuracy(&model, dev)?.accuracy;
        let record = EpochRecord {
            epoch,
            mean_loss: total_loss / data.len() as f64,
            dev_accuracy,
            wall_time_s: cfg.record_wall_time.then(|| start.elapsed().as_secs_f64()),
        };
        log::info!("epoch {epoch}: loss {:.5} dev accuracy {:.4}", record.mean_loss, dev_accuracy);
        log.records.push(record);
        if best.as_ref().is_none_or(|(acc, _)| dev_accuracy > *acc) {
            best = Some((dev_accuracy, model.clone()));
            log.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    let (_, best) = best.expect("at least one epoch ran");
    Ok((best, log))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TiePolicy {
    /// `y_r == y_s` counts as a failure.
    #[default]
    CountAsWrong,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairAccuracy {
    pub n: usize,
    pub correct: usize,
    pub ties: usize,
}

impl PairAccuracy {
    pub fn accuracy(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.correct as f64 / self.n as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOutcome {
    pub id: String,
    pub y_r: f64,
    pub y_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub n: usize,
    pub correct: usize,
    pub ties: usize,
    pub policy: TiePolicy,
    /// Keyed by `ref_form:sys_form`; a pair with several mismatches counts under each.
    pub per_pair: BTreeMap<String, PairAccuracy>,
    pub outcomes: Vec<PairOutcome>,
}

pub fn form_key(ref_form: &str, sys_form: &str) -> String {
    format!("{ref_form}:{sys_form}")
}

/// Fraction of pairs with `y_r > y_s`.
pub fn evaluate_accuracy(model: &Model, pairs: &[RankingPair]) -> Result<EvalReport> {
    evaluate_with_policy(model, pairs, TiePolicy::CountAsWrong)
}

pub fn evaluate_with_policy(model: &Model, pairs: &[RankingPair], policy: TiePolicy) -> Result<EvalReport> {
    let mut outcomes = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let (y_r, y_s) = scored(model.score_ranking_pair(pair), pair)?;
        outcomes.push(PairOutcome { id: pair.id.clone(), y_r, y_s });
    }
    Ok(report_from_outcomes(pairs, outcomes, policy))
}

pub fn report_from_outcomes(pairs: &[RankingPair], outcomes: Vec<PairOutcome>, policy: TiePolicy) -> EvalReport {
    let mut per_pair: BTreeMap<String, PairAccuracy> = BTreeMap::new();
    let (mut correct, mut ties) = (0, 0);
    for (pair, o) in pairs.iter().zip(&outcomes) {
        let win = o.y_r > o.y_s;
        let tie = o.y_r == o.y_s;
        correct += usize::from(win);
        ties += usize::from(tie);
        for (r, s) in &pair.mismatch_forms {
            let e = per_pair.entry(form_key(r, s)).or_default();
            e.n += 1;
            e.correct += usize::from(win);
            e.ties += usize::from(tie);
        }
    }
    let n = pairs.len();
    EvalReport {
        accuracy: if n == 0 { 0.0 } else { correct as f64 / n as f64 },
        n,
        correct,
        ties,
        policy,
        per_pair,
        outcomes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{pronoun_indices, PronounLexicon, SentenceRec};
    use crate::miner::PairLabel;
    use crate::model::{Encoder, Scorer};
    use proptest::prelude::*;

    pub(crate) fn pair(id: &str, r: &str, s: &str, forms: (&str, &str)) -> RankingPair {
        let lex = PronounLexicon::english();
        RankingPair {
            id: id.into(),
            lang_pair: String::new(),
            ref_context: vec![],
            reference: r.into(),
            sys_context: vec![],
            sys: s.into(),
            ref_pronouns: pronoun_indices(&SentenceRec::new(0, 0, r), &lex),
            sys_pronouns: pronoun_indices(&SentenceRec::new(0, 0, s), &lex),
            mismatch_forms: vec![(forms.0.into(), forms.1.into())],
            source_text: None,
            label: PairLabel::RefBetter,
            highlight_spans: vec![],
        }
    }

    fn small_cfg() -> ModelConfig {
        ModelConfig { d: 6, h: 4, ..ModelConfig::default() }
    }

    #[test]
    fn hinge_examples() {
        assert_eq!(hinge_loss(1.0, 0.5, 0.1), 0.0);
        assert_eq!(hinge_loss(0.3, 0.3, 0.1), 0.1);
        assert!((hinge_loss(0.2, 0.5, 0.1) - 0.4).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn hinge_contract(y_r in -5.0f64..5.0, y_s in -5.0f64..5.0) {
            let l = hinge_loss(y_r, y_s, 0.1);
            prop_assert!(l >= 0.0);
            prop_assert_eq!(l == 0.0, y_r >= y_s + 0.1);
            prop_assert_eq!(hinge_loss(y_s, y_s, 0.1), 0.1);
        }
    }

    #[test]
    fn memorizes_one_pair() {
        let p = vec![pair("a", "the king said he left .", "the king said she left .", ("he", "she"))];
        let cfg = TrainConfig { learning_rate: 0.01, max_epochs: 200, patience: 200, batch_size: 1, ..TrainConfig::default() };
        let (model, log) = train(&p, &p, &cfg, &small_cfg(), None).unwrap();
        // the returned model is the first to rank the pair correctly
        let (yr, ys) = model.score_ranking_pair(&p[0]).unwrap();
        assert!(yr > ys);
        assert_eq!(log.records[log.best_epoch - 1].dev_accuracy, 1.0);
        assert!(log.records.iter().any(|r| r.mean_loss == 0.0));
    }

    #[test]
    fn single_step_decreases_violated_loss() {
        let p = pair("a", "the king said he left .", "the king said she left .", ("he", "she"));
        for (enc, sc) in [(Encoder::Bilstm, Scorer::Attention), (Encoder::Embeddings, Scorer::Average)] {
            let mc = ModelConfig { encoder: enc, scorer: sc, ..small_cfg() };
            let mut model = Model::new(mc, Vocab::from_pairs(std::slice::from_ref(&p)), 3).unwrap();
            // pick a sign so the pair starts violated
            let (yr, ys) = model.score_ranking_pair(&p).unwrap();
            if hinge_loss(yr, ys, 0.1) == 0.0 {
                model.params.w.scale(-1.0);
            }
            let (yr, ys) = model.score_ranking_pair(&p).unwrap();
            let before = hinge_loss(yr, ys, 0.1);
            assert!(before > 0.0);
            let (r, s) = ScoringInput::from_pair(&p, model.config.context_mode);
            let mut g = model.params.zeros_like();
            model.backward(&model.forward(&r).unwrap(), -1.0, &mut g).unwrap();
            model.backward(&model.forward(&s).unwrap(), 1.0, &mut g).unwrap();
            let cfg = TrainConfig { learning_rate: 1e-4, ..TrainConfig::default() };
            Adam::new(&model.params, &cfg).step(&mut model.params, &g);
            let (yr, ys) = model.score_ranking_pair(&p).unwrap();
            assert!(hinge_loss(yr, ys, 0.1) < before);
        }
    }

    #[test]
    fn deterministic_under_seed() {
        let pairs: Vec<RankingPair> = (0..12)
            .map(|i| {
                let (a, b) = if i % 2 == 0 { ("he", "she") } else { ("she", "he") };
                let noun = if i % 2 == 0 { "king" } else { "queen" };
                pair(&i.to_string(), &format!("the {noun} said {a} left ."), &format!("the {noun} said {b} left ."), (a, b))
            })
            .collect();
        let cfg = TrainConfig { max_epochs: 3, patience: 3, batch_size: 4, ..TrainConfig::default() };
        let (m1, l1) = train(&pairs, &pairs, &cfg, &small_cfg(), None).unwrap();
        let (m2, l2) = train(&pairs, &pairs, &cfg, &small_cfg(), None).unwrap();
        assert_eq!(crate::model::checkpoint_bytes(&m1).unwrap(), crate::model::checkpoint_bytes(&m2).unwrap());
        assert_eq!(l1.to_jsonl().unwrap(), l2.to_jsonl().unwrap());
        assert!(!l1.to_jsonl().unwrap().contains("wall_time"));
    }

    #[test]
    fn rejects_bad_input() {
        let p = vec![pair("a", "he left .", "she left .", ("he", "she"))];
        assert!(train(&[], &p, &TrainConfig::default(), &small_cfg(), None).is_err());
        assert!(train(&p, &[], &TrainConfig::default(), &small_cfg(), None).is_err());
        let cfg = TrainConfig { patience: 50, max_epochs: 3, ..TrainConfig::default() };
        assert!(train(&p, &p, &cfg, &small_cfg(), None).is_err());
        let mut bad = p.clone();
        bad[0].sys_pronouns.clear();
        assert!(train(&bad, &p, &TrainConfig::default(), &small_cfg(), None).is_err());
    }

    #[test]
    fn accuracy_counting() {
        let pairs: Vec<RankingPair> = (0..10).map(|i| pair(&i.to_string(), "he", "it", ("he", "it"))).collect();
        let outcomes = (0..10)
            .map(|i| PairOutcome { id: i.to_string(), y_r: if i < 8 { 1.0 } else { 0.0 }, y_s: 0.5 })
            .collect();
        let r = report_from_outcomes(&pairs, outcomes, TiePolicy::CountAsWrong);
        assert_eq!(r.accuracy, 0.8);
        assert_eq!(r.per_pair["he:it"].correct, 8);

        let ties = (0..10).map(|i| PairOutcome { id: i.to_string(), y_r: 0.5, y_s: 0.5 }).collect();
        let r = report_from_outcomes(&pairs, ties, TiePolicy::CountAsWrong);
        assert_eq!((r.accuracy, r.ties), (0.0, 10));
    }

    #[test]
    fn accuracy_order_invariant() {
        let mut pairs: Vec<RankingPair> = ["he", "she", "it", "they"]
            .iter()
            .enumerate()
            .map(|(i, p)| pair(&i.to_string(), &format!("{p} left ."), &format!("we saw {p} ."), (p, p)))
            .collect();
        let model = Model::new(small_cfg(), Vocab::from_pairs(&pairs), 5).unwrap();
        let a = evaluate_accuracy(&model, &pairs).unwrap();
        pairs.reverse();
        let b = evaluate_accuracy(&model, &pairs).unwrap();
        assert_eq!((a.accuracy, a.ties, &a.per_pair), (b.accuracy, b.ties, &b.per_pair));
    }
}
