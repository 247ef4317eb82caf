//! Template corpus of single-antecedent sentences with oracle pronoun
//! corruptions, used to check that the scorer can learn agreement.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{pronoun_indices, ErrorKind, PronounLexicon, SentenceRec};
use crate::error::{Error, Result};
use crate::miner::{PairLabel, RankingPair};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NounClass {
    Masculine,
    Feminine,
    Neuter,
    PluralHuman,
    PluralThing,
}

const CLASSES: [NounClass; 5] = [
    NounClass::Masculine,
    NounClass::Feminine,
    NounClass::Neuter,
    NounClass::PluralHuman,
    NounClass::PluralThing,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slot {
    Subject,
    Object,
    Possessive,
    Reflexive,
    Relative,
}

const SLOTS: [Slot; 5] = [Slot::Subject, Slot::Object, Slot::Possessive, Slot::Reflexive, Slot::Relative];

impl NounClass {
    fn nouns(self) -> &'static [&'static str] {
        match self {
            NounClass::Masculine => &[
                "king", "father", "brother", "man", "boy", "uncle", "prince", "husband", "monk", "waiter", "grandfather",
                "son", "nephew", "gentleman", "duke",
            ],
            NounClass::Feminine => &[
                "queen", "mother", "sister", "woman", "girl", "aunt", "princess", "wife", "nun", "waitress",
                "grandmother", "daughter", "niece", "lady", "duchess",
            ],
            NounClass::Neuter => &[
                "table", "car", "book", "river", "house", "machine", "letter", "bridge", "computer", "clock", "ship",
                "tree", "lamp", "door", "song",
            ],
            NounClass::PluralHuman => &[
                "children", "parents", "soldiers", "students", "farmers", "doctors", "teachers", "workers",
                "neighbours", "sailors", "nurses", "pilots", "lawyers", "singers", "guests",
            ],
            NounClass::PluralThing => &[
                "books", "cars", "trees", "rivers", "houses", "machines", "letters", "bridges", "computers", "clocks",
                "ships", "lamps", "doors", "songs", "boxes",
            ],
        }
    }

    fn plural(self) -> bool {
        matches!(self, NounClass::PluralHuman | NounClass::PluralThing)
    }

    fn animate(self) -> bool {
        !matches!(self, NounClass::Neuter | NounClass::PluralThing)
    }

    /// The form agreeing with this class in `slot`.
    pub fn pronoun(self, slot: Slot) -> &'static str {
        use NounClass::*;
        use Slot::*;
        match (self, slot) {
            (Masculine, Subject) => "he",
            (Masculine, Object) => "him",
            (Masculine, Possessive) => "his",
            (Masculine, Reflexive) => "himself",
            (Feminine, Subject) => "she",
            (Feminine, Object | Possessive) => "her",
            (Feminine, Reflexive) => "herself",
            (Neuter, Subject | Object) => "it",
            (Neuter, Possessive) => "its",
            (Neuter, Reflexive) => "itself",
            (PluralHuman | PluralThing, Subject) => "they",
            (PluralHuman | PluralThing, Object) => "them",
            (PluralHuman | PluralThing, Possessive) => "their",
            (PluralHuman | PluralThing, Reflexive) => "themselves",
            (c, Relative) => {
                if c.animate() {
                    "who"
                } else {
                    "which"
                }
            }
        }
    }
}

/// Templates per slot; `{N}` is the antecedent, `{P}` the pronoun, and
/// `{be}` agrees with the antecedent's number.
fn templates(slot: Slot) -> &'static [&'static str] {
    match slot {
        Slot::Subject => &[
            "The {N} {moved} {place} because {P} {be} {adj} .",
            "After the {N} {moved} {place} , {P} {be} {adj} .",
            "The {N} {moved} {place} {time} , and then {P} {moved2} {place2} .",
        ],
        Slot::Object => &[
            "When the {N} {moved} {place} , everyone {saw} {P} {time} .",
            "The {N} {moved} {place} and someone {saw} {P} .",
            "Nobody {saw} the {N} {place} , but everyone {saw2} {P} {time} .",
        ],
        Slot::Possessive => &[
            "The {N} {moved} {place} with {P} {thing} .",
            "{Time} the {N} lost {P} {thing} {place} .",
            "Everyone {saw} the {N} and {P} {thing} {place} .",
        ],
        Slot::Reflexive => &[
            "The {N} {saw} {P} in the mirror {time} .",
            "The {N} {moved} {place} by {P} {time} .",
            "{Time} the {N} {saw2} {P} {place} .",
        ],
        Slot::Relative => &[
            "The {N} {P} {moved} {place} {be} {adj} .",
            "Everyone {saw} the {N} {P} {moved} {place} .",
            "{Time} the {N} {P} {saw} everyone {moved2} {place2} .",
        ],
    }
}

const MOVED: &[&str] = &["stopped", "waited", "stayed", "fell", "turned", "rested", "appeared", "remained"];
const SAW: &[&str] = &["saw", "noticed", "found", "watched", "heard", "praised", "blamed", "followed"];
const PLACE: &[&str] = &[
    "near the gate",
    "by the river",
    "in the hall",
    "at the corner",
    "behind the wall",
    "under the bridge",
    "on the hill",
    "in the garden",
    "at the station",
    "beside the road",
];
const ADJ: &[&str] = &["tired", "old", "broken", "ready", "late", "heavy", "wet", "cold", "quiet", "famous"];
const TIME: &[&str] = &["yesterday", "today", "last night", "at noon", "in spring", "again", "once more", "at dawn"];
const THING: &[&str] = &["key", "hat", "coat", "map", "bag", "ring", "paper", "lantern"];

fn fill(template: &str, class: NounClass, noun: &str, pronoun: &str, rng: &mut ChaCha8Rng) -> String {
    let pick = |xs: &[&'static str], rng: &mut ChaCha8Rng| *xs.choose(rng).unwrap();
    let be = if class.plural() { "were" } else { "was" };
    let time = pick(TIME, rng);
    let mut cap_time = time.to_string();
    cap_time[..1].make_ascii_uppercase();
    let moved = pick(MOVED, rng);
    let moved2 = pick(MOVED, rng);
    let saw = pick(SAW, rng);
    let saw2 = pick(SAW, rng);
    let place = pick(PLACE, rng);
    let place2 = pick(PLACE, rng);
    let adj = pick(ADJ, rng);
    let thing = pick(THING, rng);
    template
        .replace("{N}", noun)
        .replace("{P}", pronoun)
        .replace("{be}", be)
        .replace("{moved2}", moved2)
        .replace("{moved}", moved)
        .replace("{saw2}", saw2)
        .replace("{saw}", saw)
        .replace("{place2}", place2)
        .replace("{place}", place)
        .replace("{adj}", adj)
        .replace("{Time}", &cap_time)
        .replace("{time}", time)
        .replace("{thing}", thing)
}

/// A wrong pronoun of the requested kind, if the kind applies.
pub fn corrupt(class: NounClass, slot: Slot, kind: ErrorKind, rng: &mut ChaCha8Rng) -> Option<&'static str> {
    use NounClass::*;
    let correct = class.pronoun(slot);
    let candidate = match kind {
        ErrorKind::Gender => match class {
            Masculine => Some(Feminine.pronoun(slot)),
            Feminine => Some(Masculine.pronoun(slot)),
            _ => None,
        },
        ErrorKind::Number => Some(match class {
            Masculine | Feminine => PluralHuman.pronoun(slot),
            Neuter => PluralThing.pronoun(slot),
            PluralHuman => [Masculine, Feminine].choose(rng).unwrap().pronoun(slot),
            PluralThing => Neuter.pronoun(slot),
        }),
        ErrorKind::Animacy => match class {
            Masculine | Feminine => Some(Neuter.pronoun(slot)),
            Neuter => Some([Masculine, Feminine].choose(rng).unwrap().pronoun(slot)),
            PluralHuman if slot == Slot::Relative => Some("which"),
            PluralThing if slot == Slot::Relative => Some("who"),
            _ => None,
        },
        ErrorKind::SyntacticRole => {
            let other = match slot {
                Slot::Subject => Slot::Object,
                Slot::Object | Slot::Possessive | Slot::Reflexive => Slot::Subject,
                Slot::Relative => return class.animate().then_some("whom"),
            };
            Some(class.pronoun(other))
        }
        ErrorKind::Other => None,
    };
    candidate.filter(|c| *c != correct)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub sentences: usize,
    pub seed: u64,
    /// Train/dev shares of the unique sentences; the rest is test.
    pub train_share: f64,
    pub dev_share: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig { sentences: 6000, seed: 7, train_share: 0.8, dev_share: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub train: Vec<RankingPair>,
    pub dev: Vec<RankingPair>,
    pub test: Vec<RankingPair>,
}

impl SyntheticCorpus {
    pub fn unique_sentences(&self) -> usize {
        [&self.train, &self.dev, &self.test]
            .iter()
            .flat_map(|s| s.iter().map(|p| p.reference.as_str()))
            .collect::<HashSet<_>>()
            .len()
    }
}

const KINDS: [ErrorKind; 4] = [ErrorKind::Gender, ErrorKind::Number, ErrorKind::Animacy, ErrorKind::SyntacticRole];

/// Generates `cfg.sentences` distinct correct sentences, pairs each with a
/// corrupted copy, and splits the pairs by sentence.
pub fn generate(cfg: &SyntheticConfig) -> Result<SyntheticCorpus> {
    if cfg.sentences < 3 || !(0.0..1.0).contains(&(cfg.train_share + cfg.dev_share)) {
        return Err(Error::Invalid("need at least 3 sentences and shares summing below 1".into()));
    }
    let lex = PronounLexicon::english();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut seen = HashSet::new();
    let mut pairs = Vec::with_capacity(cfg.sentences);
    let mut attempts = 0usize;
    while pairs.len() < cfg.sentences {
        attempts += 1;
        if attempts > cfg.sentences * 50 {
            return Err(Error::Invalid(format!("could not find {} distinct sentences", cfg.sentences)));
        }
        let class = *CLASSES.choose(&mut rng).unwrap();
        let slot = *SLOTS.choose(&mut rng).unwrap();
        let noun = *class.nouns().choose(&mut rng).unwrap();
        let template = *templates(slot).choose(&mut rng).unwrap();
        let kinds: Vec<(ErrorKind, &str)> = KINDS
            .iter()
            .filter_map(|&k| corrupt(class, slot, k, &mut rng).map(|c| (k, c)))
            .collect();
        let Some(&(_, wrong)) = kinds.choose(&mut rng) else { continue };
        let mut fill_rng = ChaCha8Rng::seed_from_u64(rng.gen());
        let reference = fill(template, class, noun, class.pronoun(slot), &mut fill_rng.clone());
        let sys = fill(template, class, noun, wrong, &mut fill_rng);
        if !seen.insert(reference.clone()) {
            continue;
        }
        let r = SentenceRec::new(0, 0, &reference);
        let s = SentenceRec::new(0, 0, &sys);
        pairs.push(RankingPair {
            id: format!("syn{}", pairs.len()),
            lang_pair: "synthetic".into(),
            ref_context: vec![],
            reference,
            sys_context: vec![],
            sys,
            ref_pronouns: pronoun_indices(&r, &lex),
            sys_pronouns: pronoun_indices(&s, &lex),
            mismatch_forms: vec![(class.pronoun(slot).to_string(), wrong.to_string())],
            source_text: None,
            label: PairLabel::RefBetter,
            highlight_spans: vec![],
        });
    }
    let n = pairs.len();
    let n_train = (n as f64 * cfg.train_share).round() as usize;
    let n_dev = (n as f64 * cfg.dev_share).round() as usize;
    let test = pairs.split_off(n_train + n_dev);
    let dev = pairs.split_off(n_train);
    Ok(SyntheticCorpus { train: pairs, dev, test })
}
