//! English pronoun lexicon and the error-dimension table between forms.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{SentenceRec, Token};
use crate::error::{read_utf8, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    PersonalSubject,
    PersonalObject,
    Possessive,
    Reflexive,
    Demonstrative,
    RelativeWh,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::PersonalSubject => "personal-subject",
            Category::PersonalObject => "personal-object",
            Category::Possessive => "possessive",
            Category::Reflexive => "reflexive",
            Category::Demonstrative => "demonstrative",
            Category::RelativeWh => "relative-wh",
        }
    }
}

impl FromStr for Category {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "personal-subject" => Category::PersonalSubject,
            "personal-object" => Category::PersonalObject,
            "possessive" => Category::Possessive,
            "reflexive" => Category::Reflexive,
            "demonstrative" => Category::Demonstrative,
            "relative-wh" => Category::RelativeWh,
            other => return Err(format!("unknown pronoun category `{other}`")),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorKind {
    Gender,
    Number,
    Animacy,
    SyntacticRole,
    Other,
}

impl ErrorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorKind::Gender => "gender",
            ErrorKind::Number => "number",
            ErrorKind::Animacy => "animacy",
            ErrorKind::SyntacticRole => "syntactic-role",
            ErrorKind::Other => "other",
        }
    }
}

impl fmt::Display for ErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ErrorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "gender" => ErrorKind::Gender,
            "number" => ErrorKind::Number,
            "animacy" => ErrorKind::Animacy,
            "syntactic-role" => ErrorKind::SyntacticRole,
            "other" => ErrorKind::Other,
            other => return Err(format!("unknown error kind `{other}`")),
        })
    }
}

/// Grammatical features used to derive the default error-dimension table.
#[derive(Clone, Copy)]
struct Features {
    person: u8,
    /// `None` when the form is unmarked for number (`you`).
    plural: Option<bool>,
    gender: Gender,
    role: Role,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Gender {
    Masc,
    Fem,
    Neut,
    Unmarked,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Subject,
    Object,
    SubjectOrObject,
    PossessiveDet,
    PossessivePronoun,
    PossessiveAny,
    SelfRef,
    Deictic,
    RelativeAnimate,
    RelativeInanimate,
    RelativeAnimateObject,
    RelativePossessive,
}

#[rustfmt::skip]
const BUILTIN: &[(&str, &[Category], Features)] = {
    use Category::*;
    use Gender::*;
    use Role::*;
    const fn f(person: u8, plural: Option<bool>, gender: Gender, role: Role) -> Features {
        Features { person, plural, gender, role }
    }
    const SG: Option<bool> = Some(false);
    const PL: Option<bool> = Some(true);
    &[
        ("i", &[PersonalSubject], f(1, SG, Unmarked, Subject)),
        ("we", &[PersonalSubject], f(1, PL, Unmarked, Subject)),
        ("you", &[PersonalSubject, PersonalObject], f(2, None, Unmarked, SubjectOrObject)),
        ("he", &[PersonalSubject], f(3, SG, Masc, Subject)),
        ("she", &[PersonalSubject], f(3, SG, Fem, Subject)),
        ("it", &[PersonalSubject, PersonalObject], f(3, SG, Neut, SubjectOrObject)),
        ("they", &[PersonalSubject], f(3, PL, Unmarked, Subject)),
        ("me", &[PersonalObject], f(1, SG, Unmarked, Object)),
        ("us", &[PersonalObject], f(1, PL, Unmarked, Object)),
        ("him", &[PersonalObject], f(3, SG, Masc, Object)),
        ("her", &[PersonalObject, Possessive], f(3, SG, Fem, Object)),
        ("them", &[PersonalObject], f(3, PL, Unmarked, Object)),
        ("my", &[Possessive], f(1, SG, Unmarked, PossessiveDet)),
        ("our", &[Possessive], f(1, PL, Unmarked, PossessiveDet)),
        ("your", &[Possessive], f(2, None, Unmarked, PossessiveDet)),
        ("his", &[Possessive], f(3, SG, Masc, PossessiveAny)),
        ("its", &[Possessive], f(3, SG, Neut, PossessiveDet)),
        ("their", &[Possessive], f(3, PL, Unmarked, PossessiveDet)),
        ("mine", &[Possessive], f(1, SG, Unmarked, PossessivePronoun)),
        ("ours", &[Possessive], f(1, PL, Unmarked, PossessivePronoun)),
        ("yours", &[Possessive], f(2, None, Unmarked, PossessivePronoun)),
        ("hers", &[Possessive], f(3, SG, Fem, PossessivePronoun)),
        ("theirs", &[Possessive], f(3, PL, Unmarked, PossessivePronoun)),
        ("myself", &[Reflexive], f(1, SG, Unmarked, SelfRef)),
        ("ourselves", &[Reflexive], f(1, PL, Unmarked, SelfRef)),
        ("yourself", &[Reflexive], f(2, SG, Unmarked, SelfRef)),
        ("yourselves", &[Reflexive], f(2, PL, Unmarked, SelfRef)),
        ("himself", &[Reflexive], f(3, SG, Masc, SelfRef)),
        ("herself", &[Reflexive], f(3, SG, Fem, SelfRef)),
        ("itself", &[Reflexive], f(3, SG, Neut, SelfRef)),
        ("themselves", &[Reflexive], f(3, PL, Unmarked, SelfRef)),
        ("this", &[Demonstrative], f(3, SG, Neut, Deictic)),
        ("that", &[Demonstrative], f(3, SG, Neut, Deictic)),
        ("these", &[Demonstrative], f(3, PL, Neut, Deictic)),
        ("those", &[Demonstrative], f(3, PL, Neut, Deictic)),
        ("who", &[RelativeWh], f(3, None, Unmarked, RelativeAnimate)),
        ("whom", &[RelativeWh], f(3, None, Unmarked, RelativeAnimateObject)),
        ("whose", &[RelativeWh], f(3, None, Unmarked, RelativePossessive)),
        ("which", &[RelativeWh], f(3, None, Neut, RelativeInanimate)),
    ]
};

fn is_relative(r: Role) -> bool {
    matches!(
        r,
        Role::RelativeAnimate | Role::RelativeInanimate | Role::RelativeAnimateObject | Role::RelativePossessive
    )
}

fn derive_kind(a: Features, b: Features) -> ErrorKind {
    if is_relative(a.role) && is_relative(b.role) {
        let inanimate = |r| r == Role::RelativeInanimate;
        return if inanimate(a.role) != inanimate(b.role) {
            ErrorKind::Animacy
        } else {
            ErrorKind::SyntacticRole
        };
    }
    if is_relative(a.role) != is_relative(b.role) {
        return ErrorKind::Other;
    }
    let demonstrative = |f: Features| f.role == Role::Deictic;
    if demonstrative(a) != demonstrative(b) {
        return ErrorKind::Other;
    }
    if a.person != b.person {
        return ErrorKind::Other;
    }
    if let (Some(pa), Some(pb)) = (a.plural, b.plural) {
        if pa != pb {
            return ErrorKind::Number;
        }
    }
    if a.gender != b.gender && a.gender != Gender::Unmarked && b.gender != Gender::Unmarked {
        return ErrorKind::Gender;
    }
    if demonstrative(a) {
        // this/that and these/those: same features, different proximity
        return ErrorKind::Other;
    }
    if a.role != b.role {
        return ErrorKind::SyntacticRole;
    }
    ErrorKind::Other
}

fn ordered_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronounLexicon {
    entries: BTreeMap<String, BTreeSet<Category>>,
    /// Keys are stored with the lexicographically smaller form first.
    error_dimension: BTreeMap<(String, String), ErrorKind>,
}

impl Default for PronounLexicon {
    fn default() -> Self {
        Self::english()
    }
}

impl PronounLexicon {
    /// The built-in closed-class English list, with error kinds derived from
    /// person, number, gender, animacy and syntactic role.
    pub fn english() -> Self {
        let entries = BUILTIN
            .iter()
            .map(|(form, cats, _)| (form.to_string(), cats.iter().copied().collect()))
            .collect();
        let mut error_dimension = BTreeMap::new();
        for (i, (fa, _, a)) in BUILTIN.iter().enumerate() {
            for (fb, _, b) in &BUILTIN[i + 1..] {
                error_dimension.insert(ordered_key(fa, fb), derive_kind(*a, *b));
            }
        }
        PronounLexicon {
            entries,
            error_dimension,
        }
    }

    pub fn from_entries(entries: BTreeMap<String, BTreeSet<Category>>) -> Self {
        PronounLexicon {
            entries,
            error_dimension: BTreeMap::new(),
        }
    }

    /// Loads `form<TAB>category[,category...]` lines; `#` starts a comment.
    /// A form may appear on one line only.
    pub fn load(path: &Path) -> Result<Self> {
        let text = read_utf8(path)?;
        let mut entries: BTreeMap<String, BTreeSet<Category>> = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (form, cats) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(path, n + 1, "expected `form<TAB>category`"))?;
            let form = form.trim().to_lowercase();
            let set = cats
                .split(',')
                .map(|c| c.trim().parse::<Category>())
                .collect::<Result<BTreeSet<_>, _>>()
                .map_err(|m| Error::parse(path, n + 1, m))?;
            if entries.insert(form.clone(), set).is_some() {
                return Err(Error::parse(path, n + 1, format!("duplicate form `{form}`")));
            }
        }
        Ok(Self::from_entries(entries))
    }

    /// Loads `form_a<TAB>form_b<TAB>kind` lines into the error-dimension table,
    /// replacing existing entries for the same (unordered) pair.
    pub fn load_error_dimensions(&mut self, path: &Path) -> Result<()> {
        let text = read_utf8(path)?;
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 3 {
                return Err(Error::parse(path, n + 1, "expected `form_a<TAB>form_b<TAB>kind`"));
            }
            let kind = cols[2].trim().parse().map_err(|m: String| Error::parse(path, n + 1, m))?;
            self.set_error_kind(&cols[0].trim().to_lowercase(), &cols[1].trim().to_lowercase(), kind);
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (form, cats) in &self.entries {
            let cats: Vec<&str> = cats.iter().map(|c| c.as_str()).collect();
            out.push_str(&format!("{form}\t{}\n", cats.join(",")));
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn contains(&self, lower: &str) -> bool {
        self.entries.contains_key(lower)
    }

    pub fn categories(&self, lower: &str) -> Option<&BTreeSet<Category>> {
        self.entries.get(lower)
    }

    pub fn forms(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn error_kind(&self, a: &str, b: &str) -> Option<ErrorKind> {
        self.error_dimension.get(&ordered_key(a, b)).copied()
    }

    pub fn set_error_kind(&mut self, a: &str, b: &str, kind: ErrorKind) {
        self.error_dimension.insert(ordered_key(a, b), kind);
    }

    pub fn is_pronoun(&self, token: &Token) -> bool {
        self.contains(&token.lower)
    }
}

/// Positions of the tokens whose case-folded form is in the lexicon.
pub fn pronoun_indices(sentence: &SentenceRec, lexicon: &PronounLexicon) -> Vec<usize> {
    sentence
        .tokens
        .iter()
        .enumerate()
        .filter(|(_, t)| lexicon.is_pronoun(t))
        .map(|(i, _)| i)
        .collect()
}
