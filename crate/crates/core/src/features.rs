//! Tokenization, sentiment lexicons and the fixed feature vector.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::de::{self, MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("lexicon has no entries")]
    Empty,
    #[error("word {0:?} is both a lexicon entry and a negator")]
    NegatorOverlap(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Feature names in model order. Changing this order breaks model files.
pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "pos_count",
    "neg_count",
    "polarity_sum",
    "negation_count",
    "token_count",
    "avg_token_len",
    "exclamation_count",
    "question_count",
    "elongation_count",
    "allcaps_ratio",
];

pub const FEATURE_COUNT: usize = 10;

pub fn feature_index(name: &str) -> Option<usize> {
    FEATURE_NAMES.iter().position(|n| *n == name)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Token(String);

impl Token {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tokenized {
    pub tokens: Vec<Token>,
    pub exclamation_count: usize,
    pub question_count: usize,
    pub allcaps_ratio: f64,
}

pub fn tokenize(text: &str) -> Tokenized {
    let mut out = Tokenized::default();
    let mut alphabetic = 0usize;
    let mut shouted = 0usize;

    for raw in text.split_whitespace() {
        out.exclamation_count += raw.matches('!').count();
        out.question_count += raw.matches('?').count();

        let stripped = raw.trim_matches(|c: char| !c.is_alphanumeric());
        if stripped.is_empty() {
            continue;
        }
        if stripped.chars().all(char::is_alphabetic) {
            alphabetic += 1;
            if stripped.chars().count() >= 2 && stripped.chars().all(char::is_uppercase) {
                shouted += 1;
            }
        }
        out.tokens.push(Token(stripped.to_lowercase()));
    }

    if alphabetic > 0 {
        out.allcaps_ratio = shouted as f64 / alphabetic as f64;
    }
    out
}

/// Word polarity table plus the negators that flip the next token.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    name: String,
    language: String,
    entries: BTreeMap<String, f64>,
    negators: BTreeSet<String>,
}

impl Lexicon {
    pub fn new(
        name: impl Into<String>,
        language: impl Into<String>,
        entries: impl IntoIterator<Item = (String, f64)>,
        negators: impl IntoIterator<Item = String>,
    ) -> Result<Self, LexiconError> {
        let entries: BTreeMap<String, f64> = entries
            .into_iter()
            .map(|(w, s)| (w.to_lowercase(), s))
            .collect();
        let negators: BTreeSet<String> = negators.into_iter().map(|w| w.to_lowercase()).collect();
        if entries.is_empty() {
            return Err(LexiconError::Empty);
        }
        if let Some(w) = negators.iter().find(|w| entries.contains_key(*w)) {
            return Err(LexiconError::NegatorOverlap(w.clone()));
        }
        Ok(Self {
            name: name.into(),
            language: language.into(),
            entries,
            negators,
        })
    }

    /// Loads `word<TAB>score` lines and an optional negator list (one word per
    /// line). Blank lines and lines starting with `#` are ignored in both.
    pub fn load(tsv: &Path, negators: Option<&Path>) -> Result<Self, LexiconError> {
        let read = |p: &Path| {
            fs::read_to_string(p).map_err(|source| LexiconError::Io {
                path: p.display().to_string(),
                source,
            })
        };
        let tsv_text = read(tsv)?;
        let entries = parse_tsv(&tsv_text, &tsv.display().to_string())?;
        let negator_words = match negators {
            Some(p) => parse_word_list(&read(p)?),
            None => Vec::new(),
        };
        let name = tsv
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "lexicon".into());
        Self::new(name, "unknown", entries, negator_words)
    }

    /// Small German lexicon for tests and demos.
    pub fn builtin() -> Self {
        Self::new(
            BUILTIN_NAME,
            "de",
            BUILTIN_ENTRIES.iter().map(|(w, s)| (w.to_string(), *s)),
            BUILTIN_NEGATORS.iter().map(|w| w.to_string()),
        )
        .expect("builtin lexicon is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn language(&self) -> &str {
        &self.language
    }

    pub fn score(&self, word: &str) -> Option<f64> {
        self.entries.get(word).copied()
    }

    pub fn is_negator(&self, word: &str) -> bool {
        self.negators.contains(word)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

fn parse_tsv(text: &str, path: &str) -> Result<Vec<(String, f64)>, LexiconError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: &str| LexiconError::Parse {
            path: path.to_string(),
            line: i + 1,
            reason: reason.to_string(),
        };
        let (word, score) = line.split_once('\t').ok_or_else(|| err("expected word<TAB>score"))?;
        let word = word.trim();
        if word.is_empty() || word.contains(char::is_whitespace) {
            return Err(err("word must be a single non-empty token"));
        }
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| err("score is not a number"))?;
        if !score.is_finite() {
            return Err(err("score must be finite"));
        }
        out.push((word.to_string(), score));
    }
    Ok(out)
}

fn parse_word_list(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub const BUILTIN_NAME: &str = "builtin-de";

const BUILTIN_NEGATORS: &[&str] = &["nicht", "kein", "keine", "keinen", "nie", "niemals", "nichts"];

const BUILTIN_ENTRIES: &[(&str, f64)] = &[
    ("gut", 1.0),
    ("super", 1.0),
    ("toll", 1.0),
    ("prima", 1.0),
    ("klasse", 1.0),
    ("perfekt", 1.0),
    ("hervorragend", 1.0),
    ("genial", 1.0),
    ("schön", 0.8),
    ("danke", 0.6),
    ("freut", 0.7),
    ("gerne", 0.5),
    ("einverstanden", 0.5),
    ("richtig", 0.5),
    ("stimmt", 0.4),
    ("klappt", 0.6),
    ("funktioniert", 0.5),
    ("hilfreich", 0.7),
    ("spannend", 0.6),
    ("cool", 0.8),
    ("schlecht", -1.0),
    ("schlimm", -1.0),
    ("furchtbar", -1.0),
    ("schrecklich", -1.0),
    ("mist", -1.0),
    ("blöd", -0.8),
    ("falsch", -0.6),
    ("fehler", -0.5),
    ("problem", -0.5),
    ("probleme", -0.5),
    ("kaputt", -0.8),
    ("nervig", -0.8),
    ("ärgerlich", -0.8),
    ("schwierig", -0.4),
    ("leider", -0.5),
    ("langsam", -0.3),
    ("chaos", -0.7),
    ("unklar", -0.4),
    ("stress", -0.6),
    ("verspätet", -0.5),
];

/// The fixed, ordered set of numeric features for one statement.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector {
    values: [f64; FEATURE_COUNT],
}

impl FeatureVector {
    pub fn from_values(values: [f64; FEATURE_COUNT]) -> Self {
        Self { values }
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.values[i])
    }

    pub fn set(&mut self, name: &str, value: f64) -> bool {
        match feature_index(name) {
            Some(i) => {
                self.values[i] = value;
                true
            }
            None => false,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> + '_ {
        FEATURE_NAMES.iter().copied().zip(self.values.iter().copied())
    }

    pub fn pos_count(&self) -> f64 {
        self.values[0]
    }
    pub fn neg_count(&self) -> f64 {
        self.values[1]
    }
    pub fn polarity_sum(&self) -> f64 {
        self.values[2]
    }
    pub fn negation_count(&self) -> f64 {
        self.values[3]
    }
    pub fn token_count(&self) -> f64 {
        self.values[4]
    }
}

impl Serialize for FeatureVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(FEATURE_COUNT))?;
        for (name, value) in self.iter() {
            map.serialize_entry(name, &value)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for FeatureVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct FvVisitor;
        impl<'de> Visitor<'de> for FvVisitor {
            type Value = FeatureVector;
            fn expecting(&self, f: &mut std::fmt::Formatter) -> std::fmt::Result {
                f.write_str("a map of feature name to number")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
                let mut values = [None; FEATURE_COUNT];
                while let Some((name, value)) = access.next_entry::<String, f64>()? {
                    let i = feature_index(&name)
                        .ok_or_else(|| de::Error::custom(format!("unknown feature {name:?}")))?;
                    values[i] = Some(value);
                }
                let mut out = [0.0; FEATURE_COUNT];
                for (i, v) in values.iter().enumerate() {
                    out[i] = v.ok_or_else(|| de::Error::missing_field(FEATURE_NAMES[i]))?;
                }
                Ok(FeatureVector::from_values(out))
            }
        }
        deserializer.deserialize_map(FvVisitor)
    }
}

fn is_elongated(word: &str) -> bool {
    let mut run = 0;
    let mut prev = None;
    for c in word.chars() {
        if c.is_alphabetic() && Some(c) == prev {
            run += 1;
            if run >= 3 {
                return true;
            }
        } else {
            run = 1;
        }
        prev = Some(c);
    }
    false
}

pub fn extract_features(text: &str, lexicon: &Lexicon) -> FeatureVector {
    let tok = tokenize(text);
    let mut pos = 0usize;
    let mut neg = 0usize;
    let mut polarity = 0.0;
    let mut negations = 0usize;
    let mut elongated = 0usize;
    let mut chars = 0usize;
    let mut negate_next = false;

    for token in &tok.tokens {
        let word = token.as_str();
        chars += word.chars().count();
        if is_elongated(word) {
            elongated += 1;
        }
        if let Some(score) = lexicon.score(word) {
            let score = if negate_next { -score } else { score };
            polarity += score;
            if score > 0.0 {
                pos += 1;
            } else if score < 0.0 {
                neg += 1;
            }
        }
        negate_next = lexicon.is_negator(word);
        if negate_next {
            negations += 1;
        }
    }

    let n = tok.tokens.len();
    let avg_len = if n == 0 { 0.0 } else { chars as f64 / n as f64 };
    FeatureVector::from_values([
        pos as f64,
        neg as f64,
        polarity,
        negations as f64,
        n as f64,
        avg_len,
        tok.exclamation_count as f64,
        tok.question_count as f64,
        elongated as f64,
        tok.allcaps_ratio,
    ])
}
