//! Linear polarity model with a neutral band between two thresholds.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::features::{feature_index, FeatureVector, FEATURE_COUNT, FEATURE_NAMES};

pub const MODEL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("model schema version {found} is not supported (expected {MODEL_SCHEMA_VERSION})")]
    SchemaVersionMismatch { found: String },
    #[error("malformed model file: {0}")]
    MalformedModelFile(String),
    #[error("feature mismatch: {0}")]
    FeatureMismatch(String),
    #[error("invalid model: {0}")]
    Invalid(String),
    #[error("cannot access model file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentLabel {
    Positive,
    Neutral,
    Negative,
}

impl SentimentLabel {
    pub const ALL: [SentimentLabel; 3] = [
        SentimentLabel::Positive,
        SentimentLabel::Neutral,
        SentimentLabel::Negative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentLabel::Positive => "positive",
            SentimentLabel::Neutral => "neutral",
            SentimentLabel::Negative => "negative",
        }
    }

    /// Column/row position in confusion and rating matrices.
    pub fn ordinal(self) -> usize {
        match self {
            SentimentLabel::Positive => 0,
            SentimentLabel::Neutral => 1,
            SentimentLabel::Negative => 2,
        }
    }
}

impl fmt::Display for SentimentLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentLabel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(SentimentLabel::Positive),
            "neutral" => Ok(SentimentLabel::Neutral),
            "negative" => Ok(SentimentLabel::Negative),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMetadata {
    pub generations: u32,
    pub seed: u64,
    pub train_fitness: f64,
    pub created_at: String,
}

impl Default for ModelMetadata {
    fn default() -> Self {
        Self {
            generations: 0,
            seed: 0,
            train_fitness: 0.0,
            created_at: "1970-01-01T00:00:00Z".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarityModel {
    pub weights: [f64; FEATURE_COUNT],
    pub threshold_pos: f64,
    pub threshold_neg: f64,
    pub lexicon_name: String,
    pub metadata: ModelMetadata,
}

impl PolarityModel {
    /// All weights zero, both thresholds zero: classifies everything Neutral.
    pub fn zeros(lexicon_name: impl Into<String>) -> Self {
        Self {
            weights: [0.0; FEATURE_COUNT],
            threshold_pos: 0.0,
            threshold_neg: 0.0,
            lexicon_name: lexicon_name.into(),
            metadata: ModelMetadata::default(),
        }
    }

    pub fn weight(&self, name: &str) -> Option<f64> {
        feature_index(name).map(|i| self.weights[i])
    }

    pub fn set_weight(&mut self, name: &str, value: f64) -> Result<(), ModelError> {
        let i = feature_index(name)
            .ok_or_else(|| ModelError::FeatureMismatch(format!("unknown feature {name:?}")))?;
        self.weights[i] = value;
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.weights.iter().any(|w| !w.is_finite())
            || !self.threshold_pos.is_finite()
            || !self.threshold_neg.is_finite()
        {
            return Err(ModelError::Invalid("non-finite parameter".into()));
        }
        if self.threshold_neg > self.threshold_pos {
            return Err(ModelError::Invalid(format!(
                "threshold_neg {} exceeds threshold_pos {}",
                self.threshold_neg, self.threshold_pos
            )));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&ModelFileOut { model: self })
            .expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let value: serde_json::Value = serde_json::from_str(text)
            .map_err(|e| ModelError::MalformedModelFile(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| ModelError::MalformedModelFile("top level is not an object".into()))?;
        match obj.get("schema_version") {
            None => {
                return Err(ModelError::MalformedModelFile(
                    "missing field `schema_version`".into(),
                ))
            }
            Some(v) if v.as_u64() == Some(MODEL_SCHEMA_VERSION as u64) => {}
            Some(v) => {
                return Err(ModelError::SchemaVersionMismatch {
                    found: v.to_string(),
                })
            }
        }
        let raw: ModelFileIn = serde_json::from_value(value)
            .map_err(|e| ModelError::MalformedModelFile(e.to_string()))?;

        let mut weights = [0.0; FEATURE_COUNT];
        let mut seen = [false; FEATURE_COUNT];
        for (name, w) in &raw.weights {
            let i = feature_index(name)
                .ok_or_else(|| ModelError::FeatureMismatch(format!("unknown feature {name:?}")))?;
            weights[i] = *w;
            seen[i] = true;
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(ModelError::FeatureMismatch(format!(
                "missing weight for {:?}",
                FEATURE_NAMES[i]
            )));
        }
        let model = PolarityModel {
            weights,
            threshold_pos: raw.threshold_pos,
            threshold_neg: raw.threshold_neg,
            lexicon_name: raw.lexicon_name,
            metadata: raw.metadata,
        };
        model.validate()?;
        Ok(model)
    }

    /// SHA-256 of the canonical file encoding, hex.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.to_json().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

struct WeightMap<'a>(&'a [f64; FEATURE_COUNT]);

impl Serialize for WeightMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(FEATURE_COUNT))?;
        for (name, w) in FEATURE_NAMES.iter().zip(self.0) {
            map.serialize_entry(name, w)?;
        }
        map.end()
    }
}

struct ModelFileOut<'a> {
    model: &'a PolarityModel,
}

impl Serialize for ModelFileOut<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let m = self.model;
        let mut map = serializer.serialize_map(Some(6))?;
        map.serialize_entry("schema_version", &MODEL_SCHEMA_VERSION)?;
        map.serialize_entry("weights", &WeightMap(&m.weights))?;
        map.serialize_entry("threshold_pos", &m.threshold_pos)?;
        map.serialize_entry("threshold_neg", &m.threshold_neg)?;
        map.serialize_entry("lexicon_name", &m.lexicon_name)?;
        map.serialize_entry("metadata", &m.metadata)?;
        map.end()
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFileIn {
    #[allow(dead_code)]
    schema_version: u32,
    weights: BTreeMap<String, f64>,
    threshold_pos: f64,
    threshold_neg: f64,
    lexicon_name: String,
    metadata: ModelMetadata,
}

/// Dot product of weights and feature values.
pub fn score(model: &PolarityModel, fv: &FeatureVector) -> f64 {
    model
        .weights
        .iter()
        .zip(fv.values())
        .map(|(w, x)| w * x)
        .sum()
}

/// Scores landing exactly on a threshold are Neutral.
pub fn classify(model: &PolarityModel, fv: &FeatureVector) -> SentimentLabel {
    label_for_score(model, score(model, fv))
}

pub fn label_for_score(model: &PolarityModel, score: f64) -> SentimentLabel {
    if score > model.threshold_pos {
        SentimentLabel::Positive
    } else if score < model.threshold_neg {
        SentimentLabel::Negative
    } else {
        SentimentLabel::Neutral
    }
}

/// Writes the model via a sibling temp file and rename, so a failed write
/// never leaves a partial model behind.
pub fn save_model(model: &PolarityModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    model.validate()?;
    write_atomic(path.as_ref(), model.to_json().as_bytes())?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<PolarityModel, ModelError> {
    let text = fs::read_to_string(path)?;
    PolarityModel::from_json(&text)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}
