//! JSONL label files: one `{"text": ..., "label": ...}` object per line.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SentimentLabel;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}:{line}: {reason}")]
    Parse {
        path: String,
        line: usize,
        reason: String,
    },
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledStatement {
    pub text: String,
    pub label: SentimentLabel,
}

impl LabeledStatement {
    pub fn new(text: impl Into<String>, label: SentimentLabel) -> Self {
        Self {
            text: text.into(),
            label,
        }
    }
}

/// A label record whose text is optional (evaluation inputs).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub label: SentimentLabel,
}

fn parse_lines<T: for<'de> Deserialize<'de>>(
    text: &str,
    path: &str,
    mut check: impl FnMut(&T) -> Result<(), String>,
) -> Result<Vec<T>, DatasetError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |reason: String| DatasetError::Parse {
            path: path.to_string(),
            line: i + 1,
            reason,
        };
        let record: T = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        check(&record).map_err(err)?;
        out.push(record);
    }
    Ok(out)
}

fn read(path: &Path) -> Result<String, DatasetError> {
    fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

pub fn parse_training_jsonl(text: &str, path: &str) -> Result<Vec<LabeledStatement>, DatasetError> {
    parse_lines(text, path, |r: &LabeledStatement| {
        if r.text.trim().is_empty() {
            Err("text is empty".into())
        } else {
            Ok(())
        }
    })
}

pub fn load_training_jsonl(path: &Path) -> Result<Vec<LabeledStatement>, DatasetError> {
    parse_training_jsonl(&read(path)?, &path.display().to_string())
}

pub fn parse_label_jsonl(text: &str, path: &str) -> Result<Vec<LabelRecord>, DatasetError> {
    parse_lines(text, path, |_: &LabelRecord| Ok(()))
}

pub fn load_label_jsonl(path: &Path) -> Result<Vec<LabelRecord>, DatasetError> {
    parse_label_jsonl(&read(path)?, &path.display().to_string())
}
