//! Accuracy, confusion matrices, class distributions and Fleiss' kappa.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::SentimentLabel;

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("kappa undefined: all assignments fall in one category")]
    DegenerateMatrix,
    #[error("invalid rating matrix: {0}")]
    InvalidMatrix(String),
}

const K: usize = 3;

/// `counts[i][j]` = raters assigning item `i` to category `j`, with categories
/// ordered Positive, Neutral, Negative.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RatingMatrix {
    n_raters: usize,
    counts: Vec<[usize; K]>,
}

impl RatingMatrix {
    pub fn new(counts: Vec<[usize; K]>) -> Result<Self, EvalError> {
        let first = counts.first().ok_or(EvalError::EmptyInput)?;
        let n_raters: usize = first.iter().sum();
        if n_raters < 2 {
            return Err(EvalError::InvalidMatrix("need at least two raters".into()));
        }
        if let Some(i) = counts.iter().position(|r| r.iter().sum::<usize>() != n_raters) {
            return Err(EvalError::InvalidMatrix(format!(
                "row {i} does not sum to {n_raters} raters"
            )));
        }
        Ok(Self { n_raters, counts })
    }

    /// Builds the matrix from per-rater label lists of equal length.
    pub fn from_raters(raters: &[&[SentimentLabel]]) -> Result<Self, EvalError> {
        let first = raters.first().ok_or(EvalError::EmptyInput)?;
        for r in raters {
            if r.len() != first.len() {
                return Err(EvalError::LengthMismatch {
                    left: first.len(),
                    right: r.len(),
                });
            }
        }
        if first.is_empty() {
            return Err(EvalError::EmptyInput);
        }
        let counts = (0..first.len())
            .map(|i| {
                let mut row = [0; K];
                for r in raters {
                    row[r[i].ordinal()] += 1;
                }
                row
            })
            .collect();
        Self::new(counts)
    }

    pub fn n_items(&self) -> usize {
        self.counts.len()
    }

    pub fn n_raters(&self) -> usize {
        self.n_raters
    }

    pub fn counts(&self) -> &[[usize; K]] {
        &self.counts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KappaInterpretation {
    Poor,
    Slight,
    Fair,
    Moderate,
    Substantial,
    AlmostPerfect,
}

impl KappaInterpretation {
    /// Landis and Koch bands with closed upper bounds.
    pub fn from_kappa(kappa: f64) -> Self {
        if kappa < 0.0 {
            Self::Poor
        } else if kappa <= 0.20 {
            Self::Slight
        } else if kappa <= 0.40 {
            Self::Fair
        } else if kappa <= 0.60 {
            Self::Moderate
        } else if kappa <= 0.80 {
            Self::Substantial
        } else {
            Self::AlmostPerfect
        }
    }
}

impl fmt::Display for KappaInterpretation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Poor => "Poor",
            Self::Slight => "Slight",
            Self::Fair => "Fair",
            Self::Moderate => "Moderate",
            Self::Substantial => "Substantial",
            Self::AlmostPerfect => "Almost perfect",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaResult {
    pub p_bar: f64,
    pub p_e: f64,
    pub kappa: f64,
    pub interpretation: KappaInterpretation,
}

pub fn fleiss_kappa(m: &RatingMatrix) -> Result<KappaResult, EvalError> {
    let n_items = m.n_items() as f64;
    let n = m.n_raters as f64;

    let mut column_totals = [0usize; K];
    for row in &m.counts {
        for (t, c) in column_totals.iter_mut().zip(row) {
            *t += c;
        }
    }
    let p_e: f64 = column_totals
        .iter()
        .map(|&t| {
            let p = t as f64 / (n_items * n);
            p * p
        })
        .sum();

    let p_bar = m
        .counts
        .iter()
        .map(|row| {
            let pairs: usize = row.iter().map(|&c| c * c.saturating_sub(1)).sum();
            pairs as f64 / (n * (n - 1.0))
        })
        .sum::<f64>()
        / n_items;

    // P_e reaches 1 only when a single column holds every assignment
    if column_totals.iter().filter(|&&t| t > 0).count() <= 1 {
        return Err(EvalError::DegenerateMatrix);
    }
    let kappa = (p_bar - p_e) / (1.0 - p_e);
    Ok(KappaResult {
        p_bar,
        p_e,
        kappa,
        interpretation: KappaInterpretation::from_kappa(kappa),
    })
}

fn check_pair(pred: &[SentimentLabel], truth: &[SentimentLabel]) -> Result<(), EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            left: pred.len(),
            right: truth.len(),
        });
    }
    if pred.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(())
}

pub fn accuracy(pred: &[SentimentLabel], truth: &[SentimentLabel]) -> Result<f64, EvalError> {
    check_pair(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Rows are truth, columns are predictions, both in Positive/Neutral/Negative order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix(pub [[usize; K]; K]);

impl ConfusionMatrix {
    pub fn get(&self, truth: SentimentLabel, pred: SentimentLabel) -> usize {
        self.0[truth.ordinal()][pred.ordinal()]
    }
}

pub fn confusion(
    pred: &[SentimentLabel],
    truth: &[SentimentLabel],
) -> Result<ConfusionMatrix, EvalError> {
    check_pair(pred, truth)?;
    let mut m = ConfusionMatrix::default();
    for (p, t) in pred.iter().zip(truth) {
        m.0[t.ordinal()][p.ordinal()] += 1;
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub label: SentimentLabel,
    pub count: usize,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionTable {
    pub rows: Vec<DistributionRow>,
    pub total: usize,
}

impl DistributionTable {
    pub fn count(&self, label: SentimentLabel) -> usize {
        self.rows.iter().find(|r| r.label == label).map_or(0, |r| r.count)
    }

    pub fn percent(&self, label: SentimentLabel) -> f64 {
        self.rows.iter().find(|r| r.label == label).map_or(0.0, |r| r.percent)
    }

    /// `"neutral 124 (88.6%)"`-style line for one label.
    pub fn format_row(&self, label: SentimentLabel) -> String {
        format!("{} {} ({:.1}%)", label, self.count(label), self.percent(label))
    }
}

pub fn round1(x: f64) -> f64 {
    (x * 10.0).round() / 10.0
}

pub fn distribution(labels: &[SentimentLabel]) -> Result<DistributionTable, EvalError> {
    if labels.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    let total = labels.len();
    let rows = SentimentLabel::ALL
        .iter()
        .map(|&label| {
            let count = labels.iter().filter(|&&l| l == label).count();
            DistributionRow {
                label,
                count,
                percent: round1(100.0 * count as f64 / total as f64),
            }
        })
        .collect();
    Ok(DistributionTable { rows, total })
}
