//! End-of-meeting report: every classified statement plus class proportions.
//!
//! JSON layout (`schema_version` 1):
//!
//! ```text
//! {
//!   "schema_version": 1,
//!   "generated_at": "<RFC 3339>",
//!   "audio_meta": {"duration_s": f64, "sample_rate_hz": u32} | null,
//!   "model_ref": {"name": str, "sha256": hex},
//!   "empty_transcripts": usize,
//!   "distribution": {"rows": [{"label", "count", "percent"}], "total"} | null,
//!   "statements": [{"statement": {...}, "features": {name: f64}, "label", "score"}]
//! }
//! ```

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asr::Statement;
use crate::eval::{distribution, DistributionTable};
use crate::features::{extract_features, FeatureVector, Lexicon};
use crate::model::{label_for_score, score, PolarityModel, SentimentLabel};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("model was trained with lexicon {model:?} but lexicon {lexicon:?} was given")]
    LexiconMismatch { model: String, lexicon: String },
    #[error("cannot write report: {0}")]
    SinkWriteFailed(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedStatement {
    pub statement: Statement,
    pub features: FeatureVector,
    pub label: SentimentLabel,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelRef {
    pub name: String,
    pub sha256: String,
}

impl ModelRef {
    pub fn of(model: &PolarityModel, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            sha256: model.digest(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AudioMeta {
    pub duration_s: f64,
    pub sample_rate_hz: u32,
}

/// Run facts that the statements alone do not carry.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportContext {
    pub model_name: String,
    pub audio_meta: Option<AudioMeta>,
    pub generated_at: String,
}

impl Default for ReportContext {
    fn default() -> Self {
        Self {
            model_name: "model".into(),
            audio_meta: None,
            generated_at: "1970-01-01T00:00:00Z".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingReport {
    pub schema_version: u32,
    pub generated_at: String,
    pub audio_meta: Option<AudioMeta>,
    pub model_ref: ModelRef,
    pub empty_transcripts: usize,
    /// Absent when no statement carried text.
    pub distribution: Option<DistributionTable>,
    pub statements: Vec<ClassifiedStatement>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

pub fn build_report(
    statements: &[Statement],
    model: &PolarityModel,
    lexicon: &Lexicon,
    ctx: &ReportContext,
) -> Result<MeetingReport, ReportError> {
    if model.lexicon_name != lexicon.name() {
        return Err(ReportError::LexiconMismatch {
            model: model.lexicon_name.clone(),
            lexicon: lexicon.name().to_string(),
        });
    }
    let mut ordered: Vec<&Statement> = statements.iter().collect();
    ordered.sort_by_key(|s| s.index);

    let mut empty = 0;
    let mut classified = Vec::with_capacity(ordered.len());
    for st in ordered {
        if st.text.trim().is_empty() {
            empty += 1;
            continue;
        }
        let features = extract_features(&st.text, lexicon);
        let s = score(model, &features);
        classified.push(ClassifiedStatement {
            statement: st.clone(),
            features,
            label: label_for_score(model, s),
            score: s,
        });
    }

    let labels: Vec<SentimentLabel> = classified.iter().map(|c| c.label).collect();
    Ok(MeetingReport {
        schema_version: REPORT_SCHEMA_VERSION,
        generated_at: ctx.generated_at.clone(),
        audio_meta: ctx.audio_meta,
        model_ref: ModelRef::of(model, ctx.model_name.clone()),
        empty_transcripts: empty,
        distribution: distribution(&labels).ok(),
        statements: classified,
    })
}

pub fn render_text(report: &MeetingReport) -> String {
    let mut out = String::new();
    out.push_str("Meeting report\n");
    out.push_str(&format!("generated: {}\n", report.generated_at));
    if let Some(meta) = report.audio_meta {
        out.push_str(&format!(
            "audio: {:.2} s at {} Hz\n",
            meta.duration_s, meta.sample_rate_hz
        ));
    }
    out.push_str(&format!(
        "model: {} (sha256 {})\n",
        report.model_ref.name, report.model_ref.sha256
    ));
    out.push('\n');

    out.push_str("Statements\n");
    for c in &report.statements {
        out.push_str(&format!(
            "#{:<3} {:>8.2}-{:<8.2} {:<8} {:>+9.4}  {}\n",
            c.statement.index, c.statement.start_s, c.statement.end_s, c.label.as_str(), c.score, c.statement.text
        ));
    }
    out.push('\n');

    out.push_str("Distribution\n");
    match &report.distribution {
        Some(d) => {
            out.push_str(&format!("total {}\n", d.total));
            for label in SentimentLabel::ALL {
                out.push_str(&d.format_row(label));
                out.push('\n');
            }
        }
        None => out.push_str("total 0\n"),
    }
    out.push_str(&format!("empty transcripts {}\n", report.empty_transcripts));
    out
}

pub fn render_json(report: &MeetingReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

/// Writes the rendered report and returns the byte count.
pub fn render_report(
    report: &MeetingReport,
    format: ReportFormat,
    mut sink: impl Write,
) -> Result<usize, ReportError> {
    let body = match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Json => render_json(report),
    };
    sink.write_all(body.as_bytes())?;
    sink.flush()?;
    Ok(body.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::asr::StatementSource;

    fn toy_model(lex: &Lexicon) -> PolarityModel {
        let mut m = PolarityModel::zeros(lex.name());
        m.set_weight("polarity_sum", 1.0).unwrap();
        m.threshold_pos = 0.5;
        m.threshold_neg = -0.5;
        m
    }

    fn st(index: usize, text: &str) -> Statement {
        Statement {
            index,
            text: text.into(),
            start_s: index as f64,
            end_s: index as f64 + 0.5,
            source: StatementSource::Asr,
        }
    }

    #[test]
    fn empty_meeting() {
        let lex = Lexicon::builtin();
        let r = build_report(&[], &toy_model(&lex), &lex, &ReportContext::default()).unwrap();
        assert!(r.statements.is_empty());
        assert!(r.distribution.is_none());
        assert!(render_text(&r).contains("total 0"));
    }

    #[test]
    fn empty_transcripts_are_counted_not_classified() {
        let lex = Lexicon::builtin();
        let input = [st(0, "das ist gut"), st(1, ""), st(2, "das ist schlecht")];
        let r = build_report(&input, &toy_model(&lex), &lex, &ReportContext::default()).unwrap();
        assert_eq!(r.statements.len(), 2);
        assert_eq!(r.empty_transcripts, 1);
        let d = r.distribution.as_ref().unwrap();
        assert_eq!(d.total, 2);
        assert_eq!(r.statements[0].label, SentimentLabel::Positive);
        assert_eq!(r.statements[1].label, SentimentLabel::Negative);
    }

    #[test]
    fn lexicon_mismatch() {
        let lex = Lexicon::builtin();
        let model = PolarityModel::zeros("other");
        assert!(matches!(
            build_report(&[], &model, &lex, &ReportContext::default()),
            Err(ReportError::LexiconMismatch { .. })
        ));
    }

    #[test]
    fn sink_failure() {
        struct Broken;
        impl Write for Broken {
            fn write(&mut self, _: &[u8]) -> io::Result<usize> {
                Err(io::Error::other("disk full"))
            }
            fn flush(&mut self) -> io::Result<()> {
                Ok(())
            }
        }
        let lex = Lexicon::builtin();
        let r = build_report(&[], &toy_model(&lex), &lex, &ReportContext::default()).unwrap();
        assert!(matches!(
            render_report(&r, ReportFormat::Text, Broken),
            Err(ReportError::SinkWriteFailed(_))
        ));
    }

    #[test]
    fn json_parses_back() {
        let lex = Lexicon::builtin();
        let input = [st(0, "Das ist SUPER!!"), st(1, "nicht gut?")];
        let ctx = ReportContext {
            audio_meta: Some(AudioMeta { duration_s: 2.25, sample_rate_hz: 16_000 }),
            ..ReportContext::default()
        };
        let r = build_report(&input, &toy_model(&lex), &lex, &ctx).unwrap();
        let mut buf = Vec::new();
        let n = render_report(&r, ReportFormat::Json, &mut buf).unwrap();
        assert_eq!(n, buf.len());
        let back: MeetingReport = serde_json::from_slice(&buf).unwrap();
        assert_eq!(back, r);
    }
}
