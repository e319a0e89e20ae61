//! Transcription backends.
//!
//! No acoustic model ships with this crate. Speech is turned into text either
//! by an external command or by reading a prepared transcript file where line
//! `i` belongs to span `i`.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::{write_wav, AudioClip, SegmentSpan};

#[derive(Debug, Error)]
pub enum AsrError {
    #[error("ASR backend failed on span {index}: {reason}")]
    BackendFailed { index: usize, reason: String },
    #[error("transcript has {lines} lines, no line for span {index}")]
    TranscriptExhausted { index: usize, lines: usize },
    #[error("transcript line {index} is empty")]
    EmptyManualLine { index: usize },
    #[error("cannot read transcript {path}: {source}")]
    TranscriptUnreadable {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl AsrError {
    pub fn index(&self) -> Option<usize> {
        match self {
            AsrError::BackendFailed { index, .. }
            | AsrError::TranscriptExhausted { index, .. }
            | AsrError::EmptyManualLine { index } => Some(*index),
            AsrError::TranscriptUnreadable { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StatementSource {
    #[serde(rename = "asr")]
    Asr,
    #[serde(rename = "manual")]
    ManualTranscript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Statement {
    pub index: usize,
    pub text: String,
    pub start_s: f64,
    pub end_s: f64,
    pub source: StatementSource,
}

impl Statement {
    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AsrBackendConfig {
    /// Shell command run once per segment. The segment WAV path is passed as
    /// `$1`, exported as `SENTI_WAV`, and substituted for `{wav}`.
    ExternalCommand { command_template: String },
    TranscriptFile { transcript_path: PathBuf },
}

/// A transcription engine that can serve segments from any thread.
pub trait AsrBackend: Send + Sync {
    /// Transcribes the samples of one span. `samples` covers exactly the span.
    fn transcribe_samples(&self, samples: &[i16], span: &SegmentSpan)
        -> Result<Statement, AsrError>;
}

impl AsrBackendConfig {
    pub fn build(&self) -> Result<Box<dyn AsrBackend>, AsrError> {
        Ok(match self {
            AsrBackendConfig::ExternalCommand { command_template } => {
                Box::new(ExternalCommand::new(command_template.clone()))
            }
            AsrBackendConfig::TranscriptFile { transcript_path } => {
                Box::new(TranscriptFile::open(transcript_path)?)
            }
        })
    }
}

pub struct ExternalCommand {
    template: String,
}

impl ExternalCommand {
    pub fn new(template: impl Into<String>) -> Self {
        Self {
            template: template.into(),
        }
    }
}

impl AsrBackend for ExternalCommand {
    fn transcribe_samples(
        &self,
        samples: &[i16],
        span: &SegmentSpan,
    ) -> Result<Statement, AsrError> {
        let fail = |reason: String| AsrError::BackendFailed {
            index: span.index,
            reason,
        };

        // one temp file per call, so concurrent spans never share a path
        let mut wav = tempfile::Builder::new()
            .prefix("senti-seg-")
            .suffix(".wav")
            .tempfile()
            .map_err(|e| fail(format!("temp file: {e}")))?;
        write_wav(wav.as_file_mut(), samples).map_err(|e| fail(format!("temp file: {e}")))?;
        let path = wav.path().to_string_lossy().into_owned();

        let script = self.template.replace("{wav}", "\"$1\"");
        let output = Command::new("sh")
            .arg("-c")
            .arg(&script)
            .arg("senti-asr")
            .arg(&path)
            .env("SENTI_WAV", &path)
            .stdin(Stdio::null())
            .stderr(Stdio::piped())
            .output()
            .map_err(|e| fail(format!("spawn: {e}")))?;

        if !output.status.success() {
            let stderr = String::from_utf8_lossy(&output.stderr);
            let detail = stderr.lines().next().unwrap_or("").trim();
            return Err(fail(format!("{} {}", output.status, detail).trim().to_string()));
        }
        let stdout =
            String::from_utf8(output.stdout).map_err(|_| fail("output is not UTF-8".into()))?;
        let text = stdout.trim();
        if text.contains('\n') {
            return Err(fail("expected exactly one output line".into()));
        }

        Ok(Statement {
            index: span.index,
            text: text.to_string(),
            start_s: span.start_s,
            end_s: span.end_s,
            source: StatementSource::Asr,
        })
    }
}

pub struct TranscriptFile {
    lines: Vec<String>,
}

impl TranscriptFile {
    pub fn open(path: &Path) -> Result<Self, AsrError> {
        let raw = fs::read(path).map_err(|source| AsrError::TranscriptUnreadable {
            path: path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8(raw).map_err(|e| AsrError::TranscriptUnreadable {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        })?;
        Ok(Self::from_text(&text))
    }

    pub fn from_text(text: &str) -> Self {
        Self {
            lines: text.lines().map(str::to_string).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }
}

impl AsrBackend for TranscriptFile {
    fn transcribe_samples(&self, _: &[i16], span: &SegmentSpan) -> Result<Statement, AsrError> {
        let line = self
            .lines
            .get(span.index)
            .ok_or(AsrError::TranscriptExhausted {
                index: span.index,
                lines: self.lines.len(),
            })?;
        let text = line.trim();
        if text.is_empty() {
            return Err(AsrError::EmptyManualLine { index: span.index });
        }
        Ok(Statement {
            index: span.index,
            text: text.to_string(),
            start_s: span.start_s,
            end_s: span.end_s,
            source: StatementSource::ManualTranscript,
        })
    }
}

pub fn transcribe_segment(
    clip: &AudioClip,
    span: &SegmentSpan,
    backend: &AsrBackendConfig,
) -> Result<Statement, AsrError> {
    backend
        .build()?
        .transcribe_samples(clip.span_samples(span), span)
}

/// One statement per span, in span order.
pub fn transcribe_all(
    clip: &AudioClip,
    spans: &[SegmentSpan],
    backend: &AsrBackendConfig,
) -> Result<Vec<Statement>, AsrError> {
    if spans.is_empty() {
        return Ok(Vec::new());
    }
    let backend = backend.build()?;
    transcribe_with(backend.as_ref(), clip, spans)
}

pub fn transcribe_with(
    backend: &dyn AsrBackend,
    clip: &AudioClip,
    spans: &[SegmentSpan],
) -> Result<Vec<Statement>, AsrError> {
    spans
        .iter()
        .map(|span| backend.transcribe_samples(clip.span_samples(span), span))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn span(index: usize) -> SegmentSpan {
        SegmentSpan {
            start_s: index as f64,
            end_s: index as f64 + 0.5,
            index,
        }
    }

    fn transcript(lines: &str) -> (tempfile::NamedTempFile, AsrBackendConfig) {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(lines.as_bytes()).unwrap();
        let cfg = AsrBackendConfig::TranscriptFile {
            transcript_path: f.path().to_path_buf(),
        };
        (f, cfg)
    }

    #[test]
    fn transcript_line_lookup() {
        let (_f, cfg) = transcript("das ist gut\nzweite zeile\n");
        let clip = AudioClip::new(vec![0; 32_000]);
        let st = transcribe_segment(&clip, &span(0), &cfg).unwrap();
        assert_eq!(st.text, "das ist gut");
        assert_eq!(st.source, StatementSource::ManualTranscript);
        assert_eq!((st.start_s, st.end_s), (0.0, 0.5));
    }

    #[test]
    fn transcript_exhausted() {
        let (_f, cfg) = transcript("a\nb\n");
        let clip = AudioClip::new(vec![0; 64_000]);
        let spans = [span(0), span(1), span(2)];
        let err = transcribe_all(&clip, &spans, &cfg).unwrap_err();
        assert!(matches!(err, AsrError::TranscriptExhausted { index: 2, lines: 2 }));
        assert_eq!(err.index(), Some(2));
    }

    #[test]
    fn transcript_keeps_order() {
        let (_f, cfg) = transcript("eins\nzwei\ndrei");
        let clip = AudioClip::new(vec![0; 64_000]);
        let spans = [span(0), span(1), span(2)];
        let out = transcribe_all(&clip, &spans, &cfg).unwrap();
        let texts: Vec<_> = out.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(texts, ["eins", "zwei", "drei"]);
        assert!(transcribe_all(&clip, &[], &cfg).unwrap().is_empty());
    }

    #[test]
    fn echo_command() {
        let cfg = AsrBackendConfig::ExternalCommand {
            command_template: "echo hallo".into(),
        };
        let clip = AudioClip::new(vec![0; 16_000]);
        let st = transcribe_segment(&clip, &span(0), &cfg).unwrap();
        assert_eq!(st.text, "hallo");
        assert_eq!(st.source, StatementSource::Asr);
    }

    #[test]
    fn command_sees_segment_wav() {
        // 0.5 s span of 16 kHz PCM16: 16000 data bytes + 44 header bytes
        let cfg = AsrBackendConfig::ExternalCommand {
            command_template: "wc -c < {wav}".into(),
        };
        let clip = AudioClip::new(vec![0; 32_000]);
        let st = transcribe_segment(&clip, &span(0), &cfg).unwrap();
        assert_eq!(st.text, "16044");
    }

    #[test]
    fn failing_command() {
        let cfg = AsrBackendConfig::ExternalCommand {
            command_template: "echo boom >&2; exit 3".into(),
        };
        let clip = AudioClip::new(vec![0; 16_000]);
        let err = transcribe_segment(&clip, &span(0), &cfg).unwrap_err();
        match err {
            AsrError::BackendFailed { index, reason } => {
                assert_eq!(index, 0);
                assert!(reason.contains("boom"), "{reason}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_asr_output_is_kept() {
        let cfg = AsrBackendConfig::ExternalCommand {
            command_template: "true".into(),
        };
        let clip = AudioClip::new(vec![0; 16_000]);
        let st = transcribe_segment(&clip, &span(0), &cfg).unwrap();
        assert!(st.is_empty());
    }

    #[test]
    fn multi_line_output_rejected() {
        let cfg = AsrBackendConfig::ExternalCommand {
            command_template: "printf 'a\\nb\\n'".into(),
        };
        let clip = AudioClip::new(vec![0; 16_000]);
        assert!(matches!(
            transcribe_segment(&clip, &span(0), &cfg),
            Err(AsrError::BackendFailed { .. })
        ));
    }
}
