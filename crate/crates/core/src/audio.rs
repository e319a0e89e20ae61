//! PCM16 WAV ingestion and frame-energy voice activity detection.
//!
//! Input is locked to 16 kHz mono signed 16-bit PCM. Segmentation works on
//! non-overlapping frames of `frame_ms`; a trailing partial frame is never
//! voiced.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SAMPLE_RATE_HZ: u32 = 16_000;

/// dBFS reported for an all-zero frame.
pub const SILENCE_FLOOR_DB: f64 = -120.0;

const FULL_SCALE: f64 = 32768.0;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("not a RIFF/WAVE file")]
    NotWav,
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    #[error("unsupported sample rate {0} Hz (expected 16000)")]
    UnsupportedRate(u32),
    #[error("unsupported channel count {0} (expected mono)")]
    UnsupportedChannels(u16),
    #[error("truncated file: {0}")]
    TruncatedFile(String),
    #[error("frame {index} out of range ({available} full frames)")]
    FrameOutOfRange { index: usize, available: usize },
    #[error("invalid VAD config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Mono 16 kHz PCM16 samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AudioClip {
    samples: Vec<i16>,
    sample_rate_hz: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<i16>) -> Self {
        Self {
            samples,
            sample_rate_hz: SAMPLE_RATE_HZ,
        }
    }

    pub fn samples(&self) -> &[i16] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> u32 {
        self.sample_rate_hz
    }

    pub fn channel_count(&self) -> u16 {
        1
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz as f64
    }

    /// Samples covered by `span`, clamped to the clip.
    pub fn span_samples(&self, span: &SegmentSpan) -> &[i16] {
        &self.samples[span_sample_range(span, self.samples.len())]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VadConfig {
    pub frame_ms: u32,
    pub energy_threshold_db: f64,
    pub min_speech_ms: u32,
    pub min_silence_ms: u32,
    pub hangover_frames: u32,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self {
            frame_ms: 30,
            energy_threshold_db: -40.0,
            min_speech_ms: 250,
            min_silence_ms: 300,
            hangover_frames: 3,
        }
    }
}

impl VadConfig {
    pub fn validate(&self) -> Result<(), AudioError> {
        if ![10, 20, 30].contains(&self.frame_ms) {
            return Err(AudioError::InvalidConfig(format!(
                "frame_ms must be 10, 20 or 30, got {}",
                self.frame_ms
            )));
        }
        if self.min_speech_ms < self.frame_ms {
            return Err(AudioError::InvalidConfig(
                "min_speech_ms must be at least frame_ms".into(),
            ));
        }
        if self.min_silence_ms < self.frame_ms {
            return Err(AudioError::InvalidConfig(
                "min_silence_ms must be at least frame_ms".into(),
            ));
        }
        if self.energy_threshold_db.is_nan() {
            return Err(AudioError::InvalidConfig("energy_threshold_db is NaN".into()));
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        (SAMPLE_RATE_HZ * self.frame_ms / 1000) as usize
    }
}

/// A speech region in seconds from clip start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentSpan {
    pub start_s: f64,
    pub end_s: f64,
    pub index: usize,
}

impl SegmentSpan {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Sample index range of `span` in a 16 kHz buffer of `len` samples.
pub fn span_sample_range(span: &SegmentSpan, len: usize) -> std::ops::Range<usize> {
    let rate = SAMPLE_RATE_HZ as f64;
    let start = ((span.start_s * rate).round() as usize).min(len);
    let end = ((span.end_s * rate).round() as usize).clamp(start, len);
    start..end
}

fn read_u16(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn read_u32(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let bytes = fs::read(path)?;
    parse_wav(&bytes)
}

/// Parses a RIFF/WAVE byte buffer. Only the `fmt ` and `data` chunks are
/// interpreted; any other chunk is skipped.
pub fn parse_wav(bytes: &[u8]) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::NotWav);
    }

    let mut pos = 12;
    let mut format: Option<(u16, u16, u32, u16)> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = read_u32(bytes, pos + 4) as usize;
        let body = pos + 8;
        let available = bytes.len() - body;

        match id {
            b"fmt " => {
                if size < 16 || available < 16 {
                    return Err(AudioError::TruncatedFile("fmt chunk too short".into()));
                }
                format = Some((
                    read_u16(bytes, body),
                    read_u16(bytes, body + 2),
                    read_u32(bytes, body + 4),
                    read_u16(bytes, body + 14),
                ));
            }
            b"data" => {
                let (audio_format, channels, rate, bits) = format.ok_or_else(|| {
                    AudioError::UnsupportedEncoding("data chunk precedes fmt chunk".into())
                })?;
                if audio_format != 1 {
                    return Err(AudioError::UnsupportedEncoding(format!(
                        "audio format {audio_format} (only integer PCM = 1)"
                    )));
                }
                if bits != 16 {
                    return Err(AudioError::UnsupportedEncoding(format!(
                        "{bits} bits per sample (only 16)"
                    )));
                }
                if channels != 1 {
                    return Err(AudioError::UnsupportedChannels(channels));
                }
                if rate != SAMPLE_RATE_HZ {
                    return Err(AudioError::UnsupportedRate(rate));
                }
                if available < size {
                    return Err(AudioError::TruncatedFile(format!(
                        "data chunk declares {size} bytes, {available} present"
                    )));
                }
                if !size.is_multiple_of(2) {
                    return Err(AudioError::TruncatedFile(
                        "data chunk ends mid-sample".into(),
                    ));
                }
                let samples = bytes[body..body + size]
                    .chunks_exact(2)
                    .map(|c| i16::from_le_bytes([c[0], c[1]]))
                    .collect();
                return Ok(AudioClip::new(samples));
            }
            _ => {}
        }
        // chunks are word aligned
        pos = body.saturating_add(size).saturating_add(size & 1);
    }

    if format.is_none() {
        Err(AudioError::TruncatedFile("no fmt chunk".into()))
    } else {
        Err(AudioError::TruncatedFile("no data chunk".into()))
    }
}

/// Encodes mono 16 kHz PCM16 as a canonical 44-byte-header WAV.
pub fn encode_wav(samples: &[i16]) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + samples.len() * 2);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&SAMPLE_RATE_HZ.to_le_bytes());
    out.extend_from_slice(&(SAMPLE_RATE_HZ * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn write_wav(mut sink: impl Write, samples: &[i16]) -> io::Result<()> {
    sink.write_all(&encode_wav(samples))
}

/// RMS level of raw samples in dBFS, floored at [`SILENCE_FLOOR_DB`].
pub fn rms_db(samples: &[i16]) -> f64 {
    if samples.is_empty() {
        return SILENCE_FLOOR_DB;
    }
    let sum_sq: f64 = samples.iter().map(|&s| (s as f64) * (s as f64)).sum();
    if sum_sq == 0.0 {
        return SILENCE_FLOOR_DB;
    }
    let rms = (sum_sq / samples.len() as f64).sqrt();
    (20.0 * (rms / FULL_SCALE).log10()).max(SILENCE_FLOOR_DB)
}

pub fn frame_count(clip: &AudioClip, config: &VadConfig) -> usize {
    clip.samples.len() / config.frame_len()
}

pub fn frame_rms_db(
    clip: &AudioClip,
    frame_index: usize,
    config: &VadConfig,
) -> Result<f64, AudioError> {
    let available = frame_count(clip, config);
    if frame_index >= available {
        return Err(AudioError::FrameOutOfRange {
            index: frame_index,
            available,
        });
    }
    let len = config.frame_len();
    let start = frame_index * len;
    Ok(rms_db(&clip.samples[start..start + len]))
}

/// Incremental segmenter shared by the offline and live paths.
///
/// Feed one voiced/unvoiced decision per frame; completed spans are returned
/// as soon as no later frame could still merge into them.
#[derive(Debug, Clone)]
pub struct Segmenter {
    config: VadConfig,
    frames_seen: usize,
    // [start, end) in frames, end already includes hangover
    pending: Option<(usize, usize)>,
    next_index: usize,
}

impl Segmenter {
    pub fn new(config: VadConfig) -> Self {
        Self {
            config,
            frames_seen: 0,
            pending: None,
            next_index: 0,
        }
    }

    pub fn config(&self) -> &VadConfig {
        &self.config
    }

    pub fn frames_seen(&self) -> usize {
        self.frames_seen
    }

    pub fn push_frame(&mut self, voiced: bool) -> Option<SegmentSpan> {
        let frame = self.frames_seen;
        self.frames_seen += 1;
        let frame_ms = self.config.frame_ms as usize;
        let hangover = self.config.hangover_frames as usize;
        let mut emitted = None;

        if voiced {
            let extended_end = frame + 1 + hangover;
            match self.pending {
                Some((start, end))
                    if frame < end
                        || (frame - end) * frame_ms < self.config.min_silence_ms as usize =>
                {
                    self.pending = Some((start, end.max(extended_end)));
                }
                Some(_) => {
                    emitted = self.close();
                    self.pending = Some((frame, extended_end));
                }
                None => self.pending = Some((frame, extended_end)),
            }
        } else if let Some((_, end)) = self.pending {
            // no future voiced frame can merge once the gap reaches min_silence
            if self.frames_seen >= end
                && (self.frames_seen - end) * frame_ms >= self.config.min_silence_ms as usize
            {
                emitted = self.close();
            }
        }
        emitted
    }

    /// Flushes the pending segment at end of stream.
    pub fn finish(&mut self) -> Option<SegmentSpan> {
        self.close()
    }

    fn close(&mut self) -> Option<SegmentSpan> {
        let (start, end) = self.pending.take()?;
        let end = end.min(self.frames_seen);
        let frame_ms = self.config.frame_ms as usize;
        if (end - start) * frame_ms < self.config.min_speech_ms as usize {
            return None;
        }
        let span = SegmentSpan {
            start_s: (start * frame_ms) as f64 / 1000.0,
            end_s: (end * frame_ms) as f64 / 1000.0,
            index: self.next_index,
        };
        self.next_index += 1;
        Some(span)
    }
}

pub fn detect_segments(
    clip: &AudioClip,
    config: &VadConfig,
) -> Result<Vec<SegmentSpan>, AudioError> {
    config.validate()?;
    let mut segmenter = Segmenter::new(*config);
    let mut spans = Vec::new();
    for frame in clip.samples.chunks_exact(config.frame_len()) {
        let voiced = rms_db(frame) >= config.energy_threshold_db;
        spans.extend(segmenter.push_frame(voiced));
    }
    spans.extend(segmenter.finish());
    Ok(spans)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(len: usize, amp: f64) -> Vec<i16> {
        (0..len)
            .map(|i| {
                let t = i as f64 / SAMPLE_RATE_HZ as f64;
                (amp * (2.0 * std::f64::consts::PI * 440.0 * t).sin()).round() as i16
            })
            .collect()
    }

    #[test]
    fn one_second_wav_loads() {
        let bytes = encode_wav(&vec![7i16; 16_000]);
        let clip = parse_wav(&bytes).unwrap();
        assert_eq!(clip.samples().len(), 16_000);
        assert_eq!(clip.duration_seconds(), 1.0);
        assert_eq!(clip.channel_count(), 1);
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(matches!(parse_wav(b"RIFX\0\0\0\0WAVE"), Err(AudioError::NotWav)));
        assert!(matches!(parse_wav(b""), Err(AudioError::NotWav)));
    }

    #[test]
    fn rejects_8khz() {
        let mut bytes = encode_wav(&[0; 10]);
        bytes[24..28].copy_from_slice(&8000u32.to_le_bytes());
        assert!(matches!(parse_wav(&bytes), Err(AudioError::UnsupportedRate(8000))));
    }

    #[test]
    fn rejects_float_and_8bit_and_stereo() {
        let mut float = encode_wav(&[0; 10]);
        float[20..22].copy_from_slice(&3u16.to_le_bytes());
        assert!(matches!(parse_wav(&float), Err(AudioError::UnsupportedEncoding(_))));

        let mut eight = encode_wav(&[0; 10]);
        eight[34..36].copy_from_slice(&8u16.to_le_bytes());
        assert!(matches!(parse_wav(&eight), Err(AudioError::UnsupportedEncoding(_))));

        let mut stereo = encode_wav(&[0; 10]);
        stereo[22..24].copy_from_slice(&2u16.to_le_bytes());
        assert!(matches!(parse_wav(&stereo), Err(AudioError::UnsupportedChannels(2))));
    }

    #[test]
    fn truncated_data_chunk() {
        // header built by hand: declares 100 data bytes, carries 10
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&(36u32 + 100).to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&16_000u32.to_le_bytes());
        bytes.extend_from_slice(&32_000u32.to_le_bytes());
        bytes.extend_from_slice(&2u16.to_le_bytes());
        bytes.extend_from_slice(&16u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&100u32.to_le_bytes());
        bytes.extend_from_slice(&[0u8; 10]);
        assert!(matches!(parse_wav(&bytes), Err(AudioError::TruncatedFile(_))));
    }

    #[test]
    fn skips_unknown_chunks() {
        let plain = encode_wav(&[1, -2, 3]);
        let mut bytes = plain[..36].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[9, 9, 9, 0]); // odd size plus pad byte
        bytes.extend_from_slice(&plain[36..]);
        let clip = parse_wav(&bytes).unwrap();
        assert_eq!(clip.samples(), &[1, -2, 3]);
    }

    #[test]
    fn frame_levels() {
        let cfg = VadConfig::default();
        let zeros = AudioClip::new(vec![0; 480]);
        assert_eq!(frame_rms_db(&zeros, 0, &cfg).unwrap(), -120.0);

        let constant = AudioClip::new(vec![3277; 480]);
        assert!((frame_rms_db(&constant, 0, &cfg).unwrap() + 20.0).abs() < 0.1);

        let square: Vec<i16> = (0..480).map(|i| if i % 2 == 0 { i16::MAX } else { i16::MIN }).collect();
        assert!(frame_rms_db(&AudioClip::new(square), 0, &cfg).unwrap().abs() < 0.01);

        assert!(matches!(
            frame_rms_db(&constant, 1, &cfg),
            Err(AudioError::FrameOutOfRange { index: 1, available: 1 })
        ));
    }

    #[test]
    fn silence_has_no_segments() {
        let clip = AudioClip::new(vec![0; 32_000]);
        assert!(detect_segments(&clip, &VadConfig::default()).unwrap().is_empty());
    }

    #[test]
    fn trailing_partial_frame_is_ignored() {
        // 10 silent frames followed by 200 loud samples (less than one frame)
        let mut samples = vec![0; 4800];
        samples.extend(std::iter::repeat_n(20_000, 200));
        let cfg = VadConfig {
            min_speech_ms: 30,
            min_silence_ms: 30,
            ..VadConfig::default()
        };
        assert!(detect_segments(&AudioClip::new(samples), &cfg).unwrap().is_empty());
    }

    #[test]
    fn short_bursts_are_dropped() {
        let mut samples = vec![0; 8000];
        samples.extend(tone(1600, 30_000.0)); // 100 ms
        samples.extend(vec![0; 8000]);
        let cfg = VadConfig {
            hangover_frames: 0,
            ..VadConfig::default()
        };
        assert!(detect_segments(&AudioClip::new(samples), &cfg).unwrap().is_empty());
    }

    #[test]
    fn rejects_invalid_config() {
        let clip = AudioClip::new(vec![0; 100]);
        for cfg in [
            VadConfig { frame_ms: 25, ..VadConfig::default() },
            VadConfig { min_speech_ms: 10, ..VadConfig::default() },
            VadConfig { min_silence_ms: 0, ..VadConfig::default() },
        ] {
            assert!(matches!(detect_segments(&clip, &cfg), Err(AudioError::InvalidConfig(_))));
        }
    }

    #[test]
    fn span_samples_slice() {
        let clip = AudioClip::new((0..16_000).map(|i| (i % 100) as i16).collect());
        let span = SegmentSpan { start_s: 0.5, end_s: 0.75, index: 0 };
        assert_eq!(clip.span_samples(&span).len(), 4000);
        assert_eq!(clip.span_samples(&span)[0], clip.samples()[8000]);
    }
}
