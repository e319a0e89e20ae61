//! Live capture: one producer thread reads fixed-size frames from a capture
//! device into a bounded queue; the consumer runs the VAD and starts one ASR
//! job per completed segment while capture continues.
//!
//! Device names:
//! - `wav:<path>` plays a 16 kHz mono PCM16 WAV file as if it were a microphone
//!   (loopback, used for testing and replays)
//! - `raw:<path>` reads headerless little-endian 16 kHz mono PCM16 from a file
//!   or FIFO, e.g. one fed by `arecord -f S16_LE -r 16000 -c 1 -t raw`

use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{sync_channel, Receiver};
use std::sync::Arc;
use std::thread::{self, JoinHandle};

use thiserror::Error;

use crate::asr::{AsrBackend, AsrError, Statement};
use crate::audio::{
    load_wav, rms_db, span_sample_range, AudioClip, AudioError, SegmentSpan, Segmenter, VadConfig,
};

/// Frames buffered between capture and VAD before capture blocks.
pub const DEFAULT_QUEUE_FRAMES: usize = 256;

#[derive(Debug, Error)]
pub enum LiveError {
    #[error("capture device unavailable: {0}")]
    DeviceUnavailable(String),
    #[error("capture failed: {0}")]
    Capture(#[from] io::Error),
    #[error(transparent)]
    Vad(#[from] AudioError),
    #[error(transparent)]
    Asr(#[from] AsrError),
}

/// A source of mono 16 kHz PCM16 samples.
pub trait CaptureSource: Send {
    /// Fills `buf` as far as possible; fewer samples than `buf.len()` means the
    /// source ended.
    fn read_frame(&mut self, buf: &mut [i16]) -> io::Result<usize>;
}

pub struct LoopbackSource {
    samples: Vec<i16>,
    pos: usize,
}

impl LoopbackSource {
    pub fn new(clip: AudioClip) -> Self {
        Self {
            samples: clip.samples().to_vec(),
            pos: 0,
        }
    }
}

impl CaptureSource for LoopbackSource {
    fn read_frame(&mut self, buf: &mut [i16]) -> io::Result<usize> {
        let n = buf.len().min(self.samples.len() - self.pos);
        buf[..n].copy_from_slice(&self.samples[self.pos..self.pos + n]);
        self.pos += n;
        Ok(n)
    }
}

pub struct RawPcmSource<R> {
    reader: R,
}

impl<R: Read + Send> RawPcmSource<R> {
    pub fn new(reader: R) -> Self {
        Self { reader }
    }
}

impl<R: Read + Send> CaptureSource for RawPcmSource<R> {
    fn read_frame(&mut self, buf: &mut [i16]) -> io::Result<usize> {
        let mut bytes = vec![0u8; buf.len() * 2];
        let mut filled = 0;
        while filled < bytes.len() {
            match self.reader.read(&mut bytes[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        // a dangling odd byte at end of stream is dropped
        let n = filled / 2;
        for (dst, c) in buf.iter_mut().zip(bytes[..n * 2].chunks_exact(2)) {
            *dst = i16::from_le_bytes([c[0], c[1]]);
        }
        Ok(n)
    }
}

pub fn open_device(name: &str) -> Result<Box<dyn CaptureSource>, LiveError> {
    let unavailable = |why: String| LiveError::DeviceUnavailable(format!("{name}: {why}"));
    let (kind, path) = name
        .split_once(':')
        .ok_or_else(|| unavailable("expected wav:<path> or raw:<path>".into()))?;
    let path = PathBuf::from(path);
    match kind {
        "wav" => {
            let clip = load_wav(&path).map_err(|e| unavailable(e.to_string()))?;
            Ok(Box::new(LoopbackSource::new(clip)))
        }
        "raw" => {
            let file = File::open(&path).map_err(|e| unavailable(e.to_string()))?;
            Ok(Box::new(RawPcmSource::new(BufReader::new(file))))
        }
        other => Err(unavailable(format!("unknown device kind {other:?}"))),
    }
}

/// Everything captured up to the stop signal.
#[derive(Debug)]
pub struct LiveCapture {
    pub clip: AudioClip,
    pub spans: Vec<SegmentSpan>,
    pub statements: Vec<Statement>,
}

enum Chunk {
    Samples(Vec<i16>),
    Failed(io::Error),
}

fn spawn_producer(
    mut source: Box<dyn CaptureSource>,
    frame_len: usize,
    queue_frames: usize,
    stop: Arc<AtomicBool>,
) -> (Receiver<Chunk>, JoinHandle<()>) {
    let (tx, rx) = sync_channel(queue_frames.max(1));
    let handle = thread::spawn(move || {
        let mut buf = vec![0i16; frame_len];
        while !stop.load(Ordering::SeqCst) {
            match source.read_frame(&mut buf) {
                Ok(n) => {
                    // blocks when the queue is full; frames are never dropped
                    if n > 0 && tx.send(Chunk::Samples(buf[..n].to_vec())).is_err() {
                        return;
                    }
                    if n < frame_len {
                        return;
                    }
                }
                Err(e) => {
                    let _ = tx.send(Chunk::Failed(e));
                    return;
                }
            }
        }
    });
    (rx, handle)
}

type AsrJob = JoinHandle<Result<Statement, AsrError>>;

fn spawn_asr(backend: &Arc<dyn AsrBackend>, captured: &[i16], span: SegmentSpan) -> AsrJob {
    let samples = captured[span_sample_range(&span, captured.len())].to_vec();
    let backend = Arc::clone(backend);
    thread::spawn(move || backend.transcribe_samples(&samples, &span))
}

/// Captures until `stop` is set or the source ends, then waits for the
/// outstanding transcription jobs and returns statements in span order.
pub fn run_live(
    source: Box<dyn CaptureSource>,
    config: &VadConfig,
    backend: Arc<dyn AsrBackend>,
    stop: Arc<AtomicBool>,
    queue_frames: usize,
) -> Result<LiveCapture, LiveError> {
    config.validate()?;
    let frame_len = config.frame_len();
    let (rx, producer) = spawn_producer(source, frame_len, queue_frames, stop);

    let mut captured: Vec<i16> = Vec::new();
    let mut segmenter = Segmenter::new(*config);
    let mut spans = Vec::new();
    let mut jobs: Vec<AsrJob> = Vec::new();
    let mut failure = None;

    for chunk in rx {
        match chunk {
            Chunk::Samples(frame) => {
                captured.extend_from_slice(&frame);
                if frame.len() == frame_len {
                    let voiced = rms_db(&frame) >= config.energy_threshold_db;
                    if let Some(span) = segmenter.push_frame(voiced) {
                        jobs.push(spawn_asr(&backend, &captured, span));
                        spans.push(span);
                    }
                }
            }
            Chunk::Failed(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    let _ = producer.join();
    if let Some(span) = segmenter.finish() {
        jobs.push(spawn_asr(&backend, &captured, span));
        spans.push(span);
    }

    let mut statements = Vec::with_capacity(jobs.len());
    let mut first_error = None;
    for (job, span) in jobs.into_iter().zip(&spans) {
        let result = job.join().unwrap_or_else(|_| {
            Err(AsrError::BackendFailed {
                index: span.index,
                reason: "transcription thread panicked".into(),
            })
        });
        match result {
            Ok(st) => statements.push(st),
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(e) = failure {
        return Err(LiveError::Capture(e));
    }
    if let Some(e) = first_error {
        return Err(LiveError::Asr(e));
    }

    Ok(LiveCapture {
        clip: AudioClip::new(captured),
        spans,
        statements,
    })
}
