//! C ABI over `senti-core`.
//!
//! Conventions:
//! - every fallible call returns a [`SentiStatus`]; results go through out-pointers;
//! - objects are opaque handles created by `*_load`/`*_builtin` and released
//!   with the matching `*_free` (which accepts NULL);
//! - on failure, [`senti_last_error_message`] describes the most recent error
//!   on the calling thread;
//! - strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use senti_core::audio::{detect_segments, AudioClip, SegmentSpan, VadConfig};
use senti_core::eval::{fleiss_kappa, EvalError, KappaInterpretation, RatingMatrix};
use senti_core::features::{extract_features, Lexicon};
use senti_core::model::{label_for_score, load_model, score, ModelError, PolarityModel, SentimentLabel};

/// Status codes. `SENTI_STATUS_OK` is zero; everything else is an error.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentiStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    SchemaMismatch = 5,
    InvalidInput = 6,
    LexiconMismatch = 7,
    Degenerate = 8,
    Panic = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentiLabel {
    Positive = 0,
    Neutral = 1,
    Negative = 2,
}

impl From<SentimentLabel> for SentiLabel {
    fn from(l: SentimentLabel) -> Self {
        match l {
            SentimentLabel::Positive => SentiLabel::Positive,
            SentimentLabel::Neutral => SentiLabel::Neutral,
            SentimentLabel::Negative => SentiLabel::Negative,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SentiAgreement {
    Poor = 0,
    Slight = 1,
    Fair = 2,
    Moderate = 3,
    Substantial = 4,
    AlmostPerfect = 5,
}

impl From<KappaInterpretation> for SentiAgreement {
    fn from(k: KappaInterpretation) -> Self {
        match k {
            KappaInterpretation::Poor => SentiAgreement::Poor,
            KappaInterpretation::Slight => SentiAgreement::Slight,
            KappaInterpretation::Fair => SentiAgreement::Fair,
            KappaInterpretation::Moderate => SentiAgreement::Moderate,
            KappaInterpretation::Substantial => SentiAgreement::Substantial,
            KappaInterpretation::AlmostPerfect => SentiAgreement::AlmostPerfect,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentiKappa {
    pub p_bar: f64,
    pub p_e: f64,
    pub kappa: f64,
    pub agreement: SentiAgreement,
}

/// Mirrors the VAD settings; see [`senti_vad_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SentiVadConfig {
    pub frame_ms: u32,
    pub energy_threshold_db: f64,
    pub min_speech_ms: u32,
    pub min_silence_ms: u32,
    pub hangover_frames: u32,
}

impl From<SentiVadConfig> for VadConfig {
    fn from(c: SentiVadConfig) -> Self {
        VadConfig {
            frame_ms: c.frame_ms,
            energy_threshold_db: c.energy_threshold_db,
            min_speech_ms: c.min_speech_ms,
            min_silence_ms: c.min_silence_ms,
            hangover_frames: c.hangover_frames,
        }
    }
}

/// Opaque sentiment lexicon.
pub struct SentiLexicon(Lexicon);

/// Opaque trained model.
pub struct SentiModel(PolarityModel);

/// Opaque list of detected speech segments.
pub struct SentiSegments(Vec<SegmentSpan>);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let s = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = s);
}

type FfiResult<T> = Result<T, (SentiStatus, String)>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> SentiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SentiStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SentiStatus::Panic
        }
    }
}

fn null(what: &str) -> (SentiStatus, String) {
    (SentiStatus::NullArgument, format!("{what} is NULL"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (SentiStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next `senti_*` call on the same thread.
#[no_mangle]
pub extern "C" fn senti_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static name of a label: "positive", "neutral" or "negative".
#[no_mangle]
pub extern "C" fn senti_label_name(label: SentiLabel) -> *const c_char {
    let s: &'static CStr = match label {
        SentiLabel::Positive => c"positive",
        SentiLabel::Neutral => c"neutral",
        SentiLabel::Negative => c"negative",
    };
    s.as_ptr()
}

/// # Safety
/// `out` must be NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn senti_lexicon_builtin(out: *mut *mut SentiLexicon) -> SentiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(SentiLexicon(Lexicon::builtin())));
        Ok(())
    })
}

/// Loads a `word<TAB>score` file; `negators_path` may be NULL.
///
/// # Safety
/// Path arguments must be NULL or valid C strings.
#[no_mangle]
pub unsafe extern "C" fn senti_lexicon_load(
    tsv_path: *const c_char,
    negators_path: *const c_char,
    out: *mut *mut SentiLexicon,
) -> SentiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let tsv = PathBuf::from(str_arg(tsv_path, "tsv_path")?);
        let neg = if negators_path.is_null() {
            None
        } else {
            Some(PathBuf::from(str_arg(negators_path, "negators_path")?))
        };
        let lex = Lexicon::load(&tsv, neg.as_deref()).map_err(|e| {
            let status = match e {
                senti_core::features::LexiconError::Io { .. } => SentiStatus::Io,
                _ => SentiStatus::Parse,
            };
            (status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(SentiLexicon(lex)));
        Ok(())
    })
}

/// # Safety
/// `lexicon` must be NULL or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn senti_lexicon_free(lexicon: *mut SentiLexicon) {
    if !lexicon.is_null() {
        drop(Box::from_raw(lexicon));
    }
}

/// # Safety
/// `path` must be NULL or a valid C string.
#[no_mangle]
pub unsafe extern "C" fn senti_model_load(path: *const c_char, out: *mut *mut SentiModel) -> SentiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let model = load_model(path).map_err(|e| {
            let status = match e {
                ModelError::Io { .. } => SentiStatus::Io,
                ModelError::SchemaVersionMismatch { .. } => SentiStatus::SchemaMismatch,
                _ => SentiStatus::Parse,
            };
            (status, e.to_string())
        })?;
        *out = Box::into_raw(Box::new(SentiModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn senti_model_free(model: *mut SentiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Classifies one statement. `out_score` may be NULL.
///
/// Fails with `SENTI_STATUS_LEXICON_MISMATCH` when the lexicon is not the one
/// the model was trained with.
///
/// # Safety
/// Handles must come from this library; `text` must be a valid C string.
#[no_mangle]
pub unsafe extern "C" fn senti_classify_text(
    model: *const SentiModel,
    lexicon: *const SentiLexicon,
    text: *const c_char,
    out_label: *mut SentiLabel,
    out_score: *mut f64,
) -> SentiStatus {
    guard(|| {
        let model = &model.as_ref().ok_or_else(|| null("model"))?.0;
        let lexicon = &lexicon.as_ref().ok_or_else(|| null("lexicon"))?.0;
        let text = str_arg(text, "text")?;
        let out_label = out_arg(out_label, "out_label")?;
        if model.lexicon_name != lexicon.name() {
            return Err((
                SentiStatus::LexiconMismatch,
                format!("model expects lexicon '{}', got '{}'", model.lexicon_name, lexicon.name()),
            ));
        }
        let s = score(model, &extract_features(text, lexicon));
        *out_label = label_for_score(model, s).into();
        if let Some(o) = out_score.as_mut() {
            *o = s;
        }
        Ok(())
    })
}

/// Fleiss' kappa over an `n_items x 3` row-major count matrix (columns
/// positive, neutral, negative). Every row must sum to the same rater count
/// (at least 2). Returns `SENTI_STATUS_DEGENERATE` when kappa is undefined.
///
/// # Safety
/// `counts` must point to `3 * n_items` readable values.
#[no_mangle]
pub unsafe extern "C" fn senti_fleiss_kappa(
    counts: *const usize,
    n_items: usize,
    out: *mut SentiKappa,
) -> SentiStatus {
    guard(|| {
        if counts.is_null() {
            return Err(null("counts"));
        }
        let out = out_arg(out, "out")?;
        let flat = std::slice::from_raw_parts(counts, n_items * 3);
        let rows = flat.chunks_exact(3).map(|r| [r[0], r[1], r[2]]).collect();
        let m = RatingMatrix::new(rows).map_err(eval_err)?;
        let k = fleiss_kappa(&m).map_err(eval_err)?;
        *out = SentiKappa {
            p_bar: k.p_bar,
            p_e: k.p_e,
            kappa: k.kappa,
            agreement: k.interpretation.into(),
        };
        Ok(())
    })
}

fn eval_err(e: EvalError) -> (SentiStatus, String) {
    let status = match e {
        EvalError::DegenerateMatrix => SentiStatus::Degenerate,
        _ => SentiStatus::InvalidInput,
    };
    (status, e.to_string())
}

#[no_mangle]
pub extern "C" fn senti_vad_default() -> SentiVadConfig {
    let d = VadConfig::default();
    SentiVadConfig {
        frame_ms: d.frame_ms,
        energy_threshold_db: d.energy_threshold_db,
        min_speech_ms: d.min_speech_ms,
        min_silence_ms: d.min_silence_ms,
        hangover_frames: d.hangover_frames,
    }
}

/// Runs the energy VAD over 16 kHz mono samples. `config` may be NULL for
/// defaults. Release the result with [`senti_segments_free`].
///
/// # Safety
/// `samples` must point to `n_samples` readable values (may be NULL if zero).
#[no_mangle]
pub unsafe extern "C" fn senti_detect_segments(
    samples: *const i16,
    n_samples: usize,
    config: *const SentiVadConfig,
    out: *mut *mut SentiSegments,
) -> SentiStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let samples = match (samples.is_null(), n_samples) {
            (_, 0) => Vec::new(),
            (true, _) => return Err(null("samples")),
            (false, n) => std::slice::from_raw_parts(samples, n).to_vec(),
        };
        let cfg = config.as_ref().map(|c| VadConfig::from(*c)).unwrap_or_default();
        let spans = detect_segments(&AudioClip::new(samples), &cfg)
            .map_err(|e| (SentiStatus::InvalidInput, e.to_string()))?;
        *out = Box::into_raw(Box::new(SentiSegments(spans)));
        Ok(())
    })
}

/// Number of segments; 0 for NULL.
///
/// # Safety
/// `segments` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn senti_segments_len(segments: *const SentiSegments) -> usize {
    segments.as_ref().map_or(0, |s| s.0.len())
}

/// Start and end (seconds) of segment `index`.
///
/// # Safety
/// `segments` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn senti_segments_get(
    segments: *const SentiSegments,
    index: usize,
    out_start_s: *mut f64,
    out_end_s: *mut f64,
) -> SentiStatus {
    guard(|| {
        let segs = &segments.as_ref().ok_or_else(|| null("segments"))?.0;
        let span = segs.get(index).ok_or_else(|| {
            (SentiStatus::InvalidInput, format!("segment {index} out of range ({} segments)", segs.len()))
        })?;
        *out_arg(out_start_s, "out_start_s")? = span.start_s;
        *out_arg(out_end_s, "out_end_s")? = span.end_s;
        Ok(())
    })
}

/// # Safety
/// `segments` must be NULL or a handle from this library, freed at most once.
#[no_mangle]
pub unsafe extern "C" fn senti_segments_free(segments: *mut SentiSegments) {
    if !segments.is_null() {
        drop(Box::from_raw(segments));
    }
}

