//! `senti` command line.
//!
//! Exit codes: 0 ok, 2 usage or input error, 3 ASR backend failure,
//! 4 capture device unavailable. Every failure prints one diagnostic line on
//! standard error. Output files are written to a temp file and renamed, so a
//! failed run never leaves a partial file.

use std::ffi::OsString;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use chrono::{DateTime, Utc};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::asr::{transcribe_with, AsrBackend, AsrBackendConfig, AsrError};
use crate::audio::{detect_segments, load_wav, AudioClip, VadConfig};
use crate::dataset::{load_label_jsonl, load_training_jsonl};
use crate::eval::{
    accuracy, confusion, distribution, fleiss_kappa, ConfusionMatrix, DistributionTable, EvalError,
    KappaResult, RatingMatrix,
};
use crate::features::Lexicon;
use crate::live::{open_device, run_live, LiveError, DEFAULT_QUEUE_FRAMES};
use crate::model::{load_model, save_model, write_atomic, PolarityModel, SentimentLabel};
use crate::report::{build_report, render_report, AudioMeta, ReportContext, ReportFormat};
use crate::train::{train, InitStrategy, TrainConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;
pub const EXIT_DEVICE: i32 = 4;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Backend(String),
    Device(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Backend(_) => EXIT_BACKEND,
            CliError::Device(_) => EXIT_DEVICE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Backend(m) | CliError::Device(m) => m,
        }
    }
}

fn input<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> CliError + '_ {
    move |e| CliError::Input(format!("{context}: {e}"))
}

fn asr_error(e: AsrError) -> CliError {
    match e {
        AsrError::TranscriptUnreadable { .. } => CliError::Input(e.to_string()),
        other => CliError::Backend(other.to_string()),
    }
}

#[derive(Parser, Debug)]
#[command(name = "senti", version, about = "Sentiment analysis for meeting audio")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Segment, transcribe and classify a recorded meeting
    Analyze(AnalyzeArgs),
    /// Capture from a device until Enter is pressed, then report
    Live(LiveArgs),
    /// Fit a model to labeled statements
    Train(TrainArgs),
    /// Compare predicted labels against reference labels
    Eval(EvalArgs),
    /// Segment and transcribe a recording to JSONL statements
    Transcribe(TranscribeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct VadArgs {
    #[arg(long = "vad-frame-ms", default_value_t = 30)]
    pub frame_ms: u32,
    #[arg(long = "vad-threshold-db", default_value_t = -40.0, allow_negative_numbers = true)]
    pub threshold_db: f64,
    #[arg(long = "vad-min-speech-ms", default_value_t = 250)]
    pub min_speech_ms: u32,
    #[arg(long = "vad-min-silence-ms", default_value_t = 300)]
    pub min_silence_ms: u32,
}

impl VadArgs {
    fn config(&self) -> Result<VadConfig, CliError> {
        let cfg = VadConfig {
            frame_ms: self.frame_ms,
            energy_threshold_db: self.threshold_db,
            min_speech_ms: self.min_speech_ms,
            min_silence_ms: self.min_silence_ms,
            ..VadConfig::default()
        };
        cfg.validate().map_err(|e| CliError::Input(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args, Debug, Clone)]
#[group(required = true, multiple = false)]
pub struct AsrArgs {
    /// Recognizer command; the segment WAV is `$1` or `{wav}`
    #[arg(long = "asr-cmd")]
    pub asr_cmd: Option<String>,
    /// Transcript file, line i belongs to segment i
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

impl AsrArgs {
    fn config(&self) -> AsrBackendConfig {
        match (&self.asr_cmd, &self.transcript) {
            (Some(cmd), _) => AsrBackendConfig::ExternalCommand {
                command_template: cmd.clone(),
            },
            (None, Some(path)) => AsrBackendConfig::TranscriptFile {
                transcript_path: path.clone(),
            },
            (None, None) => unreachable!("clap enforces one backend"),
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct LexiconArgs {
    /// Lexicon TSV (word<TAB>score); the built-in German lexicon when omitted
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Negator list, one word per line
    #[arg(long)]
    pub negators: Option<PathBuf>,
}

impl LexiconArgs {
    fn load(&self) -> Result<Lexicon, CliError> {
        match &self.lexicon {
            None => Ok(Lexicon::builtin()),
            Some(path) => {
                let path = resolve_lexicon_path(path);
                let negators = self.negators.as_ref().map(|p| resolve_lexicon_path(p));
                Lexicon::load(&path, negators.as_deref()).map_err(input("lexicon"))
            }
        }
    }
}

/// Relative lexicon paths that do not exist are looked up in `SENTI_LEXICON_DIR`.
fn resolve_lexicon_path(path: &Path) -> PathBuf {
    if path.is_relative() && !path.exists() {
        if let Some(dir) = std::env::var_os("SENTI_LEXICON_DIR") {
            let candidate = Path::new(&dir).join(path);
            if candidate.exists() {
                return candidate;
            }
        }
    }
    path.to_path_buf()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Json,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Text => ReportFormat::Text,
            FormatArg::Json => ReportFormat::Json,
        }
    }
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// 16 kHz mono PCM16 WAV recording
    #[arg(long)]
    pub input: PathBuf,
    /// Trained model JSON
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[command(flatten)]
    pub asr: AsrArgs,
    /// Write output here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
    #[command(flatten)]
    pub vad: VadArgs,
}

#[derive(Args, Debug)]
pub struct LiveArgs {
    /// Capture device: wav:<path> (loopback) or raw:<path> (s16le 16 kHz mono stream)
    #[arg(long)]
    pub device: String,
    /// Trained model JSON
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[command(flatten)]
    pub asr: AsrArgs,
    /// Write output here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
    #[command(flatten)]
    pub vad: VadArgs,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum InitArg {
    Zeros,
    Random,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Training JSONL ({"text", "label"} per line)
    #[arg(long, alias = "data")]
    pub input: PathBuf,
    #[command(flatten)]
    pub lexicon: LexiconArgs,
    #[arg(long, default_value_t = 1000)]
    pub generations: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub sigma: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Zeros)]
    pub init: InitArg,
    /// Model output path
    #[arg(long)]
    pub out: PathBuf,
    /// Fitness trace CSV; defaults to <out stem>.trace.csv next to the model
    #[arg(long)]
    pub trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Predicted labels (JSONL, `text` optional)
    #[arg(long)]
    pub pred: PathBuf,
    /// Reference labels (JSONL, `text` optional)
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Write output here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
}

#[derive(Args, Debug)]
pub struct TranscribeArgs {
    /// 16 kHz mono PCM16 WAV recording
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub asr: AsrArgs,
    /// Write output here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub vad: VadArgs,
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => cmd_analyze(&a),
        Command::Live(a) => cmd_live(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Transcribe(a) => cmd_transcribe(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("senti: {}", e.message());
            e.exit_code()
        }
    }
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, bytes).map_err(input(&path.display().to_string())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(input("stdout"))
        }
    }
}

fn format_timestamp(secs: i64) -> String {
    DateTime::<Utc>::from_timestamp(secs, 0)
        .unwrap_or_default()
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// `SOURCE_DATE_EPOCH` when set, else the modification time of `anchor`,
/// else now. Re-running on the same inputs yields the same stamp.
fn stamp(anchor: Option<&Path>) -> String {
    if let Some(secs) = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
    {
        return format_timestamp(secs);
    }
    let time = anchor
        .and_then(|p| p.metadata().ok())
        .and_then(|m| m.modified().ok())
        .unwrap_or_else(SystemTime::now);
    let secs = time
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0);
    format_timestamp(secs)
}

fn load_model_and_lexicon(
    model: &Path,
    lexicon: &LexiconArgs,
) -> Result<(PolarityModel, Lexicon), CliError> {
    let m = load_model(model).map_err(input(&model.display().to_string()))?;
    let lex = lexicon.load()?;
    Ok((m, lex))
}

fn model_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into())
}

fn write_report(
    clip: &AudioClip,
    statements: &[crate::asr::Statement],
    model: &PolarityModel,
    model_path: &Path,
    lexicon: &Lexicon,
    generated_at: String,
    (format, out): (FormatArg, Option<&Path>),
) -> Result<(), CliError> {
    let ctx = ReportContext {
        model_name: model_name(model_path),
        audio_meta: Some(AudioMeta {
            duration_s: clip.duration_seconds(),
            sample_rate_hz: clip.sample_rate_hz(),
        }),
        generated_at,
    };
    let report =
        build_report(statements, model, lexicon, &ctx).map_err(|e| CliError::Input(e.to_string()))?;
    let mut buf = Vec::new();
    render_report(&report, format.into(), &mut buf).map_err(input("report"))?;
    emit(out, &buf)
}

pub fn cmd_analyze(args: &AnalyzeArgs) -> Result<(), CliError> {
    let vad = args.vad.config()?;
    let clip = load_wav(&args.input).map_err(input(&args.input.display().to_string()))?;
    let (model, lexicon) = load_model_and_lexicon(&args.model, &args.lexicon)?;
    let backend = args.asr.config().build().map_err(asr_error)?;

    let spans = detect_segments(&clip, &vad).map_err(input("vad"))?;
    let statements = transcribe_with(backend.as_ref(), &clip, &spans).map_err(asr_error)?;
    write_report(
        &clip,
        &statements,
        &model,
        &args.model,
        &lexicon,
        stamp(Some(&args.input)),
        (args.format, args.out.as_deref()),
    )
}

pub fn cmd_live(args: &LiveArgs) -> Result<(), CliError> {
    let vad = args.vad.config()?;
    let (model, lexicon) = load_model_and_lexicon(&args.model, &args.lexicon)?;
    let backend: Arc<dyn AsrBackend> = Arc::from(args.asr.config().build().map_err(asr_error)?);
    let source = open_device(&args.device).map_err(|e| CliError::Device(e.to_string()))?;

    let stop = Arc::new(AtomicBool::new(false));
    {
        let stop = Arc::clone(&stop);
        // the reader thread is left behind if stdin never delivers a line
        std::thread::spawn(move || {
            let mut line = String::new();
            if let Ok(n) = io::stdin().lock().read_line(&mut line) {
                if n > 0 {
                    stop.store(true, Ordering::SeqCst);
                }
            }
        });
    }
    eprintln!("senti: capturing from {}; press Enter to stop", args.device);

    let capture = run_live(source, &vad, backend, stop, DEFAULT_QUEUE_FRAMES).map_err(|e| match e {
        LiveError::DeviceUnavailable(m) => CliError::Device(m),
        LiveError::Capture(e) => CliError::Device(format!("capture failed: {e}")),
        LiveError::Vad(e) => CliError::Input(e.to_string()),
        LiveError::Asr(e) => asr_error(e),
    })?;

    write_report(
        &capture.clip,
        &capture.statements,
        &model,
        &args.model,
        &lexicon,
        stamp(None),
        (args.format, args.out.as_deref()),
    )
}

fn default_trace_path(model: &Path) -> PathBuf {
    let stem = model
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "model".into());
    model.with_file_name(format!("{stem}.trace.csv"))
}

pub fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    if args.generations == 0 {
        return Err(CliError::Input("--generations must be at least 1".into()));
    }
    let data = load_training_jsonl(&args.input).map_err(|e| CliError::Input(e.to_string()))?;
    let lexicon = args.lexicon.load()?;
    let config = TrainConfig {
        generations: args.generations,
        seed: args.seed,
        mutation_sigma: args.sigma,
        init: match args.init {
            InitArg::Zeros => InitStrategy::Zeros,
            InitArg::Random => InitStrategy::SeededRandom,
        },
    };
    let (mut model, trace) =
        train(&data, &lexicon, &config).map_err(|e| CliError::Input(e.to_string()))?;
    model.metadata.created_at = stamp(Some(&args.input));

    let trace_path = args
        .trace
        .clone()
        .unwrap_or_else(|| default_trace_path(&args.out));
    write_atomic(&trace_path, trace.to_csv().as_bytes())
        .map_err(input(&trace_path.display().to_string()))?;
    save_model(&model, &args.out).map_err(input(&args.out.display().to_string()))?;

    println!(
        "final fitness {:.4} after {} generations ({} statements)",
        model.metadata.train_fitness,
        config.generations,
        data.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvalSummary {
    items: usize,
    accuracy: f64,
    confusion: ConfusionMatrix,
    pred_distribution: DistributionTable,
    ref_distribution: DistributionTable,
    kappa: Option<KappaResult>,
}

fn render_eval_text(s: &EvalSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!("items {}\n", s.items));
    out.push_str(&format!("accuracy {:.4}\n\n", s.accuracy));
    out.push_str("confusion (rows = reference, columns = predicted)\n");
    out.push_str(&format!(
        "{:<10}{:>10}{:>10}{:>10}\n",
        "", "positive", "neutral", "negative"
    ));
    for truth in SentimentLabel::ALL {
        out.push_str(&format!("{:<10}", truth.as_str()));
        for pred in SentimentLabel::ALL {
            out.push_str(&format!("{:>10}", s.confusion.get(truth, pred)));
        }
        out.push('\n');
    }
    out.push('\n');
    for (name, d) in [("predicted", &s.pred_distribution), ("reference", &s.ref_distribution)] {
        out.push_str(&format!("{name} distribution (total {})\n", d.total));
        for label in SentimentLabel::ALL {
            out.push_str(&format!("  {}\n", d.format_row(label)));
        }
    }
    out.push('\n');
    match &s.kappa {
        Some(k) => {
            out.push_str(&format!("p_bar {:.4}\n", k.p_bar));
            out.push_str(&format!("p_e {:.4}\n", k.p_e));
            out.push_str(&format!("kappa {:.4} ({:.2})\n", k.kappa, k.kappa));
            out.push_str(&format!("interpretation {}\n", k.interpretation));
        }
        None => out.push_str("kappa undefined (all labels in one category)\n"),
    }
    out
}

pub fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let pred: Vec<SentimentLabel> = load_label_jsonl(&args.pred)
        .map_err(|e| CliError::Input(e.to_string()))?
        .into_iter()
        .map(|r| r.label)
        .collect();
    let reference: Vec<SentimentLabel> = load_label_jsonl(&args.reference)
        .map_err(|e| CliError::Input(e.to_string()))?
        .into_iter()
        .map(|r| r.label)
        .collect();

    let acc = accuracy(&pred, &reference).map_err(input("eval"))?;
    let kappa = match fleiss_kappa(
        &RatingMatrix::from_raters(&[&pred, &reference]).map_err(input("eval"))?,
    ) {
        Ok(k) => Some(k),
        Err(EvalError::DegenerateMatrix) => {
            eprintln!("senti: kappa undefined: every label falls in one category");
            None
        }
        Err(e) => return Err(CliError::Input(e.to_string())),
    };
    let summary = EvalSummary {
        items: pred.len(),
        accuracy: acc,
        confusion: confusion(&pred, &reference).map_err(input("eval"))?,
        pred_distribution: distribution(&pred).map_err(input("eval"))?,
        ref_distribution: distribution(&reference).map_err(input("eval"))?,
        kappa,
    };
    let body = match args.format {
        FormatArg::Text => render_eval_text(&summary),
        FormatArg::Json => {
            let mut s = serde_json::to_string_pretty(&summary).expect("summary serializes");
            s.push('\n');
            s
        }
    };
    emit(args.out.as_deref(), body.as_bytes())
}

#[derive(Serialize)]
struct TranscriptLine<'a> {
    index: usize,
    start_s: f64,
    end_s: f64,
    text: &'a str,
}

pub fn cmd_transcribe(args: &TranscribeArgs) -> Result<(), CliError> {
    let vad = args.vad.config()?;
    let clip = load_wav(&args.input).map_err(input(&args.input.display().to_string()))?;
    let backend = args.asr.config().build().map_err(asr_error)?;
    let spans = detect_segments(&clip, &vad).map_err(input("vad"))?;
    let statements = transcribe_with(backend.as_ref(), &clip, &spans).map_err(asr_error)?;

    let mut body = String::new();
    for st in &statements {
        let line = TranscriptLine {
            index: st.index,
            start_s: st.start_s,
            end_s: st.end_s,
            text: &st.text,
        };
        body.push_str(&serde_json::to_string(&line).expect("line serializes"));
        body.push('\n');
    }
    emit(args.out.as_deref(), body.as_bytes())
}
