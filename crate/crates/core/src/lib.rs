//! Meeting audio in, per-statement sentiment out.
//!
//! The pipeline runs WAV ingestion and energy VAD ([`audio`]), transcription
//! through a pluggable backend ([`asr`]), lexicon feature extraction
//! ([`features`]) and a linear three-way polarity model ([`model`]), then
//! assembles a meeting report ([`report`]). [`train`] fits the model with a
//! (1+1) evolution strategy and [`eval`] provides accuracy and Fleiss' kappa.

pub mod asr;
pub mod audio;
pub mod cli;
pub mod dataset;
pub mod eval;
pub mod features;
pub mod live;
pub mod model;
pub mod report;
pub mod train;

pub use asr::{AsrBackend, AsrBackendConfig, Statement, StatementSource};
pub use audio::{AudioClip, SegmentSpan, VadConfig};
pub use dataset::LabeledStatement;
pub use eval::{KappaInterpretation, KappaResult, RatingMatrix};
pub use features::{FeatureVector, Lexicon};
pub use model::{PolarityModel, SentimentLabel};
pub use report::MeetingReport;
pub use train::{FitnessTrace, TrainConfig};
