//! Fixtures and independent oracles shared by the integration tests.
//!
//! The oracles here deliberately avoid the library's code paths: the VAD
//! oracle segments in one batch pass over its own RMS computation, the kappa
//! oracle works from raw rater pairs, and the grid oracle counts lexicon words
//! by hand.

#![allow(dead_code)]

use senti_core::audio::{encode_wav, AudioClip, VadConfig};
use senti_core::dataset::LabeledStatement;
use senti_core::model::{PolarityModel, SentimentLabel};
use senti_core::features::Lexicon;

pub const RATE: usize = 16_000;

pub fn silence(ms: usize) -> Vec<i16> {
    vec![0; RATE * ms / 1000]
}

pub fn tone(ms: usize, amplitude: f64) -> Vec<i16> {
    (0..RATE * ms / 1000)
        .map(|i| {
            let t = i as f64 / RATE as f64;
            (amplitude * (2.0 * std::f64::consts::PI * 440.0 * t).sin()).round() as i16
        })
        .collect()
}

/// 0.5 s silence, `n` bursts of 1 s tone each followed by 0.6 s silence.
pub fn burst_clip(n: usize) -> AudioClip {
    let mut s = silence(500);
    for _ in 0..n {
        s.extend(tone(1000, 20_000.0));
        s.extend(silence(600));
    }
    AudioClip::new(s)
}

pub fn burst_wav(n: usize) -> Vec<u8> {
    encode_wav(burst_clip(n).samples())
}

/// Frame-level VAD oracle: batch runs, hangover, merge, drop. Returns spans in
/// frame units `[start, end)`.
pub fn oracle_segments(samples: &[i16], cfg: &VadConfig) -> Vec<(usize, usize)> {
    let frame = RATE * cfg.frame_ms as usize / 1000;
    let n = samples.len() / frame;
    let voiced: Vec<bool> = (0..n)
        .map(|f| {
            let chunk = &samples[f * frame..(f + 1) * frame];
            let mean_sq = chunk.iter().map(|&x| (x as f64).powi(2)).sum::<f64>() / frame as f64;
            let db = if mean_sq == 0.0 { -120.0 } else { 10.0 * (mean_sq / 32768f64.powi(2)).log10() };
            db >= cfg.energy_threshold_db
        })
        .collect();

    let mut runs: Vec<(usize, usize)> = Vec::new();
    let mut f = 0;
    while f < n {
        if voiced[f] {
            let start = f;
            while f < n && voiced[f] {
                f += 1;
            }
            runs.push((start, (f + cfg.hangover_frames as usize).min(n)));
        } else {
            f += 1;
        }
    }

    let mut merged: Vec<(usize, usize)> = Vec::new();
    for (s, e) in runs {
        match merged.last_mut() {
            Some(last) if s <= last.1 || (s - last.1) * (cfg.frame_ms as usize) < cfg.min_silence_ms as usize => {
                last.1 = last.1.max(e)
            }
            _ => merged.push((s, e)),
        }
    }
    merged
        .into_iter()
        .filter(|(s, e)| (e - s) * cfg.frame_ms as usize >= cfg.min_speech_ms as usize)
        .collect()
}

/// Fleiss' kappa written from the pairwise-agreement definition over raw
/// rater label lists. `None` when chance agreement is 1.
#[allow(clippy::needless_range_loop)]
pub fn oracle_kappa(raters: &[Vec<usize>], k: usize) -> Option<(f64, f64, f64)> {
    let n_items = raters[0].len();
    let n = raters.len();
    let mut agree_pairs = 0.0;
    for i in 0..n_items {
        let mut pairs = 0usize;
        for a in 0..n {
            for b in 0..n {
                if a != b && raters[a][i] == raters[b][i] {
                    pairs += 1;
                }
            }
        }
        agree_pairs += pairs as f64 / (n * (n - 1)) as f64;
    }
    let p_bar = agree_pairs / n_items as f64;
    let total = (n_items * n) as f64;
    let mut p_e = 0.0;
    for cat in 0..k {
        let c = raters.iter().flatten().filter(|&&x| x == cat).count() as f64;
        p_e += (c / total) * (c / total);
    }
    if (1.0 - p_e).abs() < 1e-15 {
        return None;
    }
    Some((p_bar, p_e, (p_bar - p_e) / (1.0 - p_e)))
}

fn repeat(label: SentimentLabel, n: usize) -> impl Iterator<Item = SentimentLabel> {
    std::iter::repeat_n(label, n)
}

/// The 50-item software-vs-manual comparison: software is rater A, manual B.
/// Pairing: 5 Pos/Pos, 39 Neu/Neu, 5 Pos/Neu, 1 Neg/Neu.
pub fn software_vs_manual() -> (Vec<SentimentLabel>, Vec<SentimentLabel>) {
    use SentimentLabel::*;
    let software: Vec<_> = repeat(Positive, 5)
        .chain(repeat(Neutral, 39))
        .chain(repeat(Positive, 5))
        .chain(repeat(Negative, 1))
        .collect();
    let manual: Vec<_> = repeat(Positive, 5)
        .chain(repeat(Neutral, 39))
        .chain(repeat(Neutral, 5))
        .chain(repeat(Neutral, 1))
        .collect();
    (software, manual)
}

pub fn labels(pos: usize, neu: usize, neg: usize) -> Vec<SentimentLabel> {
    repeat(SentimentLabel::Positive, pos)
        .chain(repeat(SentimentLabel::Neutral, neu))
        .chain(repeat(SentimentLabel::Negative, neg))
        .collect()
}

/// Synthetic corpus with the training-set class counts; texts carry no
/// lexicon words so only the label counts matter.
pub fn training_shaped_corpus() -> Vec<LabeledStatement> {
    labels(77, 552, 83)
        .into_iter()
        .enumerate()
        .map(|(i, l)| LabeledStatement::new(format!("aussage nummer {i}"), l))
        .collect()
}

const FILLER: [&str; 8] = [
    "wir", "treffen", "uns", "morgen", "der", "plan", "für", "heute",
];

/// 40 statements: 14 contain "gut" (positive), 13 contain "schlecht"
/// (negative), 13 contain neither (neutral).
pub fn toy_corpus() -> Vec<LabeledStatement> {
    let mut out = Vec::new();
    for i in 0..40 {
        let len = 2 + i % 4;
        let mut words: Vec<&str> = (0..len).map(|j| FILLER[(i + 3 * j) % FILLER.len()]).collect();
        let label = match i % 3 {
            0 => {
                words.insert(i % len, "gut");
                SentimentLabel::Positive
            }
            1 => {
                words.insert(i % len, "schlecht");
                SentimentLabel::Negative
            }
            _ => SentimentLabel::Neutral,
        };
        out.push(LabeledStatement::new(words.join(" "), label));
    }
    out
}

/// Hand polarity for the toy corpus: +1 per "gut", -1 per "schlecht".
pub fn hand_polarity(text: &str) -> f64 {
    text.split_whitespace()
        .map(|w| match w {
            "gut" => 1.0,
            "schlecht" => -1.0,
            _ => 0.0,
        })
        .sum()
}

/// Exhaustive grid over (polarity weight, threshold_pos, threshold_neg) in
/// steps of 0.25 on [-2, 2]; returns the best accuracy and its first argmax.
pub fn grid_search_separator(data: &[LabeledStatement]) -> (f64, (f64, f64, f64)) {
    let grid: Vec<f64> = (-8..=8).map(|i| i as f64 * 0.25).collect();
    let mut best = (-1.0, (0.0, 0.0, 0.0));
    for &w in &grid {
        for &tp in &grid {
            for &tn in grid.iter().filter(|&&t| t <= tp) {
                let hits = data
                    .iter()
                    .filter(|s| {
                        let score = w * hand_polarity(&s.text);
                        let l = if score > tp {
                            SentimentLabel::Positive
                        } else if score < tn {
                            SentimentLabel::Negative
                        } else {
                            SentimentLabel::Neutral
                        };
                        l == s.label
                    })
                    .count();
                let acc = hits as f64 / data.len() as f64;
                if acc > best.0 {
                    best = (acc, (w, tp, tn));
                }
            }
        }
    }
    best
}

/// polarity_sum weight 1, thresholds ±0.5, built-in lexicon.
pub fn toy_model() -> PolarityModel {
    let mut m = PolarityModel::zeros(Lexicon::builtin().name());
    m.set_weight("polarity_sum", 1.0).unwrap();
    m.threshold_pos = 0.5;
    m.threshold_neg = -0.5;
    m
}
