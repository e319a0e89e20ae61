//! Elitist (1+1) evolution strategy over the model's weights and thresholds.
//!
//! Fitness is plain accuracy on the training set. Generation 0 evaluates the
//! initial parent; every later generation draws one child by adding Gaussian
//! noise to all ten weights and both thresholds, and the child replaces the
//! parent when its fitness is greater than or equal to the parent's.
//!
//! Random numbers come from `ChaCha8Rng::seed_from_u64(seed)`, normal draws
//! from `rand_distr::StandardNormal` scaled by `mutation_sigma`. Draw order per
//! child: weights in feature order, then `threshold_pos`, then `threshold_neg`.
//! Keep all of this fixed so seeds reproduce across releases.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::LabeledStatement;
use crate::features::{extract_features, FeatureVector, Lexicon};
use crate::model::{classify, ModelMetadata, PolarityModel, SentimentLabel};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training data is empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    Zeros,
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub generations: u32,
    pub seed: u64,
    pub mutation_sigma: f64,
    pub init: InitStrategy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            generations: 1000,
            seed: 0,
            mutation_sigma: 0.1,
            init: InitStrategy::Zeros,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.generations == 0 {
            return Err(TrainError::InvalidConfig("generations must be at least 1".into()));
        }
        if !(self.mutation_sigma.is_finite() && self.mutation_sigma > 0.0) {
            return Err(TrainError::InvalidConfig(
                "mutation_sigma must be a positive number".into(),
            ));
        }
        Ok(())
    }
}

/// Parent fitness after each generation; entry 0 is the initial parent.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitnessTrace(pub Vec<f64>);

impl FitnessTrace {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.0.last().copied()
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.0.windows(2).all(|w| w[0] <= w[1])
    }

    /// `generation,fitness` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("generation,fitness\n");
        for (g, f) in self.0.iter().enumerate() {
            out.push_str(&format!("{g},{f}\n"));
        }
        out
    }
}

/// Features are computed once; fitness evaluation then only scores.
struct Prepared {
    features: Vec<FeatureVector>,
    labels: Vec<SentimentLabel>,
}

impl Prepared {
    fn new(data: &[LabeledStatement], lexicon: &Lexicon) -> Self {
        Self {
            features: data.iter().map(|s| extract_features(&s.text, lexicon)).collect(),
            labels: data.iter().map(|s| s.label).collect(),
        }
    }

    fn accuracy(&self, model: &PolarityModel) -> f64 {
        let hits = self
            .features
            .iter()
            .zip(&self.labels)
            .filter(|(fv, label)| classify(model, fv) == **label)
            .count();
        hits as f64 / self.labels.len() as f64
    }
}

pub fn fitness(
    model: &PolarityModel,
    data: &[LabeledStatement],
    lexicon: &Lexicon,
) -> Result<f64, TrainError> {
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    Ok(Prepared::new(data, lexicon).accuracy(model))
}

fn gaussian(rng: &mut ChaCha8Rng, sigma: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    z * sigma
}

fn order_thresholds(model: &mut PolarityModel) {
    if model.threshold_neg > model.threshold_pos {
        std::mem::swap(&mut model.threshold_neg, &mut model.threshold_pos);
    }
}

fn mutate(parent: &PolarityModel, rng: &mut ChaCha8Rng, sigma: f64) -> PolarityModel {
    let mut child = parent.clone();
    for w in child.weights.iter_mut() {
        *w += gaussian(rng, sigma);
    }
    child.threshold_pos += gaussian(rng, sigma);
    child.threshold_neg += gaussian(rng, sigma);
    order_thresholds(&mut child);
    child
}

pub fn train(
    data: &[LabeledStatement],
    lexicon: &Lexicon,
    config: &TrainConfig,
) -> Result<(PolarityModel, FitnessTrace), TrainError> {
    config.validate()?;
    if data.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let prepared = Prepared::new(data, lexicon);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut parent = PolarityModel::zeros(lexicon.name());
    if config.init == InitStrategy::SeededRandom {
        parent = mutate(&parent, &mut rng, config.mutation_sigma);
    }
    let mut parent_fitness = prepared.accuracy(&parent);
    let mut trace = Vec::with_capacity(config.generations as usize);
    trace.push(parent_fitness);

    for _ in 1..config.generations {
        let child = mutate(&parent, &mut rng, config.mutation_sigma);
        let child_fitness = prepared.accuracy(&child);
        if child_fitness >= parent_fitness {
            parent = child;
            parent_fitness = child_fitness;
        }
        trace.push(parent_fitness);
    }

    parent.metadata = ModelMetadata {
        generations: config.generations,
        seed: config.seed,
        train_fitness: parent_fitness,
        ..ModelMetadata::default()
    };
    Ok((parent, FitnessTrace(trace)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus() -> Vec<LabeledStatement> {
        vec![
            LabeledStatement::new("das ist gut", SentimentLabel::Positive),
            LabeledStatement::new("das ist schlecht", SentimentLabel::Negative),
            LabeledStatement::new("wir machen weiter", SentimentLabel::Neutral),
            LabeledStatement::new("morgen um zehn", SentimentLabel::Neutral),
        ]
    }

    #[test]
    fn empty_dataset() {
        let lex = Lexicon::builtin();
        assert!(matches!(
            fitness(&PolarityModel::zeros("x"), &[], &lex),
            Err(TrainError::EmptyDataset)
        ));
        assert!(matches!(
            train(&[], &lex, &TrainConfig::default()),
            Err(TrainError::EmptyDataset)
        ));
    }

    #[test]
    fn rejects_zero_generations_and_bad_sigma() {
        let lex = Lexicon::builtin();
        let cfg = TrainConfig { generations: 0, ..TrainConfig::default() };
        assert!(matches!(train(&corpus(), &lex, &cfg), Err(TrainError::InvalidConfig(_))));
        let cfg = TrainConfig { mutation_sigma: 0.0, ..TrainConfig::default() };
        assert!(matches!(train(&corpus(), &lex, &cfg), Err(TrainError::InvalidConfig(_))));
    }

    #[test]
    fn fitness_extremes() {
        let lex = Lexicon::builtin();
        let mut m = PolarityModel::zeros(lex.name());
        m.set_weight("polarity_sum", 1.0).unwrap();
        m.threshold_pos = 0.5;
        m.threshold_neg = -0.5;
        assert_eq!(fitness(&m, &corpus(), &lex).unwrap(), 1.0);
        let wrong = [LabeledStatement::new("das ist gut", SentimentLabel::Negative)];
        assert_eq!(fitness(&m, &wrong, &lex).unwrap(), 0.0);
    }

    #[test]
    fn single_generation_is_baseline() {
        let lex = Lexicon::builtin();
        let cfg = TrainConfig { generations: 1, ..TrainConfig::default() };
        let (model, trace) = train(&corpus(), &lex, &cfg).unwrap();
        assert_eq!(trace.0, vec![0.5]);
        assert_eq!(model.weights, [0.0; 10]);
        assert_eq!(model.metadata.train_fitness, 0.5);
    }

    #[test]
    fn seeded_random_init_is_ordered() {
        let lex = Lexicon::builtin();
        for seed in 0..20 {
            let cfg = TrainConfig {
                generations: 1,
                seed,
                init: InitStrategy::SeededRandom,
                ..TrainConfig::default()
            };
            let (model, _) = train(&corpus(), &lex, &cfg).unwrap();
            assert!(model.threshold_neg <= model.threshold_pos);
            assert!(model.weights.iter().any(|w| *w != 0.0));
        }
    }

    #[test]
    fn trace_csv() {
        let t = FitnessTrace(vec![0.5, 0.75]);
        assert_eq!(t.to_csv(), "generation,fitness\n0,0.5\n1,0.75\n");
    }
}
