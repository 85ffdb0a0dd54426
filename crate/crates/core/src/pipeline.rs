//! End-to-end fitting: bias profiles, per-semester embeddings, optional
//! minority oversampling, and LSTM training, bundled for later prediction.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bias::{bias_profiles, BiasProfile};
use crate::cohort::{Cohort, NUM_SEMESTERS};
use crate::embedding::{EmbeddingConfig, EmbeddingModel};
use crate::error::{Error, Result};
use crate::gan::{self, GanConfig, GanEpoch, GanParams};
use crate::trainer::{self, assemble_sequences, feature_schema, label_of, Model, StudentSequence, TrainConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Root seed; every stage draws from its own stream of it.
    pub seed: u64,
    pub num_semesters: usize,
    pub use_gan: bool,
    pub embedding: EmbeddingConfig,
    pub gan: GanConfig,
    pub train: TrainConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            num_semesters: NUM_SEMESTERS,
            use_gan: true,
            embedding: EmbeddingConfig::default(),
            gan: GanConfig::default(),
            train: TrainConfig::default(),
        }
    }
}

impl PipelineConfig {
    /// Copies the root seed into the stage configs.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        c.embedding.seed = self.seed;
        c.train.seed = self.seed;
        c
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=NUM_SEMESTERS).contains(&self.num_semesters) {
            return Err(Error::Config(format!(
                "num_semesters must be in 1..={NUM_SEMESTERS}, got {}",
                self.num_semesters
            )));
        }
        self.gan.validate()?;
        self.train.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub loss: Vec<f64>,
    pub gan: Vec<GanEpoch>,
}

/// Everything needed to score new students, plus how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub config: PipelineConfig,
    pub profiles: Vec<BiasProfile>,
    pub embedding: EmbeddingModel,
    pub gan: Option<GanParams>,
    pub model: Model,
    pub history: TrainingHistory,
}

impl ModelBundle {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        serde_json::to_writer(std::io::BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
    }
}

/// Augmented training sequences: the real ones plus generated minority
/// sequences, and the generator that produced them.
pub struct Augmented {
    pub sequences: Vec<StudentSequence>,
    pub gan: Option<GanParams>,
    pub history: Vec<GanEpoch>,
}

/// Trains a generator on the minority class of `real` and appends samples
/// until the labels are balanced.
pub fn oversample(real: &[StudentSequence], config: &GanConfig, seed: u64) -> Result<Augmented> {
    let schema = feature_schema(real)?;
    let (set, fitted) = gan::augment(trainer::to_samples(real), schema, config, seed)?;
    let sequences = trainer::with_synthetic(real, &set)?;
    let (gan, history) = match fitted {
        Some((g, h)) => (Some(g), h),
        None => (None, Vec::new()),
    };
    Ok(Augmented {
        sequences,
        gan,
        history,
    })
}

/// Fits the whole pipeline on a training cohort.
pub fn fit(train: &Cohort, config: &PipelineConfig) -> Result<ModelBundle> {
    config.validate()?;
    let config = config.resolved();
    let exec = config.train.exec;
    let profiles = bias_profiles(train, config.train.bias_weight_mode, exec)?;
    let embedding = EmbeddingModel::fit(train, &config.embedding, exec)?;
    let codes = embedding.embed(train)?;
    let real = assemble_sequences(train, &codes, config.num_semesters)?;
    let aug = if config.use_gan {
        oversample(&real, &config.gan, config.seed)?
    } else {
        Augmented {
            sequences: real,
            gan: None,
            history: Vec::new(),
        }
    };
    let (model, loss) = trainer::train(&aug.sequences, &profiles, &config.train)?;
    Ok(ModelBundle {
        config,
        profiles,
        embedding,
        gan: aug.gan,
        model,
        history: TrainingHistory {
            loss,
            gan: aug.history,
        },
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub student_id: String,
    pub probability: f64,
    pub label: u8,
}

/// Scores every student of `cohort` with a fitted bundle.
pub fn predict_cohort(bundle: &ModelBundle, cohort: &Cohort) -> Result<Vec<Prediction>> {
    let codes = bundle.embedding.embed(cohort)?;
    let seqs = assemble_sequences(cohort, &codes, bundle.config.num_semesters)?;
    let probs = trainer::predict_proba(&bundle.model, &seqs, bundle.config.train.exec)?;
    Ok(seqs
        .iter()
        .zip(probs)
        .map(|(s, p)| Prediction {
            student_id: s.student_id.clone(),
            probability: p,
            label: label_of(p),
        })
        .collect())
}
