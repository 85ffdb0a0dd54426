//! Seeded experiment harness: variant ladder, semester ablation, grid
//! sweeps and the paired loss comparison, emitted as JSON and CSV.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

use crate::bias::bias_profiles;
use crate::cohort::{parse_cohort_dir, stratified_split, synth_cohort, Aspect, Cohort, PlantedBias, SynthConfig, NUM_SEMESTERS};
use crate::embedding::{AcademicEmbedding, EmbeddingConfig, EmbeddingModel};
use crate::error::{Error, Result};
use crate::exec;
use crate::metrics::{metrics, MetricsReport};
use crate::pipeline::{oversample, PipelineConfig};
use crate::trainer::{self, assemble_sequences, label_of, LossMode, StudentSequence};

pub const DROPOUT_GRID: [f64; 7] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7];
pub const LR_GRID: [f64; 6] = [0.0005, 0.001, 0.005, 0.01, 0.05, 0.1];
pub const EMBED_DIM_GRID: [usize; 8] = [3, 6, 12, 24, 32, 64, 80, 96];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Variants,
    SemesterAblation,
    DropoutSweep,
    LrSweep,
    EmbedDimSweep,
    OptimizationCompare,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Variants,
        ExperimentKind::SemesterAblation,
        ExperimentKind::DropoutSweep,
        ExperimentKind::LrSweep,
        ExperimentKind::EmbedDimSweep,
        ExperimentKind::OptimizationCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Variants => "variants",
            ExperimentKind::SemesterAblation => "semester_ablation",
            ExperimentKind::DropoutSweep => "dropout_sweep",
            ExperimentKind::LrSweep => "lr_sweep",
            ExperimentKind::EmbedDimSweep => "embed_dim_sweep",
            ExperimentKind::OptimizationCompare => "optimization_compare",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        ExperimentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CohortSource {
    /// A fresh cohort per experiment seed; the config's own seed is replaced
    /// by the experiment seed.
    Synthetic(SynthConfig),
    /// A fixed cohort on disk; only the split changes with the seed.
    Directory(PathBuf),
}

/// The synthetic cohort used by the directional studies: 2,000 students in
/// 20 majors, 10:1 employed to unemployed, with demographic shifts planted
/// in a quarter of the majors.
pub fn planted_cohort() -> SynthConfig {
    let shift = |major_id, aspect, effect| PlantedBias { major_id, aspect, effect };
    SynthConfig {
        num_students: 2000,
        num_majors: 20,
        num_colleges: 1,
        enrollment_density: 1.0,
        base_employment_rate: 10.0 / 11.0,
        planted_bias_spec: vec![
            shift(2, Aspect::Gender, -2.0),
            shift(5, Aspect::Nation, -2.5),
            shift(9, Aspect::HometownLevel, 2.0),
            shift(14, Aspect::EnrollStatus, 2.0),
            shift(18, Aspect::Gender, 2.0),
        ],
        ..SynthConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub seeds: Vec<u64>,
    pub cohort: CohortSource,
    /// Base configuration every cell starts from.
    pub pipeline: PipelineConfig,
    pub test_fraction: f64,
    /// Replaces the kind's default grid (dropout rates, learning rates,
    /// code dimensions or semester counts).
    pub grid: Option<Vec<f64>>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            kind: ExperimentKind::Variants,
            seeds: (0..10).collect(),
            cohort: CohortSource::Synthetic(planted_cohort()),
            pipeline: PipelineConfig::default(),
            test_fraction: 0.2,
            grid: None,
        }
    }
}

/// One row of an experiment: a label and the configuration it runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub label: String,
    pub value: Option<f64>,
    pub config: PipelineConfig,
}

/// The four variant rows. Each differs from the previous one in exactly one
/// component: oversampling, then dropout, then the bias-aware loss.
pub fn variant_configs(base: &PipelineConfig) -> Vec<Cell> {
    let mut raw = base.clone();
    raw.use_gan = false;
    raw.train.dropout_rate = 0.0;
    raw.train.loss_mode = LossMode::L2;
    let mut gan = raw.clone();
    gan.use_gan = true;
    let mut dropout = gan.clone();
    dropout.train.dropout_rate = base.train.dropout_rate;
    let mut bias = dropout.clone();
    bias.train.loss_mode = LossMode::BiasReg;
    [
        ("lstm+raw", raw),
        ("lstm+gan", gan),
        ("lstm+dropout+gan", dropout),
        ("lstm+dropout+gan+bias_loss", bias),
    ]
    .into_iter()
    .map(|(label, config)| Cell {
        label: label.into(),
        value: None,
        config,
    })
    .collect()
}

fn grid_or(spec: &ExperimentSpec, default: &[f64]) -> Vec<f64> {
    spec.grid.clone().unwrap_or_else(|| default.to_vec())
}

fn integer_grid(values: &[f64], what: &str) -> Result<Vec<usize>> {
    values
        .iter()
        .map(|&v| {
            if v >= 1.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Config(format!("{what} grid needs positive integers, got {v}")))
            }
        })
        .collect()
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("an experiment needs at least one seed".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction must be in (0, 1)".into()));
        }
        if let CohortSource::Synthetic(s) = &self.cohort {
            s.validate()?;
        }
        self.pipeline.validate()?;
        for c in self.cells()? {
            c.config.validate()?;
        }
        Ok(())
    }

    /// The rows this experiment evaluates, in report order.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let base = &self.pipeline;
        let with = |label: String, value: f64, config: PipelineConfig| Cell {
            label,
            value: Some(value),
            config,
        };
        let fixed_grid = |kind: ExperimentKind| -> Result<()> {
            match self.grid {
                Some(_) => Err(Error::Config(format!("{kind} takes no grid"))),
                None => Ok(()),
            }
        };
        Ok(match self.kind {
            ExperimentKind::Variants => {
                fixed_grid(self.kind)?;
                variant_configs(base)
            }
            ExperimentKind::OptimizationCompare => {
                fixed_grid(self.kind)?;
                [("l2", LossMode::L2), ("bias_reg", LossMode::BiasReg)]
                    .into_iter()
                    .map(|(label, mode)| {
                        let mut config = base.clone();
                        config.train.loss_mode = mode;
                        Cell {
                            label: label.into(),
                            value: None,
                            config,
                        }
                    })
                    .collect()
            }
            ExperimentKind::SemesterAblation => {
                let default: Vec<f64> = (1..=NUM_SEMESTERS).map(|s| s as f64).collect();
                integer_grid(&grid_or(self, &default), "semester")?
                    .into_iter()
                    .map(|s| {
                        let mut c = base.clone();
                        c.num_semesters = s;
                        with(format!("semesters={s}"), s as f64, c)
                    })
                    .collect()
            }
            ExperimentKind::DropoutSweep => grid_or(self, &DROPOUT_GRID)
                .into_iter()
                .map(|r| {
                    let mut c = base.clone();
                    c.train.dropout_rate = r;
                    with(format!("dropout={r}"), r, c)
                })
                .collect(),
            ExperimentKind::LrSweep => grid_or(self, &LR_GRID)
                .into_iter()
                .map(|lr| {
                    let mut c = base.clone();
                    c.train.learning_rate = lr;
                    with(format!("lr={lr}"), lr, c)
                })
                .collect(),
            ExperimentKind::EmbedDimSweep => {
                let default: Vec<f64> = EMBED_DIM_GRID.iter().map(|&d| d as f64).collect();
                integer_grid(&grid_or(self, &default), "code dimension")?
                    .into_iter()
                    .map(|d| {
                        let mut c = base.clone();
                        c.embedding.code_dim = d;
                        with(format!("code_dim={d}"), d as f64, c)
                    })
                    .collect()
            }
        })
    }
}

/// One (cell, seed) evaluation on the untouched test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub label: String,
    pub seed: u64,
    /// `None` when training diverged; `failure` then says where.
    pub metrics: Option<MetricsReport>,
    pub failure: Option<String>,
    /// Mean final reconstruction loss over the semester autoencoders.
    pub ae_final_loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricSummary {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl MetricSummary {
    fn of(m: &MetricsReport) -> Self {
        MetricSummary {
            accuracy: m.accuracy,
            macro_precision: m.macro_precision,
            macro_recall: m.macro_recall,
            macro_f1: m.macro_f1,
        }
    }

    fn to_array(self) -> [f64; 4] {
        [self.accuracy, self.macro_precision, self.macro_recall, self.macro_f1]
    }

    fn from_array(a: [f64; 4]) -> Self {
        MetricSummary {
            accuracy: a[0],
            macro_precision: a[1],
            macro_recall: a[2],
            macro_f1: a[3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub value: Option<f64>,
    pub seeds_ok: usize,
    pub seeds_failed: usize,
    pub mean: MetricSummary,
    /// Sample standard deviation over successful seeds (0 for one seed).
    pub std: MetricSummary,
    pub ae_final_loss: f64,
}

/// Mean and sample standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn summarize(cell: &Cell, results: &[&SeedResult]) -> Row {
    let ok: Vec<[f64; 4]> = results
        .iter()
        .filter_map(|r| r.metrics.as_ref())
        .map(|m| MetricSummary::of(m).to_array())
        .collect();
    let mut mean = [0.0; 4];
    let mut std = [0.0; 4];
    for k in 0..4 {
        let col: Vec<f64> = ok.iter().map(|a| a[k]).collect();
        (mean[k], std[k]) = mean_std(&col);
    }
    let ae: Vec<f64> = results.iter().map(|r| r.ae_final_loss).collect();
    Row {
        label: cell.label.clone(),
        value: cell.value,
        seeds_ok: ok.len(),
        seeds_failed: results.len() - ok.len(),
        mean: MetricSummary::from_array(mean),
        std: MetricSummary::from_array(std),
        ae_final_loss: mean_std(&ae).0,
    }
}

/// One-sided sign test: P(at least `wins` successes out of `wins + losses`
/// fair coin flips). Ties are dropped before calling.
pub fn sign_test(wins: u64, losses: u64) -> f64 {
    let n = wins + losses;
    if wins == 0 {
        return 1.0;
    }
    let b = Binomial::new(0.5, n).expect("valid binomial");
    b.sf(wins - 1)
}

/// Paired per-seed comparison of two rows on macro-F1 (and the mean deltas
/// of the other metrics).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedComparison {
    pub baseline: String,
    pub treatment: String,
    pub seeds: Vec<u64>,
    /// treatment minus baseline macro-F1, per paired seed.
    pub f1_deltas: Vec<f64>,
    pub mean_delta: MetricSummary,
    pub wins: u64,
    pub losses: u64,
    pub ties: u64,
    pub sign_test_p: f64,
}

pub fn paired_comparison(baseline: &str, treatment: &str, per_seed: &[SeedResult]) -> PairedComparison {
    let find = |label: &str, seed: u64| {
        per_seed
            .iter()
            .find(|r| r.label == label && r.seed == seed)
            .and_then(|r| r.metrics.as_ref())
    };
    let mut seeds = Vec::new();
    let mut deltas = Vec::new();
    for r in per_seed.iter().filter(|r| r.label == baseline) {
        if let (Some(a), Some(b)) = (find(baseline, r.seed), find(treatment, r.seed)) {
            seeds.push(r.seed);
            let (a, b) = (MetricSummary::of(a).to_array(), MetricSummary::of(b).to_array());
            deltas.push(std::array::from_fn::<f64, 4, _>(|k| b[k] - a[k]));
        }
    }
    let f1_deltas: Vec<f64> = deltas.iter().map(|d| d[3]).collect();
    let mut mean = [0.0; 4];
    for (k, m) in mean.iter_mut().enumerate() {
        *m = mean_std(&deltas.iter().map(|d| d[k]).collect::<Vec<_>>()).0;
    }
    let wins = f1_deltas.iter().filter(|&&d| d > 0.0).count() as u64;
    let losses = f1_deltas.iter().filter(|&&d| d < 0.0).count() as u64;
    PairedComparison {
        baseline: baseline.into(),
        treatment: treatment.into(),
        seeds,
        mean_delta: MetricSummary::from_array(mean),
        ties: f1_deltas.len() as u64 - wins - losses,
        wins,
        losses,
        sign_test_p: sign_test(wins, losses),
        f1_deltas,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub kind: ExperimentKind,
    pub seeds: Vec<u64>,
    pub rows: Vec<Row>,
    pub per_seed: Vec<SeedResult>,
    pub comparison: Option<PairedComparison>,
}

impl ExperimentReport {
    pub fn row(&self, label: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.label == label)
    }

    /// Writes `report.json`, `summary.csv` and `per_seed.csv`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = dir.join("report.json");
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(&json, text).map_err(|e| Error::io(&json, e))?;

        let fmt = |x: f64| format!("{x:.6}");
        let path = dir.join("summary.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "label", "value", "seeds_ok", "seeds_failed", "accuracy", "accuracy_std", "macro_precision",
            "macro_precision_std", "macro_recall", "macro_recall_std", "macro_f1", "macro_f1_std", "ae_final_loss",
        ])?;
        for r in &self.rows {
            let mut rec = vec![
                r.label.clone(),
                r.value.map(|v| v.to_string()).unwrap_or_default(),
                r.seeds_ok.to_string(),
                r.seeds_failed.to_string(),
            ];
            for (m, s) in r.mean.to_array().into_iter().zip(r.std.to_array()) {
                rec.push(fmt(m));
                rec.push(fmt(s));
            }
            rec.push(fmt(r.ae_final_loss));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;

        let path = dir.join("per_seed.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record([
            "label", "seed", "accuracy", "macro_precision", "macro_recall", "macro_f1", "ae_final_loss", "failure",
        ])?;
        for r in &self.per_seed {
            let mut rec = vec![r.label.clone(), r.seed.to_string()];
            match &r.metrics {
                Some(m) => rec.extend(MetricSummary::of(m).to_array().map(fmt)),
                None => rec.extend(std::iter::repeat_n(String::new(), 4)),
            }
            rec.push(fmt(r.ae_final_loss));
            rec.push(r.failure.clone().unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        Ok(())
    }
}

struct Embedded {
    train: AcademicEmbedding,
    test: AcademicEmbedding,
    ae_final_loss: f64,
}

/// Everything one seed has computed so far, keyed by the configuration
/// pieces it depends on.
struct SeedState {
    seed: u64,
    train: Cohort,
    test: Cohort,
    embeddings: HashMap<String, Arc<Embedded>>,
    training_sets: HashMap<String, Arc<Vec<StudentSequence>>>,
    results: HashMap<String, SeedResult>,
}

fn key<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string(value)?)
}

impl SeedState {
    fn embedding(&mut self, config: &EmbeddingConfig, exec: exec::ExecMode) -> Result<Arc<Embedded>> {
        let k = key(config)?;
        if let Some(e) = self.embeddings.get(&k) {
            return Ok(e.clone());
        }
        let model = EmbeddingModel::fit(&self.train, config, exec)?;
        let finals: Vec<f64> = model
            .semesters
            .iter()
            .filter_map(|s| s.loss_history.last().copied())
            .collect();
        let e = Arc::new(Embedded {
            train: model.embed(&self.train)?,
            test: model.embed(&self.test)?,
            ae_final_loss: mean_std(&finals).0,
        });
        self.embeddings.insert(k, e.clone());
        Ok(e)
    }

    fn training_set(&mut self, config: &PipelineConfig, emb: &Embedded) -> Result<Arc<Vec<StudentSequence>>> {
        let k = key(&(&config.embedding, config.num_semesters, config.use_gan, &config.gan))?;
        if let Some(s) = self.training_sets.get(&k) {
            return Ok(s.clone());
        }
        let real = assemble_sequences(&self.train, &emb.train, config.num_semesters)?;
        let set = if config.use_gan {
            oversample(&real, &config.gan, config.seed)?.sequences
        } else {
            real
        };
        let set = Arc::new(set);
        self.training_sets.insert(k, set.clone());
        Ok(set)
    }

    fn run(&mut self, cell: &Cell) -> Result<SeedResult> {
        let config = PipelineConfig {
            seed: self.seed,
            ..cell.config.clone()
        }
        .resolved();
        let k = key(&config)?;
        if let Some(r) = self.results.get(&k) {
            return Ok(SeedResult {
                label: cell.label.clone(),
                ..r.clone()
            });
        }
        let exec = config.train.exec;
        let emb = self.embedding(&config.embedding, exec)?;
        let outcome = self.training_set(&config, &emb).and_then(|train_seqs| {
            let profiles = bias_profiles(&self.train, config.train.bias_weight_mode, exec)?;
            let (model, _) = trainer::train(&train_seqs, &profiles, &config.train)?;
            let test_seqs = assemble_sequences(&self.test, &emb.test, config.num_semesters)?;
            let probs = trainer::predict_proba(&model, &test_seqs, exec)?;
            let preds: Vec<u8> = probs.into_iter().map(label_of).collect();
            let labels: Vec<u8> = test_seqs.iter().map(|s| s.label).collect();
            metrics(&preds, &labels)
        });
        let (metrics, failure) = match outcome {
            Ok(m) => (Some(m), None),
            Err(e) if e.is_numerical() => (None, Some(e.to_string())),
            Err(e) => return Err(e),
        };
        let r = SeedResult {
            label: cell.label.clone(),
            seed: self.seed,
            metrics,
            failure,
            ae_final_loss: emb.ae_final_loss,
        };
        self.results.insert(k, r.clone());
        Ok(r)
    }
}

/// Runs experiments over a fixed set of seeds and cohort. Splits,
/// embeddings, augmented training sets and finished cells are cached, so
/// experiments sharing configurations reuse each other's work.
pub struct Runner {
    states: Vec<Mutex<SeedState>>,
    exec: exec::ExecMode,
}

impl Runner {
    pub fn new(cohort: &CohortSource, seeds: &[u64], test_fraction: f64, exec: exec::ExecMode) -> Result<Self> {
        if seeds.is_empty() {
            return Err(Error::Config("an experiment needs at least one seed".into()));
        }
        let fixed = match cohort {
            CohortSource::Directory(dir) => Some(parse_cohort_dir(dir)?),
            CohortSource::Synthetic(s) => {
                s.validate()?;
                None
            }
        };
        let states = exec::map(exec, seeds, |&seed| -> Result<Mutex<SeedState>> {
            let full = match (&fixed, cohort) {
                (Some(c), _) => c.clone(),
                (None, CohortSource::Synthetic(s)) => synth_cohort(&SynthConfig { seed, ..s.clone() })?,
                (None, CohortSource::Directory(_)) => unreachable!(),
            };
            let (train, test) = stratified_split(&full, test_fraction, seed)?;
            Ok(Mutex::new(SeedState {
                seed,
                train,
                test,
                embeddings: HashMap::new(),
                training_sets: HashMap::new(),
                results: HashMap::new(),
            }))
        });
        Ok(Runner {
            states: states.into_iter().collect::<Result<_>>()?,
            exec,
        })
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.states.iter().map(|s| s.lock().expect("seed state").seed).collect()
    }

    /// Evaluates `cells` on every seed. Seeds run in parallel; results are
    /// ordered by cell, then seed.
    pub fn run_cells(&self, cells: &[Cell]) -> Result<Vec<SeedResult>> {
        let per_seed = exec::map(self.exec, &self.states, |state| -> Result<Vec<SeedResult>> {
            let mut state = state.lock().expect("seed state");
            cells.iter().map(|c| state.run(c)).collect()
        });
        let per_seed: Vec<Vec<SeedResult>> = per_seed.into_iter().collect::<Result<_>>()?;
        Ok((0..cells.len())
            .flat_map(|c| per_seed.iter().map(move |s| s[c].clone()))
            .collect())
    }

    pub fn run(&self, spec: &ExperimentSpec) -> Result<ExperimentReport> {
        spec.validate()?;
        let cells = spec.cells()?;
        let per_seed = self.run_cells(&cells)?;
        let rows = cells
            .iter()
            .map(|c| {
                let rs: Vec<&SeedResult> = per_seed.iter().filter(|r| r.label == c.label).collect();
                summarize(c, &rs)
            })
            .collect();
        let comparison = match spec.kind {
            ExperimentKind::OptimizationCompare => Some(paired_comparison("l2", "bias_reg", &per_seed)),
            _ => None,
        };
        Ok(ExperimentReport {
            kind: spec.kind,
            seeds: self.seeds(),
            rows,
            per_seed,
            comparison,
        })
    }
}

/// Runs one experiment from scratch.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    spec.validate()?;
    Runner::new(&spec.cohort, &spec.seeds, spec.test_fraction, spec.pipeline.train.exec)?.run(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::AeTrainConfig;
    use crate::gan::GanConfig;
    use crate::trainer::TrainConfig;

    fn tiny_spec(kind: ExperimentKind) -> ExperimentSpec {
        ExperimentSpec {
            kind,
            seeds: vec![1, 2],
            cohort: CohortSource::Synthetic(SynthConfig {
                num_students: 120,
                num_majors: 4,
                num_colleges: 2,
                base_employment_rate: 0.8,
                ..SynthConfig::default()
            }),
            pipeline: PipelineConfig {
                embedding: EmbeddingConfig {
                    hidden: vec![6],
                    train: AeTrainConfig {
                        epochs: 10,
                        ..AeTrainConfig::default()
                    },
                    ..EmbeddingConfig::default()
                },
                gan: GanConfig {
                    epochs: 20,
                    ..GanConfig::default()
                },
                train: TrainConfig {
                    epochs: 3,
                    hidden_size: 3,
                    ..TrainConfig::default()
                },
                ..PipelineConfig::default()
            },
            ..ExperimentSpec::default()
        }
    }

    #[test]
    fn each_variant_toggles_one_component() {
        let rows = variant_configs(&PipelineConfig::default());
        assert_eq!(rows.len(), 4);
        let flags = |c: &PipelineConfig| (c.use_gan, c.train.dropout_rate > 0.0, c.train.loss_mode == LossMode::BiasReg);
        assert_eq!(flags(&rows[0].config), (false, false, false));
        for w in rows.windows(2) {
            let (a, b) = (flags(&w[0].config), flags(&w[1].config));
            let changed = [a.0 != b.0, a.1 != b.1, a.2 != b.2].iter().filter(|&&x| x).count();
            assert_eq!(changed, 1, "{} -> {}", w[0].label, w[1].label);
            let mut undo = w[1].config.clone();
            undo.use_gan = w[0].config.use_gan;
            undo.train.dropout_rate = w[0].config.train.dropout_rate;
            undo.train.loss_mode = w[0].config.train.loss_mode;
            assert_eq!(undo, w[0].config);
        }
    }

    #[test]
    fn default_grids() {
        let spec = |kind| ExperimentSpec {
            kind,
            ..ExperimentSpec::default()
        };
        let values = |kind| -> Vec<f64> { spec(kind).cells().unwrap().iter().map(|c| c.value.unwrap()).collect() };
        assert_eq!(values(ExperimentKind::DropoutSweep), DROPOUT_GRID.to_vec());
        assert!(values(ExperimentKind::DropoutSweep).contains(&0.3));
        assert!(values(ExperimentKind::LrSweep).contains(&0.01));
        assert_eq!(values(ExperimentKind::EmbedDimSweep), vec![3.0, 6.0, 12.0, 24.0, 32.0, 64.0, 80.0, 96.0]);
        assert_eq!(values(ExperimentKind::SemesterAblation), vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let labels: Vec<String> = spec(ExperimentKind::Variants).cells().unwrap().into_iter().map(|c| c.label).collect();
        assert_eq!(labels, ["lstm+raw", "lstm+gan", "lstm+dropout+gan", "lstm+dropout+gan+bias_loss"]);
    }

    #[test]
    fn grid_validation() {
        let mut s = ExperimentSpec {
            kind: ExperimentKind::EmbedDimSweep,
            grid: Some(vec![2.5]),
            ..ExperimentSpec::default()
        };
        assert!(s.cells().is_err());
        s.kind = ExperimentKind::Variants;
        s.grid = Some(vec![1.0]);
        assert!(s.validate().is_err());
        s.grid = None;
        s.seeds.clear();
        assert!(s.validate().is_err());
        assert_eq!("semester-ablation".parse::<ExperimentKind>().unwrap(), ExperimentKind::SemesterAblation);
        assert!("nope".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn sign_test_matches_binomial_sum() {
        // P(X >= k), X ~ Bin(n, 1/2), summed directly
        let oracle = |k: u64, n: u64| -> f64 {
            let mut c = 1.0f64;
            let mut total = 0.0;
            for i in 0..=n {
                if i >= k {
                    total += c;
                }
                c = c * (n - i) as f64 / (i + 1) as f64;
            }
            total / 2f64.powi(n as i32)
        };
        for n in 1..=15 {
            for k in 1..=n {
                assert!((sign_test(k, n - k) - oracle(k, n)).abs() < 1e-12, "{k}/{n}");
            }
        }
        assert!((sign_test(8, 2) - 56.0 / 1024.0).abs() < 1e-12);
        assert_eq!(sign_test(0, 5), 1.0);
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn paired_comparison_counts_ties() {
        let r = |label: &str, seed, f1| SeedResult {
            label: label.into(),
            seed,
            metrics: Some({
                let mut m = metrics(&[1, 0], &[1, 0]).unwrap();
                m.macro_f1 = f1;
                m
            }),
            failure: None,
            ae_final_loss: 0.0,
        };
        let rs = vec![r("a", 0, 0.5), r("a", 1, 0.5), r("a", 2, 0.5), r("b", 0, 0.6), r("b", 1, 0.5), r("b", 2, 0.4)];
        let c = paired_comparison("a", "b", &rs);
        assert_eq!((c.wins, c.losses, c.ties), (1, 1, 1));
        assert_eq!(c.seeds, vec![0, 1, 2]);
        assert!(c.mean_delta.macro_f1.abs() < 1e-15);
        assert!((c.sign_test_p - 0.75).abs() < 1e-12);
    }

    #[test]
    fn runs_are_deterministic_and_written() {
        let spec = tiny_spec(ExperimentKind::OptimizationCompare);
        let a = run_experiment(&spec).unwrap();
        let b = run_experiment(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 2);
        assert_eq!(a.per_seed.len(), 4);
        assert_eq!(a.comparison.as_ref().unwrap().seeds, vec![1, 2]);
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        a.write(d1.path()).unwrap();
        b.write(d2.path()).unwrap();
        for f in ["report.json", "summary.csv", "per_seed.csv"] {
            assert_eq!(std::fs::read(d1.path().join(f)).unwrap(), std::fs::read(d2.path().join(f)).unwrap());
        }
    }

    #[test]
    fn runner_reuses_matching_cells() {
        let spec = tiny_spec(ExperimentKind::Variants);
        let runner = Runner::new(&spec.cohort, &spec.seeds, spec.test_fraction, spec.pipeline.train.exec).unwrap();
        let variants = runner.run(&spec).unwrap();
        let compare = runner
            .run(&ExperimentSpec {
                kind: ExperimentKind::OptimizationCompare,
                ..spec.clone()
            })
            .unwrap();
        let pick = |r: &ExperimentReport, label: &str| r.row(label).unwrap().mean;
        assert_eq!(pick(&compare, "bias_reg"), pick(&variants, "lstm+dropout+gan+bias_loss"));
        assert_eq!(pick(&compare, "l2"), pick(&variants, "lstm+dropout+gan"));
        let fresh = run_experiment(&ExperimentSpec {
            kind: ExperimentKind::OptimizationCompare,
            ..spec
        })
        .unwrap();
        assert_eq!(fresh, compare);
    }

    #[test]
    fn sequential_and_parallel_reports_agree() {
        let mut spec = tiny_spec(ExperimentKind::SemesterAblation);
        spec.grid = Some(vec![1.0, 6.0]);
        let par = run_experiment(&spec).unwrap();
        spec.pipeline.train.exec = exec::ExecMode::Sequential;
        let seq = run_experiment(&spec).unwrap();
        assert_eq!(par.rows, seq.rows);
    }
}
