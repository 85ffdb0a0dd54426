//! Student sequences, the prediction head, the cross-major penalty on the
//! demographic weights, and full-batch training of the masked LSTM.
//!
//! The model reads a student's per-semester academic codes with the LSTM
//! and scores `sigmoid(w . [h_T ; d] + b)`, where `d` holds the four binary
//! demographic indicators. The objective is
//!
//! ```text
//! 1/2 sum_i (y_hat_i - y_i)^2 + penalty(W_d)
//! ```
//!
//! with `W_d = w[H..H+4]`. The bias-aware penalty is
//! `1/2 sum_{m<n} ||W_d (u_m - u_n)||^2` over the majors' profile vectors;
//! the baseline is `||W_d||^2`.

use std::ops::Range;

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, ArrayViewMut1};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::bias::{BiasProfile, BiasWeightMode};
use crate::cohort::{Cohort, NUM_SEMESTERS};
use crate::embedding::AcademicEmbedding;
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::gan::{AugmentedSet, FeatureSchema, Sample};
use crate::lstm::{self, BatchMasks, LstmParams, MaskSet};
use crate::nn::sigmoid;
use crate::optim::{Optimizer, OptimizerKind};
use crate::rng::{self, tag};

/// Number of demographic indicators, one per tested aspect.
pub const NUM_ASPECTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentSequence {
    pub student_id: String,
    /// `None` for generated samples.
    pub major_id: Option<u32>,
    /// One academic code per semester.
    pub inputs: Vec<Array1<f64>>,
    pub demographics: [f64; NUM_ASPECTS],
    pub label: u8,
}

impl StudentSequence {
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.first().map_or(0, Array1::len)
    }

    /// Flat layout: the codes of every step in order, then demographics.
    pub fn to_features(&self) -> Array1<f64> {
        self.inputs
            .iter()
            .flat_map(|x| x.iter().copied())
            .chain(self.demographics)
            .collect()
    }

    /// Inverse of [`StudentSequence::to_features`].
    pub fn from_features(
        student_id: String,
        features: ArrayView1<f64>,
        steps: usize,
        input_dim: usize,
        label: u8,
    ) -> Result<Self> {
        let want = steps * input_dim + NUM_ASPECTS;
        if features.len() != want {
            return Err(Error::shape(format!("{want} features"), features.len()));
        }
        let inputs = (0..steps)
            .map(|t| features.slice(s![t * input_dim..(t + 1) * input_dim]).to_owned())
            .collect();
        let mut demographics = [0.0; NUM_ASPECTS];
        for (k, d) in demographics.iter_mut().enumerate() {
            *d = features[steps * input_dim + k];
        }
        Ok(StudentSequence {
            student_id,
            major_id: None,
            inputs,
            demographics,
            label,
        })
    }
}

/// One sequence per student, using the first `num_semesters` semesters.
/// Students without grades in a semester get that semester's absent code.
pub fn assemble_sequences(
    cohort: &Cohort,
    embedding: &AcademicEmbedding,
    num_semesters: usize,
) -> Result<Vec<StudentSequence>> {
    if !(1..=NUM_SEMESTERS).contains(&num_semesters) {
        return Err(Error::Config(format!(
            "number of semesters must be in 1..={NUM_SEMESTERS}, got {num_semesters}"
        )));
    }
    cohort
        .students
        .iter()
        .map(|st| {
            let inputs = (1..=num_semesters as u8)
                .map(|s| {
                    embedding
                        .code(s, &st.student_id)
                        .map(|c| c.to_owned())
                        .ok_or_else(|| Error::Invalid(format!("embedding has no semester {s}")))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(StudentSequence {
                student_id: st.student_id.clone(),
                major_id: Some(st.major_id),
                inputs,
                demographics: st.demographics(),
                label: st.label,
            })
        })
        .collect()
}

pub fn to_samples(sequences: &[StudentSequence]) -> Vec<Sample> {
    sequences
        .iter()
        .map(|s| Sample {
            features: s.to_features(),
            label: s.label,
        })
        .collect()
}

/// Generator schema for flattened sequences: academic slots continuous
/// within their observed range, demographic slots binary.
pub fn feature_schema(sequences: &[StudentSequence]) -> Result<FeatureSchema> {
    let first = sequences
        .first()
        .ok_or_else(|| Error::Invalid("no sequences to describe".into()))?;
    let academic = first.steps() * first.input_dim();
    let binary = (0..academic + NUM_ASPECTS).map(|j| j >= academic).collect();
    let rows: Vec<Array1<f64>> = sequences.iter().map(StudentSequence::to_features).collect();
    FeatureSchema::infer(&rows, binary)
}

/// `real` followed by the generated samples of `set` as sequences.
pub fn with_synthetic(real: &[StudentSequence], set: &AugmentedSet) -> Result<Vec<StudentSequence>> {
    let Some(first) = real.first() else {
        return Ok(Vec::new());
    };
    let (steps, dim) = (first.steps(), first.input_dim());
    let mut out = real.to_vec();
    for (i, s) in set.synthetic.iter().enumerate() {
        out.push(StudentSequence::from_features(
            format!("synthetic-{i:05}"),
            s.features.view(),
            steps,
            dim,
            s.label,
        )?);
    }
    Ok(out)
}

/// Logistic output layer over `[h_T ; d]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputHead {
    /// `H` hidden-state weights followed by the demographic block.
    pub w: Array1<f64>,
    pub b: f64,
}

impl OutputHead {
    pub fn zeros(hidden_size: usize) -> Self {
        OutputHead {
            w: Array1::zeros(hidden_size + NUM_ASPECTS),
            b: 0.0,
        }
    }

    pub fn hidden_size(&self) -> usize {
        self.w.len() - NUM_ASPECTS
    }

    /// The weights acting on the demographics; a view into `w`.
    pub fn bias_block(&self) -> ArrayView1<'_, f64> {
        self.w.slice(s![self.hidden_size()..])
    }

    pub fn bias_block_mut(&mut self) -> ArrayViewMut1<'_, f64> {
        let h = self.hidden_size();
        self.w.slice_mut(s![h..])
    }
}

/// Trainable parameters. Also used as the gradient container.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub lstm: LstmParams,
    pub head: OutputHead,
}

impl Model {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        Model {
            lstm: LstmParams::zeros(input_size, hidden_size),
            head: OutputHead::zeros(hidden_size),
        }
    }

    /// LSTM initialisation plus head weights uniform in `±1/sqrt(H + 4)`.
    pub fn init(input_size: usize, hidden_size: usize, seed: u64) -> Result<Self> {
        let mut r = rng::rng_for(seed, &[tag::LSTM_INIT]);
        let lstm = LstmParams::init(input_size, hidden_size, &mut r)?;
        let a = 1.0 / ((hidden_size + NUM_ASPECTS) as f64).sqrt();
        let w = (0..hidden_size + NUM_ASPECTS).map(|_| r.random_range(-a..=a)).collect();
        Ok(Model {
            lstm,
            head: OutputHead { w, b: 0.0 },
        })
    }

    pub fn num_params(&self) -> usize {
        self.lstm.num_params() + self.head.w.len() + 1
    }

    /// LSTM tensors, then head weights, then head bias.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = self.lstm.flat();
        v.extend(self.head.w.iter());
        v.push(self.head.b);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let n = self.lstm.num_params();
        self.lstm.set_flat(&flat[..n]);
        let h = self.head.w.len();
        self.head.w.iter_mut().zip(&flat[n..n + h]).for_each(|(d, s)| *d = *s);
        self.head.b = flat[n + h];
    }

    fn accumulate(&mut self, other: &Model) {
        self.lstm.add_scaled(&other.lstm, 1.0);
        self.head.w += &other.head.w;
        self.head.b += other.head.b;
    }
}

fn check_profiles<U: AsRef<[f64]>>(w: ArrayView2<f64>, us: &[U]) -> Result<()> {
    for u in us {
        if u.as_ref().len() != w.ncols() {
            return Err(Error::shape(format!("profile of length {}", w.ncols()), u.as_ref().len()));
        }
    }
    Ok(())
}

fn pair_diff<U: AsRef<[f64]>>(us: &[U], m: usize, n: usize) -> Array1<f64> {
    us[m].as_ref().iter().zip(us[n].as_ref()).map(|(a, b)| a - b).collect()
}

/// `1/2 sum_{m<n} ||W (u_m - u_n)||^2`.
pub fn omega<U: AsRef<[f64]>>(w: ArrayView2<f64>, us: &[U]) -> Result<f64> {
    check_profiles(w, us)?;
    let mut total = 0.0;
    for m in 0..us.len() {
        for n in m + 1..us.len() {
            let v = w.dot(&pair_diff(us, m, n));
            total += v.dot(&v);
        }
    }
    Ok(0.5 * total)
}

/// `sum_{m<n} W (u_m - u_n)(u_m - u_n)^T`, the gradient of [`omega`].
pub fn omega_grad<U: AsRef<[f64]>>(w: ArrayView2<f64>, us: &[U]) -> Result<Array2<f64>> {
    check_profiles(w, us)?;
    let mut g = Array2::zeros(w.raw_dim());
    for m in 0..us.len() {
        for n in m + 1..us.len() {
            let diff = pair_diff(us, m, n);
            let v = w.dot(&diff);
            for ((r, c), x) in g.indexed_iter_mut() {
                *x += v[r] * diff[c];
            }
        }
    }
    Ok(g)
}

/// `S = sum_{m<n} (u_m - u_n)(u_m - u_n)^T`, so that for a single-row `W`,
/// `omega = 1/2 W S W^T`.
pub fn pair_gram<U: AsRef<[f64]>>(us: &[U], dim: usize) -> Result<Array2<f64>> {
    check_profiles(Array2::<f64>::zeros((1, dim)).view(), us)?;
    let mut g = Array2::zeros((dim, dim));
    for m in 0..us.len() {
        for n in m + 1..us.len() {
            let diff = pair_diff(us, m, n);
            for ((r, c), x) in g.indexed_iter_mut() {
                *x += diff[r] * diff[c];
            }
        }
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMode {
    /// Squared error plus the cross-major penalty.
    #[default]
    BiasReg,
    /// Squared error plus `||W_d||^2`.
    L2,
    /// The bias-aware code path with the pair Gram matrix replaced by `2I`,
    /// which makes the penalty `||W_d||^2`. Used to check that the two
    /// modes differ only in the penalty.
    BiasRegUnitGram,
}

/// Penalty on the demographic block of the head.
#[derive(Debug, Clone, PartialEq)]
pub enum Penalty {
    None,
    L2,
    /// `1/2 W S W^T` for a fixed symmetric `S`.
    Gram(Array2<f64>),
}

impl Penalty {
    /// Builds the penalty for `mode`, recomputing each profile's `u` from
    /// its p-values with `weight_mode`.
    pub fn for_mode(mode: LossMode, profiles: &[BiasProfile], weight_mode: BiasWeightMode) -> Result<Self> {
        Ok(match mode {
            LossMode::L2 => Penalty::L2,
            LossMode::BiasReg => Penalty::Gram(pair_gram(&profile_weights(profiles, weight_mode), NUM_ASPECTS)?),
            LossMode::BiasRegUnitGram => Penalty::Gram(Array2::eye(NUM_ASPECTS) * 2.0),
        })
    }

    pub fn value(&self, w: ArrayView1<f64>) -> f64 {
        match self {
            Penalty::None => 0.0,
            Penalty::L2 => w.iter().fold(0.0, |acc, v| acc + v * v),
            Penalty::Gram(g) => {
                let sw = gram_times(g, w);
                0.5 * w.iter().zip(&sw).fold(0.0, |acc, (a, b)| acc + a * b)
            }
        }
    }

    pub fn grad(&self, w: ArrayView1<f64>) -> Array1<f64> {
        match self {
            Penalty::None => Array1::zeros(w.len()),
            Penalty::L2 => w.mapv(|v| 2.0 * v),
            Penalty::Gram(g) => gram_times(g, w),
        }
    }
}

fn gram_times(g: &Array2<f64>, w: ArrayView1<f64>) -> Array1<f64> {
    g.rows()
        .into_iter()
        .map(|row| row.iter().zip(&w).fold(0.0, |acc, (a, b)| acc + a * b))
        .collect()
}

/// Each profile's weight vector under `mode`.
pub fn profile_weights(profiles: &[BiasProfile], mode: BiasWeightMode) -> Vec<[f64; NUM_ASPECTS]> {
    profiles.iter().map(|p| p.p_values.map(|v| mode.weight(v))).collect()
}

fn check_batch(sequences: &[StudentSequence], model: &Model) -> Result<usize> {
    let first = sequences
        .first()
        .ok_or_else(|| Error::Invalid("empty batch".into()))?;
    let steps = first.steps();
    if steps == 0 {
        return Err(Error::Invalid("sequence with no steps".into()));
    }
    for s in sequences {
        if s.steps() != steps {
            return Err(Error::shape(format!("sequences of {steps} steps"), s.steps()));
        }
        if let Some(x) = s.inputs.iter().find(|x| x.len() != model.lstm.input_size) {
            return Err(Error::shape(format!("inputs of size {}", model.lstm.input_size), x.len()));
        }
    }
    Ok(steps)
}

/// Forward and backward pass over one contiguous chunk. Returns the chunk's
/// half squared error, its gradient, and the predicted probabilities.
fn chunk_pass(
    model: &Model,
    sequences: &[StudentSequence],
    range: Range<usize>,
    masks: &[BatchMasks],
    want_grad: bool,
) -> Result<(f64, Option<Model>, Array1<f64>)> {
    let chunk = &sequences[range];
    let (b, steps) = (chunk.len(), chunk[0].steps());
    let (d_in, hs) = (model.lstm.input_size, model.lstm.hidden_size);
    let xs: Vec<Array2<f64>> = (0..steps)
        .map(|t| Array2::from_shape_fn((b, d_in), |(r, c)| chunk[r].inputs[t][c]))
        .collect();
    let demo = Array2::from_shape_fn((b, NUM_ASPECTS), |(r, c)| chunk[r].demographics[c]);
    let (hidden, cache) = lstm::forward_batch(&model.lstm, &xs, masks)?;
    let h_last = hidden.last().expect("non-empty sequence");
    let w_h = model.head.w.slice(s![..hs]);
    let w_d = model.head.bias_block();
    let logits = h_last.dot(&w_h) + demo.dot(&w_d) + model.head.b;
    let probs = logits.mapv(sigmoid);

    let mut loss = 0.0;
    let mut g = Array1::zeros(b);
    for r in 0..b {
        let err = probs[r] - f64::from(chunk[r].label);
        loss += 0.5 * err * err;
        g[r] = err * probs[r] * (1.0 - probs[r]);
    }
    if !want_grad {
        return Ok((loss, None, probs));
    }

    let mut head = OutputHead::zeros(hs);
    head.w.slice_mut(s![..hs]).assign(&h_last.t().dot(&g));
    head.bias_block_mut().assign(&demo.t().dot(&g));
    head.b = g.sum();
    let mut d_h = vec![Array2::zeros((b, hs)); steps];
    d_h[steps - 1] = Array2::from_shape_fn((b, hs), |(r, j)| g[r] * w_h[j]);
    let (lstm_grads, _) = lstm::backward_batch(&model.lstm, &cache, &d_h)?;
    Ok((loss, Some(Model { lstm: lstm_grads, head }), probs))
}

/// Source of dropout masks for a pass over a batch.
#[derive(Debug, Clone, Copy)]
pub enum MaskPlan<'a> {
    /// All units active.
    Identity,
    /// Explicit masks per sequence: one shared set or one per step each.
    Given(&'a [Vec<MaskSet>]),
    /// Masks drawn per sequence from `(seed, epoch, index)`.
    Sampled {
        rate: f64,
        schedule: MaskSchedule,
        seed: u64,
        epoch: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskSchedule {
    /// One mask set per sequence, shared by every step.
    #[default]
    PerSequence,
    /// A fresh mask set at every step.
    PerStep,
}

/// The mask sets sequence `index` uses under `plan`.
pub fn sequence_masks(plan: MaskPlan<'_>, index: usize, steps: usize, hidden: usize) -> Result<Vec<MaskSet>> {
    match plan {
        MaskPlan::Identity => Ok(vec![MaskSet::identity(hidden)]),
        MaskPlan::Given(all) => all
            .get(index)
            .cloned()
            .ok_or_else(|| Error::shape(format!("masks for sequence {index}"), all.len())),
        MaskPlan::Sampled {
            rate,
            schedule,
            seed,
            epoch,
        } => {
            let mut r = rng::rng_for(seed, &[tag::MASKS, epoch, index as u64]);
            let count = match schedule {
                MaskSchedule::PerSequence => 1,
                MaskSchedule::PerStep => steps,
            };
            (0..count).map(|_| MaskSet::sample(rate, hidden, &mut r)).collect()
        }
    }
}

fn batch_masks(plan: MaskPlan<'_>, range: Range<usize>, steps: usize, hidden: usize) -> Result<Vec<BatchMasks>> {
    let b = range.len();
    if let MaskPlan::Identity = plan {
        return Ok(vec![BatchMasks::identity(b, hidden)]);
    }
    let per_seq: Vec<Vec<MaskSet>> = range
        .map(|i| sequence_masks(plan, i, steps, hidden))
        .collect::<Result<_>>()?;
    let count = per_seq[0].len();
    if per_seq.iter().any(|m| m.len() != count) || (count != 1 && count != steps) {
        return Err(Error::Invalid("inconsistent mask schedule within a batch".into()));
    }
    (0..count)
        .map(|t| BatchMasks::stack(&per_seq.iter().map(|m| &m[t]).collect::<Vec<_>>()))
        .collect()
}

/// Objective value and gradient over `sequences` under `plan` and `penalty`.
pub fn evaluate(
    model: &Model,
    sequences: &[StudentSequence],
    penalty: &Penalty,
    plan: MaskPlan<'_>,
    exec: ExecMode,
) -> Result<(f64, Model)> {
    let steps = check_batch(sequences, model)?;
    let hs = model.lstm.hidden_size;
    let parts = exec::chunked_map(exec, sequences.len(), |range| {
        let masks = batch_masks(plan, range.clone(), steps, hs)?;
        chunk_pass(model, sequences, range, &masks, true)
    });
    let mut loss = 0.0;
    let mut grads = Model::zeros(model.lstm.input_size, hs);
    for part in parts {
        let (l, g, _) = part?;
        loss += l;
        grads.accumulate(&g.expect("gradient requested"));
    }
    let w_d = model.head.bias_block();
    loss += penalty.value(w_d);
    let pg = penalty.grad(w_d);
    grads.head.bias_block_mut().zip_mut_with(&pg, |g, p| *g += p);
    Ok((loss, grads))
}

fn data_loss(model: &Model, sequences: &[StudentSequence]) -> Result<f64> {
    Ok(evaluate(model, sequences, &Penalty::None, MaskPlan::Identity, ExecMode::Sequential)?.0)
}

fn demographic_row(model: &Model) -> ArrayView2<'_, f64> {
    model.head.bias_block().insert_axis(ndarray::Axis(0))
}

/// Squared error plus the cross-major penalty over the profiles' `u`
/// vectors, with all units active.
pub fn loss_total(sequences: &[StudentSequence], model: &Model, profiles: &[BiasProfile]) -> Result<f64> {
    let us: Vec<[f64; NUM_ASPECTS]> = profiles.iter().map(|p| p.u).collect();
    Ok(data_loss(model, sequences)? + omega(demographic_row(model), &us)?)
}

/// Squared error plus `||W_d||^2`, with all units active.
pub fn loss_l2(sequences: &[StudentSequence], model: &Model) -> Result<f64> {
    Ok(data_loss(model, sequences)? + Penalty::L2.value(model.head.bias_block()))
}

/// Gradient of [`loss_total`] with respect to every parameter.
pub fn grad_total(sequences: &[StudentSequence], model: &Model, profiles: &[BiasProfile]) -> Result<Model> {
    let us: Vec<[f64; NUM_ASPECTS]> = profiles.iter().map(|p| p.u).collect();
    let (_, mut grads) = evaluate(model, sequences, &Penalty::None, MaskPlan::Identity, ExecMode::Sequential)?;
    let og = omega_grad(demographic_row(model), &us)?;
    grads.head.bias_block_mut().zip_mut_with(&og.row(0), |g, p| *g += p);
    Ok(grads)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub dropout_rate: f64,
    pub hidden_size: usize,
    pub seed: u64,
    pub loss_mode: LossMode,
    pub bias_weight_mode: BiasWeightMode,
    pub mask_schedule: MaskSchedule,
    pub optimizer: OptimizerKind,
    pub exec: ExecMode,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            epochs: 200,
            dropout_rate: 0.3,
            hidden_size: 16,
            seed: 0,
            loss_mode: LossMode::BiasReg,
            bias_weight_mode: BiasWeightMode::AsWritten,
            mask_schedule: MaskSchedule::PerSequence,
            optimizer: OptimizerKind::adam(),
            exec: ExecMode::Parallel,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("bad learning rate {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout rate {} must be in [0, 1)", self.dropout_rate)));
        }
        if self.hidden_size == 0 {
            return Err(Error::Config("hidden size must be positive".into()));
        }
        Ok(())
    }
}

/// Full-batch training. `profiles` should come from the training cohort
/// before any augmentation. `history[e]` is the objective at the start of
/// epoch `e`, under that epoch's masks.
pub fn train(
    sequences: &[StudentSequence],
    profiles: &[BiasProfile],
    config: &TrainConfig,
) -> Result<(Model, Vec<f64>)> {
    config.validate()?;
    let first = sequences
        .first()
        .ok_or_else(|| Error::Invalid("no training sequences".into()))?;
    let mut model = Model::init(first.input_dim(), config.hidden_size, config.seed)?;
    check_batch(sequences, &model)?;
    let penalty = Penalty::for_mode(config.loss_mode, profiles, config.bias_weight_mode)?;
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, model.num_params());
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let plan = MaskPlan::Sampled {
            rate: config.dropout_rate,
            schedule: config.mask_schedule,
            seed: config.seed,
            epoch: epoch as u64,
        };
        let (loss, grads) = evaluate(&model, sequences, &penalty, plan, config.exec)?;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                stage: "lstm",
                epoch,
                detail: format!("objective {loss}"),
            });
        }
        history.push(loss);
        let mut flat = model.flat();
        opt.step(&mut flat, &grads.flat());
        model.set_flat(&flat);
    }
    Ok((model, history))
}

/// Tie-break: exactly 0.5 is a positive prediction.
pub fn label_of(probability: f64) -> u8 {
    u8::from(probability >= 0.5)
}

/// Test-mode probabilities for every sequence.
pub fn predict_proba(model: &Model, sequences: &[StudentSequence], exec: ExecMode) -> Result<Vec<f64>> {
    if sequences.is_empty() {
        return Ok(Vec::new());
    }
    check_batch(sequences, model)?;
    let hs = model.lstm.hidden_size;
    let parts = exec::chunked_map(exec, sequences.len(), |range| {
        let masks = [BatchMasks::identity(range.len(), hs)];
        chunk_pass(model, sequences, range, &masks, false)
    });
    let mut out = Vec::with_capacity(sequences.len());
    for part in parts {
        out.extend(part?.2);
    }
    Ok(out)
}

pub fn predict(model: &Model, sequence: &StudentSequence) -> Result<(f64, u8)> {
    let p = predict_proba(model, std::slice::from_ref(sequence), ExecMode::Sequential)?[0];
    Ok((p, label_of(p)))
}
