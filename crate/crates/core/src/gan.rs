//! Minority-class oversampling with a small generator/discriminator pair.
//!
//! Both networks have one sigmoid hidden layer. The discriminator network
//! outputs a logit and `D(x) = sigmoid(logit)`, which keeps the log terms
//! of the objective numerically stable. The discriminator ascends
//! `V(D, G) = E[log D(x)] + E[log(1 - D(G(z)))]`; the generator uses the
//! non-saturating surrogate `-E[log D(G(z))]`. `V` is what the history
//! records.
//!
//! Both networks work on features rescaled to `[0, 1]` by the schema
//! bounds, so the generator's sigmoid output covers every slot's range.

use ndarray::{s, Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{sigmoid, Activation, Mlp, MlpGrads};
use crate::optim::{Optimizer, OptimizerKind};
use crate::rng::{self, tag, Rng};

/// Valid range of every feature slot. Binary slots are rounded to {0, 1}
/// when samples are generated; continuous slots are clipped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub binary: Vec<bool>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FeatureSchema {
    pub fn new(binary: Vec<bool>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if binary.len() != lower.len() || binary.len() != upper.len() {
            return Err(Error::Invalid("feature schema slots disagree in length".into()));
        }
        if binary.is_empty() {
            return Err(Error::Invalid("feature schema has no slots".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Invalid("feature schema lower bound above upper bound".into()));
        }
        Ok(FeatureSchema { binary, lower, upper })
    }

    /// Continuous bounds taken from the observed range of `samples`;
    /// binary slots get `[0, 1]`.
    pub fn infer(samples: &[Array1<f64>], binary: Vec<bool>) -> Result<Self> {
        let dim = binary.len();
        let mut lower = vec![f64::INFINITY; dim];
        let mut upper = vec![f64::NEG_INFINITY; dim];
        for s in samples {
            if s.len() != dim {
                return Err(Error::shape(format!("{dim} features"), s.len()));
            }
            for (j, &v) in s.iter().enumerate() {
                lower[j] = lower[j].min(v);
                upper[j] = upper[j].max(v);
            }
        }
        for j in 0..dim {
            if binary[j] || samples.is_empty() {
                lower[j] = 0.0;
                upper[j] = 1.0;
            }
        }
        Self::new(binary, lower, upper)
    }

    pub fn dim(&self) -> usize {
        self.binary.len()
    }

    /// Maps each slot from `[lower, upper]` onto `[0, 1]`. A slot with
    /// zero width maps to 0.5.
    pub fn to_unit(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let mut u = x.to_owned();
        for (j, mut col) in u.columns_mut().into_iter().enumerate() {
            let w = self.upper[j] - self.lower[j];
            let lo = self.lower[j];
            col.mapv_inplace(|v| if w > 0.0 { (v - lo) / w } else { 0.5 });
        }
        u
    }

    /// Inverse of [`FeatureSchema::to_unit`] (a zero-width slot returns its bound).
    pub fn from_unit(&self, u: ArrayView2<f64>) -> Array2<f64> {
        let mut x = u.to_owned();
        for (j, mut col) in x.columns_mut().into_iter().enumerate() {
            let (lo, w) = (self.lower[j], self.upper[j] - self.lower[j]);
            col.mapv_inplace(|v| lo + v * w);
        }
        x
    }

    /// Clips continuous slots and rounds binary ones.
    pub fn project(&self, x: &mut [f64]) {
        for (j, v) in x.iter_mut().enumerate() {
            *v = if self.binary[j] {
                if *v >= 0.5 {
                    1.0
                } else {
                    0.0
                }
            } else {
                v.clamp(self.lower[j], self.upper[j])
            };
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    pub z_dim: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    /// Discriminator steps per generator step.
    pub d_steps: usize,
    /// Append the batch's per-slot standard deviation to every
    /// discriminator input, so a collapsed generator is easy to spot.
    pub batch_std: bool,
    pub optimizer: OptimizerKind,
}

impl Default for GanConfig {
    fn default() -> Self {
        GanConfig {
            z_dim: 8,
            hidden: 32,
            epochs: 2000,
            learning_rate: 1.0,
            d_steps: 1,
            batch_std: true,
            optimizer: OptimizerKind::Gd,
        }
    }
}

impl GanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.z_dim == 0 || self.hidden == 0 {
            return Err(Error::Config("GAN layer sizes must be positive".into()));
        }
        if self.d_steps == 0 {
            return Err(Error::Config("at least one discriminator step per epoch".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("bad GAN learning rate {}", self.learning_rate)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanParams {
    pub z_dim: usize,
    pub generator: Mlp,
    /// Outputs a logit; `D(x)` is its sigmoid.
    pub discriminator: Mlp,
    pub schema: FeatureSchema,
    /// The discriminator also sees the per-slot standard deviation of the
    /// batch it scores.
    #[serde(default)]
    pub batch_std: bool,
}

const STD_EPS: f64 = 1e-8;

/// Rows of `x` with the per-column batch standard deviation appended to
/// each, plus that deviation.
fn with_batch_std(x: ArrayView2<f64>) -> (Array2<f64>, Array1<f64>) {
    let (n, f) = x.dim();
    let mean = x.sum_axis(Axis(0)) / n as f64;
    let std = Array1::from_shape_fn(f, |j| {
        let var = x.column(j).iter().map(|v| (v - mean[j]).powi(2)).sum::<f64>() / n as f64;
        (var + STD_EPS).sqrt()
    });
    let mut out = Array2::zeros((n, 2 * f));
    out.slice_mut(s![.., ..f]).assign(&x);
    out.slice_mut(s![.., f..]).assign(&std.broadcast((n, f)).expect("row broadcast"));
    (out, std)
}

/// One epoch of training, measured on the discriminator's batch before its
/// update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GanEpoch {
    pub value: f64,
    pub d_accuracy: f64,
    pub g_loss: f64,
}

/// A training run that hit a non-finite quantity. `last_stable` holds the
/// parameters from the end of the last finite epoch.
#[derive(Debug)]
pub struct GanFailure {
    pub error: Error,
    pub last_stable: Box<GanParams>,
    pub history: Vec<GanEpoch>,
}

impl From<GanFailure> for Error {
    fn from(f: GanFailure) -> Self {
        f.error
    }
}

/// `log(sigmoid(z))` without overflow.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

fn noise(rng: &mut Rng, n: usize, z_dim: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((n, z_dim), || rng.random_range(-1.0..=1.0))
}

fn add_grads(a: &mut MlpGrads, b: &MlpGrads) {
    for (x, y) in a.weights.iter_mut().zip(&b.weights) {
        *x += y;
    }
    for (x, y) in a.biases.iter_mut().zip(&b.biases) {
        *x += y;
    }
}

impl GanParams {
    pub fn init(schema: FeatureSchema, config: &GanConfig, rng: &mut Rng) -> Result<Self> {
        config.validate()?;
        let f = schema.dim();
        let generator = Mlp::new(
            &[config.z_dim, config.hidden, f],
            &[Activation::Sigmoid, Activation::Sigmoid],
            rng,
        )?;
        let d_in = if config.batch_std { 2 * f } else { f };
        let discriminator = Mlp::new(
            &[d_in, config.hidden, 1],
            &[Activation::Sigmoid, Activation::Identity],
            rng,
        )?;
        Ok(GanParams {
            z_dim: config.z_dim,
            generator,
            discriminator,
            schema,
            batch_std: config.batch_std,
        })
    }

    /// What the discriminator reads for a unit-space batch.
    fn d_input(&self, u: ArrayView2<f64>) -> Array2<f64> {
        if self.batch_std {
            with_batch_std(u).0
        } else {
            u.to_owned()
        }
    }

    pub fn feature_dim(&self) -> usize {
        self.schema.dim()
    }

    fn generate_unit(&self, z: ArrayView2<f64>) -> Array2<f64> {
        self.generator.forward_batch(z).pop().expect("generator has layers")
    }

    /// Generator outputs in feature space for a batch of noise rows, before
    /// projection.
    pub fn generate_raw(&self, z: ArrayView2<f64>) -> Array2<f64> {
        self.schema.from_unit(self.generate_unit(z).view())
    }

    /// `D(x)` for every feature-space row of `x`. With `batch_std` the
    /// score of a row depends on the batch it is scored in.
    pub fn discriminate(&self, x: ArrayView2<f64>) -> Array1<f64> {
        let u = self.d_input(self.schema.to_unit(x).view());
        let logits = self.discriminator.forward_batch(u.view()).pop().expect("discriminator has layers");
        logits.column(0).mapv(sigmoid)
    }

    /// Fraction of rows classified correctly when `real` should score at
    /// least 0.5 and `fake` below it.
    pub fn discriminator_accuracy(&self, real: ArrayView2<f64>, fake: ArrayView2<f64>) -> f64 {
        let r = self.discriminate(real).iter().filter(|&&p| p >= 0.5).count();
        let f = self.discriminate(fake).iter().filter(|&&p| p < 0.5).count();
        (r + f) as f64 / (real.nrows() + fake.nrows()) as f64
    }

    /// Discriminator loss `-V(D, G)` on one unit-space batch, its gradient, `V` itself,
    /// and the batch accuracy.
    fn discriminator_step(&self, real: ArrayView2<f64>, fake: ArrayView2<f64>) -> (MlpGrads, f64, f64) {
        let d = &self.discriminator;
        let (nr, nf) = (real.nrows() as f64, fake.nrows() as f64);
        let (real, fake) = (self.d_input(real), self.d_input(fake));
        let outs_r = d.forward_batch(real.view());
        let outs_f = d.forward_batch(fake.view());
        let l_real = outs_r.last().unwrap().column(0).to_owned();
        let l_fake = outs_f.last().unwrap().column(0).to_owned();
        let value = l_real.iter().map(|&z| log_sigmoid(z)).sum::<f64>() / nr
            + l_fake.iter().map(|&z| log_sigmoid(-z)).sum::<f64>() / nf;
        let correct = l_real.iter().filter(|&&z| z >= 0.0).count() + l_fake.iter().filter(|&&z| z < 0.0).count();
        let accuracy = correct as f64 / (nr + nf);
        let d_r = l_real.mapv(|z| (sigmoid(z) - 1.0) / nr).insert_axis(Axis(1));
        let d_f = l_fake.mapv(|z| sigmoid(z) / nf).insert_axis(Axis(1));
        let (mut g, _) = d.backward_batch(real.view(), &outs_r, d_r);
        let (g_f, _) = d.backward_batch(fake.view(), &outs_f, d_f);
        add_grads(&mut g, &g_f);
        (g, value, accuracy)
    }

    /// Non-saturating generator loss `-mean log D(G(z))` and its gradient
    /// with respect to the generator.
    pub(crate) fn generator_loss_and_grad(&self, z: ArrayView2<f64>) -> (f64, MlpGrads) {
        let outs_g = self.generator.forward_batch(z);
        let fake = outs_g.last().unwrap();
        let input = self.d_input(fake.view());
        let outs_d = self.discriminator.forward_batch(input.view());
        let logits = outs_d.last().unwrap().column(0).to_owned();
        let n = z.nrows() as f64;
        let loss = -logits.iter().map(|&l| log_sigmoid(l)).sum::<f64>() / n;
        let d_logit = logits.mapv(|l| (sigmoid(l) - 1.0) / n).insert_axis(Axis(1));
        let (_, d_input) = self.discriminator.backward_batch(input.view(), &outs_d, d_logit);
        let f = fake.ncols();
        let mut d_fake = d_input.slice(s![.., ..f]).to_owned();
        if self.batch_std {
            // d std_j / d x_ij = (x_ij - mean_j) / (n std_j)
            let d_std = d_input.slice(s![.., f..]).sum_axis(Axis(0));
            let (_, std) = with_batch_std(fake.view());
            let mean = fake.sum_axis(Axis(0)) / n;
            for ((i, j), v) in d_fake.indexed_iter_mut() {
                *v += d_std[j] * (fake[[i, j]] - mean[j]) / (n * std[j]);
            }
        }
        let (g, _) = self.generator.backward_batch(z, &outs_g, d_fake);
        (loss, g)
    }
}

/// Trains on `minority` (rows are feature vectors laid out per `schema`).
/// Every epoch runs `d_steps` discriminator updates against the full
/// minority set and an equally sized fake batch, then one generator update.
pub fn gan_train(
    minority: &[Array1<f64>],
    schema: FeatureSchema,
    config: &GanConfig,
    seed: u64,
) -> std::result::Result<(GanParams, Vec<GanEpoch>), GanFailure> {
    let mut rng = rng::rng_for(seed, &[tag::GAN]);
    let fail = |error: Error| GanFailure {
        error,
        last_stable: Box::new(GanParams {
            z_dim: 0,
            generator: Mlp { layers: Vec::new() },
            discriminator: Mlp { layers: Vec::new() },
            schema: schema.clone(),
            batch_std: config.batch_std,
        }),
        history: Vec::new(),
    };
    if minority.len() < 2 {
        return Err(fail(Error::Invalid(format!(
            "GAN needs at least 2 minority samples, got {}",
            minority.len()
        ))));
    }
    let f = schema.dim();
    if let Some(bad) = minority.iter().find(|s| s.len() != f) {
        return Err(fail(Error::shape(format!("{f} features"), bad.len())));
    }
    let mut params = GanParams::init(schema.clone(), config, &mut rng).map_err(&fail)?;

    let n = minority.len();
    let real = schema.to_unit(Array2::from_shape_fn((n, f), |(i, j)| minority[i][j]).view());
    let mut opt_d = Optimizer::new(config.optimizer, config.learning_rate, params.discriminator.num_params());
    let mut opt_g = Optimizer::new(config.optimizer, config.learning_rate, params.generator.num_params());
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        let stable = params.clone();
        let mut record = GanEpoch {
            value: 0.0,
            d_accuracy: 0.0,
            g_loss: 0.0,
        };
        for k in 0..config.d_steps {
            let fake = params.generate_unit(noise(&mut rng, n, config.z_dim).view());
            let (grads, value, accuracy) = params.discriminator_step(real.view(), fake.view());
            if k == 0 {
                record.value = value;
                record.d_accuracy = accuracy;
            }
            let mut flat = params.discriminator.flat();
            opt_d.step(&mut flat, &grads.flat());
            params.discriminator.set_flat(&flat);
        }
        let z = noise(&mut rng, n, config.z_dim);
        let (g_loss, grads) = params.generator_loss_and_grad(z.view());
        record.g_loss = g_loss;
        let mut flat = params.generator.flat();
        opt_g.step(&mut flat, &grads.flat());
        params.generator.set_flat(&flat);

        let finite = record.value.is_finite()
            && record.g_loss.is_finite()
            && flat.iter().all(|v| v.is_finite())
            && params.discriminator.flat().iter().all(|v| v.is_finite());
        if !finite {
            return Err(GanFailure {
                error: Error::Diverged {
                    stage: "gan",
                    epoch,
                    detail: format!("V = {}, generator loss = {}", record.value, record.g_loss),
                },
                last_stable: Box::new(stable),
                history,
            });
        }
        history.push(record);
    }
    Ok((params, history))
}

/// `count` projected samples drawn with noise from `seed`.
pub fn generate(gan: &GanParams, count: usize, seed: u64) -> Vec<Array1<f64>> {
    if count == 0 {
        return Vec::new();
    }
    let mut rng = rng::rng_for(seed, &[tag::GENERATE]);
    let raw = gan.generate_raw(noise(&mut rng, count, gan.z_dim).view());
    raw.rows()
        .into_iter()
        .map(|r| {
            let mut v = r.to_vec();
            gan.schema.project(&mut v);
            Array1::from(v)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub features: Array1<f64>,
    pub label: u8,
}

/// Real training samples plus generated minority samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentedSet {
    pub real: Vec<Sample>,
    pub synthetic: Vec<Sample>,
}

impl AugmentedSet {
    /// Wraps real samples with nothing added.
    pub fn unaugmented(real: Vec<Sample>) -> Self {
        AugmentedSet {
            real,
            synthetic: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.real.len() + self.synthetic.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Real samples first, then synthetic ones.
    pub fn iter(&self) -> impl Iterator<Item = &Sample> {
        self.real.iter().chain(&self.synthetic)
    }

    pub fn label_counts(&self) -> [usize; 2] {
        label_counts(self.iter())
    }
}

fn label_counts<'a>(samples: impl Iterator<Item = &'a Sample>) -> [usize; 2] {
    let mut c = [0; 2];
    for s in samples {
        c[usize::from(s.label != 0)] += 1;
    }
    c
}

/// The label with fewer samples, or `None` when the classes are balanced.
pub fn minority_label(samples: &[Sample]) -> Option<u8> {
    let [n0, n1] = label_counts(samples.iter());
    match n0.cmp(&n1) {
        std::cmp::Ordering::Less => Some(0),
        std::cmp::Ordering::Greater => Some(1),
        std::cmp::Ordering::Equal => None,
    }
}

/// Appends generated minority samples until both labels are equally
/// frequent. Real samples are moved through untouched.
pub fn balance(train: Vec<Sample>, gan: &GanParams, seed: u64) -> Result<AugmentedSet> {
    let Some(minority) = minority_label(&train) else {
        return Ok(AugmentedSet::unaugmented(train));
    };
    if let Some(bad) = train.iter().find(|s| s.features.len() != gan.feature_dim()) {
        return Err(Error::shape(format!("{} features", gan.feature_dim()), bad.features.len()));
    }
    let [n0, n1] = label_counts(train.iter());
    let missing = n0.abs_diff(n1);
    let synthetic = generate(gan, missing, seed)
        .into_iter()
        .map(|features| Sample {
            features,
            label: minority,
        })
        .collect();
    Ok(AugmentedSet { real: train, synthetic })
}

/// Trains a GAN on the minority class of `train` and balances the set.
/// Returns the set unchanged and no GAN when the classes are already equal.
pub fn augment(
    train: Vec<Sample>,
    schema: FeatureSchema,
    config: &GanConfig,
    seed: u64,
) -> Result<(AugmentedSet, Option<(GanParams, Vec<GanEpoch>)>)> {
    let Some(minority) = minority_label(&train) else {
        return Ok((AugmentedSet::unaugmented(train), None));
    };
    let rows: Vec<Array1<f64>> = train
        .iter()
        .filter(|s| s.label == minority)
        .map(|s| s.features.clone())
        .collect();
    let (gan, history) = gan_train(&rows, schema, config, seed)?;
    let set = balance(train, &gan, seed)?;
    Ok((set, Some((gan, history))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn schema(dim: usize, binary: &[usize]) -> FeatureSchema {
        let b = (0..dim).map(|j| binary.contains(&j)).collect();
        FeatureSchema::new(b, vec![0.0; dim], vec![1.0; dim]).unwrap()
    }

    fn samples(n0: usize, n1: usize, dim: usize, seed: u64) -> Vec<Sample> {
        let mut r = rng::rng(seed);
        (0..n0 + n1)
            .map(|i| Sample {
                features: (0..dim).map(|_| r.random_range(0.0..1.0)).collect(),
                label: u8::from(i >= n0),
            })
            .collect()
    }

    fn quick(epochs: usize) -> GanConfig {
        GanConfig {
            epochs,
            ..GanConfig::default()
        }
    }

    #[test]
    fn recovers_a_single_point() {
        let point = array![0.31, 0.62, 0.47, 0.8, 0.2, 1.0, 0.0, 1.0, 1.0];
        let data = vec![point.clone(); 40];
        let (gan, history) = gan_train(&data, schema(9, &[5, 6, 7, 8]), &GanConfig::default(), 3).unwrap();
        assert_eq!(history.len(), 2000);
        let mut r = rng::rng(99);
        let raw = gan.generate_raw(noise(&mut r, 1000, gan.z_dim).view());
        let mean = raw.mean_axis(Axis(0)).unwrap();
        let err = (&mean - &point).mapv(f64::abs).fold(0.0_f64, |a, &b| a.max(b));
        assert!(err < 0.05, "max mean error {err}, mean {mean}");
    }

    #[test]
    fn untrained_discriminator_is_at_chance() {
        let mut r = rng::rng(4);
        let gan = GanParams::init(schema(6, &[]), &GanConfig::default(), &mut r).unwrap();
        let real = Array2::from_shape_simple_fn((200, 6), || r.random_range(0.0..1.0));
        let fake = gan.generate_raw(noise(&mut r, 200, 8).view());
        let acc = gan.discriminator_accuracy(real.view(), fake.view());
        assert!((acc - 0.5).abs() <= 0.1, "{acc}");
    }

    /// Continuous slots in a band plus two Bernoulli slots.
    fn spread_data(n: usize, seed: u64) -> Vec<Array1<f64>> {
        let mut r = rng::rng(seed);
        (0..n)
            .map(|_| {
                let a: f64 = r.random_range(0.0..1.0);
                array![
                    0.2 + 0.3 * a,
                    0.7 - 0.2 * a + 0.05 * r.random_range(-1.0..1.0),
                    r.random_range(0.4..0.6),
                    f64::from(r.random_bool(0.3)),
                    f64::from(r.random_bool(0.6))
                ]
            })
            .collect()
    }

    /// The plain discriminator: with the batch spread as an extra input it
    /// keeps an edge of 0.6 to 0.7 on spread data instead.
    #[test]
    fn converged_discriminator_sits_at_chance() {
        let point = array![0.3, 0.7, 0.5, 1.0, 0.0];
        let data = vec![point; 60];
        let config = GanConfig {
            batch_std: false,
            ..GanConfig::default()
        };
        for seed in 0..4 {
            let (gan, history) = gan_train(&data, schema(5, &[3, 4]), &config, seed).unwrap();
            let tail = &history[history.len() - 10..];
            let mean = tail.iter().map(|e| e.d_accuracy).sum::<f64>() / 10.0;
            assert!((mean - 0.5).abs() <= 0.15, "seed {seed}: {mean}");
            let real = Array2::from_shape_fn((200, 5), |(_, j)| data[0][j]);
            let mut r = rng::rng(seed + 50);
            let fake = gan.generate_raw(noise(&mut r, 200, 8).view());
            let held_out = gan.discriminator_accuracy(real.view(), fake.view());
            assert!((held_out - 0.5).abs() <= 0.15, "seed {seed}: held-out {held_out}");
        }
    }

    #[test]
    fn generated_binary_slots_keep_their_frequencies() {
        let data = spread_data(150, 12);
        let (gan, _) = gan_train(&data, schema(5, &[3, 4]), &GanConfig::default(), 1).unwrap();
        let out = generate(&gan, 2000, 5);
        for (slot, p) in [(3, 0.3), (4, 0.6)] {
            let real = data.iter().map(|x| x[slot]).sum::<f64>() / data.len() as f64;
            let fake = out.iter().map(|x| x[slot]).sum::<f64>() / out.len() as f64;
            assert!((fake - real).abs() < 0.15, "slot {slot}: real {real} (p {p}), generated {fake}");
        }
    }

    #[test]
    fn training_is_deterministic() {
        let data: Vec<Array1<f64>> = samples(0, 30, 5, 2).into_iter().map(|s| s.features).collect();
        let a = gan_train(&data, schema(5, &[4]), &quick(50), 7).unwrap();
        let b = gan_train(&data, schema(5, &[4]), &quick(50), 7).unwrap();
        assert_eq!(a, b);
        let c = gan_train(&data, schema(5, &[4]), &quick(50), 8).unwrap();
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn generator_gradient_matches_finite_differences() {
        let mut r = rng::rng(21);
        let gan = GanParams::init(schema(4, &[]), &quick(1), &mut r).unwrap();
        let z = noise(&mut r, 7, 8);
        let (_, g) = gan.generator_loss_and_grad(z.view());
        let analytic = g.flat();
        let base = gan.generator.flat();
        let h = 1e-5;
        for k in (0..base.len()).step_by(7) {
            let mut p = gan.clone();
            let mut v = base.clone();
            v[k] += h;
            p.generator.set_flat(&v);
            let up = p.generator_loss_and_grad(z.view()).0;
            v[k] -= 2.0 * h;
            p.generator.set_flat(&v);
            let down = p.generator_loss_and_grad(z.view()).0;
            let fd = (up - down) / (2.0 * h);
            let rel = (fd - analytic[k]).abs() / fd.abs().max(analytic[k].abs()).max(1e-6);
            assert!(rel < 1e-5, "param {k}: {fd} vs {}", analytic[k]);
        }
    }

    #[test]
    fn generated_samples_respect_the_schema() {
        let mut r = rng::rng(5);
        let s = FeatureSchema::new(
            vec![false, false, true, true],
            vec![0.2, 0.0, 0.0, 0.0],
            vec![0.6, 1.0, 1.0, 1.0],
        )
        .unwrap();
        let gan = GanParams::init(s, &GanConfig::default(), &mut r).unwrap();
        assert!(generate(&gan, 0, 1).is_empty());
        let five = generate(&gan, 5, 1);
        assert_eq!(five.len(), 5);
        assert!(five.iter().all(|v| v.len() == 4));
        for v in generate(&gan, 1000, 2) {
            assert!(v[2] == 0.0 || v[2] == 1.0);
            assert!(v[3] == 0.0 || v[3] == 1.0);
            assert!((0.2..=0.6).contains(&v[0]));
        }
        assert_eq!(generate(&gan, 10, 3), generate(&gan, 10, 3));
    }

    #[test]
    fn balance_fills_the_gap_without_touching_real_samples() {
        let mut r = rng::rng(1);
        let gan = GanParams::init(schema(3, &[2]), &GanConfig::default(), &mut r).unwrap();
        let train = samples(10, 90, 3, 4);
        let set = balance(train.clone(), &gan, 0).unwrap();
        assert_eq!(set.synthetic.len(), 80);
        assert_eq!(set.label_counts(), [90, 90]);
        assert!(set.synthetic.iter().all(|s| s.label == 0));
        assert_eq!(set.real, train);
        for (a, b) in set.real.iter().zip(&train) {
            for (x, y) in a.features.iter().zip(&b.features) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }

        let even = samples(50, 50, 3, 5);
        let same = balance(even.clone(), &gan, 0).unwrap();
        assert!(same.synthetic.is_empty());
        assert_eq!(same.real, even);
    }

    #[test]
    fn augment_trains_on_the_minority() {
        let train = samples(80, 8, 3, 6);
        let (set, gan) = augment(train, schema(3, &[]), &quick(20), 2).unwrap();
        assert_eq!(set.label_counts(), [80, 80]);
        assert!(set.synthetic.iter().all(|s| s.label == 1));
        assert_eq!(gan.unwrap().1.len(), 20);
    }

    #[test]
    fn divergence_reports_the_last_stable_parameters() {
        let mut data = vec![array![0.5, 0.5]; 4];
        data[1][0] = f64::NAN;
        let failure = gan_train(&data, schema(2, &[]), &quick(10), 1).unwrap_err();
        assert!(matches!(failure.error, Error::Diverged { epoch: 0, .. }));
        assert!(failure.history.is_empty());
        let mut r = rng::rng_for(1, &[tag::GAN]);
        let init = GanParams::init(schema(2, &[]), &quick(10), &mut r).unwrap();
        assert_eq!(*failure.last_stable, init);
    }

    #[test]
    fn rejects_too_few_samples() {
        let err = gan_train(&[array![0.1]], schema(1, &[]), &quick(1), 0).unwrap_err();
        assert!(matches!(err.error, Error::Invalid(_)));
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) + 2f64.ln()).abs() < 1e-15);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-12);
        assert!(log_sigmoid(800.0).abs() < 1e-300);
    }
}
