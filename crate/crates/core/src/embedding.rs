//! Per-semester grade matrices and the autoencoders that compress each
//! student's semester row into a short academic vector.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::cohort::{Cohort, NUM_SEMESTERS};
use crate::error::{Error, Result};
use crate::exec::{self, ExecMode};
use crate::nn::{Activation, Mlp, MlpGrads};
use crate::optim::{Optimizer, OptimizerKind};
use crate::rng::{self, tag};

/// Scores are divided by this before entering an autoencoder.
pub const SCORE_SCALE: f64 = 100.0;

/// Students x courses score matrix for one semester. Entry 0 means the
/// student did not take the course. Rows and columns are sorted by id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradeMatrix {
    pub semester: u8,
    pub values: Array2<f64>,
    pub row_index: Vec<String>,
    pub col_index: Vec<String>,
}

impl GradeMatrix {
    /// True when nobody has a grade in this semester.
    pub fn is_empty(&self) -> bool {
        self.values.ncols() == 0 || self.values.nrows() == 0
    }

    /// Values mapped to [0, 1].
    pub fn scaled(&self) -> Array2<f64> {
        &self.values / SCORE_SCALE
    }
}

fn check_semester(semester: u8) -> Result<()> {
    if !(1..=NUM_SEMESTERS as u8).contains(&semester) {
        return Err(Error::Invalid(format!("semester {semester} outside 1..={NUM_SEMESTERS}")));
    }
    Ok(())
}

/// Builds `C_s` from every grade recorded in `semester`.
pub fn build_c_matrix(cohort: &Cohort, semester: u8) -> Result<GradeMatrix> {
    build_matrix(cohort, semester, None)
}

/// Like [`build_c_matrix`] but with a fixed column set; grades in courses
/// outside `columns` are ignored.
fn build_matrix(cohort: &Cohort, semester: u8, columns: Option<&[String]>) -> Result<GradeMatrix> {
    check_semester(semester)?;
    let grades: Vec<_> = cohort.grades.iter().filter(|g| g.semester == semester).collect();
    let rows: BTreeSet<&str> = grades.iter().map(|g| g.student_id.as_str()).collect();
    let row_index: Vec<String> = rows.into_iter().map(String::from).collect();
    let col_index: Vec<String> = match columns {
        Some(c) => c.to_vec(),
        None => {
            let cols: BTreeSet<&str> = grades.iter().map(|g| g.course_id.as_str()).collect();
            cols.into_iter().map(String::from).collect()
        }
    };
    let row_of: HashMap<&str, usize> = row_index.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let col_of: HashMap<&str, usize> = col_index.iter().enumerate().map(|(j, s)| (s.as_str(), j)).collect();

    let mut values = Array2::zeros((row_index.len(), col_index.len()));
    let mut seen = HashSet::new();
    for g in grades {
        if !seen.insert((g.student_id.as_str(), g.course_id.as_str())) {
            return Err(Error::Invalid(format!(
                "duplicate grade for student `{}` in course `{}` (semester {semester})",
                g.student_id, g.course_id
            )));
        }
        if let Some(&j) = col_of.get(g.course_id.as_str()) {
            values[[row_of[g.student_id.as_str()], j]] = g.score;
        }
    }
    Ok(GradeMatrix {
        semester,
        values,
        row_index,
        col_index,
    })
}

/// A symmetric sigmoid autoencoder. `network` runs input to reconstruction;
/// the output of layer `code_layer` is the code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderParams {
    pub layer_dims: Vec<usize>,
    pub code_layer: usize,
    pub network: Mlp,
}

impl AutoencoderParams {
    /// `layer_dims` must read the same forwards and backwards, e.g.
    /// `[d, 64, 3, 64, d]`, with an odd number of entries.
    pub fn init(layer_dims: &[usize], seed: u64) -> Result<Self> {
        let n = layer_dims.len();
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "autoencoder dims {layer_dims:?} need an odd count of at least 3"
            )));
        }
        if layer_dims.iter().ne(layer_dims.iter().rev()) {
            return Err(Error::Config(format!("autoencoder dims {layer_dims:?} are not symmetric")));
        }
        let mut rng = rng::rng_for(seed, &[tag::AUTOENCODER]);
        let network = Mlp::new(layer_dims, &vec![Activation::Sigmoid; n - 1], &mut rng)?;
        Ok(AutoencoderParams {
            layer_dims: layer_dims.to_vec(),
            code_layer: n / 2 - 1,
            network,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn code_dim(&self) -> usize {
        self.layer_dims[self.code_layer + 1]
    }

    fn check_input(&self, width: usize) -> Result<()> {
        if width != self.input_dim() {
            return Err(Error::shape(format!("{} input columns", self.input_dim()), width));
        }
        Ok(())
    }

    /// Codes for a batch of (already scaled) rows.
    pub fn encode_batch(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let mut h = x.to_owned();
        for layer in &self.network.layers[..=self.code_layer] {
            h = layer.forward_batch(h.view());
        }
        Ok(h)
    }
}

/// Runs one row through the autoencoder: `(code, reconstruction)`.
pub fn ae_forward(params: &AutoencoderParams, x: ArrayView1<f64>) -> Result<(Array1<f64>, Array1<f64>)> {
    params.check_input(x.len())?;
    let mut h = x.to_owned();
    let mut code = None;
    for (l, layer) in params.network.layers.iter().enumerate() {
        h = layer.forward_one(h.view());
        if l == params.code_layer {
            code = Some(h.clone());
        }
    }
    Ok((code.expect("code layer inside network"), h))
}

/// Mean over rows of the squared reconstruction error, and its gradient.
pub fn reconstruction_loss_and_grad(params: &AutoencoderParams, x: ArrayView2<f64>) -> Result<(f64, MlpGrads)> {
    params.check_input(x.ncols())?;
    let n = x.nrows().max(1) as f64;
    let outs = params.network.forward_batch(x);
    let diff = outs.last().expect("non-empty network") - &x;
    let loss = diff.iter().map(|d| d * d).sum::<f64>() / n;
    let d_out = diff * (2.0 / n);
    let (grads, _) = params.network.backward_batch(x, &outs, d_out);
    Ok((loss, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AeTrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
}

impl Default for AeTrainConfig {
    fn default() -> Self {
        AeTrainConfig {
            epochs: 1000,
            learning_rate: 0.005,
            optimizer: OptimizerKind::adam(),
        }
    }
}

/// Full-batch training on the rows of `x` (already scaled to [0, 1]).
/// `history[e]` is the loss at the start of epoch `e`.
pub fn ae_train(
    x: ArrayView2<f64>,
    layer_dims: &[usize],
    config: &AeTrainConfig,
    seed: u64,
) -> Result<(AutoencoderParams, Vec<f64>)> {
    if config.epochs == 0 {
        return Err(Error::Config("autoencoder epochs must be >= 1".into()));
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::Config("autoencoder learning rate must be non-negative".into()));
    }
    if x.nrows() == 0 {
        return Err(Error::Invalid("cannot train an autoencoder on zero rows".into()));
    }
    let mut params = AutoencoderParams::init(layer_dims, seed)?;
    params.check_input(x.ncols())?;
    let mut flat = params.network.flat();
    let mut opt = Optimizer::new(config.optimizer, config.learning_rate, flat.len());
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let (loss, grads) = reconstruction_loss_and_grad(&params, x)?;
        if !loss.is_finite() {
            return Err(Error::Diverged {
                stage: "autoencoder",
                epoch,
                detail: format!("reconstruction loss {loss}; last finite {:?}", history.last()),
            });
        }
        history.push(loss);
        opt.step(&mut flat, &grads.flat());
        params.network.set_flat(&flat);
    }
    Ok((params, history))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// Encoder hidden widths between input and code; mirrored by the decoder.
    pub hidden: Vec<usize>,
    pub code_dim: usize,
    pub train: AeTrainConfig,
    pub seed: u64,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            hidden: vec![64],
            code_dim: 3,
            train: AeTrainConfig::default(),
            seed: 0,
        }
    }
}

impl EmbeddingConfig {
    pub fn layer_dims(&self, input: usize) -> Vec<usize> {
        let mut dims = vec![input];
        dims.extend(&self.hidden);
        dims.push(self.code_dim);
        dims.extend(self.hidden.iter().rev());
        dims.push(input);
        dims
    }
}

/// A trained encoder for one semester. `params` is `None` when the training
/// cohort had no grades that semester; every student then embeds to zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemesterEncoder {
    pub semester: u8,
    pub col_index: Vec<String>,
    pub params: Option<AutoencoderParams>,
    pub loss_history: Vec<f64>,
}

/// One encoder per semester, fitted on a training cohort and reusable on
/// unseen students.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingModel {
    pub code_dim: usize,
    pub semesters: Vec<SemesterEncoder>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemesterEmbedding {
    pub semester: u8,
    /// Sorted student ids, one per row of `codes`.
    pub row_index: Vec<String>,
    pub codes: Array2<f64>,
    /// Code assigned to students with no grades this semester.
    pub absent_code: Array1<f64>,
}

/// Academic vectors per semester for one cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcademicEmbedding {
    pub code_dim: usize,
    pub semesters: Vec<SemesterEmbedding>,
}

impl AcademicEmbedding {
    /// The code of `student_id` in `semester` (1-based), or the absent-row
    /// code if the student has no grades then.
    pub fn code(&self, semester: u8, student_id: &str) -> Option<ArrayView1<'_, f64>> {
        let s = self.semesters.iter().find(|s| s.semester == semester)?;
        Some(match s.row_index.binary_search_by(|id| id.as_str().cmp(student_id)) {
            Ok(i) => s.codes.row(i),
            Err(_) => s.absent_code.view(),
        })
    }

    /// Writes `embedding_s{semester}.csv` files with a `student_id` column
    /// followed by one column per code dimension.
    pub fn write_csv(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for s in &self.semesters {
            let path = dir.join(format!("embedding_s{}.csv", s.semester));
            let file = std::fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut w = csv::Writer::from_writer(file);
            let mut header = vec!["student_id".to_string()];
            header.extend((1..=self.code_dim).map(|k| format!("a{k}")));
            w.write_record(&header)?;
            for (id, row) in s.row_index.iter().zip(s.codes.rows()) {
                let mut rec = vec![id.clone()];
                rec.extend(row.iter().map(|v| v.to_string()));
                w.write_record(&rec)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

impl EmbeddingModel {
    /// Trains one autoencoder per semester on `cohort`.
    pub fn fit(cohort: &Cohort, config: &EmbeddingConfig, exec: ExecMode) -> Result<Self> {
        if config.code_dim == 0 {
            return Err(Error::Config("code dimension must be >= 1".into()));
        }
        let semesters: Vec<u8> = (1..=NUM_SEMESTERS as u8).collect();
        let encoders = exec::map(exec, &semesters, |&s| -> Result<SemesterEncoder> {
            let c = build_c_matrix(cohort, s)?;
            if c.is_empty() {
                return Ok(SemesterEncoder {
                    semester: s,
                    col_index: c.col_index,
                    params: None,
                    loss_history: Vec::new(),
                });
            }
            let dims = config.layer_dims(c.values.ncols());
            let seed = rng::derive(config.seed, &[tag::AUTOENCODER, u64::from(s)]);
            let (params, loss_history) = ae_train(c.scaled().view(), &dims, &config.train, seed)?;
            Ok(SemesterEncoder {
                semester: s,
                col_index: c.col_index,
                params: Some(params),
                loss_history,
            })
        });
        Ok(EmbeddingModel {
            code_dim: config.code_dim,
            semesters: encoders.into_iter().collect::<Result<_>>()?,
        })
    }

    /// Encodes every student of `cohort` with the fitted encoders.
    pub fn embed(&self, cohort: &Cohort) -> Result<AcademicEmbedding> {
        let mut semesters = Vec::with_capacity(self.semesters.len());
        for enc in &self.semesters {
            let c = build_matrix(cohort, enc.semester, Some(&enc.col_index))?;
            let (codes, absent_code) = match &enc.params {
                Some(p) => {
                    let zero = Array2::zeros((1, p.input_dim()));
                    let absent = p.encode_batch(zero.view())?.row(0).to_owned();
                    (p.encode_batch(c.scaled().view())?, absent)
                }
                None => (Array2::zeros((c.row_index.len(), self.code_dim)), Array1::zeros(self.code_dim)),
            };
            semesters.push(SemesterEmbedding {
                semester: enc.semester,
                row_index: c.row_index,
                codes,
                absent_code,
            });
        }
        Ok(AcademicEmbedding {
            code_dim: self.code_dim,
            semesters,
        })
    }
}

/// Fits per-semester autoencoders on `cohort` and embeds the same cohort.
pub fn embed_semesters(cohort: &Cohort, config: &EmbeddingConfig, exec: ExecMode) -> Result<AcademicEmbedding> {
    EmbeddingModel::fit(cohort, config, exec)?.embed(cohort)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::{synth_cohort, GradeRecord, Provenance, StudentRecord, SynthConfig};
    use ndarray::{array, Axis};
    use rand::Rng as _;

    fn tiny_cohort(grades: Vec<(&str, u8, &str, f64)>) -> Cohort {
        let ids: BTreeSet<&str> = grades.iter().map(|g| g.0).chain(["a", "b"]).collect();
        let students = ids
            .into_iter()
            .map(|id| StudentRecord {
                student_id: id.into(),
                major_id: 1,
                gender: 0,
                nation: 0,
                hometown_level: 0,
                enroll_status: 0,
                label: 1,
            })
            .collect();
        let grades = grades
            .into_iter()
            .map(|(id, s, c, v)| GradeRecord {
                student_id: id.into(),
                semester: s,
                course_id: c.into(),
                score: v,
                credit: 2.0,
            })
            .collect();
        Cohort::new(students, grades, Provenance::Parsed).unwrap()
    }

    #[test]
    fn c_matrix_fills_zeros_for_missing_courses() {
        let c = tiny_cohort(vec![("a", 1, "x", 80.0), ("a", 1, "y", 70.0), ("b", 1, "z", 90.0), ("b", 1, "y", 60.0)]);
        let m = build_c_matrix(&c, 1).unwrap();
        assert_eq!(m.values, array![[80.0, 70.0, 0.0], [0.0, 60.0, 90.0]]);
        assert_eq!(m.row_index, vec!["a", "b"]);
        assert_eq!(m.col_index, vec!["x", "y", "z"]);
    }

    #[test]
    fn empty_semester_and_duplicates() {
        let c = tiny_cohort(vec![("a", 1, "x", 80.0)]);
        let m = build_c_matrix(&c, 2).unwrap();
        assert!(m.is_empty());
        assert_eq!(m.values.dim(), (0, 0));
        let dup = tiny_cohort(vec![("a", 1, "x", 80.0), ("a", 1, "x", 81.0)]);
        assert!(build_c_matrix(&dup, 1).is_err());
        assert!(build_c_matrix(&c, 7).is_err());
    }

    #[test]
    fn c_matrix_at_illustrative_scale() {
        let mut grades = Vec::new();
        let ids: Vec<String> = (0..300).map(|i| format!("s{i:03}")).collect();
        let courses: Vec<String> = (0..500).map(|j| format!("c{j:03}")).collect();
        for (i, id) in ids.iter().enumerate() {
            grades.push((id.as_str(), 1, courses[i % 500].as_str(), 70.0));
            grades.push((id.as_str(), 1, courses[(i + 300) % 500].as_str(), 70.0));
        }
        let m = build_c_matrix(&tiny_cohort(grades), 1).unwrap();
        assert_eq!(m.values.dim(), (300, 500));
    }

    #[test]
    fn zero_params_give_zero_outputs() {
        let mut p = AutoencoderParams::init(&[4, 3, 2, 3, 4], 0).unwrap();
        for l in &mut p.network.layers {
            l.weight.fill(0.0);
            l.bias.fill(0.0);
            l.activation = Activation::Tanh;
        }
        let (code, recon) = ae_forward(&p, array![0.3, 0.1, 0.9, 0.5].view()).unwrap();
        assert!(code.iter().chain(recon.iter()).all(|&v| v == 0.0));
    }

    #[test]
    fn identity_linear_configuration_reconstructs() {
        let mut p = AutoencoderParams::init(&[3, 3, 3], 0).unwrap();
        for l in &mut p.network.layers {
            l.weight = Array2::eye(3);
            l.bias.fill(0.0);
            l.activation = Activation::Identity;
        }
        let x = array![0.2, -0.7, 0.4];
        let (code, recon) = ae_forward(&p, x.view()).unwrap();
        assert_eq!(recon, x);
        assert_eq!(code, x);
    }

    #[test]
    fn forward_matches_stepwise_oracle() {
        let p = AutoencoderParams::init(&[5, 4, 2, 4, 5], 17).unwrap();
        let mut rng = rng::rng(5);
        for _ in 0..10 {
            let x: Array1<f64> = (0..5).map(|_| rng.random_range(0.0..1.0)).collect();
            let (code, recon) = ae_forward(&p, x.view()).unwrap();
            // explicit loops, no ndarray products
            let mut h: Vec<f64> = x.to_vec();
            let mut expect_code = Vec::new();
            for (l, layer) in p.network.layers.iter().enumerate() {
                let mut next = vec![0.0; layer.weight.nrows()];
                for (r, out) in next.iter_mut().enumerate() {
                    let mut z = layer.bias[r];
                    for (c, hv) in h.iter().enumerate() {
                        z += layer.weight[[r, c]] * hv;
                    }
                    *out = 1.0 / (1.0 + (-z).exp());
                }
                h = next;
                if l == 1 {
                    expect_code = h.clone();
                }
            }
            for (a, b) in code.iter().zip(&expect_code).chain(recon.iter().zip(&h)) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
        }
        assert!(ae_forward(&p, array![1.0, 2.0].view()).is_err());
    }

    #[test]
    fn reconstruction_gradient_matches_finite_differences() {
        let p = AutoencoderParams::init(&[4, 3, 2, 3, 4], 3).unwrap();
        let mut rng = rng::rng(1);
        let x = Array2::from_shape_simple_fn((6, 4), || rng.random_range(0.0..1.0));
        let (_, g) = reconstruction_loss_and_grad(&p, x.view()).unwrap();
        let analytic = g.flat();
        let base = p.network.flat();
        let h = 1e-5;
        for i in 0..base.len() {
            let eval = |delta: f64| {
                let mut q = p.clone();
                let mut f = base.clone();
                f[i] += delta;
                q.network.set_flat(&f);
                reconstruction_loss_and_grad(&q, x.view()).unwrap().0
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            let rel = (fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-7);
            assert!(rel < 1e-5, "param {i}: {fd} vs {}", analytic[i]);
        }
    }

    #[test]
    fn rank_one_matrix_is_recovered() {
        let u: Vec<f64> = (0..40).map(|i| 0.15 + 0.7 * (i as f64 / 39.0)).collect();
        let v: Vec<f64> = (0..8).map(|j| 0.3 + 0.08 * j as f64).collect();
        let x = Array2::from_shape_fn((40, 8), |(i, j)| u[i] * v[j]);
        let cfg = AeTrainConfig {
            epochs: 20000,
            learning_rate: 2.0,
            optimizer: OptimizerKind::Gd,
        };
        let (_, hist) = ae_train(x.view(), &[8, 6, 1, 6, 8], &cfg, 4).unwrap();
        let (first, last) = (hist[0], *hist.last().unwrap());
        assert!(last < 0.01 * first, "loss {first} -> {last}");
    }

    #[test]
    fn zero_learning_rate_keeps_params() {
        let x = Array2::from_elem((5, 3), 0.5);
        let cfg = AeTrainConfig {
            epochs: 4,
            learning_rate: 0.0,
            optimizer: OptimizerKind::Gd,
        };
        let (p, hist) = ae_train(x.view(), &[3, 2, 3], &cfg, 9).unwrap();
        assert_eq!(p, AutoencoderParams::init(&[3, 2, 3], 9).unwrap());
        assert!(hist.iter().all(|&l| l == hist[0]));
        let one = AeTrainConfig { epochs: 1, ..cfg };
        assert_eq!(ae_train(x.view(), &[3, 2, 3], &one, 9).unwrap().1.len(), 1);
    }

    #[test]
    fn small_step_descent_is_monotone() {
        for seed in 0..10 {
            let mut rng = rng::rng(100 + seed);
            let x = Array2::from_shape_simple_fn((30, 6), || {
                if rng.random_bool(0.3) {
                    0.0
                } else {
                    rng.random_range(0.5..1.0)
                }
            });
            let cfg = AeTrainConfig {
                epochs: 60,
                learning_rate: 0.05,
                optimizer: OptimizerKind::Gd,
            };
            let (_, hist) = ae_train(x.view(), &[6, 4, 2, 4, 6], &cfg, seed).unwrap();
            assert!(hist.windows(2).all(|w| w[1] <= w[0]), "seed {seed}");
        }
    }

    #[test]
    fn rejects_bad_training_config() {
        let x = Array2::from_elem((5, 3), 0.5);
        let bad_epochs = AeTrainConfig { epochs: 0, ..Default::default() };
        assert!(ae_train(x.view(), &[3, 2, 3], &bad_epochs, 0).is_err());
        assert!(ae_train(x.view(), &[3, 2, 4], &AeTrainConfig::default(), 0).is_err());
        // sigmoid outputs keep the loss bounded, so only non-finite data can blow it up
        let mut poisoned = x.clone();
        poisoned[[2, 1]] = f64::NAN;
        assert!(matches!(
            ae_train(poisoned.view(), &[3, 2, 3], &AeTrainConfig::default(), 0),
            Err(Error::Diverged { epoch: 0, .. })
        ));
    }

    fn small_synth() -> Cohort {
        synth_cohort(&SynthConfig {
            num_students: 120,
            num_majors: 4,
            num_colleges: 2,
            seed: 3,
            ..Default::default()
        })
        .unwrap()
    }

    fn small_config() -> EmbeddingConfig {
        EmbeddingConfig {
            hidden: vec![8],
            code_dim: 3,
            train: AeTrainConfig {
                epochs: 30,
                learning_rate: 0.5,
                optimizer: OptimizerKind::Gd,
            },
            seed: 1,
        }
    }

    #[test]
    fn embeds_six_semesters_deterministically() {
        let c = small_synth();
        let e = embed_semesters(&c, &small_config(), ExecMode::Parallel).unwrap();
        assert_eq!(e.semesters.len(), 6);
        for s in &e.semesters {
            assert_eq!(s.codes.ncols(), 3);
            assert_eq!(s.codes.nrows(), s.row_index.len());
        }
        assert_eq!(e, embed_semesters(&c, &small_config(), ExecMode::Sequential).unwrap());
    }

    #[test]
    fn identical_rows_embed_identically_and_absent_students_get_zero_row_code() {
        let c = tiny_cohort(vec![
            ("a", 1, "x", 80.0),
            ("a", 1, "y", 70.0),
            ("b", 1, "x", 80.0),
            ("b", 1, "y", 70.0),
            ("c", 1, "x", 50.0),
            ("c", 2, "x", 50.0),
        ]);
        let e = embed_semesters(&c, &small_config(), ExecMode::Sequential).unwrap();
        assert_eq!(e.code(1, "a").unwrap(), e.code(1, "b").unwrap());
        let s2 = &e.semesters[1];
        assert_eq!(e.code(2, "a").unwrap(), s2.absent_code.view());
        assert!(e.semesters[2..].iter().all(|s| s.codes.nrows() == 0 && s.absent_code.iter().all(|&v| v == 0.0)));
    }

    #[test]
    fn row_permutation_permutes_codes() {
        let mut rng = rng::rng(77);
        let x = Array2::from_shape_simple_fn((12, 5), || rng.random_range(0.0..1.0));
        let cfg = AeTrainConfig {
            epochs: 40,
            learning_rate: 0.5,
            optimizer: OptimizerKind::Gd,
        };
        let perm: Vec<usize> = (0..12).rev().collect();
        let xp = x.select(Axis(0), &perm);
        let (p, _) = ae_train(x.view(), &[5, 4, 2, 4, 5], &cfg, 2).unwrap();
        let (q, _) = ae_train(xp.view(), &[5, 4, 2, 4, 5], &cfg, 2).unwrap();
        let a = p.encode_batch(x.view()).unwrap();
        let b = q.encode_batch(xp.view()).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            for j in 0..2 {
                assert!((a[[i, j]] - b[[k, j]]).abs() < 1e-9);
            }
        }
    }
}
