//! Single-layer peephole LSTM whose gates, cell and output are multiplied by
//! per-sequence binary dropout masks, with backpropagation through time.
//!
//! One step, with `*` the elementwise product:
//!
//! ```text
//! i_t = sigmoid(W_xi x_t + W_hi h_{t-1} + w_ci * c_{t-1} + b_i) * m_i
//! f_t = sigmoid(W_xf x_t + W_hf h_{t-1} + w_cf * c_{t-1} + b_f) * m_f
//! c_t = (f_t * c_{t-1} + i_t * tanh(W_xc x_t + W_hc h_{t-1} + b_c)) * m_c
//! o_t = sigmoid(W_xo x_t + W_ho h_{t-1} + w_co * c_t + b_o) * m_o
//! h_t = o_t * tanh(c_t) * m_h
//! ```
//!
//! Peephole weights `w_c*` are diagonal and stored as vectors.

use ndarray::{Array1, Array2, ArrayView1, Axis, Zip};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::sigmoid;
use crate::rng::{self, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    pub input_size: usize,
    pub hidden_size: usize,
    pub w_xi: Array2<f64>,
    pub w_hi: Array2<f64>,
    pub w_ci: Array1<f64>,
    pub w_xf: Array2<f64>,
    pub w_hf: Array2<f64>,
    pub w_cf: Array1<f64>,
    pub w_xc: Array2<f64>,
    pub w_hc: Array2<f64>,
    pub w_xo: Array2<f64>,
    pub w_ho: Array2<f64>,
    pub w_co: Array1<f64>,
    pub b_i: Array1<f64>,
    pub b_f: Array1<f64>,
    pub b_c: Array1<f64>,
    pub b_o: Array1<f64>,
}

macro_rules! each_tensor {
    ($p:expr, $f:expr) => {{
        let mut f = $f;
        f(&$p.w_xi);
        f(&$p.w_hi);
        f(&$p.w_ci);
        f(&$p.w_xf);
        f(&$p.w_hf);
        f(&$p.w_cf);
        f(&$p.w_xc);
        f(&$p.w_hc);
        f(&$p.w_xo);
        f(&$p.w_ho);
        f(&$p.w_co);
        f(&$p.b_i);
        f(&$p.b_f);
        f(&$p.b_c);
        f(&$p.b_o);
    }};
}

macro_rules! each_tensor_mut {
    ($p:expr, $f:expr) => {{
        let mut f = $f;
        f(&mut $p.w_xi);
        f(&mut $p.w_hi);
        f(&mut $p.w_ci);
        f(&mut $p.w_xf);
        f(&mut $p.w_hf);
        f(&mut $p.w_cf);
        f(&mut $p.w_xc);
        f(&mut $p.w_hc);
        f(&mut $p.w_xo);
        f(&mut $p.w_ho);
        f(&mut $p.w_co);
        f(&mut $p.b_i);
        f(&mut $p.b_f);
        f(&mut $p.b_c);
        f(&mut $p.b_o);
    }};
}

/// Names of the parameter tensors in flattening order.
pub const TENSOR_NAMES: [&str; 15] = [
    "w_xi", "w_hi", "w_ci", "w_xf", "w_hf", "w_cf", "w_xc", "w_hc", "w_xo", "w_ho", "w_co", "b_i", "b_f", "b_c", "b_o",
];

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let (d, h) = (input_size, hidden_size);
        LstmParams {
            input_size,
            hidden_size,
            w_xi: Array2::zeros((h, d)),
            w_hi: Array2::zeros((h, h)),
            w_ci: Array1::zeros(h),
            w_xf: Array2::zeros((h, d)),
            w_hf: Array2::zeros((h, h)),
            w_cf: Array1::zeros(h),
            w_xc: Array2::zeros((h, d)),
            w_hc: Array2::zeros((h, h)),
            w_xo: Array2::zeros((h, d)),
            w_ho: Array2::zeros((h, h)),
            w_co: Array1::zeros(h),
            b_i: Array1::zeros(h),
            b_f: Array1::zeros(h),
            b_c: Array1::zeros(h),
            b_o: Array1::zeros(h),
        }
    }

    /// Weights uniform in `[-1/sqrt(H), 1/sqrt(H)]`, biases zero except the
    /// forget gate at +1.
    pub fn init(input_size: usize, hidden_size: usize, rng: &mut Rng) -> Result<Self> {
        if input_size == 0 || hidden_size == 0 {
            return Err(Error::Config("LSTM sizes must be positive".into()));
        }
        let mut p = Self::zeros(input_size, hidden_size);
        let r = 1.0 / (hidden_size as f64).sqrt();
        for w in [
            &mut p.w_xi, &mut p.w_hi, &mut p.w_xf, &mut p.w_hf, &mut p.w_xc, &mut p.w_hc, &mut p.w_xo, &mut p.w_ho,
        ] {
            w.mapv_inplace(|_| rng.random_range(-r..=r));
        }
        for w in [&mut p.w_ci, &mut p.w_cf, &mut p.w_co] {
            w.mapv_inplace(|_| rng.random_range(-r..=r));
        }
        p.b_f.fill(1.0);
        Ok(p)
    }

    pub fn num_params(&self) -> usize {
        let mut n = 0;
        each_tensor!(self, |t: &dyn TensorLen| n += t.count());
        n
    }

    /// All parameters in [`TENSOR_NAMES`] order, row-major.
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        each_tensor!(self, |t: &dyn TensorLen| t.extend_into(&mut v));
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut off = 0;
        each_tensor_mut!(self, |t: &mut dyn TensorLen| off += t.copy_from(&flat[off..]));
    }

    /// `self += scale * other`, tensor by tensor.
    pub fn add_scaled(&mut self, other: &LstmParams, scale: f64) {
        let flat: Vec<f64> = other.flat();
        let mut mine = self.flat();
        for (a, b) in mine.iter_mut().zip(&flat) {
            *a += scale * b;
        }
        self.set_flat(&mine);
    }
}

/// Uniform access to 1-D and 2-D parameter tensors.
trait TensorLen {
    fn count(&self) -> usize;
    fn extend_into(&self, out: &mut Vec<f64>);
    fn copy_from(&mut self, src: &[f64]) -> usize;
}

impl<D: ndarray::Dimension> TensorLen for ndarray::Array<f64, D> {
    fn count(&self) -> usize {
        self.len()
    }

    fn extend_into(&self, out: &mut Vec<f64>) {
        out.extend(self.iter());
    }

    fn copy_from(&mut self, src: &[f64]) -> usize {
        let n = self.len();
        self.iter_mut().zip(&src[..n]).for_each(|(d, s)| *d = *s);
        n
    }
}

/// Dropout masks for one sequence. Kept entries hold `1 / (1 - rate)` so
/// no rescaling is needed at test time; dropped entries hold 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskSet {
    pub m_i: Array1<f64>,
    pub m_f: Array1<f64>,
    pub m_c: Array1<f64>,
    pub m_o: Array1<f64>,
    pub m_h: Array1<f64>,
    pub dropout_rate: f64,
}

impl MaskSet {
    pub fn identity(hidden_size: usize) -> Self {
        let ones = Array1::ones(hidden_size);
        MaskSet {
            m_i: ones.clone(),
            m_f: ones.clone(),
            m_c: ones.clone(),
            m_o: ones.clone(),
            m_h: ones,
            dropout_rate: 0.0,
        }
    }

    pub fn sample(rate: f64, hidden_size: usize, rng: &mut Rng) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Config(format!("dropout rate {rate} must be in [0, 1)")));
        }
        if rate == 0.0 {
            return Ok(Self::identity(hidden_size));
        }
        let keep = 1.0 / (1.0 - rate);
        let mut draw = || -> Array1<f64> {
            (0..hidden_size)
                .map(|_| if rng.random_bool(rate) { 0.0 } else { keep })
                .collect()
        };
        Ok(MaskSet {
            m_i: draw(),
            m_f: draw(),
            m_c: draw(),
            m_o: draw(),
            m_h: draw(),
            dropout_rate: rate,
        })
    }

    pub fn hidden_size(&self) -> usize {
        self.m_h.len()
    }
}

/// Samples a mask set from its own seeded stream.
pub fn sample_masks(rate: f64, hidden_size: usize, seed: u64) -> Result<MaskSet> {
    MaskSet::sample(rate, hidden_size, &mut rng::rng(seed))
}

/// Everything one step needs for the backward pass. `*_act` hold the gate
/// sigmoids before masking.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCache {
    pub x: Array1<f64>,
    pub h_prev: Array1<f64>,
    pub c_prev: Array1<f64>,
    pub i_act: Array1<f64>,
    pub f_act: Array1<f64>,
    pub o_act: Array1<f64>,
    pub i: Array1<f64>,
    pub f: Array1<f64>,
    pub g: Array1<f64>,
    pub c: Array1<f64>,
    pub tanh_c: Array1<f64>,
    pub o: Array1<f64>,
    pub h: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    pub steps: Vec<StepCache>,
    /// The masks used, one shared set or one per step.
    pub masks: Vec<MaskSet>,
}

/// Parameter gradients (shaped like [`LstmParams`]), input gradients, and
/// the error signals reaching `h_t` after its mask (`eps_h`) and the output
/// gate (`eps_o`).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub params: LstmParams,
    pub d_x: Vec<Array1<f64>>,
    pub eps_h: Vec<Array1<f64>>,
    pub eps_o: Vec<Array1<f64>>,
}

fn check_len(what: &str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::shape(format!("{what} of length {expected}"), actual));
    }
    Ok(())
}

fn gate(pre: Array1<f64>) -> Array1<f64> {
    pre.mapv_into(sigmoid)
}

/// One masked step.
pub fn cell_forward(
    params: &LstmParams,
    x: ArrayView1<f64>,
    h_prev: ArrayView1<f64>,
    c_prev: ArrayView1<f64>,
    masks: &MaskSet,
) -> Result<(Array1<f64>, Array1<f64>, StepCache)> {
    let h = params.hidden_size;
    check_len("input", params.input_size, x.len())?;
    check_len("previous hidden state", h, h_prev.len())?;
    check_len("previous cell state", h, c_prev.len())?;
    check_len("mask", h, masks.hidden_size())?;

    let i_act = gate(params.w_xi.dot(&x) + params.w_hi.dot(&h_prev) + &params.w_ci * &c_prev + &params.b_i);
    let i = &i_act * &masks.m_i;
    let f_act = gate(params.w_xf.dot(&x) + params.w_hf.dot(&h_prev) + &params.w_cf * &c_prev + &params.b_f);
    let f = &f_act * &masks.m_f;
    let g = (params.w_xc.dot(&x) + params.w_hc.dot(&h_prev) + &params.b_c).mapv_into(f64::tanh);
    let c = (&f * &c_prev + &i * &g) * &masks.m_c;
    let o_act = gate(params.w_xo.dot(&x) + params.w_ho.dot(&h_prev) + &params.w_co * &c + &params.b_o);
    let o = &o_act * &masks.m_o;
    let tanh_c = c.mapv(f64::tanh);
    let h_t = &o * &tanh_c * &masks.m_h;

    let cache = StepCache {
        x: x.to_owned(),
        h_prev: h_prev.to_owned(),
        c_prev: c_prev.to_owned(),
        i_act,
        f_act,
        o_act,
        i,
        f,
        g,
        c: c.clone(),
        tanh_c,
        o,
        h: h_t.clone(),
    };
    Ok((h_t, c, cache))
}

/// Runs the sequence from zero state, reusing the same masks at every step.
pub fn forward(params: &LstmParams, sequence: &[Array1<f64>], masks: &MaskSet) -> Result<(Vec<Array1<f64>>, ForwardCache)> {
    forward_with_schedule(params, sequence, std::slice::from_ref(masks))
}

/// Like [`forward`], but `masks` may hold one set per step instead of one
/// shared set.
pub fn forward_with_schedule(
    params: &LstmParams,
    sequence: &[Array1<f64>],
    masks: &[MaskSet],
) -> Result<(Vec<Array1<f64>>, ForwardCache)> {
    if sequence.is_empty() {
        return Err(Error::Invalid("empty input sequence".into()));
    }
    if masks.len() != 1 && masks.len() != sequence.len() {
        return Err(Error::shape(format!("1 or {} mask sets", sequence.len()), masks.len()));
    }
    let mut h = Array1::zeros(params.hidden_size);
    let mut c = Array1::zeros(params.hidden_size);
    let mut hidden = Vec::with_capacity(sequence.len());
    let mut steps = Vec::with_capacity(sequence.len());
    for (t, x) in sequence.iter().enumerate() {
        let m = &masks[if masks.len() == 1 { 0 } else { t }];
        let (h_t, c_t, step) = cell_forward(params, x.view(), h.view(), c.view(), m)?;
        hidden.push(h_t.clone());
        steps.push(step);
        h = h_t;
        c = c_t;
    }
    Ok((
        hidden,
        ForwardCache {
            steps,
            masks: masks.to_vec(),
        },
    ))
}

/// Test-time pass: every unit active.
pub fn predict_mode_forward(params: &LstmParams, sequence: &[Array1<f64>]) -> Result<Vec<Array1<f64>>> {
    Ok(forward(params, sequence, &MaskSet::identity(params.hidden_size))?.0)
}

fn outer_add(acc: &mut Array2<f64>, a: &Array1<f64>, b: &Array1<f64>) {
    Zip::indexed(acc).for_each(|(r, c), v| *v += a[r] * b[c]);
}

/// Backpropagation through time. `d_h[t]` is the loss gradient arriving
/// at `h_t` from outside the recurrence (zero where the loss ignores step
/// `t`). `masks` must be the ones the cache was produced with.
pub fn backward(params: &LstmParams, cache: &ForwardCache, masks: &[MaskSet], d_h: &[Array1<f64>]) -> Result<Gradients> {
    let steps = cache.steps.len();
    if masks != cache.masks.as_slice() {
        return Err(Error::Invalid("masks differ from the ones used in the forward pass".into()));
    }
    check_len("upstream gradient sequence", steps, d_h.len())?;
    let hs = params.hidden_size;
    for d in d_h {
        check_len("upstream gradient", hs, d.len())?;
    }

    let mut grads = LstmParams::zeros(params.input_size, hs);
    let mut d_x = vec![Array1::zeros(params.input_size); steps];
    let mut eps_h = vec![Array1::zeros(hs); steps];
    let mut eps_o = vec![Array1::zeros(hs); steps];
    let mut dh_next: Array1<f64> = Array1::zeros(hs);
    let mut dc_next: Array1<f64> = Array1::zeros(hs);

    for t in (0..steps).rev() {
        let s = &cache.steps[t];
        let m = &masks[if masks.len() == 1 { 0 } else { t }];

        // error at h_t passed through its mask
        let e_h = (&d_h[t] + &dh_next) * &m.m_h;
        // error at the output gate's sigmoid, then its pre-activation
        let e_o = &e_h * &s.tanh_c * &m.m_o;
        let d_pre_o = &e_o * &s.o_act.mapv(|a| a * (1.0 - a));

        let d_c = &dc_next + &(&e_h * &s.o * &s.tanh_c.mapv(|v| 1.0 - v * v)) + &(&d_pre_o * &params.w_co);
        // gradient w.r.t. the cell before its mask
        let d_s = &d_c * &m.m_c;
        let d_pre_f = &d_s * &s.c_prev * &m.m_f * &s.f_act.mapv(|a| a * (1.0 - a));
        let d_pre_i = &d_s * &s.g * &m.m_i * &s.i_act.mapv(|a| a * (1.0 - a));
        let d_pre_c = &d_s * &s.i * &s.g.mapv(|v| 1.0 - v * v);

        dc_next = &d_s * &s.f + &(&d_pre_i * &params.w_ci) + &(&d_pre_f * &params.w_cf);
        dh_next = params.w_hi.t().dot(&d_pre_i)
            + params.w_hf.t().dot(&d_pre_f)
            + params.w_hc.t().dot(&d_pre_c)
            + params.w_ho.t().dot(&d_pre_o);
        d_x[t] = params.w_xi.t().dot(&d_pre_i)
            + params.w_xf.t().dot(&d_pre_f)
            + params.w_xc.t().dot(&d_pre_c)
            + params.w_xo.t().dot(&d_pre_o);

        outer_add(&mut grads.w_xi, &d_pre_i, &s.x);
        outer_add(&mut grads.w_xf, &d_pre_f, &s.x);
        outer_add(&mut grads.w_xc, &d_pre_c, &s.x);
        outer_add(&mut grads.w_xo, &d_pre_o, &s.x);
        outer_add(&mut grads.w_hi, &d_pre_i, &s.h_prev);
        outer_add(&mut grads.w_hf, &d_pre_f, &s.h_prev);
        outer_add(&mut grads.w_hc, &d_pre_c, &s.h_prev);
        outer_add(&mut grads.w_ho, &d_pre_o, &s.h_prev);
        grads.w_ci += &(&d_pre_i * &s.c_prev);
        grads.w_cf += &(&d_pre_f * &s.c_prev);
        grads.w_co += &(&d_pre_o * &s.c);
        grads.b_i += &d_pre_i;
        grads.b_f += &d_pre_f;
        grads.b_c += &d_pre_c;
        grads.b_o += &d_pre_o;

        eps_h[t] = e_h;
        eps_o[t] = e_o;
    }
    Ok(Gradients {
        params: grads,
        d_x,
        eps_h,
        eps_o,
    })
}

/// Masks for a batch of sequences: row `b` holds sequence `b`'s [`MaskSet`].
#[derive(Debug, Clone, PartialEq)]
pub struct BatchMasks {
    pub m_i: Array2<f64>,
    pub m_f: Array2<f64>,
    pub m_c: Array2<f64>,
    pub m_o: Array2<f64>,
    pub m_h: Array2<f64>,
}

impl BatchMasks {
    pub fn identity(batch: usize, hidden_size: usize) -> Self {
        let ones = Array2::ones((batch, hidden_size));
        BatchMasks {
            m_i: ones.clone(),
            m_f: ones.clone(),
            m_c: ones.clone(),
            m_o: ones.clone(),
            m_h: ones,
        }
    }

    pub fn stack(sets: &[&MaskSet]) -> Result<Self> {
        let h = sets.first().map_or(0, |m| m.hidden_size());
        if sets.iter().any(|m| m.hidden_size() != h) {
            return Err(Error::Invalid("mask sets of different sizes".into()));
        }
        let rows = |pick: fn(&MaskSet) -> &Array1<f64>| {
            Array2::from_shape_fn((sets.len(), h), |(b, j)| pick(sets[b])[j])
        };
        Ok(BatchMasks {
            m_i: rows(|m| &m.m_i),
            m_f: rows(|m| &m.m_f),
            m_c: rows(|m| &m.m_c),
            m_o: rows(|m| &m.m_o),
            m_h: rows(|m| &m.m_h),
        })
    }

    pub fn batch_size(&self) -> usize {
        self.m_h.nrows()
    }
}

/// Step cache of [`forward_batch`]; rows are sequences.
#[derive(Debug, Clone)]
pub struct BatchStep {
    x: Array2<f64>,
    h_prev: Array2<f64>,
    c_prev: Array2<f64>,
    i_act: Array2<f64>,
    f_act: Array2<f64>,
    o_act: Array2<f64>,
    i: Array2<f64>,
    g: Array2<f64>,
    f: Array2<f64>,
    o: Array2<f64>,
    c: Array2<f64>,
    tanh_c: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct BatchCache {
    steps: Vec<BatchStep>,
    masks: Vec<BatchMasks>,
}

fn affine(x: &Array2<f64>, w_x: &Array2<f64>, h: &Array2<f64>, w_h: &Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    let mut z = x.dot(&w_x.t());
    z += &h.dot(&w_h.t());
    z += b;
    z
}

/// The same computation as [`forward_with_schedule`] for a batch of
/// equal-length sequences. `xs[t]` is the `B x D` input at step `t`;
/// `masks` holds one entry shared by all steps or one per step.
pub fn forward_batch(
    params: &LstmParams,
    xs: &[Array2<f64>],
    masks: &[BatchMasks],
) -> Result<(Vec<Array2<f64>>, BatchCache)> {
    if xs.is_empty() {
        return Err(Error::Invalid("empty input sequence".into()));
    }
    if masks.len() != 1 && masks.len() != xs.len() {
        return Err(Error::shape(format!("1 or {} mask sets", xs.len()), masks.len()));
    }
    let (b, hs) = (xs[0].nrows(), params.hidden_size);
    for x in xs {
        if x.dim() != (b, params.input_size) {
            return Err(Error::shape(format!("{b}x{} inputs", params.input_size), x.len()));
        }
    }
    for m in masks {
        if m.m_h.dim() != (b, hs) {
            return Err(Error::shape(format!("{b}x{hs} masks"), m.m_h.len()));
        }
    }
    let mut h = Array2::zeros((b, hs));
    let mut c = Array2::zeros((b, hs));
    let mut hidden = Vec::with_capacity(xs.len());
    let mut steps = Vec::with_capacity(xs.len());
    for (t, x) in xs.iter().enumerate() {
        let m = &masks[if masks.len() == 1 { 0 } else { t }];
        let i_act = (affine(x, &params.w_xi, &h, &params.w_hi, &params.b_i) + &(&c * &params.w_ci)).mapv_into(sigmoid);
        let i = &i_act * &m.m_i;
        let f_act = (affine(x, &params.w_xf, &h, &params.w_hf, &params.b_f) + &(&c * &params.w_cf)).mapv_into(sigmoid);
        let f = &f_act * &m.m_f;
        let g = affine(x, &params.w_xc, &h, &params.w_hc, &params.b_c).mapv_into(f64::tanh);
        let c_new = (&f * &c + &i * &g) * &m.m_c;
        let o_act =
            (affine(x, &params.w_xo, &h, &params.w_ho, &params.b_o) + &(&c_new * &params.w_co)).mapv_into(sigmoid);
        let o = &o_act * &m.m_o;
        let tanh_c = c_new.mapv(f64::tanh);
        let h_new = &o * &tanh_c * &m.m_h;
        steps.push(BatchStep {
            x: x.clone(),
            h_prev: h,
            c_prev: c,
            i_act,
            f_act,
            o_act,
            i,
            g,
            f,
            o,
            c: c_new.clone(),
            tanh_c,
        });
        hidden.push(h_new.clone());
        h = h_new;
        c = c_new;
    }
    Ok((
        hidden,
        BatchCache {
            steps,
            masks: masks.to_vec(),
        },
    ))
}

/// Backward pass of [`forward_batch`]. Parameter gradients are summed over
/// the batch; the second value holds `dL/dx_t` per step.
pub fn backward_batch(
    params: &LstmParams,
    cache: &BatchCache,
    d_h: &[Array2<f64>],
) -> Result<(LstmParams, Vec<Array2<f64>>)> {
    let steps = cache.steps.len();
    check_len("upstream gradient sequence", steps, d_h.len())?;
    let b = cache.steps[0].x.nrows();
    let hs = params.hidden_size;
    for d in d_h {
        if d.dim() != (b, hs) {
            return Err(Error::shape(format!("{b}x{hs} upstream gradient"), d.len()));
        }
    }
    let dsig = |a: &Array2<f64>| a.mapv(|v| v * (1.0 - v));

    let mut grads = LstmParams::zeros(params.input_size, hs);
    let mut d_x = vec![Array2::zeros((0, 0)); steps];
    let mut dh_next: Array2<f64> = Array2::zeros((b, hs));
    let mut dc_next: Array2<f64> = Array2::zeros((b, hs));

    for t in (0..steps).rev() {
        let s = &cache.steps[t];
        let m = &cache.masks[if cache.masks.len() == 1 { 0 } else { t }];

        let e_h = (&d_h[t] + &dh_next) * &m.m_h;
        let d_pre_o = &e_h * &s.tanh_c * &m.m_o * &dsig(&s.o_act);
        let d_c = &dc_next + &(&e_h * &s.o * &s.tanh_c.mapv(|v| 1.0 - v * v)) + &(&d_pre_o * &params.w_co);
        let d_s = &d_c * &m.m_c;
        let d_pre_f = &d_s * &s.c_prev * &m.m_f * &dsig(&s.f_act);
        let d_pre_i = &d_s * &s.g * &m.m_i * &dsig(&s.i_act);
        let d_pre_c = &d_s * &s.i * &s.g.mapv(|v| 1.0 - v * v);

        dc_next = &d_s * &s.f + &(&d_pre_i * &params.w_ci) + &(&d_pre_f * &params.w_cf);
        dh_next = d_pre_i.dot(&params.w_hi) + d_pre_f.dot(&params.w_hf) + d_pre_c.dot(&params.w_hc) + d_pre_o.dot(&params.w_ho);
        d_x[t] = d_pre_i.dot(&params.w_xi) + d_pre_f.dot(&params.w_xf) + d_pre_c.dot(&params.w_xc) + d_pre_o.dot(&params.w_xo);

        for (g_x, g_h, d) in [
            (&mut grads.w_xi, &mut grads.w_hi, &d_pre_i),
            (&mut grads.w_xf, &mut grads.w_hf, &d_pre_f),
            (&mut grads.w_xc, &mut grads.w_hc, &d_pre_c),
            (&mut grads.w_xo, &mut grads.w_ho, &d_pre_o),
        ] {
            *g_x += &d.t().dot(&s.x);
            *g_h += &d.t().dot(&s.h_prev);
        }
        grads.w_ci += &(&d_pre_i * &s.c_prev).sum_axis(Axis(0));
        grads.w_cf += &(&d_pre_f * &s.c_prev).sum_axis(Axis(0));
        grads.w_co += &(&d_pre_o * &s.c).sum_axis(Axis(0));
        grads.b_i += &d_pre_i.sum_axis(Axis(0));
        grads.b_f += &d_pre_f.sum_axis(Axis(0));
        grads.b_c += &d_pre_c.sum_axis(Axis(0));
        grads.b_o += &d_pre_o.sum_axis(Axis(0));
    }
    Ok((grads, d_x))
}
