//! Minimal reverse-mode differentiation for the fixed model family, plus
//! optimizers and the training loop.
//!
//! The architectures are small and fixed, so the reverse pass is hand-derived
//! per operation (dense matmul, symmetric-operator apply, ReLU, dropout,
//! log-softmax, NLL, L2 penalty) instead of a general tape; a central
//! finite-difference oracle in the tests pins its correctness.

mod checkpoint;
mod fit;
mod optim;

pub use checkpoint::{load_model, save_model};
pub use fit::{fit, make_stratified_split, write_metrics_csv, EpochMetrics, FitResult};
pub use optim::{optimizer_step, OptState};

use crate::error::{Error, Result};
use crate::fmp::FmpParams;
use crate::graph::{Graph, LaplacianBundle};
use crate::linalg::DenseMatrix;
use crate::operators::FrameletOperatorSet;
use crate::rng::Rng;
use crate::scalar::{real, Float};

/// Dense affine layer `y = x W + b`.
#[derive(Clone, Debug)]
pub struct Linear<T> {
    pub weight: DenseMatrix<T>,
    pub bias: Vec<T>,
}

impl<T: Float> Linear<T> {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: DenseMatrix::zeros(input, output),
            bias: vec![T::zero(); output],
        }
    }

    fn glorot(input: usize, output: usize, rng: &mut Rng) -> Self {
        let bound = (6.0 / (input + output) as f64).sqrt();
        let mut weight = DenseMatrix::zeros(input, output);
        for v in weight.data_mut() {
            *v = rng.uniform_in(real::<T>(-bound), real::<T>(bound));
        }
        Self {
            weight,
            bias: vec![T::zero(); output],
        }
    }

    fn forward(&self, x: &DenseMatrix<T>) -> DenseMatrix<T> {
        let mut out = x.matmul(&self.weight);
        for i in 0..out.rows() {
            let row = out.row_mut(i);
            for (o, &b) in row.iter_mut().zip(self.bias.iter()) {
                *o += b;
            }
        }
        out
    }
}

/// Which model the parameters realize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Architecture {
    /// Encoder, a stack of discrete framelet message passing layers, head.
    #[serde(rename = "fmp-mlp")]
    FmpDiscrete,
    /// Encoder, one shared vector field integrated by fixed-step RK4, head.
    #[serde(rename = "fmp-ode")]
    FmpOde,
    /// Plain graph convolution stack, head.
    #[serde(rename = "gcn")]
    Gcn,
}

/// All learnable state of one model.
#[derive(Clone, Debug)]
pub struct ModelParams<T> {
    pub arch: Architecture,
    pub encoder: Vec<Linear<T>>,
    /// Discrete: one per layer. ODE: exactly one.
    pub fmp: Vec<FmpParams<T>>,
    /// GCN convolution weights.
    pub gcn: Vec<DenseMatrix<T>>,
    pub head: Linear<T>,
    pub dropout_rate: T,
    pub ode_steps: usize,
    pub ode_horizon: T,
}

impl<T: Float> ModelParams<T> {
    /// Same shapes, all tensors zeroed; the container used for gradients.
    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.for_each_tensor_mut(|_, data| data.fill(T::zero()));
        out
    }

    /// Canonical tensor enumeration; the order defines optimizer state and
    /// checkpoint layout.
    pub fn tensor_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        for (i, _) in self.encoder.iter().enumerate() {
            names.push(format!("encoder.{i}.weight"));
            names.push(format!("encoder.{i}.bias"));
        }
        for (t, layer) in self.fmp.iter().enumerate() {
            names.push(format!("fmp.{t}.theta_low"));
            for r in 0..layer.theta_high.len() {
                names.push(format!("fmp.{t}.theta_high.{r}"));
            }
        }
        for (i, _) in self.gcn.iter().enumerate() {
            names.push(format!("gcn.{i}.weight"));
        }
        names.push("head.weight".into());
        names.push("head.bias".into());
        names
    }

    /// Tensor shapes in enumeration order, `(rows, cols)` with vectors as
    /// single-row matrices.
    pub fn tensor_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::new();
        for layer in &self.encoder {
            shapes.push((layer.weight.rows(), layer.weight.cols()));
            shapes.push((1, layer.bias.len()));
        }
        for layer in &self.fmp {
            shapes.push((layer.theta_low.rows(), layer.theta_low.cols()));
            for t in &layer.theta_high {
                shapes.push((t.rows(), t.cols()));
            }
        }
        for w in &self.gcn {
            shapes.push((w.rows(), w.cols()));
        }
        shapes.push((self.head.weight.rows(), self.head.weight.cols()));
        shapes.push((1, self.head.bias.len()));
        shapes
    }

    pub fn for_each_tensor(&self, mut f: impl FnMut(&str, &[T])) {
        for (i, layer) in self.encoder.iter().enumerate() {
            f(&format!("encoder.{i}.weight"), layer.weight.data());
            f(&format!("encoder.{i}.bias"), &layer.bias);
        }
        for (t, layer) in self.fmp.iter().enumerate() {
            f(&format!("fmp.{t}.theta_low"), layer.theta_low.data());
            for (r, theta) in layer.theta_high.iter().enumerate() {
                f(&format!("fmp.{t}.theta_high.{r}"), theta.data());
            }
        }
        for (i, w) in self.gcn.iter().enumerate() {
            f(&format!("gcn.{i}.weight"), w.data());
        }
        f("head.weight", self.head.weight.data());
        f("head.bias", &self.head.bias);
    }

    pub fn for_each_tensor_mut(&mut self, mut f: impl FnMut(&str, &mut [T])) {
        for (i, layer) in self.encoder.iter_mut().enumerate() {
            f(&format!("encoder.{i}.weight"), layer.weight.data_mut());
            f(&format!("encoder.{i}.bias"), &mut layer.bias);
        }
        for (t, layer) in self.fmp.iter_mut().enumerate() {
            f(&format!("fmp.{t}.theta_low"), layer.theta_low.data_mut());
            for (r, theta) in layer.theta_high.iter_mut().enumerate() {
                f(&format!("fmp.{t}.theta_high.{r}"), theta.data_mut());
            }
        }
        for (i, w) in self.gcn.iter_mut().enumerate() {
            f(&format!("gcn.{i}.weight"), w.data_mut());
        }
        f("head.weight", self.head.weight.data_mut());
        f("head.bias", &mut self.head.bias);
    }

    /// Sum of squared entries over every tensor.
    pub fn squared_norm(&self) -> T {
        let mut acc = T::zero();
        self.for_each_tensor(|_, data| {
            for &v in data {
                acc += v * v;
            }
        });
        acc
    }

    pub fn all_finite(&self) -> bool {
        let mut ok = true;
        self.for_each_tensor(|_, data| {
            if data.iter().any(|v| !v.is_finite()) {
                ok = false;
            }
        });
        ok
    }
}

/// Optimizer choice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Adam,
    Adamax,
}

/// Training hyperparameters. Defaults sit inside the search-space ranges:
/// learning rate in `[1e-3, 1e-2]`, weight decay in `[1e-3, 1e-1]`, dropout
/// in `[0, 0.8]`, hidden in `{64, 128, 256}`, layers in `[1, 10]`.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub hidden_dim: usize,
    pub layers: usize,
    pub optimizer: Optimizer,
    pub epochs: usize,
    pub seed: u64,
    pub patience: usize,
    pub arch: Architecture,
    /// Encoder depth; `None` picks 2 for the discrete model and 1 for ODE.
    pub encoder_depth: Option<usize>,
    pub ode_steps: usize,
    pub ode_horizon: f64,
    /// Project thetas onto the PSD cone after every update.
    pub psd_project: bool,
    pub trace_bound: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            weight_decay: 1e-3,
            dropout: 0.0,
            hidden_dim: 64,
            layers: 2,
            optimizer: Optimizer::Adam,
            epochs: 200,
            seed: 0,
            patience: 100,
            arch: Architecture::FmpDiscrete,
            encoder_depth: None,
            ode_steps: 8,
            ode_horizon: 1.0,
            psd_project: false,
            trace_bound: None,
        }
    }
}

impl TrainConfig {
    pub fn encoder_depth(&self) -> usize {
        self.encoder_depth.unwrap_or(match self.arch {
            Architecture::FmpOde => 1,
            _ => 2,
        })
    }
}

/// Build a seeded model for `input_dim` features and `classes` outputs.
pub fn init_model<T: Float>(
    input_dim: usize,
    classes: usize,
    high_pass_count: usize,
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> ModelParams<T> {
    let hidden = cfg.hidden_dim;
    let mut encoder = Vec::new();
    let mut fmp = Vec::new();
    let mut gcn = Vec::new();
    let head_input;
    match cfg.arch {
        Architecture::Gcn => {
            let mut dims = vec![input_dim];
            dims.extend(std::iter::repeat(hidden).take(cfg.layers.max(1)));
            for w in dims.windows(2) {
                gcn.push(Linear::glorot(w[0], w[1], rng).weight);
            }
            head_input = hidden;
        }
        Architecture::FmpDiscrete | Architecture::FmpOde => {
            let depth = cfg.encoder_depth().max(1);
            let mut dims = vec![input_dim];
            dims.extend(std::iter::repeat(hidden).take(depth));
            for w in dims.windows(2) {
                encoder.push(Linear::glorot(w[0], w[1], rng));
            }
            let layer_count = if cfg.arch == Architecture::FmpOde {
                1
            } else {
                cfg.layers.max(1)
            };
            for _ in 0..layer_count {
                let mut layer = FmpParams::zeros(high_pass_count, hidden);
                let scale = real::<T>((1.0 / hidden as f64).sqrt());
                for theta in layer.iter_mut() {
                    for v in theta.data_mut() {
                        *v = rng.normal(T::zero(), T::one()) * scale;
                    }
                }
                layer.psd_project = cfg.psd_project;
                layer.trace_bound = cfg.trace_bound.map(real::<T>);
                fmp.push(layer);
            }
            head_input = hidden;
        }
    }
    let model = ModelParams {
        arch: cfg.arch,
        encoder,
        fmp,
        gcn,
        head: Linear::glorot(head_input, classes, rng),
        dropout_rate: real(cfg.dropout),
        ode_steps: cfg.ode_steps,
        ode_horizon: real(cfg.ode_horizon),
    };
    let mut model = model;
    if cfg.psd_project {
        for layer in &mut model.fmp {
            layer.project_psd().expect("projection of finite init");
        }
    }
    model
}

/// Forward mode: training applies dropout with a per-invocation seed,
/// evaluation disables it.
#[derive(Clone, Copy, Debug)]
pub enum Phase {
    Train { dropout_seed: u64 },
    Eval,
}

struct FmpLayerCache<T> {
    input: DenseMatrix<T>,
    /// Filtered inputs `S_r input` in theta order (low pass first).
    filtered: Vec<DenseMatrix<T>>,
    pre_activation: DenseMatrix<T>,
}

struct OdeStageCache<T> {
    /// Arguments `a_1..a_4` the vector field was evaluated at.
    args: [DenseMatrix<T>; 4],
}

struct GcnLayerCache<T> {
    propagated: DenseMatrix<T>,
    pre_activation: DenseMatrix<T>,
}

struct ForwardCache<T> {
    encoder_inputs: Vec<DenseMatrix<T>>,
    encoder_pre: Vec<DenseMatrix<T>>,
    dropout_mask: Option<DenseMatrix<T>>,
    fmp_layers: Vec<FmpLayerCache<T>>,
    ode_steps: Vec<OdeStageCache<T>>,
    ode_h: T,
    gcn_layers: Vec<GcnLayerCache<T>>,
    head_input: DenseMatrix<T>,
    logits: DenseMatrix<T>,
    log_probs: DenseMatrix<T>,
}

fn relu<T: Float>(x: &DenseMatrix<T>) -> DenseMatrix<T> {
    x.map(|v| v.max(T::zero()))
}

fn relu_mask_mul<T: Float>(pre: &DenseMatrix<T>, grad: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut out = grad.clone();
    for (g, &p) in out.data_mut().iter_mut().zip(pre.data()) {
        // Subgradient at 0 is taken as 0.
        if p <= T::zero() {
            *g = T::zero();
        }
    }
    out
}

/// The vector field `Σ_r S_r X Θ_r + S_0 X Θ_0` shared by the discrete layer
/// and the ODE model. The trainer only differentiates the level-shared
/// parameter layout.
fn field<T: Float>(
    ops: &FrameletOperatorSet<T>,
    layer: &FmpParams<T>,
    x: &DenseMatrix<T>,
) -> Result<(Vec<DenseMatrix<T>>, DenseMatrix<T>)> {
    if layer.theta_high_per_level.is_some() {
        return Err(Error::InvalidArgument(
            "training supports only level-shared mixing matrices".into(),
        ));
    }
    let mut filtered = Vec::with_capacity(1 + layer.theta_high.len());
    filtered.push(ops.apply_low_pass(x)?);
    for r in 1..=layer.theta_high.len() {
        filtered.push(ops.apply_high_stacked(r, x)?);
    }
    let mut out = filtered[0].matmul(&layer.theta_low);
    for (r, theta) in layer.theta_high.iter().enumerate() {
        out.add_assign(&filtered[r + 1].matmul(theta));
    }
    Ok((filtered, out))
}

/// Vector-Jacobian product of [`field`]: accumulates theta gradients and
/// returns the input cotangent. `filtered` may be `None`, in which case the
/// filtered inputs are recomputed from `x`.
fn field_vjp<T: Float>(
    ops: &FrameletOperatorSet<T>,
    layer: &FmpParams<T>,
    grad_layer: &mut FmpParams<T>,
    x: &DenseMatrix<T>,
    filtered: Option<&[DenseMatrix<T>]>,
    upstream: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let recomputed;
    let filtered = match filtered {
        Some(f) => f,
        None => {
            let mut f = Vec::with_capacity(1 + layer.theta_high.len());
            f.push(ops.apply_low_pass(x)?);
            for r in 1..=layer.theta_high.len() {
                f.push(ops.apply_high_stacked(r, x)?);
            }
            recomputed = f;
            &recomputed
        }
    };
    grad_layer
        .theta_low
        .add_assign(&filtered[0].transpose_matmul(upstream));
    // The operators are symmetric, so d/dX (S X Θ) pulls back as S (G Θᵀ).
    let mut dx = ops.apply_low_pass(&upstream.matmul(&layer.theta_low.transpose()))?;
    for (r, theta) in layer.theta_high.iter().enumerate() {
        grad_layer.theta_high[r].add_assign(&filtered[r + 1].transpose_matmul(upstream));
        dx.add_assign(&ops.apply_high_stacked(r + 1, &upstream.matmul(&theta.transpose()))?);
    }
    Ok(dx)
}

fn forward_cached<T: Float>(
    model: &ModelParams<T>,
    graph: &Graph<T>,
    bundle: &LaplacianBundle<T>,
    ops: Option<&FrameletOperatorSet<T>>,
    phase: Phase,
) -> Result<ForwardCache<T>> {
    let x = graph.features().clone();
    let mut encoder_inputs = Vec::new();
    let mut encoder_pre = Vec::new();
    let mut h = x;

    if model.arch != Architecture::Gcn {
        for (i, layer) in model.encoder.iter().enumerate() {
            encoder_inputs.push(h.clone());
            let pre = layer.forward(&h);
            // ReLU between encoder layers, identity after the last.
            h = if i + 1 < model.encoder.len() { relu(&pre) } else { pre.clone() };
            encoder_pre.push(pre);
        }
    }

    // Dropout on the encoder output (inverted scaling), training mode only.
    let mut dropout_mask = None;
    if let Phase::Train { dropout_seed } = phase {
        let rate = model.dropout_rate.to_f64_lossy();
        if rate > 0.0 {
            let keep = 1.0 - rate;
            let mut rng = Rng::from_seed(dropout_seed);
            let mut mask = DenseMatrix::zeros(h.rows(), h.cols());
            for m in mask.data_mut() {
                *m = if rng.bernoulli(keep) {
                    real::<T>(1.0 / keep)
                } else {
                    T::zero()
                };
            }
            for (v, &m) in h.data_mut().iter_mut().zip(mask.data()) {
                *v *= m;
            }
            dropout_mask = Some(mask);
        }
    }

    let mut fmp_layers = Vec::new();
    let mut ode_steps = Vec::new();
    let mut gcn_layers = Vec::new();
    let mut ode_h = T::zero();
    match model.arch {
        Architecture::FmpDiscrete => {
            let ops = ops.ok_or_else(|| {
                Error::InvalidArgument("framelet operators required for this model".into())
            })?;
            for layer in &model.fmp {
                let (filtered, pre) = field(ops, layer, &h)?;
                let next = h.add(&relu(&pre));
                fmp_layers.push(FmpLayerCache {
                    input: h,
                    filtered,
                    pre_activation: pre,
                });
                h = next;
            }
        }
        Architecture::FmpOde => {
            let ops = ops.ok_or_else(|| {
                Error::InvalidArgument("framelet operators required for this model".into())
            })?;
            let layer = &model.fmp[0];
            let steps = model.ode_steps.max(1);
            ode_h = model.ode_horizon / real::<T>(steps as f64);
            let half = real::<T>(0.5);
            let sixth = real::<T>(1.0 / 6.0);
            for _ in 0..steps {
                let a1 = h.clone();
                let k1 = field(ops, layer, &a1)?.1;
                let mut a2 = h.clone();
                a2.axpy(ode_h * half, &k1);
                let k2 = field(ops, layer, &a2)?.1;
                let mut a3 = h.clone();
                a3.axpy(ode_h * half, &k2);
                let k3 = field(ops, layer, &a3)?.1;
                let mut a4 = h.clone();
                a4.axpy(ode_h, &k3);
                let k4 = field(ops, layer, &a4)?.1;

                let mut incr = k1;
                incr.axpy(real(2.0), &k2);
                incr.axpy(real(2.0), &k3);
                incr.add_assign(&k4);
                h.axpy(ode_h * sixth, &incr);
                ode_steps.push(OdeStageCache { args: [a1, a2, a3, a4] });
            }
        }
        Architecture::Gcn => {
            for w in &model.gcn {
                let propagated = bundle.propagator().mul_dense(&h);
                let pre = propagated.matmul(w);
                h = relu(&pre);
                gcn_layers.push(GcnLayerCache {
                    propagated,
                    pre_activation: pre,
                });
            }
        }
    }

    let head_input = h;
    let logits = model.head.forward(&head_input);

    // Row-wise log-softmax.
    let mut log_probs = logits.clone();
    for i in 0..log_probs.rows() {
        let row = log_probs.row_mut(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = row.iter().map(|&v| (v - max).exp()).sum();
        let lse = max + sum.ln();
        for v in row.iter_mut() {
            *v -= lse;
        }
    }

    Ok(ForwardCache {
        encoder_inputs,
        encoder_pre,
        dropout_mask,
        fmp_layers,
        ode_steps,
        ode_h,
        gcn_layers,
        head_input,
        logits,
        log_probs,
    })
}

fn nll_loss<T: Float>(
    cache: &ForwardCache<T>,
    labels: &[usize],
    split: &[usize],
    weight_decay: T,
    model: &ModelParams<T>,
) -> T {
    let mut loss = T::zero();
    for &i in split {
        loss -= cache.log_probs.get(i, labels[i]);
    }
    loss /= real::<T>(split.len() as f64);
    loss + weight_decay * real::<T>(0.5) * model.squared_norm()
}

/// Loss and logits of one forward pass over a node split.
pub fn forward_loss<T: Float>(
    model: &ModelParams<T>,
    graph: &Graph<T>,
    bundle: &LaplacianBundle<T>,
    ops: Option<&FrameletOperatorSet<T>>,
    split: &[usize],
    weight_decay: T,
    phase: Phase,
) -> Result<(T, DenseMatrix<T>)> {
    if split.is_empty() {
        return Err(Error::InvalidArgument("empty split".into()));
    }
    let labels = graph.labels().ok_or(Error::LabelsRequired)?;
    let cache = forward_cached(model, graph, bundle, ops, phase)?;
    let loss = nll_loss(&cache, labels, split, weight_decay, model);
    Ok((loss, cache.logits))
}

/// Loss and the gradient of every parameter, reverse pass over the cached
/// forward.
pub fn backward<T: Float>(
    model: &ModelParams<T>,
    graph: &Graph<T>,
    bundle: &LaplacianBundle<T>,
    ops: Option<&FrameletOperatorSet<T>>,
    split: &[usize],
    weight_decay: T,
    phase: Phase,
) -> Result<(T, ModelParams<T>)> {
    if split.is_empty() {
        return Err(Error::InvalidArgument("empty split".into()));
    }
    let labels = graph.labels().ok_or(Error::LabelsRequired)?;
    let cache = forward_cached(model, graph, bundle, ops, phase)?;
    let loss = nll_loss(&cache, labels, split, weight_decay, model);
    let mut grads = model.zeros_like();

    // d loss / d logits: (softmax - onehot) / |split| on split rows.
    let n = cache.logits.rows();
    let c = cache.logits.cols();
    let inv = real::<T>(1.0 / split.len() as f64);
    let mut in_split = vec![false; n];
    for &i in split {
        in_split[i] = true;
    }
    let mut d_logits = DenseMatrix::zeros(n, c);
    for i in 0..n {
        if !in_split[i] {
            continue;
        }
        for j in 0..c {
            let softmax = cache.log_probs.get(i, j).exp();
            let target = if labels[i] == j { T::one() } else { T::zero() };
            d_logits.set(i, j, (softmax - target) * inv);
        }
    }

    // Head.
    grads.head.weight = cache.head_input.transpose_matmul(&d_logits);
    for j in 0..c {
        let mut acc = T::zero();
        for i in 0..n {
            acc += d_logits.get(i, j);
        }
        grads.head.bias[j] = acc;
    }
    let mut dh = d_logits.matmul(&model.head.weight.transpose());

    // Model body, in reverse.
    match model.arch {
        Architecture::FmpDiscrete => {
            let ops = ops.expect("checked in forward");
            for t in (0..model.fmp.len()).rev() {
                let lcache = &cache.fmp_layers[t];
                let d_pre = relu_mask_mul(&lcache.pre_activation, &dh);
                let dx = field_vjp(
                    ops,
                    &model.fmp[t],
                    &mut grads.fmp[t],
                    &lcache.input,
                    Some(&lcache.filtered),
                    &d_pre,
                )?;
                // Residual: dH_{t-1} = dH_t + vjp through the message.
                dh.add_assign(&dx);
            }
        }
        Architecture::FmpOde => {
            let ops = ops.expect("checked in forward");
            let layer = &model.fmp[0];
            let h = cache.ode_h;
            let half = real::<T>(0.5);
            let sixth = h * real::<T>(1.0 / 6.0);
            let third = h * real::<T>(1.0 / 3.0);
            for step in cache.ode_steps.iter().rev() {
                let [a1, a2, a3, a4] = &step.args;
                // Stage cotangents from X_{n+1} = X_n + h/6 (k1+2k2+2k3+k4).
                let k4_bar = dh.scale(sixth);
                let mut k3_bar = dh.scale(third);
                let mut k2_bar = dh.scale(third);
                let mut k1_bar = dh.scale(sixth);

                let a4_bar = field_vjp(ops, layer, &mut grads.fmp[0], a4, None, &k4_bar)?;
                k3_bar.axpy(h, &a4_bar);
                dh.add_assign(&a4_bar);

                let a3_bar = field_vjp(ops, layer, &mut grads.fmp[0], a3, None, &k3_bar)?;
                k2_bar.axpy(h * half, &a3_bar);
                dh.add_assign(&a3_bar);

                let a2_bar = field_vjp(ops, layer, &mut grads.fmp[0], a2, None, &k2_bar)?;
                k1_bar.axpy(h * half, &a2_bar);
                dh.add_assign(&a2_bar);

                let a1_bar = field_vjp(ops, layer, &mut grads.fmp[0], a1, None, &k1_bar)?;
                dh.add_assign(&a1_bar);
            }
        }
        Architecture::Gcn => {
            for i in (0..model.gcn.len()).rev() {
                let lcache = &cache.gcn_layers[i];
                let d_pre = relu_mask_mul(&lcache.pre_activation, &dh);
                grads.gcn[i] = lcache.propagated.transpose_matmul(&d_pre);
                // P is symmetric.
                dh = bundle
                    .propagator()
                    .mul_dense(&d_pre.matmul(&model.gcn[i].transpose()));
            }
        }
    }

    // Dropout.
    if let Some(mask) = &cache.dropout_mask {
        for (g, &m) in dh.data_mut().iter_mut().zip(mask.data()) {
            *g *= m;
        }
    }

    // Encoder, in reverse.
    if model.arch != Architecture::Gcn {
        for i in (0..model.encoder.len()).rev() {
            let pre = &cache.encoder_pre[i];
            let input = &cache.encoder_inputs[i];
            let d_pre = if i + 1 < model.encoder.len() {
                relu_mask_mul(pre, &dh)
            } else {
                dh.clone()
            };
            grads.encoder[i].weight = input.transpose_matmul(&d_pre);
            for j in 0..model.encoder[i].bias.len() {
                let mut acc = T::zero();
                for row in 0..d_pre.rows() {
                    acc += d_pre.get(row, j);
                }
                grads.encoder[i].bias[j] = acc;
            }
            dh = d_pre.matmul(&model.encoder[i].weight.transpose());
        }
    }

    // L2 penalty: d/dθ (wd/2 ‖θ‖²) = wd θ.
    let mut flat_model: Vec<Vec<T>> = Vec::new();
    model.for_each_tensor(|_, data| flat_model.push(data.to_vec()));
    let mut idx = 0;
    grads.for_each_tensor_mut(|_, data| {
        for (g, &p) in data.iter_mut().zip(flat_model[idx].iter()) {
            *g += weight_decay * p;
        }
        idx += 1;
    });

    Ok((loss, grads))
}

/// Encoder output for a feature matrix (no dropout): the state the message
/// passing layers and the ODE field act on.
pub fn encode<T: Float>(model: &ModelParams<T>, x: &DenseMatrix<T>) -> DenseMatrix<T> {
    let mut h = x.clone();
    for (i, layer) in model.encoder.iter().enumerate() {
        let pre = layer.forward(&h);
        h = if i + 1 < model.encoder.len() { relu(&pre) } else { pre };
    }
    h
}

/// Mean negative log-likelihood of the labels over a split, from raw logits.
pub fn nll<T: Float>(logits: &DenseMatrix<T>, labels: &[usize], split: &[usize]) -> T {
    if split.is_empty() {
        return T::zero();
    }
    let mut loss = T::zero();
    for &i in split {
        let row = logits.row(i);
        let max = row.iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = row.iter().map(|&v| (v - max).exp()).sum();
        loss -= row[labels[i]] - max - sum.ln();
    }
    loss / real::<T>(split.len() as f64)
}

/// Argmax class prediction accuracy over a split.
pub fn accuracy<T: Float>(logits: &DenseMatrix<T>, labels: &[usize], split: &[usize]) -> f64 {
    if split.is_empty() {
        return 0.0;
    }
    let mut correct = 0usize;
    for &i in split {
        let row = logits.row(i);
        let mut best = 0usize;
        let mut best_v = row[0];
        for (j, &v) in row.iter().enumerate().skip(1) {
            if v > best_v {
                best_v = v;
                best = j;
            }
        }
        if best == labels[i] {
            correct += 1;
        }
    }
    correct as f64 / split.len() as f64
}
