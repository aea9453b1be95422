//! A one-hidden-layer ReLU network trained on Gaussian blobs.
//!
//! This exists so the detection pipeline can run end to end without an
//! external checkpoint: the post-ReLU hidden vector plays the role of the
//! penultimate feature `h(x)` and the output layer is an ordinary
//! [`LinearHead`]. Parameters are stored as `f32` (the container
//! precision); training keeps an `f64` master copy.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::store::{FeatureDump, HiddenLayer, LinearHead};

// Independent RNG streams derived from one user seed.
const STREAM_INIT: u64 = 0x1a2b_3c4d;
const STREAM_SHUFFLE: u64 = 0x5e6f_7a8b;
const STREAM_CHECK: u64 = 0x9c0d_1e2f;

/// Isotropic Gaussian clusters, one per class.
#[derive(Debug, Clone, PartialEq)]
pub struct BlobSpec {
    pub n_classes: usize,
    pub dim_in: usize,
    /// Explicit class centres; `None` places them on a sphere of `radius`.
    pub class_means: Option<Vec<Vec<f64>>>,
    pub radius: f64,
    pub noise_scale: f64,
    pub samples_per_class: usize,
    pub seed: u64,
}

impl Default for BlobSpec {
    fn default() -> Self {
        BlobSpec {
            n_classes: 10,
            dim_in: 10,
            class_means: None,
            radius: 2.0,
            noise_scale: 0.4,
            samples_per_class: 500,
            seed: 0,
        }
    }
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_classes == 0 || self.dim_in == 0 || self.samples_per_class == 0 {
            return Err(Error::invalid("blob spec counts must be positive"));
        }
        if !(self.noise_scale > 0.0 && self.noise_scale.is_finite()) {
            return Err(Error::invalid(format!(
                "noise_scale must be positive and finite, got {}",
                self.noise_scale
            )));
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid(format!("bad radius {}", self.radius)));
        }
        if let Some(means) = &self.class_means {
            if means.len() != self.n_classes || means.iter().any(|m| m.len() != self.dim_in) {
                return Err(Error::invalid("class_means shape does not match spec"));
            }
        }
        Ok(())
    }

    /// Class centres. With `n_classes <= 2 * dim_in` these are the vertices
    /// of the cross-polytope (`±radius` on each axis, positive half first),
    /// which are equidistant neighbours on the sphere. Beyond that, seeded
    /// random directions are used.
    pub fn means(&self) -> Vec<Vec<f64>> {
        if let Some(m) = &self.class_means {
            return m.clone();
        }
        let (l, d, r) = (self.n_classes, self.dim_in, self.radius);
        if l <= 2 * d {
            (0..l)
                .map(|c| {
                    let mut m = vec![0.0; d];
                    m[c % d] = if c < d { r } else { -r };
                    m
                })
                .collect()
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ STREAM_INIT);
            (0..l)
                .map(|_| {
                    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
                    v.into_iter().map(|x| x * r / norm).collect()
                })
                .collect()
        }
    }
}

/// Draws `samples_per_class` points around each class mean. Samples are
/// interleaved by class (`0, 1, .., L-1, 0, 1, ..`).
pub fn generate_blobs(spec: &BlobSpec) -> Result<(Vec<Vec<f64>>, Vec<u32>)> {
    spec.validate()?;
    let means = spec.means();
    let noise = Normal::new(0.0, spec.noise_scale).map_err(|e| Error::invalid(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_classes * spec.samples_per_class;
    let mut inputs = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..spec.samples_per_class {
        for (class, mean) in means.iter().enumerate() {
            inputs.push(mean.iter().map(|m| m + noise.sample(&mut rng)).collect());
            labels.push(class as u32);
        }
    }
    Ok((inputs, labels))
}

/// Uniform samples from the box `[lo, hi]^dim_in`.
pub fn generate_ood_uniform(dim_in: usize, n: usize, bounds: (f64, f64), seed: u64) -> Result<Vec<Vec<f64>>> {
    let (lo, hi) = bounds;
    if !(lo < hi && lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid(format!("bad OOD bounds [{lo}, {hi}]")));
    }
    if dim_in == 0 || n == 0 {
        return Err(Error::invalid("OOD dim_in and n must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| (0..dim_in).map(|_| rng.gen_range(lo..=hi)).collect())
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyMlp {
    pub hidden: HiddenLayer,
    pub head: LinearHead,
}

impl ToyMlp {
    /// Uniform `[-s, s]` initialisation with `s = 1/sqrt(fan_in)` per layer.
    pub fn init(dim_in: usize, dim_hidden: usize, n_classes: usize, seed: u64) -> Result<Self> {
        if dim_in == 0 || dim_hidden == 0 || n_classes == 0 {
            return Err(Error::invalid("model dimensions must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ STREAM_INIT);
        let mut uniform = |fan_in: usize, n: usize| -> Vec<f32> {
            let s = 1.0 / (fan_in as f64).sqrt();
            (0..n).map(|_| rng.gen_range(-s..=s) as f32).collect()
        };
        let hidden = HiddenLayer {
            dim_in,
            dim_hidden,
            weights: uniform(dim_in, dim_in * dim_hidden),
            bias: uniform(dim_in, dim_hidden),
        };
        let head = LinearHead {
            dim_q: dim_hidden,
            n_classes,
            weights: uniform(dim_hidden, dim_hidden * n_classes),
            bias: uniform(dim_hidden, n_classes),
        };
        Ok(ToyMlp { hidden, head })
    }

    pub fn from_parts(hidden: HiddenLayer, head: LinearHead) -> Result<Self> {
        hidden.validate()?;
        head.validate()?;
        if hidden.dim_hidden != head.dim_q {
            return Err(Error::DimMismatch {
                context: "hidden width vs head dim_q",
                expected: head.dim_q,
                got: hidden.dim_hidden,
            });
        }
        Ok(ToyMlp { hidden, head })
    }

    pub fn dim_in(&self) -> usize {
        self.hidden.dim_in
    }

    pub fn dim_hidden(&self) -> usize {
        self.hidden.dim_hidden
    }

    pub fn n_classes(&self) -> usize {
        self.head.n_classes
    }

    /// Returns the post-ReLU penultimate vector (rounded to container
    /// precision) and the head logits computed from exactly that vector.
    pub fn forward(&self, x: &[f64]) -> Result<(Vec<f32>, Vec<f64>)> {
        if x.len() != self.dim_in() {
            return Err(Error::DimMismatch {
                context: "input vs model dim_in",
                expected: self.dim_in(),
                got: x.len(),
            });
        }
        let q = self.dim_hidden();
        let mut pre: Vec<f64> = self.hidden.bias.iter().map(|&b| f64::from(b)).collect();
        for (row, &xi) in self.hidden.weights.chunks_exact(q).zip(x) {
            for (p, &w) in pre.iter_mut().zip(row) {
                *p += f64::from(w) * xi;
            }
        }
        let penultimate: Vec<f32> = pre.iter().map(|&p| p.max(0.0) as f32).collect();
        let wide: Vec<f64> = penultimate.iter().map(|&v| f64::from(v)).collect();
        let logits = self.head.logits(&wide);
        Ok((penultimate, logits))
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        let (_, logits) = self.forward(x)?;
        Ok(argmax(&logits))
    }

    pub fn accuracy(&self, inputs: &[Vec<f64>], labels: &[u32]) -> Result<f64> {
        if inputs.is_empty() {
            return Err(Error::invalid("accuracy on empty set"));
        }
        let mut correct = 0usize;
        for (x, &y) in inputs.iter().zip(labels) {
            if self.predict(x)? == y as usize {
                correct += 1;
            }
        }
        Ok(correct as f64 / inputs.len() as f64)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub lr: f64,
    pub momentum: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 64,
            epochs: 30,
            lr: 0.1,
            momentum: 0.9,
            batch_size: 64,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.hidden == 0 {
            return Err(Error::invalid("epochs, batch_size and hidden must be positive"));
        }
        if !(self.lr >= 0.0 && self.lr.is_finite() && (0.0..1.0).contains(&self.momentum)) {
            return Err(Error::invalid(format!(
                "bad optimiser settings lr={} momentum={}",
                self.lr, self.momentum
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub train_accuracy: f64,
    pub final_loss: f64,
}

/// Generates blobs from `spec` and trains a fresh model on them.
pub fn train_toy(spec: &BlobSpec, cfg: &TrainConfig) -> Result<(ToyMlp, TrainReport)> {
    let (inputs, labels) = generate_blobs(spec)?;
    let model = ToyMlp::init(spec.dim_in, cfg.hidden, spec.n_classes, cfg.seed)?;
    train(model, &inputs, &labels, cfg)
}

/// Mini-batch SGD with momentum on the mean cross-entropy loss. The step
/// size drops by 10x at 50% and again at 75% of the epochs.
pub fn train(model: ToyMlp, inputs: &[Vec<f64>], labels: &[u32], cfg: &TrainConfig) -> Result<(ToyMlp, TrainReport)> {
    cfg.validate()?;
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::invalid("training set empty or labels misaligned"));
    }
    check_batch(&model, inputs, labels)?;

    let mut params = Params::from_model(&model);
    let mut velocity = params.zeros_like();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ STREAM_SHUFFLE);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut final_loss = f64::NAN;

    for epoch in 0..cfg.epochs {
        let lr = if 4 * epoch >= 3 * cfg.epochs {
            cfg.lr * 0.01
        } else if 2 * epoch >= cfg.epochs {
            cfg.lr * 0.1
        } else {
            cfg.lr
        };
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| inputs[i].as_slice()).collect();
            let ys: Vec<u32> = batch.iter().map(|&i| labels[i]).collect();
            let (loss, grads) = params.loss_and_grads(&xs, &ys);
            if !loss.is_finite() {
                return Err(Error::Diverged { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            for (p, (v, g)) in params
                .flat_mut()
                .into_iter()
                .zip(velocity.flat_mut().into_iter().zip(grads.flat()))
            {
                for ((pi, vi), gi) in p.iter_mut().zip(v.iter_mut()).zip(g) {
                    *vi = cfg.momentum * *vi + gi;
                    *pi -= lr * *vi;
                }
            }
        }
        final_loss = epoch_loss / inputs.len() as f64;
        if !final_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
    }

    let trained = params.to_model();
    trained.hidden.validate()?;
    trained.head.validate()?;
    let train_accuracy = trained.accuracy(inputs, labels)?;
    Ok((
        trained,
        TrainReport {
            train_accuracy,
            final_loss,
        },
    ))
}

fn check_batch(model: &ToyMlp, inputs: &[Vec<f64>], labels: &[u32]) -> Result<()> {
    for (sample, (x, &y)) in inputs.iter().zip(labels).enumerate() {
        if x.len() != model.dim_in() {
            return Err(Error::DimMismatch {
                context: "input vs model dim_in",
                expected: model.dim_in(),
                got: x.len(),
            });
        }
        if y as usize >= model.n_classes() {
            return Err(Error::LabelOutOfRange {
                sample,
                label: y,
                n_classes: model.n_classes(),
            });
        }
    }
    Ok(())
}

/// Runs the model over `inputs` and packs the penultimate vectors into a
/// dump. Rows are computed in parallel; row `i` is `forward(inputs[i]).0`.
pub fn extract_features(
    model: &ToyMlp,
    inputs: &[Vec<f64>],
    labels: Option<&[u32]>,
    tag: &str,
) -> Result<FeatureDump> {
    let rows: Vec<Vec<f32>> = inputs
        .par_iter()
        .map(|x| model.forward(x).map(|(h, _)| h))
        .collect::<Result<_>>()?;
    let features = rows.concat();
    let dump = FeatureDump::new(model.dim_hidden(), features, labels.map(<[u32]>::to_vec), tag)?;
    dump.validate_labels(model.n_classes())?;
    Ok(dump)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientCheck {
    pub max_relative_error: f64,
    pub max_abs_analytic: f64,
    pub max_abs_numeric: f64,
    pub checked: usize,
}

/// Step used for central differences.
pub const FD_STEP: f64 = 1e-4;

/// Compares backprop gradients of the mean cross-entropy loss against
/// central finite differences on `n_params` randomly chosen parameters
/// (all of them if `n_params` exceeds the parameter count).
///
/// Relative error is `|a - n| / max(|a|, |n|, 1e-6)`, so parameters whose
/// gradient is essentially zero on both sides do not blow up the ratio.
pub fn gradient_check(
    model: &ToyMlp,
    inputs: &[Vec<f64>],
    labels: &[u32],
    n_params: usize,
    seed: u64,
) -> Result<GradientCheck> {
    if inputs.is_empty() || inputs.len() != labels.len() {
        return Err(Error::invalid("gradient check needs a nonempty labelled batch"));
    }
    check_batch(model, inputs, labels)?;
    let xs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let base = Params::from_model(model);
    let (_, grads) = base.loss_and_grads(&xs, labels);
    let analytic: Vec<f64> = grads.flat().into_iter().flatten().copied().collect();

    let total = analytic.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ STREAM_CHECK);
    let picks = index::sample(&mut rng, total, n_params.min(total)).into_vec();

    let mut report = GradientCheck {
        max_relative_error: 0.0,
        max_abs_analytic: 0.0,
        max_abs_numeric: 0.0,
        checked: picks.len(),
    };
    let mut probe = base.clone();
    for k in picks {
        let original = *probe.flat_index_mut(k);
        *probe.flat_index_mut(k) = original + FD_STEP;
        let plus = probe.loss(&xs, labels);
        *probe.flat_index_mut(k) = original - FD_STEP;
        let minus = probe.loss(&xs, labels);
        *probe.flat_index_mut(k) = original;

        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let a = analytic[k];
        let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
        report.max_relative_error = report.max_relative_error.max(rel);
        report.max_abs_analytic = report.max_abs_analytic.max(a.abs());
        report.max_abs_numeric = report.max_abs_numeric.max(numeric.abs());
    }
    Ok(report)
}

/// `f64` parameter set used for training and gradient checking.
#[derive(Debug, Clone)]
struct Params {
    dim_in: usize,
    hidden: usize,
    classes: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

impl Params {
    fn from_model(m: &ToyMlp) -> Self {
        let widen = |v: &[f32]| v.iter().map(|&x| f64::from(x)).collect::<Vec<_>>();
        Params {
            dim_in: m.dim_in(),
            hidden: m.dim_hidden(),
            classes: m.n_classes(),
            w1: widen(&m.hidden.weights),
            b1: widen(&m.hidden.bias),
            w2: widen(&m.head.weights),
            b2: widen(&m.head.bias),
        }
    }

    fn to_model(&self) -> ToyMlp {
        let narrow = |v: &[f64]| v.iter().map(|&x| x as f32).collect::<Vec<_>>();
        ToyMlp {
            hidden: HiddenLayer {
                dim_in: self.dim_in,
                dim_hidden: self.hidden,
                weights: narrow(&self.w1),
                bias: narrow(&self.b1),
            },
            head: LinearHead {
                dim_q: self.hidden,
                n_classes: self.classes,
                weights: narrow(&self.w2),
                bias: narrow(&self.b2),
            },
        }
    }

    fn zeros_like(&self) -> Self {
        Params {
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.b1.len()],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.b2.len()],
            ..*self
        }
    }

    fn flat(&self) -> [&[f64]; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    fn flat_mut(&mut self) -> [&mut [f64]; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    fn flat_index_mut(&mut self, mut k: usize) -> &mut f64 {
        for part in self.flat_mut() {
            if k < part.len() {
                return &mut part[k];
            }
            k -= part.len();
        }
        panic!("parameter index out of range");
    }

    fn hidden_pre(&self, x: &[f64]) -> Vec<f64> {
        let mut pre = self.b1.clone();
        for (row, &xi) in self.w1.chunks_exact(self.hidden).zip(x) {
            for (p, &w) in pre.iter_mut().zip(row) {
                *p += w * xi;
            }
        }
        pre
    }

    fn output(&self, h: &[f64]) -> Vec<f64> {
        let mut z = vec![0.0; self.classes];
        for (row, &a) in self.w2.chunks_exact(self.classes).zip(h) {
            for (zj, &w) in z.iter_mut().zip(row) {
                *zj += w * a;
            }
        }
        for (zj, &b) in z.iter_mut().zip(&self.b2) {
            *zj += b;
        }
        z
    }

    /// Softmax probabilities and `-log p_y`.
    fn softmax_xent(z: &[f64], y: usize) -> (Vec<f64>, f64) {
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
        let sum: f64 = exps.iter().sum();
        let loss = sum.ln() - (z[y] - max);
        (exps.into_iter().map(|e| e / sum).collect(), loss)
    }

    fn loss(&self, xs: &[&[f64]], ys: &[u32]) -> f64 {
        let total: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, &y)| {
                let h: Vec<f64> = self.hidden_pre(x).into_iter().map(|p| p.max(0.0)).collect();
                Self::softmax_xent(&self.output(&h), y as usize).1
            })
            .sum();
        total / xs.len() as f64
    }

    fn loss_and_grads(&self, xs: &[&[f64]], ys: &[u32]) -> (f64, Params) {
        let mut g = self.zeros_like();
        let scale = 1.0 / xs.len() as f64;
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let pre = self.hidden_pre(x);
            let h: Vec<f64> = pre.iter().map(|p| p.max(0.0)).collect();
            let (mut dz, loss) = Self::softmax_xent(&self.output(&h), y as usize);
            total += loss;
            dz[y as usize] -= 1.0;
            for d in dz.iter_mut() {
                *d *= scale;
            }
            let mut dh = vec![0.0; self.hidden];
            for (i, (&a, row)) in h.iter().zip(self.w2.chunks_exact(self.classes)).enumerate() {
                let grow = &mut g.w2[i * self.classes..(i + 1) * self.classes];
                for j in 0..self.classes {
                    grow[j] += a * dz[j];
                    dh[i] += row[j] * dz[j];
                }
            }
            for (gb, &d) in g.b2.iter_mut().zip(&dz) {
                *gb += d;
            }
            let dpre: Vec<f64> = dh
                .iter()
                .zip(&pre)
                .map(|(&d, &p)| if p > 0.0 { d } else { 0.0 })
                .collect();
            for (k, &xk) in x.iter().enumerate() {
                let grow = &mut g.w1[k * self.hidden..(k + 1) * self.hidden];
                for (gw, &d) in grow.iter_mut().zip(&dpre) {
                    *gw += xk * d;
                }
            }
            for (gb, &d) in g.b1.iter_mut().zip(&dpre) {
                *gb += d;
            }
        }
        (total * scale, g)
    }
}

/// The full desk-scale setup: ID train/test blobs, a trained model and a
/// uniform-box OOD set, all derived from one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyExperiment {
    pub blobs: BlobSpec,
    pub train: TrainConfig,
    pub test_per_class: usize,
    pub ood_samples: usize,
    pub ood_bounds: (f64, f64),
}

impl Default for ToyExperiment {
    fn default() -> Self {
        ToyExperiment::with_seed(0)
    }
}

#[derive(Debug, Clone)]
pub struct ToyArtifacts {
    pub model: ToyMlp,
    pub report: TrainReport,
    pub id_train: FeatureDump,
    pub id_test: FeatureDump,
    pub ood: FeatureDump,
}

impl ToyExperiment {
    /// Reference configuration: 10 classes in 10 dimensions, 64 hidden
    /// units, 500 training and 100 test samples per class, 1000 OOD points.
    pub fn with_seed(seed: u64) -> Self {
        ToyExperiment {
            blobs: BlobSpec {
                seed,
                ..BlobSpec::default()
            },
            train: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            test_per_class: 100,
            ood_samples: 1000,
            ood_bounds: (-4.0, 4.0),
        }
    }

    pub fn test_spec(&self) -> BlobSpec {
        BlobSpec {
            samples_per_class: self.test_per_class,
            seed: self.blobs.seed.wrapping_add(1),
            ..self.blobs.clone()
        }
    }

    pub fn ood_seed(&self) -> u64 {
        self.blobs.seed.wrapping_add(2)
    }

    pub fn run(&self) -> Result<ToyArtifacts> {
        let (train_x, train_y) = generate_blobs(&self.blobs)?;
        let init = ToyMlp::init(self.blobs.dim_in, self.train.hidden, self.blobs.n_classes, self.train.seed)?;
        let (model, report) = train(init, &train_x, &train_y, &self.train)?;
        let (test_x, test_y) = generate_blobs(&self.test_spec())?;
        let ood_x = generate_ood_uniform(self.blobs.dim_in, self.ood_samples, self.ood_bounds, self.ood_seed())?;
        Ok(ToyArtifacts {
            id_train: extract_features(&model, &train_x, Some(&train_y), "id_train")?,
            id_test: extract_features(&model, &test_x, Some(&test_y), "id_test")?,
            ood: extract_features(&model, &ood_x, None, "ood")?,
            model,
            report,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_spec(seed: u64) -> BlobSpec {
        BlobSpec {
            n_classes: 3,
            dim_in: 4,
            samples_per_class: 20,
            seed,
            ..BlobSpec::default()
        }
    }

    #[test]
    fn vanishing_noise_collapses_onto_means() {
        let spec = BlobSpec {
            n_classes: 2,
            dim_in: 3,
            noise_scale: 1e-300,
            samples_per_class: 5,
            ..BlobSpec::default()
        };
        let (xs, ys) = generate_blobs(&spec).unwrap();
        let means = spec.means();
        for (x, &y) in xs.iter().zip(&ys) {
            for (a, m) in x.iter().zip(&means[y as usize]) {
                assert!((a - m).abs() < 1e-250);
            }
        }
        assert_eq!(means[0], vec![2.0, 0.0, 0.0]);
    }

    #[test]
    fn blobs_are_deterministic_and_balanced() {
        let a = generate_blobs(&tiny_spec(7)).unwrap();
        let b = generate_blobs(&tiny_spec(7)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.0, generate_blobs(&tiny_spec(8)).unwrap().0);
        for c in 0..3u32 {
            assert_eq!(a.1.iter().filter(|&&y| y == c).count(), 20);
        }
    }

    #[test]
    fn zero_noise_is_rejected() {
        let spec = BlobSpec {
            noise_scale: 0.0,
            ..tiny_spec(0)
        };
        assert!(generate_blobs(&spec).is_err());
    }

    #[test]
    fn cross_polytope_means_beyond_dim() {
        let spec = BlobSpec {
            n_classes: 4,
            dim_in: 2,
            radius: 2.0,
            ..tiny_spec(0)
        };
        assert_eq!(
            spec.means(),
            vec![vec![2.0, 0.0], vec![0.0, 2.0], vec![-2.0, 0.0], vec![0.0, -2.0]]
        );
    }

    #[test]
    fn many_class_means_lie_on_sphere() {
        let spec = BlobSpec {
            n_classes: 9,
            dim_in: 2,
            radius: 3.0,
            ..tiny_spec(0)
        };
        for m in spec.means() {
            let r = m.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!((r - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let m = ToyMlp::init(16, 9, 3, 1).unwrap();
        assert!(m.hidden.weights.iter().all(|w| w.abs() <= 0.25));
        assert!(m.head.weights.iter().all(|w| f64::from(w.abs()) <= 1.0 / 3.0 + 1e-7));
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_unchanged() {
        let (xs, ys) = generate_blobs(&tiny_spec(3)).unwrap();
        let init = ToyMlp::init(4, 8, 3, 11).unwrap();
        let cfg = TrainConfig {
            hidden: 8,
            epochs: 3,
            lr: 0.0,
            seed: 11,
            ..TrainConfig::default()
        };
        let (trained, _) = train(init.clone(), &xs, &ys, &cfg).unwrap();
        assert_eq!(trained, init);
    }

    #[test]
    fn training_is_deterministic() {
        let cfg = TrainConfig {
            hidden: 8,
            epochs: 4,
            seed: 5,
            ..TrainConfig::default()
        };
        let (a, ra) = train_toy(&tiny_spec(2), &cfg).unwrap();
        let (b, rb) = train_toy(&tiny_spec(2), &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn divergence_is_reported() {
        let (xs, ys) = generate_blobs(&tiny_spec(3)).unwrap();
        let init = ToyMlp::init(4, 8, 3, 11).unwrap();
        let cfg = TrainConfig {
            hidden: 8,
            epochs: 5,
            lr: 1e200,
            seed: 11,
            ..TrainConfig::default()
        };
        assert!(matches!(train(init, &xs, &ys, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn zero_weights_give_bias_logits() {
        let mut m = ToyMlp::init(3, 4, 2, 0).unwrap();
        m.head.weights.iter_mut().for_each(|w| *w = 0.0);
        m.head.bias = vec![0.5, -1.25];
        let (_, z) = m.forward(&[1.0, -2.0, 3.0]).unwrap();
        assert_eq!(z, vec![0.5, -1.25]);
    }

    #[test]
    fn negative_preactivations_give_zero_features() {
        let mut m = ToyMlp::init(2, 5, 2, 0).unwrap();
        m.hidden.weights.iter_mut().for_each(|w| *w = 1.0);
        m.hidden.bias.iter_mut().for_each(|b| *b = 0.0);
        let (h, _) = m.forward(&[-1.0, -0.5]).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    #[allow(clippy::needless_range_loop)]
    fn forward_matches_triple_loop_oracle() {
        let m = ToyMlp::init(6, 7, 3, 42).unwrap();
        let x = [0.3, -1.2, 2.0, 0.0, 0.7, -0.1];
        let (h, z) = m.forward(&x).unwrap();
        for k in 0..7 {
            let mut pre = f64::from(m.hidden.bias[k]);
            for (j, xj) in x.iter().enumerate() {
                pre += f64::from(m.hidden.weights[j * 7 + k]) * xj;
            }
            let expect = pre.max(0.0);
            assert!((f64::from(h[k]) - expect).abs() <= 1e-6 * expect.abs().max(1.0));
        }
        for l in 0..3 {
            let mut acc = f64::from(m.head.bias[l]);
            for k in 0..7 {
                acc += f64::from(m.head.weights[k * 3 + l]) * f64::from(h[k]);
            }
            assert!((z[l] - acc).abs() <= 1e-6 * acc.abs().max(1.0));
        }
    }

    #[test]
    fn dim_mismatch_on_forward() {
        let m = ToyMlp::init(3, 4, 2, 0).unwrap();
        assert!(matches!(m.forward(&[1.0]), Err(Error::DimMismatch { .. })));
    }

    #[test]
    fn gradient_check_on_linear_regime() {
        let mut m = ToyMlp::init(3, 6, 4, 9).unwrap();
        m.hidden.bias.iter_mut().for_each(|b| *b = 5.0);
        let xs = vec![vec![0.5, -0.3, 1.1], vec![-1.0, 0.2, 0.4], vec![0.0, 0.9, -0.7]];
        let ys = vec![0, 3, 1];
        let report = gradient_check(&m, &xs, &ys, 1000, 1).unwrap();
        assert_eq!(report.checked, 3 * 6 + 6 + 6 * 4 + 4);
        assert!(report.max_relative_error < 1e-5, "{report:?}");
    }

    #[test]
    fn gradient_check_at_a_fitted_point() {
        let mut m = ToyMlp::init(2, 3, 2, 4).unwrap();
        m.head.bias = vec![60.0, -60.0];
        let report = gradient_check(&m, &[vec![0.3, 0.1]], &[0], 100, 2).unwrap();
        assert!(report.max_abs_analytic < 1e-40);
        assert!(report.max_abs_numeric < 1e-9);
    }

    #[test]
    fn extracted_rows_match_forward() {
        let m = ToyMlp::init(4, 6, 3, 1).unwrap();
        let (xs, ys) = generate_blobs(&tiny_spec(1)).unwrap();
        let dump = extract_features(&m, &xs, Some(&ys), "tiny").unwrap();
        assert_eq!(dump.n_samples(), xs.len());
        for (i, x) in xs.iter().enumerate() {
            let (h, z) = m.forward(x).unwrap();
            assert_eq!(dump.row(i), h.as_slice());
            assert_eq!(m.head.logits(&dump.row_f64(i)), z);
        }
    }

    #[test]
    fn ood_box_is_bounded_and_seeded() {
        let a = generate_ood_uniform(5, 200, (-2.0, 3.0), 4).unwrap();
        assert_eq!(a, generate_ood_uniform(5, 200, (-2.0, 3.0), 4).unwrap());
        assert!(a.iter().flatten().all(|&v| (-2.0..=3.0).contains(&v)));
        assert!(generate_ood_uniform(5, 10, (1.0, 1.0), 0).is_err());
    }
}
