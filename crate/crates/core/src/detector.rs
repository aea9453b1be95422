//! OOD scores over penultimate features: LINe (clip, then per-class
//! activation and weight masks chosen from the contribution matrix) and the
//! Energy, MSP, ReAct, DICE and Mahalanobis baselines.
//!
//! Every score follows the same convention: higher means more
//! in-distribution. The reported `predicted_class` is always the base
//! model's argmax on unmodified features, so detection never changes the
//! classifier's decision.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::store::{ContributionMatrix, FeatureDump, LinearHead};
use crate::toy::argmax;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Line,
    Energy,
    Msp,
    React,
    Dice,
    Mahalanobis,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Line,
        Method::Energy,
        Method::Msp,
        Method::React,
        Method::Dice,
        Method::Mahalanobis,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Line => "line",
            Method::Energy => "energy",
            Method::Msp => "msp",
            Method::React => "react",
            Method::Dice => "dice",
            Method::Mahalanobis => "mahalanobis",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

/// Which logits choose the class whose masks LINe applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ClassSource {
    /// Base model on unclipped, unmasked features.
    #[default]
    Raw,
    /// Base head on clipped features.
    Clipped,
}

impl FromStr for ClassSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ClassSource::Raw),
            "clipped" => Ok(ClassSource::Clipped),
            other => Err(Error::invalid(format!(
                "unknown class source {other:?} (expected raw or clipped)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Clipping threshold; `f64::INFINITY` disables clipping.
    pub delta: f64,
    /// Percentage of activations pruned per class, in `[0, 100)`.
    pub p_a: f64,
    /// Percentage of head weights pruned per class, in `[0, 100)`.
    pub p_w: f64,
    pub temperature: f64,
    pub method: Method,
    pub class_source: ClassSource,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            delta: 0.8,
            p_a: 10.0,
            p_w: 10.0,
            temperature: 1.0,
            method: Method::Line,
            class_source: ClassSource::Raw,
        }
    }
}

impl DetectorConfig {
    /// Clipping off, nothing pruned: LINe collapses to the energy score.
    pub fn reduction(method: Method) -> Self {
        DetectorConfig {
            delta: f64::INFINITY,
            p_a: 0.0,
            p_w: 0.0,
            method,
            ..DetectorConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_delta(self.delta)?;
        check_percentile("p_a", self.p_a)?;
        check_percentile("p_w", self.p_w)?;
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::invalid(format!(
                "temperature must be positive and finite, got {}",
                self.temperature
            )));
        }
        Ok(())
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must be > 0, got {delta}")))
    }
}

fn check_percentile(name: &str, p: f64) -> Result<()> {
    if (0.0..100.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must lie in [0, 100), got {p}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreRecord {
    pub score: f64,
    pub predicted_class: usize,
    pub activated_count: usize,
}

/// `min(a_i, delta)` elementwise.
pub fn clip_activations(features: &[f64], delta: f64) -> Vec<f64> {
    features.iter().map(|&a| a.min(delta)).collect()
}

/// Number of entries strictly above `threshold`.
pub fn activated_count(features: &[f64], threshold: f64) -> usize {
    features.iter().filter(|&&a| a > threshold).count()
}

/// Argmax of the unmodified head logits, lowest index on ties.
pub fn predict_class(features: &[f64], head: &LinearHead) -> Result<usize> {
    head.check_features(features)?;
    Ok(argmax(&head.logits(features)))
}

/// Entries kept when `p` percent of `total` are pruned:
/// `total - floor(total * p / 100)`.
pub fn keep_count(total: usize, p: f64) -> usize {
    total - ((total as f64 * p) / 100.0).floor() as usize
}

/// `T · log Σ_j exp(z_j / T)`, evaluated around the max logit.
pub fn energy_score(logits: &[f64], temperature: f64) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| ((z - max) / temperature).exp()).sum();
    temperature * sum.ln() + max
}

/// Largest softmax probability.
pub fn msp_score(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logits.iter().map(|z| (z - max).exp()).sum();
    1.0 / sum
}

/// Fixed-size bitset over a flattened index space.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmask {
    len: usize,
    words: Vec<u64>,
}

impl Bitmask {
    pub fn empty(len: usize) -> Self {
        Bitmask {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn full(len: usize) -> Self {
        let mut m = Bitmask::empty(len);
        for i in 0..len {
            m.set(i);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(|&i| self.get(i))
    }
}

/// Indices of the `k` largest values (ties: lower index wins), returned as
/// a mask. Signed order, not magnitude.
pub fn top_k_mask(values: &[f64], k: usize) -> Bitmask {
    let n = values.len();
    if k >= n {
        return Bitmask::full(n);
    }
    let mut mask = Bitmask::empty(n);
    if k == 0 {
        return mask;
    }
    // +0.0 folds -0.0 into 0.0 so both rank as the same value.
    let mut order: Vec<(f64, u32)> = values.iter().enumerate().map(|(i, &v)| (v + 0.0, i as u32)).collect();
    order.select_nth_unstable_by(k - 1, |a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, i) in &order[..k] {
        mask.set(i as usize);
    }
    mask
}

/// Sorted indices of the `k` largest values (ties: lower index wins).
pub fn top_k_indices(values: &[f64], k: usize) -> Vec<usize> {
    top_k_mask(values, k).ones().collect()
}

/// Per-class kept neurons: the `q - floor(q·p_a/100)` largest entries of
/// each column of `C`, as sorted index lists.
pub fn build_activation_masks(c: &ContributionMatrix, p_a: f64) -> Result<Vec<Vec<u32>>> {
    check_percentile("p_a", p_a)?;
    let keep = keep_count(c.dim_q, p_a);
    Ok((0..c.n_classes)
        .map(|l| {
            let column: Vec<f64> = c.column(l).into_iter().map(f64::from).collect();
            top_k_indices(&column, keep).into_iter().map(|i| i as u32).collect()
        })
        .collect())
}

/// Weight-salience matrix for class `l`: `[C_w^l]_{i,j} = C_il · W_ij`,
/// flattened neuron-major.
pub fn weight_salience(c: &ContributionMatrix, head: &LinearHead, class: usize) -> Vec<f64> {
    let classes = head.n_classes;
    let mut out = Vec::with_capacity(head.dim_q * classes);
    for i in 0..head.dim_q {
        let ci = f64::from(c.value(i, class));
        out.extend((0..classes).map(|j| ci * head.weight(i, j)));
    }
    out
}

fn weight_mask_for_class(c: &ContributionMatrix, head: &LinearHead, class: usize, p_w: f64) -> Bitmask {
    let salience = weight_salience(c, head, class);
    top_k_mask(&salience, keep_count(salience.len(), p_w))
}

/// Per-class kept head weights as sorted `(neuron, class)` pairs.
pub fn build_weight_masks(c: &ContributionMatrix, head: &LinearHead, p_w: f64) -> Result<Vec<Vec<(u32, u32)>>> {
    check_percentile("p_w", p_w)?;
    c.check_head(head)?;
    Ok((0..c.n_classes)
        .map(|l| pairs(&weight_mask_for_class(c, head, l, p_w), head.n_classes))
        .collect())
}

fn pairs(mask: &Bitmask, classes: usize) -> Vec<(u32, u32)> {
    mask.ones()
        .map(|k| ((k / classes) as u32, (k % classes) as u32))
        .collect()
}

/// Activation masks (built eagerly) and weight masks (built on first use
/// per class, then cached) for one `(C, p_a, p_w)`.
#[derive(Debug)]
pub struct MaskSet<'a> {
    contrib: &'a ContributionMatrix,
    head: &'a LinearHead,
    pub p_a: f64,
    pub p_w: f64,
    pub keep_a: usize,
    pub keep_w: usize,
    activation_keep: Vec<Vec<u32>>,
    activation_dense: Vec<Bitmask>,
    weight_keep: Vec<OnceLock<Bitmask>>,
}

impl<'a> MaskSet<'a> {
    pub fn new(contrib: &'a ContributionMatrix, head: &'a LinearHead, p_a: f64, p_w: f64) -> Result<Self> {
        check_percentile("p_w", p_w)?;
        contrib.check_head(head)?;
        let activation_keep = build_activation_masks(contrib, p_a)?;
        let activation_dense = activation_keep
            .iter()
            .map(|idx| {
                let mut m = Bitmask::empty(contrib.dim_q);
                idx.iter().for_each(|&i| m.set(i as usize));
                m
            })
            .collect();
        let q = contrib.dim_q;
        let ql = q * contrib.n_classes;
        Ok(MaskSet {
            contrib,
            head,
            p_a,
            p_w,
            keep_a: keep_count(q, p_a),
            keep_w: keep_count(ql, p_w),
            activation_keep,
            activation_dense,
            weight_keep: (0..contrib.n_classes).map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.contrib.n_classes
    }

    pub fn activation_keep(&self, class: usize) -> &[u32] {
        &self.activation_keep[class]
    }

    pub fn activation_mask(&self, class: usize) -> &Bitmask {
        &self.activation_dense[class]
    }

    pub fn weight_mask(&self, class: usize) -> &Bitmask {
        self.weight_keep[class]
            .get_or_init(|| weight_mask_for_class(self.contrib, self.head, class, self.p_w))
    }

    pub fn weight_keep(&self, class: usize) -> Vec<(u32, u32)> {
        pairs(self.weight_mask(class), self.head.n_classes)
    }

    /// Number of classes whose weight mask has been built so far.
    pub fn materialized(&self) -> usize {
        self.weight_keep.iter().filter(|c| c.get().is_some()).count()
    }
}

/// `(W ⊙ M_w^l)ᵀ (m_l ⊙ clip(h, δ)) + b` for an explicit class `l`.
pub fn line_logits_for_class(
    features: &[f64],
    head: &LinearHead,
    masks: &MaskSet<'_>,
    delta: f64,
    class: usize,
) -> Result<Vec<f64>> {
    head.check_features(features)?;
    if masks.head.dim_q != head.dim_q || masks.head.n_classes != head.n_classes {
        return Err(Error::DimMismatch {
            context: "mask set vs head",
            expected: head.dim_q * head.n_classes,
            got: masks.head.dim_q * masks.head.n_classes,
        });
    }
    if class >= head.n_classes {
        return Err(Error::ClassOutOfRange {
            class,
            n_classes: head.n_classes,
        });
    }
    let classes = head.n_classes;
    let act = masks.activation_mask(class);
    let wmask = masks.weight_mask(class);
    let mut out = vec![0.0f64; classes];
    for (i, (row, &a)) in head.weights.chunks_exact(classes).zip(features).enumerate() {
        if !act.get(i) {
            continue;
        }
        let a = a.min(delta);
        let base = i * classes;
        for (j, (acc, &w)) in out.iter_mut().zip(row).enumerate() {
            if wmask.get(base + j) {
                *acc += f64::from(w) * a;
            }
        }
    }
    for (acc, &b) in out.iter_mut().zip(&head.bias) {
        *acc += f64::from(b);
    }
    Ok(out)
}

/// LINe logits with the masks of the base model's predicted class.
pub fn line_logits(features: &[f64], head: &LinearHead, masks: &MaskSet<'_>, delta: f64) -> Result<Vec<f64>> {
    let class = predict_class(features, head)?;
    line_logits_for_class(features, head, masks, delta, class)
}

/// Tied-covariance Gaussian class model.
#[derive(Debug, Clone)]
pub struct MahalanobisFit {
    pub means: Vec<DVector<f64>>,
    pub precision: DMatrix<f64>,
}

impl MahalanobisFit {
    /// Uses `covariance` as given (no regularisation).
    pub fn from_covariance(means: Vec<Vec<f64>>, covariance: DMatrix<f64>) -> Result<Self> {
        let q = covariance.nrows();
        if covariance.ncols() != q || means.is_empty() || means.iter().any(|m| m.len() != q) {
            return Err(Error::invalid("mahalanobis means/covariance shapes disagree"));
        }
        let precision = covariance
            .cholesky()
            .ok_or(Error::SingularCovariance)?
            .inverse();
        Ok(MahalanobisFit {
            means: means.into_iter().map(DVector::from_vec).collect(),
            precision,
        })
    }

    pub fn dim(&self) -> usize {
        self.precision.nrows()
    }

    /// `−min_l (h − μ_l)ᵀ Σ⁻¹ (h − μ_l)`.
    pub fn score(&self, features: &[f64]) -> Result<f64> {
        if features.len() != self.dim() {
            return Err(Error::DimMismatch {
                context: "feature vector vs mahalanobis fit",
                expected: self.dim(),
                got: features.len(),
            });
        }
        let h = DVector::from_column_slice(features);
        let best = self
            .means
            .iter()
            .map(|mu| {
                let d = &h - mu;
                (d.transpose() * &self.precision * &d)[(0, 0)]
            })
            .fold(f64::INFINITY, f64::min);
        Ok(-best)
    }
}

/// Class means and tied covariance of a labelled dump, regularised by
/// `ε·I` with `ε = 1e-6 · trace(Σ) / q`.
pub fn fit_mahalanobis(train: &FeatureDump) -> Result<MahalanobisFit> {
    let labels = train.labels.as_deref().ok_or_else(|| Error::MissingLabels {
        tag: train.tag.clone(),
    })?;
    let q = train.dim_q;
    let classes = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
    let mut sums = vec![vec![0.0f64; q]; classes];
    let mut counts = vec![0usize; classes];
    for (row, &y) in train.rows().zip(labels) {
        counts[y as usize] += 1;
        for (s, &v) in sums[y as usize].iter_mut().zip(row) {
            *s += f64::from(v);
        }
    }
    let missing: Vec<usize> = (0..classes).filter(|&l| counts[l] == 0).collect();
    if !missing.is_empty() {
        return Err(Error::MissingClasses(missing));
    }
    let means: Vec<Vec<f64>> = sums
        .into_iter()
        .zip(&counts)
        .map(|(s, &n)| s.into_iter().map(|v| v / n as f64).collect())
        .collect();
    let mut cov = DMatrix::<f64>::zeros(q, q);
    for (row, &y) in train.rows().zip(labels) {
        let d = DVector::from_iterator(q, row.iter().zip(&means[y as usize]).map(|(&v, m)| f64::from(v) - m));
        cov.syger(1.0, &d, &d, 1.0);
    }
    cov /= train.n_samples() as f64;
    let eps = 1e-6 * cov.trace() / q as f64;
    for i in 0..q {
        cov[(i, i)] += eps;
    }
    MahalanobisFit::from_covariance(means, cov)
}

/// Per-neuron mean activation over a dump (DICE's salience weights).
pub fn mean_activation(dump: &FeatureDump) -> Vec<f64> {
    let mut sums = vec![0.0f64; dump.dim_q];
    for row in dump.rows() {
        for (s, &v) in sums.iter_mut().zip(row) {
            *s += f64::from(v);
        }
    }
    let n = dump.n_samples() as f64;
    sums.into_iter().map(|s| s / n).collect()
}

/// DICE's single class-agnostic mask: keep the largest entries of
/// `mean_activation_i · W_ij` by signed value.
pub fn dice_mask(head: &LinearHead, mean_activation: &[f64], p_w: f64) -> Result<Bitmask> {
    check_percentile("p_w", p_w)?;
    head.check_features(mean_activation)?;
    let salience: Vec<f64> = (0..head.dim_q)
        .flat_map(|i| (0..head.n_classes).map(move |j| (i, j)))
        .map(|(i, j)| mean_activation[i] * head.weight(i, j))
        .collect();
    Ok(top_k_mask(&salience, keep_count(salience.len(), p_w)))
}

fn masked_logits(features: &[f64], head: &LinearHead, mask: &Bitmask) -> Vec<f64> {
    let classes = head.n_classes;
    let mut out = vec![0.0f64; classes];
    for (i, (row, &a)) in head.weights.chunks_exact(classes).zip(features).enumerate() {
        for (j, (acc, &w)) in out.iter_mut().zip(row).enumerate() {
            if mask.get(i * classes + j) {
                *acc += f64::from(w) * a;
            }
        }
    }
    for (acc, &b) in out.iter_mut().zip(&head.bias) {
        *acc += f64::from(b);
    }
    out
}

#[derive(Debug)]
enum Kind<'a> {
    Energy,
    Msp,
    React,
    Line(MaskSet<'a>),
    Dice(Bitmask),
    Mahalanobis(MahalanobisFit),
}

/// A scoring method with everything it needs precomputed (masks, fits).
/// Scoring is read-only and may run concurrently.
#[derive(Debug)]
pub struct Detector<'a> {
    head: &'a LinearHead,
    config: DetectorConfig,
    kind: Kind<'a>,
}

impl<'a> Detector<'a> {
    /// Builds the detector named by `config.method`. LINe needs `contrib`;
    /// DICE and Mahalanobis need the ID training dump `train`.
    pub fn new(
        config: DetectorConfig,
        head: &'a LinearHead,
        contrib: Option<&'a ContributionMatrix>,
        train: Option<&FeatureDump>,
    ) -> Result<Self> {
        config.validate()?;
        head.validate()?;
        let need_train = || {
            train.ok_or_else(|| Error::invalid(format!("method {} needs an ID training dump", config.method)))
        };
        let kind = match config.method {
            Method::Energy => Kind::Energy,
            Method::Msp => Kind::Msp,
            Method::React => Kind::React,
            Method::Line => {
                let c = contrib.ok_or_else(|| Error::invalid("method line needs a contribution matrix"))?;
                Kind::Line(MaskSet::new(c, head, config.p_a, config.p_w)?)
            }
            Method::Dice => {
                let train = need_train()?;
                if train.dim_q != head.dim_q {
                    return Err(Error::DimMismatch {
                        context: "training dump vs head",
                        expected: head.dim_q,
                        got: train.dim_q,
                    });
                }
                Kind::Dice(dice_mask(head, &mean_activation(train), config.p_w)?)
            }
            Method::Mahalanobis => Kind::Mahalanobis(fit_mahalanobis(need_train()?)?),
        };
        Ok(Detector { head, config, kind })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn masks(&self) -> Option<&MaskSet<'a>> {
        match &self.kind {
            Kind::Line(m) => Some(m),
            _ => None,
        }
    }

    pub fn score(&self, features: &[f64]) -> Result<ScoreRecord> {
        let head = self.head;
        head.check_features(features)?;
        let raw = head.logits(features);
        let predicted_class = argmax(&raw);
        let t = self.config.temperature;
        let score = match &self.kind {
            Kind::Energy => energy_score(&raw, t),
            Kind::Msp => msp_score(&raw),
            Kind::React => energy_score(&head.logits(&clip_activations(features, self.config.delta)), t),
            Kind::Line(masks) => {
                let class = match self.config.class_source {
                    ClassSource::Raw => predicted_class,
                    ClassSource::Clipped => argmax(&head.logits(&clip_activations(features, self.config.delta))),
                };
                energy_score(&line_logits_for_class(features, head, masks, self.config.delta, class)?, t)
            }
            Kind::Dice(mask) => energy_score(&masked_logits(features, head, mask), t),
            Kind::Mahalanobis(fit) => fit.score(features)?,
        };
        if !score.is_finite() {
            return Err(Error::invalid(format!("non-finite {} score", self.config.method)));
        }
        Ok(ScoreRecord {
            score,
            predicted_class,
            activated_count: activated_count(features, 0.0),
        })
    }

    /// Scores every row of `dump`, in row order.
    pub fn score_dump(&self, dump: &FeatureDump) -> Result<Vec<ScoreRecord>> {
        (0..dump.n_samples())
            .into_par_iter()
            .map(|i| self.score(&dump.row_f64(i)))
            .collect()
    }
}

pub fn score_energy(features: &[f64], head: &LinearHead) -> Result<ScoreRecord> {
    Detector::new(DetectorConfig::reduction(Method::Energy), head, None, None)?.score(features)
}

pub fn score_msp(features: &[f64], head: &LinearHead) -> Result<ScoreRecord> {
    Detector::new(DetectorConfig::reduction(Method::Msp), head, None, None)?.score(features)
}

pub fn score_react(features: &[f64], head: &LinearHead, delta: f64) -> Result<ScoreRecord> {
    let config = DetectorConfig {
        delta,
        ..DetectorConfig::reduction(Method::React)
    };
    Detector::new(config, head, None, None)?.score(features)
}

pub fn score_line(
    features: &[f64],
    head: &LinearHead,
    contrib: &ContributionMatrix,
    config: &DetectorConfig,
) -> Result<ScoreRecord> {
    let config = DetectorConfig {
        method: Method::Line,
        ..*config
    };
    Detector::new(config, head, Some(contrib), None)?.score(features)
}

pub fn score_dice(features: &[f64], head: &LinearHead, mean_activation: &[f64], p_w: f64) -> Result<ScoreRecord> {
    head.check_features(features)?;
    let mask = dice_mask(head, mean_activation, p_w)?;
    Ok(ScoreRecord {
        score: energy_score(&masked_logits(features, head, &mask), 1.0),
        predicted_class: predict_class(features, head)?,
        activated_count: activated_count(features, 0.0),
    })
}

pub fn score_mahalanobis(features: &[f64], head: &LinearHead, fit: &MahalanobisFit) -> Result<ScoreRecord> {
    head.check_features(features)?;
    Ok(ScoreRecord {
        score: fit.score(features)?,
        predicted_class: predict_class(features, head)?,
        activated_count: activated_count(features, 0.0),
    })
}

/// Writes `sample_index,score,predicted_class,activated_count` with a
/// header row.
pub fn write_scores_csv<W: std::io::Write>(out: W, records: &[ScoreRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sample_index", "score", "predicted_class", "activated_count"])?;
    for (i, r) in records.iter().enumerate() {
        w.write_record([
            i.to_string(),
            r.score.to_string(),
            r.predicted_class.to_string(),
            r.activated_count.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("<scores csv>", e))?;
    Ok(())
}

#[derive(serde::Deserialize)]
struct ScoreRow {
    sample_index: usize,
    score: f64,
    predicted_class: usize,
    activated_count: usize,
}

pub fn read_scores_csv<R: std::io::Read>(input: R) -> Result<Vec<ScoreRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    if headers != vec!["sample_index", "score", "predicted_class", "activated_count"] {
        return Err(Error::invalid(format!("unexpected score csv header {headers:?}")));
    }
    let mut out = Vec::new();
    for (expected, row) in r.deserialize::<ScoreRow>().enumerate() {
        let row = row?;
        if row.sample_index != expected {
            return Err(Error::invalid(format!(
                "score csv row {expected} has sample_index {}",
                row.sample_index
            )));
        }
        if !row.score.is_finite() {
            return Err(Error::NonFinite {
                what: "scores",
                index: expected,
            });
        }
        out.push(ScoreRecord {
            score: row.score,
            predicted_class: row.predicted_class,
            activated_count: row.activated_count,
        });
    }
    if out.is_empty() {
        return Err(Error::invalid("score csv has no rows"));
    }
    Ok(out)
}
