//! Per-neuron, per-class contribution estimates and their class averages.
//!
//! For a linear head the class-`l` logit is `f_l(a) = Σ_i a_i W_il + b_l`,
//! so the first-order (Taylor) contribution `|a_i ∂f_l/∂a_i|` and the
//! path-integrated (IntGrad) contribution `|a_i ∫₀¹ ∂f_l(αa)/∂a_i dα|` both
//! reduce to `|a_i W_il|`, which is also the exact single-neuron occlusion
//! difference. The matrix `C` averages these over the training samples of
//! each ground-truth class.

use std::ops::Range;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::store::{Approx, ContributionMatrix, FeatureDump, LinearHead};

/// Contribution of every penultimate neuron to one class logit for one
/// sample. All values are finite and nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronContribution {
    pub values: Vec<f64>,
    pub class_index: usize,
}

fn check_inputs(features: &[f64], head: &LinearHead, class: usize) -> Result<()> {
    head.check_features(features)?;
    if class >= head.n_classes {
        return Err(Error::ClassOutOfRange {
            class,
            n_classes: head.n_classes,
        });
    }
    Ok(())
}

/// `|a_i · ∂f_l/∂a_i|`; the gradient of a linear head is its weight column.
pub fn taylor_contribution(features: &[f64], head: &LinearHead, class: usize) -> Result<NeuronContribution> {
    check_inputs(features, head, class)?;
    let values = features
        .iter()
        .enumerate()
        .map(|(i, &a)| (a * head.weight(i, class)).abs())
        .collect();
    Ok(NeuronContribution {
        values,
        class_index: class,
    })
}

/// `|a_i · ∫₀¹ ∂f_l(αa)/∂a_i dα|`. The integrand of a linear head does not
/// depend on `α`, so the integral is evaluated in closed form.
pub fn intgrad_contribution(features: &[f64], head: &LinearHead, class: usize) -> Result<NeuronContribution> {
    check_inputs(features, head, class)?;
    let values = features
        .iter()
        .enumerate()
        .map(|(i, &a)| (a * path_integrated_gradient(head, i, class)).abs())
        .collect();
    Ok(NeuronContribution {
        values,
        class_index: class,
    })
}

// ∫₀¹ W_il dα
fn path_integrated_gradient(head: &LinearHead, neuron: usize, class: usize) -> f64 {
    head.weight(neuron, class)
}

pub fn sample_contribution(
    features: &[f64],
    head: &LinearHead,
    class: usize,
    approx: Approx,
) -> Result<NeuronContribution> {
    match approx {
        Approx::Taylor => taylor_contribution(features, head, class),
        Approx::IntGrad => intgrad_contribution(features, head, class),
    }
}

/// Brute-force ablation: `|f_l(a) − f_l(a; a_i ← 0)|` for every neuron,
/// each obtained from a full forward pass through the head.
pub fn occlusion_oracle(features: &[f64], head: &LinearHead, class: usize) -> Result<Vec<f64>> {
    check_inputs(features, head, class)?;
    let full = head.logits(features)[class];
    let mut ablated = features.to_vec();
    Ok((0..features.len())
        .map(|i| {
            let saved = ablated[i];
            ablated[i] = 0.0;
            let z = head.logits(&ablated)[class];
            ablated[i] = saved;
            (full - z).abs()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContribOptions {
    /// Worker threads; 0 uses rayon's global pool.
    pub workers: usize,
    /// Samples per parallel work item.
    pub chunk_size: usize,
    /// Use only the first `limit` samples (smoke tests).
    pub limit: Option<usize>,
}

impl Default for ContribOptions {
    fn default() -> Self {
        ContribOptions {
            workers: 0,
            chunk_size: 256,
            limit: None,
        }
    }
}

/// Averages per-sample contributions into `C`, grouping samples by their
/// ground-truth label.
///
/// Column sums are accumulated exactly and rounded once, so the result is
/// independent of worker count and chunking.
pub fn contribution_matrix(
    train: &FeatureDump,
    head: &LinearHead,
    approx: Approx,
    opts: &ContribOptions,
) -> Result<ContributionMatrix> {
    let labels = train.labels.as_deref().ok_or_else(|| Error::MissingLabels {
        tag: train.tag.clone(),
    })?;
    if train.dim_q != head.dim_q {
        return Err(Error::DimMismatch {
            context: "feature dump dim_q vs head",
            expected: head.dim_q,
            got: train.dim_q,
        });
    }
    train.validate_labels(head.n_classes)?;
    if opts.chunk_size == 0 {
        return Err(Error::invalid("chunk_size must be positive"));
    }
    let n = opts.limit.map_or(train.n_samples(), |l| l.min(train.n_samples()));

    let (q, classes) = (head.dim_q, head.n_classes);
    let mut counts = vec![0u64; classes];
    for &y in &labels[..n] {
        counts[y as usize] += 1;
    }
    let missing: Vec<usize> = (0..classes).filter(|&l| counts[l] == 0).collect();
    if !missing.is_empty() {
        return Err(Error::MissingClasses(missing));
    }

    let chunks: Vec<Range<usize>> = (0..n)
        .step_by(opts.chunk_size)
        .map(|s| s..(s + opts.chunk_size).min(n))
        .collect();
    let accumulate = || -> Result<Vec<ClassSums>> {
        chunks
            .par_iter()
            .map(|range| {
                let mut sums = ClassSums::new(q, classes);
                for s in range.clone() {
                    let class = labels[s] as usize;
                    let contrib = sample_contribution(&train.row_f64(s), head, class, approx)?;
                    sums.add(class, &contrib.values);
                }
                Ok(sums)
            })
            .collect()
    };
    let partials = if opts.workers == 0 {
        accumulate()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(opts.workers)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(accumulate)?
    };

    let mut total = ClassSums::new(q, classes);
    for p in partials {
        total.merge(p);
    }

    let mut values = vec![0f32; q * classes];
    for (class, column) in total.columns.into_iter().enumerate() {
        let Some(column) = column else { continue };
        let n_l = counts[class] as f64;
        for (i, acc) in column.into_iter().enumerate() {
            values[i * classes + class] = (acc.value() / n_l) as f32;
        }
    }
    let c = ContributionMatrix {
        dim_q: q,
        n_classes: classes,
        values,
        samples_per_class: counts,
        approx,
    };
    c.validate()?;
    Ok(c)
}

/// Per-class column accumulators, allocated only for classes seen.
struct ClassSums {
    q: usize,
    columns: Vec<Option<Vec<ExactSum>>>,
}

impl ClassSums {
    fn new(q: usize, classes: usize) -> Self {
        ClassSums {
            q,
            columns: (0..classes).map(|_| None).collect(),
        }
    }

    fn add(&mut self, class: usize, values: &[f64]) {
        let q = self.q;
        let column = self.columns[class].get_or_insert_with(|| vec![ExactSum::default(); q]);
        for (acc, &v) in column.iter_mut().zip(values) {
            acc.add(v);
        }
    }

    fn merge(&mut self, other: ClassSums) {
        for (mine, theirs) in self.columns.iter_mut().zip(other.columns) {
            let Some(theirs) = theirs else { continue };
            match mine {
                None => *mine = Some(theirs),
                Some(col) => {
                    for (a, b) in col.iter_mut().zip(&theirs) {
                        a.merge(b);
                    }
                }
            }
        }
    }
}

/// Shewchuk-style exact floating-point summation: the running total is
/// kept as a list of non-overlapping partials whose exact sum equals the
/// exact sum of the inputs, and [`ExactSum::value`] returns that sum
/// correctly rounded. The result therefore does not depend on the order in
/// which values (or partial accumulators) are combined.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn add(&mut self, mut x: f64) {
        let mut kept = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        self.partials.truncate(kept);
        self.partials.push(x);
    }

    pub fn merge(&mut self, other: &ExactSum) {
        for &p in &other.partials {
            self.add(p);
        }
    }

    pub fn value(&self) -> f64 {
        let p = &self.partials;
        let mut n = p.len();
        if n == 0 {
            return 0.0;
        }
        n -= 1;
        let mut hi = p[n];
        let mut lo = 0.0;
        while n > 0 {
            let x = hi;
            n -= 1;
            let y = p[n];
            hi = x + y;
            let yr = hi - x;
            lo = y - yr;
            if lo != 0.0 {
                break;
            }
        }
        // Round-half-even correction when the discarded tail sits exactly
        // on a halfway point.
        if n > 0 && ((lo < 0.0 && p[n - 1] < 0.0) || (lo > 0.0 && p[n - 1] > 0.0)) {
            let y = lo * 2.0;
            let x = hi + y;
            if y == x - hi {
                hi = x;
            }
        }
        hi
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn head_2x1(col: [f32; 2]) -> LinearHead {
        LinearHead::new(2, 1, col.to_vec(), vec![0.75]).unwrap()
    }

    #[test]
    fn two_neuron_hand_case() {
        let head = head_2x1([0.5, -0.25]);
        let t = taylor_contribution(&[1.0, 2.0], &head, 0).unwrap();
        assert_eq!(t.values, vec![0.5, 0.5]);
        let g = intgrad_contribution(&[1.0, 2.0], &head, 0).unwrap();
        assert_eq!(g.values, vec![0.5, 0.5]);
        assert_eq!(occlusion_oracle(&[1.0, 2.0], &head, 0).unwrap(), vec![0.5, 0.5]);
    }

    #[test]
    fn zero_features_give_zero_contribution() {
        let head = head_2x1([3.0, -7.0]);
        assert_eq!(taylor_contribution(&[0.0, 0.0], &head, 0).unwrap().values, vec![0.0, 0.0]);
    }

    #[test]
    fn bad_class_and_dims_are_errors() {
        let head = head_2x1([1.0, 1.0]);
        assert!(matches!(
            taylor_contribution(&[1.0, 1.0], &head, 1),
            Err(Error::ClassOutOfRange { class: 1, n_classes: 1 })
        ));
        assert!(matches!(
            intgrad_contribution(&[1.0], &head, 0),
            Err(Error::DimMismatch { .. })
        ));
    }

    fn dump(features: Vec<f32>, q: usize, labels: Vec<u32>) -> FeatureDump {
        FeatureDump::new(q, features, Some(labels), "t").unwrap()
    }

    #[test]
    fn class_average_of_two_samples() {
        let head = LinearHead::new(2, 2, vec![1.0, 0.0, 1.0, 0.0], vec![0.0, 0.0]).unwrap();
        let train = dump(vec![1.0, 3.0, 3.0, 1.0, 5.0, 5.0], 2, vec![0, 0, 1]);
        let c = contribution_matrix(&train, &head, Approx::Taylor, &ContribOptions::default()).unwrap();
        assert_eq!(c.column(0), vec![2.0, 2.0]);
        assert_eq!(c.column(1), vec![0.0, 0.0]);
        assert_eq!(c.samples_per_class, vec![2, 1]);
    }

    #[test]
    fn single_sample_column_is_its_contribution() {
        let head = LinearHead::new(2, 2, vec![0.5, -2.0, -0.25, 4.0], vec![1.0, 1.0]).unwrap();
        let train = dump(vec![1.0, 2.0, 3.0, 0.5], 2, vec![1, 0]);
        let c = contribution_matrix(&train, &head, Approx::Taylor, &ContribOptions::default()).unwrap();
        assert_eq!(c.column(1), vec![2.0, 8.0]);
        assert_eq!(c.column(0), vec![1.5, 0.125]);
    }

    #[test]
    fn missing_class_lists_all_absent_classes() {
        let head = LinearHead::zeros(1, 4);
        let train = dump(vec![1.0, 2.0], 1, vec![1, 1]);
        assert!(matches!(
            contribution_matrix(&train, &head, Approx::Taylor, &ContribOptions::default()),
            Err(Error::MissingClasses(v)) if v == vec![0, 2, 3]
        ));
    }

    #[test]
    fn unlabeled_dump_is_rejected() {
        let head = LinearHead::zeros(1, 1);
        let train = FeatureDump::new(1, vec![1.0], None, "nolabels").unwrap();
        assert!(matches!(
            contribution_matrix(&train, &head, Approx::Taylor, &ContribOptions::default()),
            Err(Error::MissingLabels { .. })
        ));
    }

    #[test]
    fn limit_uses_prefix_only() {
        let head = LinearHead::new(1, 1, vec![1.0], vec![0.0]).unwrap();
        let train = dump(vec![2.0, 100.0], 1, vec![0, 0]);
        let opts = ContribOptions {
            limit: Some(1),
            ..ContribOptions::default()
        };
        let c = contribution_matrix(&train, &head, Approx::Taylor, &opts).unwrap();
        assert_eq!(c.values, vec![2.0]);
        assert_eq!(c.samples_per_class, vec![1]);
    }

    #[test]
    fn exact_sum_is_order_independent() {
        let xs = [1e16, 1.0, -1e16, 3.5, 1e-3, 2.0f64.powi(-60), 7.25];
        let mut fwd = ExactSum::default();
        xs.iter().for_each(|&x| fwd.add(x));
        let mut rev = ExactSum::default();
        xs.iter().rev().for_each(|&x| rev.add(x));
        assert_eq!(fwd.value(), rev.value());
        // math.fsum of the same list
        assert_eq!(fwd.value(), 11.751);

        let mut a = ExactSum::default();
        let mut b = ExactSum::default();
        xs[..3].iter().for_each(|&x| a.add(x));
        xs[3..].iter().for_each(|&x| b.add(x));
        a.merge(&b);
        assert_eq!(a.value(), fwd.value());
    }

    #[test]
    fn exact_sum_rounds_half_even() {
        // 1 + 2^-53 + 2^-106 is just above the halfway point; the correct
        // rounding is 1 + 2^-52.
        let mut s = ExactSum::default();
        for x in [1.0, 2.0f64.powi(-53), 2.0f64.powi(-106)] {
            s.add(x);
        }
        assert_eq!(s.value(), 1.0 + 2.0f64.powi(-52));
    }
}
