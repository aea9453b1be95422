//! Detection metrics and diagnostics.
//!
//! ID samples are the positive class throughout: a detector declares
//! "in-distribution" when `score >= τ`.

use std::fmt;
use std::io::Write;

use rayon::prelude::*;

use crate::detector::{activated_count, top_k_indices, Detector, DetectorConfig, Method};
use crate::error::{Error, Result};
use crate::store::{ContributionMatrix, FeatureDump, LinearHead};

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub id_scores: Vec<f64>,
    pub ood_scores: Vec<f64>,
    pub id_name: String,
    pub ood_name: String,
}

impl ScoreSet {
    pub fn new(id_scores: Vec<f64>, ood_scores: Vec<f64>) -> Result<Self> {
        Self::named(id_scores, ood_scores, "id", "ood")
    }

    pub fn named(
        id_scores: Vec<f64>,
        ood_scores: Vec<f64>,
        id_name: impl Into<String>,
        ood_name: impl Into<String>,
    ) -> Result<Self> {
        if id_scores.is_empty() || ood_scores.is_empty() {
            return Err(Error::invalid("score sets must both be nonempty"));
        }
        for (what, v) in [("id scores", &id_scores), ("ood scores", &ood_scores)] {
            if let Some(index) = v.iter().position(|s| !s.is_finite()) {
                return Err(Error::NonFinite { what, index });
            }
        }
        Ok(ScoreSet {
            id_scores,
            ood_scores,
            id_name: id_name.into(),
            ood_name: ood_name.into(),
        })
    }

    /// Same scores with the roles of ID and OOD exchanged.
    pub fn swapped(&self) -> ScoreSet {
        ScoreSet {
            id_scores: self.ood_scores.clone(),
            ood_scores: self.id_scores.clone(),
            id_name: self.ood_name.clone(),
            ood_name: self.id_name.clone(),
        }
    }
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

// First index with s[i] >= x (resp. > x) in an ascending slice.
fn lower_bound(s: &[f64], x: f64) -> usize {
    s.partition_point(|&v| v < x)
}

fn upper_bound(s: &[f64], x: f64) -> usize {
    s.partition_point(|&v| v <= x)
}

/// `P(id > ood) + ½ P(id = ood)`.
///
/// Computed as an integer count of twice the number of winning pairs plus
/// ties, so the value is exactly the Mann–Whitney pair count divided by
/// `2 · n_id · n_ood`.
pub fn auroc(scores: &ScoreSet) -> f64 {
    let ood = sorted(&scores.ood_scores);
    let mut twice: u128 = 0;
    for &s in &scores.id_scores {
        let below = lower_bound(&ood, s) as u128;
        let equal = upper_bound(&ood, s) as u128 - below;
        twice += 2 * below + equal;
    }
    let pairs = 2 * scores.id_scores.len() as u128 * scores.ood_scores.len() as u128;
    twice as f64 / pairs as f64
}

/// FPR at the largest threshold whose TPR reaches `tpr_target`.
///
/// With `k` the smallest count satisfying `k / n_id >= tpr_target`, that
/// threshold is the `k`-th largest ID score; the result is the fraction of
/// OOD scores at or above it.
pub fn fpr_at_tpr(scores: &ScoreSet, tpr_target: f64) -> Result<f64> {
    if !(tpr_target > 0.0 && tpr_target <= 1.0) {
        return Err(Error::invalid(format!("tpr_target must lie in (0, 1], got {tpr_target}")));
    }
    let n_id = scores.id_scores.len();
    let k = (1..=n_id)
        .find(|&k| k as f64 / n_id as f64 >= tpr_target)
        .unwrap_or(n_id);
    let mut id = sorted(&scores.id_scores);
    id.reverse();
    let tau = id[k - 1];
    let ood = sorted(&scores.ood_scores);
    let at_or_above = ood.len() - lower_bound(&ood, tau);
    Ok(at_or_above as f64 / ood.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub method: String,
    pub id_name: String,
    pub ood_name: String,
    pub auroc: f64,
    pub fpr95: f64,
    pub n_id: usize,
    pub n_ood: usize,
    pub config: Option<DetectorConfig>,
}

pub fn evaluate(scores: &ScoreSet, method: impl Into<String>, config: Option<DetectorConfig>) -> Result<EvalReport> {
    Ok(EvalReport {
        method: method.into(),
        id_name: scores.id_name.clone(),
        ood_name: scores.ood_name.clone(),
        auroc: auroc(scores),
        fpr95: fpr_at_tpr(scores, 0.95)?,
        n_id: scores.id_scores.len(),
        n_ood: scores.ood_scores.len(),
        config,
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "method  {}", self.method)?;
        if let Some(c) = &self.config {
            writeln!(
                f,
                "config  delta={} p_a={} p_w={} T={}",
                c.delta, c.p_a, c.p_w, c.temperature
            )?;
        }
        writeln!(f, "id      {} (n={})", self.id_name, self.n_id)?;
        writeln!(f, "ood     {} (n={})", self.ood_name, self.n_ood)?;
        writeln!(f, "AUROC   {:.2}%", 100.0 * self.auroc)?;
        write!(f, "FPR95   {:.2}%", 100.0 * self.fpr95)
    }
}

pub fn write_reports_csv<W: Write>(out: W, reports: &[EvalReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "method", "id", "ood", "auroc", "fpr95", "n_id", "n_ood", "delta", "p_a", "p_w",
    ])?;
    for r in reports {
        let (d, pa, pw) = match &r.config {
            Some(c) => (c.delta.to_string(), c.p_a.to_string(), c.p_w.to_string()),
            None => (String::new(), String::new(), String::new()),
        };
        w.write_record([
            r.method.clone(),
            r.id_name.clone(),
            r.ood_name.clone(),
            r.auroc.to_string(),
            r.fpr95.to_string(),
            r.n_id.to_string(),
            r.n_ood.to_string(),
            d,
            pa,
            pw,
        ])?;
    }
    w.flush().map_err(|e| Error::io("<report csv>", e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `(bin_left, count)` pairs covering activated counts `0..=q`.
    pub bins: Vec<(f64, usize)>,
    pub mean: f64,
    /// 25th, 50th and 75th percentiles (linear interpolation).
    pub quartiles: [f64; 3],
}

impl Histogram {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["bin_left", "count"])?;
        for (left, count) in &self.bins {
            w.write_record([left.to_string(), count.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<histogram csv>", e))?;
        Ok(())
    }
}

/// Bins the per-sample activated-neuron counts of a dump into `n_bins`
/// equal-width bins over `[0, q + 1)`.
pub fn activated_histogram(dump: &FeatureDump, threshold: f64, n_bins: usize) -> Result<Histogram> {
    if n_bins == 0 {
        return Err(Error::invalid("n_bins must be positive"));
    }
    let counts: Vec<usize> = dump
        .rows()
        .map(|row| {
            let wide: Vec<f64> = row.iter().map(|&v| f64::from(v)).collect();
            activated_count(&wide, threshold)
        })
        .collect();
    let width = (dump.dim_q + 1) as f64 / n_bins as f64;
    let mut bins: Vec<(f64, usize)> = (0..n_bins).map(|k| (k as f64 * width, 0)).collect();
    for &c in &counts {
        let k = ((c as f64 / width).floor() as usize).min(n_bins - 1);
        bins[k].1 += 1;
    }
    let mut values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    values.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let quantile = |p: f64| {
        let pos = p * (values.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        values[lo] + (values[hi] - values[lo]) * (pos - lo as f64)
    };
    Ok(Histogram {
        bins,
        mean,
        quartiles: [quantile(0.25), quantile(0.5), quantile(0.75)],
    })
}

/// Percentage of neurons that sit in the top `⌈top_fraction·q⌉` of the
/// contribution column of strictly more than `o`% of the classes.
pub fn overlap_fraction(c: &ContributionMatrix, top_fraction: f64, o: f64) -> Result<f64> {
    if !(top_fraction > 0.0 && top_fraction <= 1.0) {
        return Err(Error::invalid(format!("top_fraction must lie in (0, 1], got {top_fraction}")));
    }
    if !(0.0..=100.0).contains(&o) {
        return Err(Error::invalid(format!("o must lie in [0, 100], got {o}")));
    }
    let q = c.dim_q;
    // The small slack keeps e.g. 0.1 × 30 = 3.0000000000000004 at 3.
    let top = ((top_fraction * q as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut hits = vec![0usize; q];
    for l in 0..c.n_classes {
        let column: Vec<f64> = c.column(l).into_iter().map(f64::from).collect();
        for i in top_k_indices(&column, top) {
            hits[i] += 1;
        }
    }
    let limit = o * c.n_classes as f64;
    let shared = hits.iter().filter(|&&h| h as f64 * 100.0 > limit).count();
    Ok(100.0 * shared as f64 / q as f64)
}

/// Cartesian grid of LINe settings. It must contain the reduction point
/// (`δ = ∞`, `p_a = 0`, `p_w = 0`), where LINe equals the energy score.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub deltas: Vec<f64>,
    pub p_as: Vec<f64>,
    pub p_ws: Vec<f64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.deltas.is_empty() || self.p_as.is_empty() || self.p_ws.is_empty() {
            return Err(Error::invalid("sweep grid axes must be nonempty"));
        }
        let has_reduction = self.deltas.contains(&f64::INFINITY)
            && self.p_as.contains(&0.0)
            && self.p_ws.contains(&0.0);
        if !has_reduction {
            return Err(Error::invalid(
                "sweep grid must include delta=inf, p_a=0 and p_w=0",
            ));
        }
        Ok(())
    }

    /// Grid points in `delta`-major, then `p_a`, then `p_w` order.
    pub fn points(&self) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::with_capacity(self.deltas.len() * self.p_as.len() * self.p_ws.len());
        for &d in &self.deltas {
            for &a in &self.p_as {
                for &w in &self.p_ws {
                    out.push((d, a, w));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub config: DetectorConfig,
    /// One report per OOD set, in input order.
    pub reports: Vec<EvalReport>,
    pub mean_auroc: f64,
    pub mean_fpr95: f64,
}

/// Evaluates LINe at every grid point against every OOD dump. Points run
/// in parallel on `workers` threads (0 = rayon default); rows come back
/// in grid order.
pub fn sweep(
    head: &LinearHead,
    contrib: &ContributionMatrix,
    id: &FeatureDump,
    oods: &[FeatureDump],
    grid: &SweepGrid,
    base: &DetectorConfig,
    workers: usize,
) -> Result<Vec<SweepRow>> {
    grid.validate()?;
    if oods.is_empty() {
        return Err(Error::invalid("sweep needs at least one OOD dump"));
    }
    let run = || -> Result<Vec<SweepRow>> {
        grid.points()
            .into_par_iter()
            .map(|(delta, p_a, p_w)| {
                let config = DetectorConfig {
                    delta,
                    p_a,
                    p_w,
                    method: Method::Line,
                    ..*base
                };
                let det = Detector::new(config, head, Some(contrib), None)?;
                let id_scores: Vec<f64> = det.score_dump(id)?.iter().map(|r| r.score).collect();
                let mut reports = Vec::with_capacity(oods.len());
                for ood in oods {
                    let ood_scores: Vec<f64> = det.score_dump(ood)?.iter().map(|r| r.score).collect();
                    let set = ScoreSet::named(id_scores.clone(), ood_scores, &id.tag, &ood.tag)?;
                    reports.push(evaluate(&set, "line", Some(config))?);
                }
                let k = reports.len() as f64;
                Ok(SweepRow {
                    config,
                    mean_auroc: reports.iter().map(|r| r.auroc).sum::<f64>() / k,
                    mean_fpr95: reports.iter().map(|r| r.fpr95).sum::<f64>() / k,
                    reports,
                })
            })
            .collect()
    };
    let rows = if workers == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run)?
    };
    Ok(rows)
}

/// Row with the lowest mean FPR95; the earliest grid point wins ties.
pub fn best_row(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter().reduce(|best, r| if r.mean_fpr95 < best.mean_fpr95 { r } else { best })
}

/// One row per grid point: the setting, the OOD-averaged metrics, then
/// per-OOD-set AUROC and FPR95 columns.
pub fn write_sweep_csv<W: Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["delta", "p_a", "p_w", "auroc", "fpr95"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    if let Some(first) = rows.first() {
        for r in &first.reports {
            header.push(format!("auroc_{}", r.ood_name));
            header.push(format!("fpr95_{}", r.ood_name));
        }
    }
    w.write_record(&header)?;
    for row in rows {
        let mut rec = vec![
            row.config.delta.to_string(),
            row.config.p_a.to_string(),
            row.config.p_w.to_string(),
            row.mean_auroc.to_string(),
            row.mean_fpr95.to_string(),
        ];
        for r in &row.reports {
            rec.push(r.auroc.to_string());
            rec.push(r.fpr95.to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
    Ok(())
}
