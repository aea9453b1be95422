//! Values observed on the reference toy run (seed 0), pinned as
//! regression checks.

use line_ood::contribution::{contribution_matrix, ContribOptions};
use line_ood::detector::{Detector, DetectorConfig};
use line_ood::store::Approx;
use line_ood::toy::{generate_blobs, gradient_check, BlobSpec, ToyExperiment};

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Nearest class mean, with the means estimated from the data itself.
fn centroid_probe_accuracy(xs: &[Vec<f64>], ys: &[u32], classes: usize) -> f64 {
    let d = xs[0].len();
    let mut means = vec![vec![0.0; d]; classes];
    let mut counts = vec![0usize; classes];
    for (x, &y) in xs.iter().zip(ys) {
        counts[y as usize] += 1;
        for (m, v) in means[y as usize].iter_mut().zip(x) {
            *m += v;
        }
    }
    for (m, &n) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= n as f64);
    }
    let hits = xs
        .iter()
        .zip(ys)
        .filter(|(x, &y)| {
            let best = (0..classes)
                .min_by(|&a, &b| dist(x, &means[a]).total_cmp(&dist(x, &means[b])))
                .unwrap();
            best == y as usize
        })
        .count();
    hits as f64 / xs.len() as f64
}

#[test]
fn blobs_are_linearly_separable() {
    let spec = BlobSpec::default();
    let (xs, ys) = generate_blobs(&spec).unwrap();
    let acc = centroid_probe_accuracy(&xs, &ys, spec.n_classes);
    assert!(acc >= 0.95, "probe accuracy {acc}");
    assert!((acc - 0.997).abs() < 1e-9, "probe accuracy {acc} differs from the pinned 0.997");
}

#[test]
fn reference_model_trains_and_has_faithful_gradients() {
    let exp = ToyExperiment::with_seed(0);
    let art = exp.run().unwrap();
    assert!(art.report.train_accuracy >= 0.95);
    assert_eq!(art.report.train_accuracy, 1.0);

    let (xs, ys) = generate_blobs(&exp.test_spec()).unwrap();
    let check = gradient_check(&art.model, &xs[..64], &ys[..64], 500, 3).unwrap();
    assert!(check.max_relative_error < 1e-3, "{check:?}");
}

#[test]
fn ood_box_stays_away_from_the_class_means() {
    let exp = ToyExperiment::with_seed(0);
    let ood = line_ood::toy::generate_ood_uniform(exp.blobs.dim_in, exp.ood_samples, exp.ood_bounds, exp.ood_seed()).unwrap();
    let means = exp.blobs.means();
    let closest = ood
        .iter()
        .flat_map(|x| means.iter().map(move |m| dist(x, m)))
        .fold(f64::INFINITY, f64::min);
    // ID samples sit about noise·√d = 1.26 from their mean.
    assert!(closest > 3.0, "closest OOD point is {closest} from a class mean");
}

#[test]
fn line_ranks_typical_id_above_typical_ood() {
    let art = ToyExperiment::with_seed(0).run().unwrap();
    let head = &art.model.head;
    let c = contribution_matrix(&art.id_train, head, Approx::Taylor, &ContribOptions::default()).unwrap();
    let det = Detector::new(DetectorConfig::default(), head, Some(&c), None).unwrap();
    let median = |dump| {
        let mut s: Vec<f64> = det.score_dump(dump).unwrap().iter().map(|r| r.score).collect();
        s.sort_by(f64::total_cmp);
        s[s.len() / 2]
    };
    let (id, ood) = (median(&art.id_test), median(&art.ood));
    assert!(id > ood, "median ID score {id} <= median OOD score {ood}");
}
