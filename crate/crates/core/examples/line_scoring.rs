// Score ID-test and OOD features with LINe and every baseline, then
// compare AUROC and FPR95.

use line_ood::contribution::{contribution_matrix, ContribOptions};
use line_ood::detector::{line_logits, Detector, DetectorConfig, MaskSet, Method};
use line_ood::metrics::{evaluate, ScoreSet};
use line_ood::store::Approx;
use line_ood::toy::ToyExperiment;

pub fn run_example() -> line_ood::Result<()> {
    let art = ToyExperiment::with_seed(0).run()?;
    let head = &art.model.head;
    let c = contribution_matrix(&art.id_train, head, Approx::Taylor, &ContribOptions::default())?;

    let masks = MaskSet::new(&c, head, 10.0, 10.0)?;
    let x = art.id_test.row_f64(0);
    println!("raw logits  {:.3?}", &head.logits(&x)[..4]);
    println!("LINe logits {:.3?}", &line_logits(&x, head, &masks, 0.8)?[..4]);
    println!("kept per class: {} activations, {} weights", masks.keep_a, masks.keep_w);

    println!("{:<12} {:>8} {:>8}", "method", "AUROC", "FPR95");
    for method in Method::ALL {
        let config = match method {
            Method::Line => DetectorConfig { delta: 0.5, p_a: 50.0, p_w: 50.0, ..DetectorConfig::default() },
            Method::React => DetectorConfig { delta: 1.0, ..DetectorConfig::reduction(method) },
            Method::Dice => DetectorConfig { p_w: 50.0, ..DetectorConfig::reduction(method) },
            _ => DetectorConfig::reduction(method),
        };
        let det = Detector::new(config, head, Some(&c), Some(&art.id_train))?;
        let id: Vec<f64> = det.score_dump(&art.id_test)?.iter().map(|r| r.score).collect();
        let ood: Vec<f64> = det.score_dump(&art.ood)?.iter().map(|r| r.score).collect();
        let report = evaluate(&ScoreSet::new(id, ood)?, method.name(), Some(config))?;
        println!("{:<12} {:>7.2}% {:>7.2}%", method, 100.0 * report.auroc, 100.0 * report.fpr95);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
