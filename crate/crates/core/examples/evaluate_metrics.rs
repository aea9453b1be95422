// AUROC and FPR at 95% TPR on small hand-made score sets, including ties.

use line_ood::metrics::{auroc, evaluate, fpr_at_tpr, ScoreSet};

pub fn run_example() -> line_ood::Result<()> {
    let separable = ScoreSet::new(vec![3.0, 4.0, 5.0], vec![0.0, 1.0, 2.0])?;
    println!("separable: AUROC {} FPR95 {}", auroc(&separable), fpr_at_tpr(&separable, 0.95)?);

    // One tie between ID 2.0 and OOD 2.0 counts as half a correct pair.
    let tied = ScoreSet::new(vec![2.0, 3.0], vec![1.0, 2.0])?;
    println!("tied:      AUROC {} (= 3.5 / 4)", auroc(&tied));
    println!("swapped:   AUROC {}", auroc(&tied.swapped()));

    let id: Vec<f64> = (0..100).map(|i| i as f64).collect();
    let ood: Vec<f64> = (0..100).map(|i| i as f64 - 50.0).collect();
    let set = ScoreSet::named(id, ood, "shifted-id", "shifted-ood")?;
    for tpr in [0.5, 0.9, 0.95, 1.0] {
        println!("FPR at {:>3}% TPR: {:.2}", 100.0 * tpr, fpr_at_tpr(&set, tpr)?);
    }
    println!("{}", evaluate(&set, "toy", None)?);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
