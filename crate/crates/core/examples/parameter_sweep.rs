// Grid sweep over the clipping threshold and both pruning percentiles,
// written as CSV in grid order.

use line_ood::contribution::{contribution_matrix, ContribOptions};
use line_ood::detector::{DetectorConfig, Method};
use line_ood::metrics::{best_row, sweep, write_sweep_csv, SweepGrid};
use line_ood::store::Approx;
use line_ood::toy::ToyExperiment;

pub fn run_example() -> line_ood::Result<()> {
    let art = ToyExperiment::with_seed(0).run()?;
    let head = &art.model.head;
    let c = contribution_matrix(&art.id_train, head, Approx::Taylor, &ContribOptions::default())?;

    let grid = SweepGrid {
        deltas: vec![0.5, 1.0, f64::INFINITY],
        p_as: vec![0.0, 10.0, 50.0],
        p_ws: vec![0.0, 50.0, 90.0],
    };
    let rows = sweep(head, &c, &art.id_test, std::slice::from_ref(&art.ood), &grid, &DetectorConfig::reduction(Method::Line), 0)?;

    let reduction = rows
        .iter()
        .find(|r| r.config.delta.is_infinite() && r.config.p_a == 0.0 && r.config.p_w == 0.0)
        .unwrap();
    println!("energy (reduction point): AUROC {:.4} FPR95 {:.4}", reduction.mean_auroc, reduction.mean_fpr95);
    let best = best_row(&rows).unwrap();
    println!(
        "best LINe delta={} p_a={} p_w={}: AUROC {:.4} FPR95 {:.4}",
        best.config.delta, best.config.p_a, best.config.p_w, best.mean_auroc, best.mean_fpr95
    );

    let mut csv = Vec::new();
    write_sweep_csv(&mut csv, &rows[..5])?;
    print!("{}", String::from_utf8_lossy(&csv));
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
