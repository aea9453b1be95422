// How many penultimate neurons fire for ID versus OOD inputs, and how
// many neurons rank among the top contributors of several classes.

use line_ood::contribution::{contribution_matrix, ContribOptions};
use line_ood::metrics::{activated_histogram, overlap_fraction};
use line_ood::store::Approx;
use line_ood::toy::ToyExperiment;

pub fn run_example() -> line_ood::Result<()> {
    let art = ToyExperiment::with_seed(0).run()?;

    for dump in [&art.id_test, &art.ood] {
        let h = activated_histogram(dump, 0.0, 13)?;
        let bars: String = h
            .bins
            .iter()
            .map(|&(left, n)| format!("\n  {left:>5.1} {}", "#".repeat(n / 10)))
            .collect();
        println!("{}: mean {:.2}, median {}{bars}", dump.tag, h.mean, h.quartiles[1]);
    }

    let c = contribution_matrix(&art.id_train, &art.model.head, Approx::Taylor, &ContribOptions::default())?;
    for top in [0.1, 0.3, 0.5] {
        for over in [10.0, 30.0, 50.0] {
            println!(
                "top {:>2.0}%, shared by >{over:>2}% of classes: {:>5.2}% of neurons",
                100.0 * top,
                overlap_fraction(&c, top, over)?
            );
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
