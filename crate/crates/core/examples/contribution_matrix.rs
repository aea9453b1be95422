// Per-neuron contributions to a class logit and the class-averaged matrix
// C built from a labeled training dump, with both approximations.

use line_ood::contribution::{contribution_matrix, occlusion_oracle, taylor_contribution, ContribOptions};
use line_ood::detector::top_k_indices;
use line_ood::store::Approx;
use line_ood::toy::ToyExperiment;

pub fn run_example() -> line_ood::Result<()> {
    let art = ToyExperiment::with_seed(0).run()?;
    let head = &art.model.head;

    // For a linear head the first-order term equals the logit drop when
    // the neuron is zeroed out.
    let x = art.id_train.row_f64(0);
    let class = art.id_train.labels.as_ref().unwrap()[0] as usize;
    let s = taylor_contribution(&x, head, class)?;
    let occ = occlusion_oracle(&x, head, class)?;
    let worst = s.values.iter().zip(&occ).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("sample 0, class {class}: max |taylor - occlusion| = {worst:.1e}");

    let opts = ContribOptions::default();
    let taylor = contribution_matrix(&art.id_train, head, Approx::Taylor, &opts)?;
    let intgrad = contribution_matrix(&art.id_train, head, Approx::IntGrad, &opts)?;
    assert_eq!(taylor.values, intgrad.values);
    println!(
        "C is {} x {}, samples per class {:?}",
        taylor.dim_q, taylor.n_classes, taylor.samples_per_class
    );

    for l in 0..3 {
        let column: Vec<f64> = taylor.column(l).into_iter().map(f64::from).collect();
        println!("class {l}: top neurons {:?}", top_k_indices(&column, 5));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
