// Train the reference toy network on Gaussian blobs, check its gradients
// and extract penultimate features for ID and uniform-box OOD inputs.

use line_ood::toy::{gradient_check, ToyExperiment};

pub fn run_example() -> line_ood::Result<()> {
    let exp = ToyExperiment::with_seed(0);
    let art = exp.run()?;
    println!(
        "d={} q={} L={}  train accuracy {:.4}  final loss {:.5}",
        art.model.dim_in(),
        art.model.dim_hidden(),
        art.model.n_classes(),
        art.report.train_accuracy,
        art.report.final_loss
    );

    let (xs, ys) = line_ood::toy::generate_blobs(&exp.test_spec())?;
    println!("test accuracy {:.4}", art.model.accuracy(&xs, &ys)?);

    let check = gradient_check(&art.model, &xs[..32], &ys[..32], 200, 7)?;
    println!(
        "gradient check over {} parameters: max relative error {:.2e}",
        check.checked, check.max_relative_error
    );

    for dump in [&art.id_train, &art.id_test, &art.ood] {
        let labeled = if dump.labels.is_some() { "labeled" } else { "unlabeled" };
        println!("{:>8}: {} x {} ({labeled})", dump.tag, dump.n_samples(), dump.dim_q);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
