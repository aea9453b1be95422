// Write and read back the four binary containers: LINF feature dumps,
// LINH linear heads, LINC contribution matrices and LINM hidden layers.

use line_ood::store::{self, Approx, ContributionMatrix, FeatureDump, LinearHead};
use line_ood::Error;

pub fn run_example() -> line_ood::Result<()> {
    let dir = tempfile::tempdir().map_err(|e| Error::io("<tempdir>", e))?;

    let dump = FeatureDump::new(3, vec![0.0, 1.5, 2.0, 0.25, 0.0, 4.0], Some(vec![0, 1]), "train")?;
    let head = LinearHead::new(3, 2, vec![1.0, -1.0, 0.5, 0.5, -2.0, 2.0], vec![0.1, -0.1])?;
    let c = ContributionMatrix {
        dim_q: 3,
        n_classes: 2,
        values: vec![0.0, 0.0, 0.75, 0.125, 4.0, 8.0],
        samples_per_class: vec![1, 1],
        approx: Approx::Taylor,
    };

    let paths = [dir.path().join("train.linf"), dir.path().join("head.linh"), dir.path().join("c.linc")];
    store::write_feature_dump(&dump, &paths[0])?;
    store::write_head(&head, &paths[1])?;
    store::write_contrib(&c, &paths[2])?;

    let back = store::read_feature_dump(&paths[0])?;
    assert_eq!(back, dump);
    assert_eq!(store::read_head(&paths[1])?, head);
    assert_eq!(store::read_contrib(&paths[2])?, c);
    for p in &paths {
        let len = std::fs::metadata(p).map_err(|e| Error::io(p, e))?.len();
        println!("{:<10} {len:>4} bytes", p.file_name().unwrap().to_string_lossy());
    }

    // Readers refuse damaged input with a typed error.
    let bytes = dump.to_bytes()?;
    match FeatureDump::from_bytes(&bytes[..bytes.len() - 3], "cut") {
        Err(e) => println!("truncated LINF: {e}"),
        Ok(_) => unreachable!(),
    }
    let mut bad = bytes.clone();
    bad[0] = b'X';
    if let Err(e) = FeatureDump::from_bytes(&bad, "bad") {
        println!("wrong magic:    {e}");
    }
    let mut nan = dump.clone();
    nan.features[1] = f32::NAN;
    if let Err(e) = nan.to_bytes() {
        println!("NaN feature:    {e}");
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
