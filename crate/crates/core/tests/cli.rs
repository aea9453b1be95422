//! End-to-end tests of the `line` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use line_ood::detector::read_scores_csv;
use line_ood::metrics::{evaluate, ScoreSet};
use line_ood::store;

fn line(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_line"))
        .args(args)
        .env_remove("LINE_SEED")
        .output()
        .expect("spawn line")
}

fn ok(args: &[&str]) -> String {
    let out = line(args);
    assert!(
        out.status.success(),
        "line {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TOY_FILES: [&str; 5] = ["head.linh", "layer1.linm", "id_train.linf", "id_test.linf", "ood.linf"];

/// Trains the toy model into a fresh directory.
fn toy(seed: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    ok(&["train-toy", "--out-dir", p(dir.path()), "--seed", seed]);
    dir
}

fn read(path: impl AsRef<Path>) -> Vec<u8> {
    fs::read(path).unwrap()
}

#[test]
fn train_toy_writes_five_files_and_reports_accuracy() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(&["train-toy", "--out-dir", p(dir.path())]);
    assert!(stdout.contains("train accuracy 1.0000"), "{stdout}");
    let mut names: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut expected = TOY_FILES.map(String::from).to_vec();
    expected.sort();
    assert_eq!(names, expected);
}

#[test]
fn train_toy_is_deterministic_per_seed() {
    let (a, b, c) = (toy("5"), toy("5"), toy("6"));
    for f in TOY_FILES {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f}");
    }
    assert_ne!(read(a.path().join("head.linh")), read(c.path().join("head.linh")));
}

#[test]
fn seed_env_is_a_default_that_flags_override() {
    let run = |env: &str, extra: &[&str]| {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec!["train-toy", "--out-dir", p(dir.path()), "--epochs", "1"];
        args.extend_from_slice(extra);
        let out = Command::new(env!("CARGO_BIN_EXE_line"))
            .args(&args)
            .env("LINE_SEED", env)
            .output()
            .unwrap();
        assert!(out.status.success());
        read(dir.path().join("head.linh"))
    };
    let env3 = run("3", &[]);
    assert_eq!(env3, run("3", &[]));
    assert_ne!(env3, run("4", &[]));
    assert_eq!(run("4", &["--seed", "3"]), env3);
}

#[test]
fn missing_output_directory_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope");
    let out = line(&["train-toy", "--out-dir", p(&missing)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!missing.exists());
}

#[test]
fn failed_train_toy_removes_partial_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // A directory squatting on the last output makes its write fail.
    fs::create_dir(dir.path().join("ood.linf")).unwrap();
    let out = line(&["train-toy", "--out-dir", p(dir.path()), "--epochs", "1"]);
    assert_eq!(out.status.code(), Some(2));
    for f in &TOY_FILES[..4] {
        assert!(!dir.path().join(f).exists(), "{f} left behind");
    }
}

#[test]
fn contrib_approximations_agree_and_workers_do_not_matter() {
    let dir = toy("0");
    let d = dir.path();
    let contrib = |approx: &str, workers: &str, name: &str| {
        let out = d.join(name);
        ok(&[
            "contrib", "--features", p(&d.join("id_train.linf")), "--head", p(&d.join("head.linh")),
            "--out", p(&out), "--approx", approx, "--workers", workers,
        ]);
        read(out)
    };
    let taylor = contrib("taylor", "1", "t1.linc");
    assert_eq!(taylor, contrib("taylor", "8", "t8.linc"));
    let intgrad = contrib("intgrad", "8", "i8.linc");
    // Only the approximation code in the header (bytes 16..20) differs.
    assert_eq!(&taylor[16..20], &0u32.to_le_bytes());
    assert_eq!(&intgrad[16..20], &1u32.to_le_bytes());
    assert_eq!(taylor[..16], intgrad[..16]);
    assert_eq!(taylor[20..], intgrad[20..]);
}

#[test]
fn contrib_rejects_unlabeled_dump() {
    let dir = toy("0");
    let d = dir.path();
    let out = d.join("c.linc");
    let res = line(&[
        "contrib", "--features", p(&d.join("ood.linf")), "--head", p(&d.join("head.linh")), "--out", p(&out),
    ]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("labels"));
    assert!(!out.exists());
}

fn scores(path: &Path) -> Vec<f64> {
    read_scores_csv(fs::File::open(path).unwrap())
        .unwrap()
        .into_iter()
        .map(|r| r.score)
        .collect()
}

#[test]
fn score_reduction_matches_energy_and_energy_ignores_contrib() {
    let dir = toy("0");
    let d = dir.path();
    let features = d.join("id_test.linf");
    let head = d.join("head.linh");
    let contrib = d.join("c.linc");
    ok(&["contrib", "--features", p(&d.join("id_train.linf")), "--head", p(&head), "--out", p(&contrib)]);

    let energy = d.join("energy.csv");
    ok(&[
        "score", "--features", p(&features), "--head", p(&head), "--method", "energy",
        "--contrib", "/does/not/exist.linc", "--out", p(&energy),
    ]);
    let line_csv = d.join("line.csv");
    ok(&[
        "score", "--features", p(&features), "--head", p(&head), "--contrib", p(&contrib),
        "--delta", "inf", "--pa", "0", "--pw", "0", "--out", p(&line_csv),
    ]);
    let (e, l) = (scores(&energy), scores(&line_csv));
    assert_eq!(e.len(), store::read_feature_dump(&features).unwrap().n_samples());
    for (a, b) in e.iter().zip(&l) {
        assert!((a - b).abs() <= 1e-5 * a.abs().max(1.0), "{a} vs {b}");
    }
}

#[test]
fn score_line_without_contrib_fails_cleanly() {
    let dir = toy("0");
    let d = dir.path();
    let out = d.join("s.csv");
    let res = line(&["score", "--features", p(&d.join("ood.linf")), "--head", p(&d.join("head.linh")), "--out", p(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(!out.exists());
}

fn write_scores(path: &Path, values: &[f64]) {
    let mut s = String::from("sample_index,score,predicted_class,activated_count\n");
    for (i, v) in values.iter().enumerate() {
        s += &format!("{i},{v},0,1\n");
    }
    fs::write(path, s).unwrap();
}

#[test]
fn eval_separable_swapped_and_library_agree() {
    let dir = tempfile::tempdir().unwrap();
    let (id, ood) = (dir.path().join("id.csv"), dir.path().join("ood.csv"));
    write_scores(&id, &[5.0, 6.0, 7.0]);
    write_scores(&ood, &[1.0, 2.0]);
    let out = ok(&["eval", "--id", p(&id), "--ood", p(&ood)]);
    assert!(out.contains("AUROC   100.00%") && out.contains("FPR95   0.00%"), "{out}");

    write_scores(&id, &[1.0, 3.0, 3.0, 8.0]);
    write_scores(&ood, &[3.0, 0.5, 9.0]);
    let report = dir.path().join("r.csv");
    let swapped = dir.path().join("s.csv");
    ok(&["eval", "--id", p(&id), "--ood", p(&ood), "--out", p(&report)]);
    ok(&["eval", "--id", p(&ood), "--ood", p(&id), "--out", p(&swapped)]);
    let auroc = |path: &Path| -> f64 {
        let text = fs::read_to_string(path).unwrap();
        let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
        row[3].parse().unwrap()
    };
    let lib = evaluate(&ScoreSet::new(scores(&id), scores(&ood)).unwrap(), "x", None).unwrap();
    assert_eq!(auroc(&report), lib.auroc);
    assert_eq!(auroc(&report) + auroc(&swapped), 1.0);
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = toy("0");
    let d = dir.path();
    let cfg = d.join("cfg.json");
    let hist_csv = d.join("h.csv");
    fs::write(
        &cfg,
        format!(r#"{{"features": "{}", "bins": 4, "out": "{}"}}"#, p(&d.join("ood.linf")), p(&hist_csv)),
    )
    .unwrap();
    ok(&["--config", p(&cfg), "hist"]);
    assert_eq!(fs::read_to_string(&hist_csv).unwrap().lines().count(), 5);
    ok(&["hist", "--config", p(&cfg), "--bins", "8"]);
    assert_eq!(fs::read_to_string(&hist_csv).unwrap().lines().count(), 9);

    fs::write(&cfg, r#"{"bins": 4, "binz": 5}"#).unwrap();
    let res = line(&["--config", p(&cfg), "hist", "--features", p(&d.join("ood.linf"))]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn sweep_and_overlap_run_on_the_toy_model() {
    let dir = toy("0");
    let d = dir.path();
    let head = d.join("head.linh");
    let contrib = d.join("c.linc");
    ok(&["contrib", "--features", p(&d.join("id_train.linf")), "--head", p(&head), "--out", p(&contrib)]);
    let sweep = |workers: &str, name: &str| {
        let out = d.join(name);
        ok(&[
            "sweep", "--head", p(&head), "--contrib", p(&contrib), "--id", p(&d.join("id_test.linf")),
            "--ood", p(&d.join("ood.linf")), "--ood", p(&d.join("id_train.linf")),
            "--deltas", "1,inf", "--pas", "0,10", "--pws", "0,50", "--workers", workers, "--out", p(&out),
        ]);
        fs::read_to_string(out).unwrap()
    };
    let table = sweep("1", "a.csv");
    assert_eq!(table, sweep("8", "b.csv"));
    assert_eq!(table.lines().count(), 1 + 8);
    assert!(table.starts_with("delta,p_a,p_w,auroc,fpr95,auroc_ood,fpr95_ood,auroc_id_train,fpr95_id_train\n"));

    let out = ok(&["overlap", "--contrib", p(&contrib), "--top-fraction", "1", "--over", "99"]);
    assert!(out.starts_with("100.00%"), "{out}");

    let bad = line(&["sweep", "--head", p(&head), "--contrib", p(&contrib), "--id", p(&d.join("id_test.linf")),
        "--ood", p(&d.join("ood.linf")), "--deltas", "1"]);
    assert_eq!(bad.status.code(), Some(2));
}

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Compares `--help` output with the checked-in copy. Run with
/// `UPDATE_GOLDEN=1` to rewrite the files after an intended change.
#[test]
fn help_output_matches_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for sub in ["", "train-toy", "contrib", "score", "eval", "sweep", "hist", "overlap"] {
        let args: Vec<&str> = if sub.is_empty() { vec!["--help"] } else { vec![sub, "--help"] };
        let help = ok(&args);
        let name = if sub.is_empty() { "line" } else { sub };
        let path = golden_dir().join(format!("{name}.help"));
        if update {
            fs::create_dir_all(golden_dir()).unwrap();
            fs::write(&path, &help).unwrap();
        } else {
            let want = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing {}", path.display()));
            assert_eq!(help, want, "{name} --help changed; rerun with UPDATE_GOLDEN=1");
        }
    }
}
