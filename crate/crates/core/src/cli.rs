//! The `line` command-line tool.
//!
//! Every subcommand can also read its settings from a JSON file given with
//! `--config`; keys are the long flag names with `-` replaced by `_`.
//! Values resolve as flag, then config file, then `LINE_SEED` (seed only),
//! then the built-in default. `delta`, `pa`, `pw` and the sweep lists accept `"inf"`.
//!
//! Exit codes: 0 on success, 2 for invalid input (flags, config, files),
//! 1 when a computation fails (training divergence, singular covariance).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::contribution::{contribution_matrix, ContribOptions};
use crate::detector::{read_scores_csv, write_scores_csv, ClassSource, Detector, DetectorConfig, Method};
use crate::error::{Error, Result};
use crate::metrics::{activated_histogram, best_row, evaluate, overlap_fraction, sweep, write_reports_csv, write_sweep_csv, ScoreSet, SweepGrid};
use crate::store::{self, Approx};
use crate::toy::{extract_features, generate_blobs, generate_ood_uniform, train, ToyExperiment, ToyMlp};

pub const SEED_ENV: &str = "LINE_SEED";

#[derive(Debug, Parser)]
#[command(name = "line", version, about = "Post-hoc OOD detection with LINe and baseline scores")]
pub struct Cli {
    /// JSON file with default values for any flag.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train the toy network and write its head, first layer and feature dumps.
    TrainToy(TrainToyArgs),
    /// Build the class-averaged contribution matrix from a labeled dump.
    Contrib(ContribArgs),
    /// Score every sample of a dump and write a scores CSV.
    Score(ScoreArgs),
    /// AUROC and FPR95 from an ID and an OOD scores CSV.
    Eval(EvalArgs),
    /// Evaluate LINe over a grid of (delta, p_a, p_w).
    Sweep(SweepArgs),
    /// Histogram of activated-neuron counts per sample.
    Hist(HistArgs),
    /// Share of neurons that rank high for many classes at once.
    Overlap(OverlapArgs),
}

#[derive(Debug, Args)]
pub struct TrainToyArgs {
    /// Existing directory for head.linh, layer1.linm, id_train.linf, id_test.linf, ood.linf.
    #[arg(long, value_name = "DIR")]
    pub out_dir: Option<PathBuf>,
    /// Seed for data, initialization and shuffling [default: $LINE_SEED or 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hidden (penultimate) width [default: 64].
    #[arg(long)]
    pub hidden: Option<usize>,
    /// [default: 30]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Initial learning rate [default: 0.1].
    #[arg(long)]
    pub lr: Option<f64>,
    /// [default: 0.9]
    #[arg(long)]
    pub momentum: Option<f64>,
    /// [default: 64]
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// [default: 10]
    #[arg(long)]
    pub classes: Option<usize>,
    /// Input dimension [default: 10].
    #[arg(long)]
    pub dim_in: Option<usize>,
    /// Distance of the class means from the origin [default: 2].
    #[arg(long)]
    pub radius: Option<f64>,
    /// Standard deviation of the blobs [default: 0.4].
    #[arg(long)]
    pub noise: Option<f64>,
    /// [default: 500]
    #[arg(long)]
    pub train_per_class: Option<usize>,
    /// [default: 100]
    #[arg(long)]
    pub test_per_class: Option<usize>,
    /// [default: 1000]
    #[arg(long)]
    pub ood_samples: Option<usize>,
    /// Lower edge of the uniform OOD box [default: -4].
    #[arg(long, allow_hyphen_values = true)]
    pub ood_low: Option<f64>,
    /// Upper edge of the uniform OOD box [default: 4].
    #[arg(long, allow_hyphen_values = true)]
    pub ood_high: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ContribArgs {
    /// Labeled ID training dump (LINF).
    #[arg(long, value_name = "FILE")]
    pub features: Option<PathBuf>,
    /// Linear head (LINH).
    #[arg(long, value_name = "FILE")]
    pub head: Option<PathBuf>,
    /// Output contribution matrix (LINC).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// taylor or intgrad [default: taylor].
    #[arg(long)]
    pub approx: Option<String>,
    /// Worker threads, 0 for all cores [default: 0].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Use only the first N samples.
    #[arg(long, value_name = "N")]
    pub limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Dump to score (LINF).
    #[arg(long, value_name = "FILE")]
    pub features: Option<PathBuf>,
    /// Linear head (LINH).
    #[arg(long, value_name = "FILE")]
    pub head: Option<PathBuf>,
    /// Contribution matrix (LINC); needed by line only.
    #[arg(long, value_name = "FILE")]
    pub contrib: Option<PathBuf>,
    /// ID training dump (LINF); needed by dice and mahalanobis.
    #[arg(long, value_name = "FILE")]
    pub train: Option<PathBuf>,
    /// line, energy, msp, react, dice or mahalanobis [default: line].
    #[arg(long)]
    pub method: Option<String>,
    /// Clipping threshold, or inf [default: 0.8].
    #[arg(long, value_parser = parse_num)]
    pub delta: Option<f64>,
    /// Percent of activations pruned per class [default: 10].
    #[arg(long, value_parser = parse_num)]
    pub pa: Option<f64>,
    /// Percent of head weights pruned per class [default: 10].
    #[arg(long, value_parser = parse_num)]
    pub pw: Option<f64>,
    /// Energy temperature [default: 1].
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Logits that pick LINe's class masks: raw or clipped [default: raw].
    #[arg(long)]
    pub predict_from: Option<String>,
    /// Output scores CSV.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Scores CSV of in-distribution samples.
    #[arg(long, value_name = "FILE")]
    pub id: Option<PathBuf>,
    /// Scores CSV of OOD samples.
    #[arg(long, value_name = "FILE")]
    pub ood: Option<PathBuf>,
    /// Label for the report [default: scores].
    #[arg(long)]
    pub method: Option<String>,
    /// Also write the report as CSV.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Linear head (LINH).
    #[arg(long, value_name = "FILE")]
    pub head: Option<PathBuf>,
    /// Contribution matrix (LINC).
    #[arg(long, value_name = "FILE")]
    pub contrib: Option<PathBuf>,
    /// ID test dump (LINF).
    #[arg(long, value_name = "FILE")]
    pub id: Option<PathBuf>,
    /// OOD dump (LINF); repeat for several sets.
    #[arg(long, value_name = "FILE")]
    pub ood: Vec<PathBuf>,
    /// Comma-separated clipping thresholds [default: 0.5,0.8,1,2,inf].
    #[arg(long, value_delimiter = ',', value_parser = parse_num)]
    pub deltas: Vec<f64>,
    /// Comma-separated activation pruning percentiles [default: 0,10,50].
    #[arg(long, value_delimiter = ',', value_parser = parse_num)]
    pub pas: Vec<f64>,
    /// Comma-separated weight pruning percentiles [default: 0,10,50].
    #[arg(long, value_delimiter = ',', value_parser = parse_num)]
    pub pws: Vec<f64>,
    /// Energy temperature [default: 1].
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Worker threads, 0 for all cores [default: 0].
    #[arg(long)]
    pub workers: Option<usize>,
    /// Output sweep CSV, one row per grid point in grid order.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct HistArgs {
    /// Dump (LINF).
    #[arg(long, value_name = "FILE")]
    pub features: Option<PathBuf>,
    /// A neuron counts as activated above this value [default: 0].
    #[arg(long, allow_hyphen_values = true)]
    pub threshold: Option<f64>,
    /// [default: 16]
    #[arg(long)]
    pub bins: Option<usize>,
    /// Write bin_left,count CSV.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OverlapArgs {
    /// Contribution matrix (LINC).
    #[arg(long, value_name = "FILE")]
    pub contrib: Option<PathBuf>,
    /// Fraction of each class column counted as top neurons [default: 0.1].
    #[arg(long)]
    pub top_fraction: Option<f64>,
    /// A neuron is shared when it is top for more than this percent of classes [default: 50].
    #[arg(long)]
    pub over: Option<f64>,
}

/// Values that `--config` may supply. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub hidden: Option<usize>,
    pub epochs: Option<usize>,
    pub lr: Option<f64>,
    pub momentum: Option<f64>,
    pub batch_size: Option<usize>,
    pub classes: Option<usize>,
    pub dim_in: Option<usize>,
    pub radius: Option<f64>,
    pub noise: Option<f64>,
    pub train_per_class: Option<usize>,
    pub test_per_class: Option<usize>,
    pub ood_samples: Option<usize>,
    pub ood_low: Option<f64>,
    pub ood_high: Option<f64>,
    pub features: Option<PathBuf>,
    pub head: Option<PathBuf>,
    pub contrib: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub id: Option<PathBuf>,
    pub ood: Option<OneOrMany>,
    pub approx: Option<String>,
    pub workers: Option<usize>,
    pub limit: Option<usize>,
    pub method: Option<String>,
    pub delta: Option<Num>,
    pub pa: Option<Num>,
    pub pw: Option<Num>,
    pub temperature: Option<f64>,
    pub predict_from: Option<String>,
    pub deltas: Option<Vec<Num>>,
    pub pas: Option<Vec<Num>>,
    pub pws: Option<Vec<Num>>,
    pub threshold: Option<f64>,
    pub bins: Option<usize>,
    pub top_fraction: Option<f64>,
    pub over: Option<f64>,
}

/// A JSON number, or a string such as `"inf"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Num {
    Value(f64),
    Text(String),
}

impl Num {
    fn get(&self) -> Result<f64> {
        match self {
            Num::Value(v) => Ok(*v),
            Num::Text(s) => parse_num(s).map_err(Error::Invalid),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(PathBuf),
    Many(Vec<PathBuf>),
}

fn parse_num(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("not a number: {s:?}"))?;
    if v.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(v)
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }
}

fn required<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file).ok_or_else(|| Error::invalid(format!("missing required --{name}")))
}

fn num(flag: Option<f64>, file: Option<&Num>, default: f64) -> Result<f64> {
    match (flag, file) {
        (Some(v), _) => Ok(v),
        (None, Some(n)) => n.get(),
        (None, None) => Ok(default),
    }
}

fn num_list(flag: Vec<f64>, file: Option<&Vec<Num>>, default: &[f64]) -> Result<Vec<f64>> {
    if !flag.is_empty() {
        return Ok(flag);
    }
    match file {
        Some(list) => list.iter().map(Num::get).collect(),
        None => Ok(default.to_vec()),
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::invalid(format!("{SEED_ENV}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Files written so far by one command; removed unless the command finishes.
struct Outputs(Vec<PathBuf>);

impl Outputs {
    fn new() -> Self {
        Outputs(Vec::new())
    }

    fn track(&mut self, path: &Path) -> PathBuf {
        self.0.push(path.to_path_buf());
        path.to_path_buf()
    }

    fn keep(mut self) {
        self.0.clear();
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        for p in &self.0 {
            let _ = std::fs::remove_file(p);
        }
    }
}

fn check_parent(path: &Path) -> Result<()> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => return Ok(()),
    };
    if parent.is_dir() {
        Ok(())
    } else {
        Err(Error::invalid(format!("output directory {} does not exist", parent.display())))
    }
}

fn write_text(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    check_parent(path)?;
    let mut buf = Vec::new();
    body(&mut buf)?;
    store::write_atomic(path, &buf)
}

fn read_scores(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(read_scores_csv(BufReader::new(file))?.into_iter().map(|r| r.score).collect())
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Exit status for an error: 1 for failed computations, 2 for bad input.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Diverged { .. } | Error::SingularCovariance => 1,
        _ => 2,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run() -> i32 {
    run_with(std::env::args_os())
}

pub fn execute(cli: Cli) -> Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::TrainToy(a) => train_toy(a, file),
        Command::Contrib(a) => contrib(a, file),
        Command::Score(a) => score(a, file),
        Command::Eval(a) => eval(a, file),
        Command::Sweep(a) => sweep_cmd(a, file),
        Command::Hist(a) => hist(a, file),
        Command::Overlap(a) => overlap(a, file),
    }
}

fn train_toy(a: TrainToyArgs, f: FileConfig) -> Result<()> {
    let out_dir = required(a.out_dir, f.out_dir, "out-dir")?;
    if !out_dir.is_dir() {
        return Err(Error::invalid(format!("output directory {} does not exist", out_dir.display())));
    }
    let seed = a.seed.or(f.seed).or(env_seed()?).unwrap_or(0);
    let mut exp = ToyExperiment::with_seed(seed);
    let b = &mut exp.blobs;
    b.n_classes = a.classes.or(f.classes).unwrap_or(b.n_classes);
    b.dim_in = a.dim_in.or(f.dim_in).unwrap_or(b.dim_in);
    b.radius = a.radius.or(f.radius).unwrap_or(b.radius);
    b.noise_scale = a.noise.or(f.noise).unwrap_or(b.noise_scale);
    b.samples_per_class = a.train_per_class.or(f.train_per_class).unwrap_or(b.samples_per_class);
    let t = &mut exp.train;
    t.hidden = a.hidden.or(f.hidden).unwrap_or(t.hidden);
    t.epochs = a.epochs.or(f.epochs).unwrap_or(t.epochs);
    t.lr = a.lr.or(f.lr).unwrap_or(t.lr);
    t.momentum = a.momentum.or(f.momentum).unwrap_or(t.momentum);
    t.batch_size = a.batch_size.or(f.batch_size).unwrap_or(t.batch_size);
    exp.test_per_class = a.test_per_class.or(f.test_per_class).unwrap_or(exp.test_per_class);
    exp.ood_samples = a.ood_samples.or(f.ood_samples).unwrap_or(exp.ood_samples);
    exp.ood_bounds = (
        a.ood_low.or(f.ood_low).unwrap_or(exp.ood_bounds.0),
        a.ood_high.or(f.ood_high).unwrap_or(exp.ood_bounds.1),
    );
    exp.blobs.validate()?;
    exp.train.validate()?;
    // Check the OOD settings before spending time on training.
    generate_ood_uniform(exp.blobs.dim_in, 1, exp.ood_bounds, 0)?;
    if exp.test_per_class == 0 || exp.ood_samples == 0 {
        return Err(Error::invalid("test and OOD sample counts must be positive"));
    }

    eprintln!("training toy model (seed {seed})");
    let (train_x, train_y) = generate_blobs(&exp.blobs)?;
    let init = ToyMlp::init(exp.blobs.dim_in, exp.train.hidden, exp.blobs.n_classes, exp.train.seed)?;
    let (model, report) = train(init, &train_x, &train_y, &exp.train)?;
    let (test_x, test_y) = generate_blobs(&exp.test_spec())?;
    let ood_x = generate_ood_uniform(exp.blobs.dim_in, exp.ood_samples, exp.ood_bounds, exp.ood_seed())?;

    let mut outputs = Outputs::new();
    store::write_head(&model.head, outputs.track(&out_dir.join("head.linh")))?;
    store::write_hidden(&model.hidden, outputs.track(&out_dir.join("layer1.linm")))?;
    for (name, x, y) in [
        ("id_train", &train_x, Some(train_y.as_slice())),
        ("id_test", &test_x, Some(test_y.as_slice())),
        ("ood", &ood_x, None),
    ] {
        let dump = extract_features(&model, x, y, name)?;
        store::write_feature_dump(&dump, outputs.track(&out_dir.join(format!("{name}.linf"))))?;
    }
    outputs.keep();
    println!("train accuracy {:.4}", report.train_accuracy);
    println!("final loss {:.6}", report.final_loss);
    Ok(())
}

fn contrib(a: ContribArgs, f: FileConfig) -> Result<()> {
    let features = required(a.features, f.features, "features")?;
    let head = required(a.head, f.head, "head")?;
    let out = required(a.out, f.out, "out")?;
    let approx: Approx = a.approx.or(f.approx).as_deref().unwrap_or("taylor").parse()?;
    let opts = ContribOptions {
        workers: a.workers.or(f.workers).unwrap_or(0),
        limit: a.limit.or(f.limit),
        ..ContribOptions::default()
    };
    check_parent(&out)?;
    let train = store::read_feature_dump(&features)?;
    let head = store::read_head(&head)?;
    let c = contribution_matrix(&train, &head, approx, &opts)?;
    store::write_contrib(&c, &out)?;
    eprintln!("wrote {} ({} x {}, {approx:?})", out.display(), c.dim_q, c.n_classes);
    Ok(())
}

fn detector_config(
    method: Option<String>,
    delta: f64,
    p_a: f64,
    p_w: f64,
    temperature: f64,
    predict_from: Option<String>,
) -> Result<DetectorConfig> {
    let config = DetectorConfig {
        delta,
        p_a,
        p_w,
        temperature,
        method: method.as_deref().unwrap_or("line").parse()?,
        class_source: predict_from.as_deref().unwrap_or("raw").parse::<ClassSource>()?,
    };
    config.validate()?;
    Ok(config)
}

fn score(a: ScoreArgs, f: FileConfig) -> Result<()> {
    let base = DetectorConfig::default();
    let config = detector_config(
        a.method.or(f.method),
        num(a.delta, f.delta.as_ref(), base.delta)?,
        num(a.pa, f.pa.as_ref(), base.p_a)?,
        num(a.pw, f.pw.as_ref(), base.p_w)?,
        a.temperature.or(f.temperature).unwrap_or(base.temperature),
        a.predict_from.or(f.predict_from),
    )?;
    let features = required(a.features, f.features, "features")?;
    let head = required(a.head, f.head, "head")?;
    let out = required(a.out, f.out, "out")?;
    check_parent(&out)?;

    let head = store::read_head(&head)?;
    let dump = store::read_feature_dump(&features)?;
    let contrib = match (config.method, a.contrib.or(f.contrib)) {
        (Method::Line, Some(p)) => Some(store::read_contrib(&p)?),
        (Method::Line, None) => return Err(Error::invalid("--method line needs --contrib")),
        _ => None,
    };
    let train = match (config.method, a.train.or(f.train)) {
        (Method::Dice | Method::Mahalanobis, Some(p)) => Some(store::read_feature_dump(&p)?),
        (Method::Dice | Method::Mahalanobis, None) => {
            return Err(Error::invalid(format!("--method {} needs --train", config.method)))
        }
        _ => None,
    };
    let det = Detector::new(config, &head, contrib.as_ref(), train.as_ref())?;
    let records = det.score_dump(&dump)?;
    write_text(&out, |w| write_scores_csv(w, &records))?;
    eprintln!("scored {} samples with {}", records.len(), config.method);
    Ok(())
}

fn eval(a: EvalArgs, f: FileConfig) -> Result<()> {
    let id = required(a.id, f.id, "id")?;
    let ood = match (a.ood, f.ood) {
        (Some(p), _) | (None, Some(OneOrMany::One(p))) => p,
        (None, Some(OneOrMany::Many(v))) if v.len() == 1 => v[0].clone(),
        (None, Some(OneOrMany::Many(_))) => return Err(Error::invalid("eval takes exactly one ood file")),
        (None, None) => return Err(Error::invalid("missing required --ood")),
    };
    let set = ScoreSet::named(read_scores(&id)?, read_scores(&ood)?, stem(&id), stem(&ood))?;
    let report = evaluate(&set, a.method.or(f.method).unwrap_or_else(|| "scores".into()), None)?;
    if let Some(out) = a.out.or(f.out) {
        write_text(&out, |w| write_reports_csv(w, std::slice::from_ref(&report)))?;
    }
    println!("{report}");
    Ok(())
}

fn sweep_cmd(a: SweepArgs, f: FileConfig) -> Result<()> {
    let grid = SweepGrid {
        deltas: num_list(a.deltas, f.deltas.as_ref(), &[0.5, 0.8, 1.0, 2.0, f64::INFINITY])?,
        p_as: num_list(a.pas, f.pas.as_ref(), &[0.0, 10.0, 50.0])?,
        p_ws: num_list(a.pws, f.pws.as_ref(), &[0.0, 10.0, 50.0])?,
    };
    grid.validate()?;
    let base = DetectorConfig {
        temperature: a.temperature.or(f.temperature).unwrap_or(1.0),
        ..DetectorConfig::reduction(Method::Line)
    };
    for (d, pa, pw) in grid.points() {
        DetectorConfig { delta: d, p_a: pa, p_w: pw, ..base }.validate()?;
    }
    let head = required(a.head, f.head, "head")?;
    let contrib = required(a.contrib, f.contrib, "contrib")?;
    let id = required(a.id, f.id, "id")?;
    let oods = if !a.ood.is_empty() {
        a.ood
    } else {
        match f.ood {
            Some(OneOrMany::One(p)) => vec![p],
            Some(OneOrMany::Many(v)) => v,
            None => Vec::new(),
        }
    };
    if oods.is_empty() {
        return Err(Error::invalid("missing required --ood"));
    }
    let out = a.out.or(f.out);
    if let Some(out) = &out {
        check_parent(out)?;
    }

    let head = store::read_head(&head)?;
    let c = store::read_contrib(&contrib)?;
    let id = store::read_feature_dump(&id)?;
    let oods = oods.iter().map(store::read_feature_dump).collect::<Result<Vec<_>>>()?;
    let rows = sweep(&head, &c, &id, &oods, &grid, &base, a.workers.or(f.workers).unwrap_or(0))?;
    if let Some(out) = &out {
        write_text(out, |w| write_sweep_csv(w, &rows))?;
    }
    let best = best_row(&rows).expect("grid is nonempty");
    println!(
        "best delta={} p_a={} p_w={}: AUROC {:.2}% FPR95 {:.2}% ({} grid points)",
        best.config.delta,
        best.config.p_a,
        best.config.p_w,
        100.0 * best.mean_auroc,
        100.0 * best.mean_fpr95,
        rows.len()
    );
    Ok(())
}

fn hist(a: HistArgs, f: FileConfig) -> Result<()> {
    let features = required(a.features, f.features, "features")?;
    let out = a.out.or(f.out);
    if let Some(out) = &out {
        check_parent(out)?;
    }
    let dump = store::read_feature_dump(&features)?;
    let h = activated_histogram(&dump, a.threshold.or(f.threshold).unwrap_or(0.0), a.bins.or(f.bins).unwrap_or(16))?;
    if let Some(out) = &out {
        write_text(out, |w| h.write_csv(w))?;
    }
    println!(
        "{}: n={} mean {:.3} quartiles {} {} {}",
        dump.tag,
        dump.n_samples(),
        h.mean,
        h.quartiles[0],
        h.quartiles[1],
        h.quartiles[2]
    );
    Ok(())
}

fn overlap(a: OverlapArgs, f: FileConfig) -> Result<()> {
    let contrib = required(a.contrib, f.contrib, "contrib")?;
    let c = store::read_contrib(&contrib)?;
    let top = a.top_fraction.or(f.top_fraction).unwrap_or(0.1);
    let over = a.over.or(f.over).unwrap_or(50.0);
    let share = overlap_fraction(&c, top, over)?;
    println!("{share:.2}% of neurons are top-{:.0}% for more than {over}% of classes", 100.0 * top);
    Ok(())
}
