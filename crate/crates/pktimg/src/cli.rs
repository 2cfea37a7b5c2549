//! Command-line frontend: flag parsing, key=value config files, the
//! `PKTIMG_SEED` fallback, and the exit-code contract.
//!
//! Exit codes: 0 success, 1 write or internal failure, 2 usage error,
//! 3 unreadable or malformed input, 4 empty result.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use pktimg_core::dataset::DatasetError;
use pktimg_core::nn::{evaluate, train, TrainConfig, TrainError};
use pktimg_core::stats::ClassMetrics;
use pktimg_core::PseudoImage;

use crate::checkpoint::{load_model, save_model};
use crate::dataset_file::{read_dataset, write_dataset};
use crate::experiment::{compare, run_experiment, ExperimentError};
use crate::extract::{extract_datasets, EncoderChoice, ExtractSummary, LimSizing};
use crate::fingerprint::{read_fingerprint_dataset, FingerprintCsvError};
use crate::macmap::read_mac_map;
use crate::pcap::open_pcap;
use crate::synth;

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_EPOCHS: usize = 20;
pub const DEFAULT_BATCH: usize = 32;
pub const DEFAULT_LR: f64 = 0.05;
pub const DEFAULT_RUNS: usize = 10;
pub const DEFAULT_TEST_FRACTION: f64 = 0.2;
pub const DEFAULT_SYNTH_PACKETS: usize = 240;

pub const SEED_ENV: &str = "PKTIMG_SEED";

#[derive(Debug, Parser)]
#[command(
    name = "pktimg",
    version,
    about = "Packet captures to pseudo-images, CNN training, and the payload-vs-fingerprint comparison"
)]
pub struct Cli {
    /// Defaults file with one key=value per line; flags override it.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Also write a machine-readable key=value summary to this path.
    #[arg(long, global = true, value_name = "PATH")]
    pub report: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert captures into a labeled image dataset.
    Extract(ExtractArgs),
    /// Convert a feature CSV into a labeled image dataset.
    Fingerprint(FingerprintArgs),
    /// Train a CNN on a dataset; writes a checkpoint and a history CSV.
    Train(TrainArgs),
    /// Evaluate a checkpoint against a dataset.
    Eval(EvalArgs),
    /// Run the repeated train/evaluate protocol on two datasets and
    /// compare their accuracy distributions.
    Compare(CompareArgs),
    /// Export one record as PGM and print an ASCII preview.
    Inspect(InspectArgs),
    /// Generate the five-device synthetic demo scenario.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    /// Input capture; repeat the flag to aggregate several files.
    #[arg(long = "pcap", required = true, value_name = "PATH")]
    pub pcaps: Vec<PathBuf>,
    /// lim, lotfollahi, wang, or payload784.
    #[arg(long, value_name = "NAME")]
    pub encoder: Option<String>,
    /// CSV with mac,label columns.
    #[arg(long, value_name = "PATH")]
    pub mac_map: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
    /// auto (default) or one of 36/64/256/1024. Only meaningful for lim.
    #[arg(long, value_name = "SIZE")]
    pub lim_size: Option<String>,
}

#[derive(Debug, Args)]
pub struct FingerprintArgs {
    /// Feature CSV: a header of feature names plus a label column.
    #[arg(long, value_name = "PATH")]
    pub csv: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub model_out: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// Held-out fraction used to report accuracy, in (0, 1).
    #[arg(long)]
    pub test_fraction: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub model: PathBuf,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, value_name = "PATH")]
    pub dataset_a: PathBuf,
    #[arg(long, value_name = "PATH")]
    pub dataset_b: PathBuf,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Base seed; run i uses seed + i on both sides.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub test_fraction: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[arg(long, value_name = "PATH")]
    pub dataset: PathBuf,
    /// Record to export; defaults to 0.
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long, value_name = "PATH")]
    pub out_pgm: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory for synth.pcap, devices.csv, and fingerprint.csv.
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Data packets per device.
    #[arg(long)]
    pub packets: Option<usize>,
}

/// Failures mapped onto the exit-code contract.
#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Empty(String),
    #[error("{0}")]
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io(_) => 1,
            AppError::Usage(_) => 2,
            AppError::Input(_) => 3,
            AppError::Empty(_) => 4,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> AppError {
    AppError::Input(e.to_string())
}

fn write_err(what: &str, path: &Path, e: impl std::fmt::Display) -> AppError {
    AppError::Io(format!("cannot write {what} {}: {e}", path.display()))
}

fn split_error(e: DatasetError) -> AppError {
    match e {
        DatasetError::BadTestFraction(_) => AppError::Usage(e.to_string()),
        other => AppError::Input(other.to_string()),
    }
}

fn train_error(e: TrainError) -> AppError {
    match e {
        TrainError::BadLearningRate(_) | TrainError::ZeroBatch | TrainError::ZeroEpochs => {
            AppError::Usage(e.to_string())
        }
        other => AppError::Input(other.to_string()),
    }
}

fn experiment_error(e: ExperimentError) -> AppError {
    match e {
        ExperimentError::ZeroRuns => AppError::Usage(e.to_string()),
        ExperimentError::Split(d) => split_error(d),
        ExperimentError::Train(t) => train_error(t),
        other => AppError::Input(other.to_string()),
    }
}

const CONFIG_KEYS: [&str; 9] = [
    "encoder",
    "mac-map",
    "seed",
    "epochs",
    "batch",
    "lr",
    "runs",
    "test-fraction",
    "lim-size",
];

/// Defaults from a `key=value` file plus the seed environment variable.
/// Lookup order everywhere: explicit flag, config file, environment
/// (seed only), built-in default.
pub struct Resolver {
    config: BTreeMap<String, String>,
    env_seed: Option<String>,
}

impl Resolver {
    pub fn new(config_path: Option<&Path>, env_seed: Option<String>) -> Result<Self, AppError> {
        let config = match config_path {
            Some(path) => {
                let text = fs::read_to_string(path).map_err(|e| {
                    AppError::Input(format!("cannot read config {}: {e}", path.display()))
                })?;
                parse_config(&text)
                    .map_err(|e| AppError::Usage(format!("config {}: {e}", path.display())))?
            }
            None => BTreeMap::new(),
        };
        Ok(Resolver { config, env_seed })
    }

    /// Flag value, else the parsed config value, else None.
    fn value<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, AppError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.config.get(key) {
            Some(raw) => raw.parse().map(Some).map_err(|_| {
                AppError::Usage(format!("config value {key}={raw} is not valid for {key}"))
            }),
            None => Ok(None),
        }
    }

    fn seed(&self, flag: Option<u64>) -> Result<u64, AppError> {
        if let Some(seed) = self.value(flag, "seed")? {
            return Ok(seed);
        }
        match &self.env_seed {
            Some(raw) => raw.parse().map_err(|_| {
                AppError::Usage(format!("{SEED_ENV}={raw} is not a valid seed"))
            }),
            None => Ok(DEFAULT_SEED),
        }
    }

    fn train_config(
        &self,
        seed: Option<u64>,
        epochs: Option<usize>,
        batch: Option<usize>,
        lr: Option<f64>,
    ) -> Result<TrainConfig, AppError> {
        Ok(TrainConfig {
            learning_rate: self.value(lr, "lr")?.unwrap_or(DEFAULT_LR),
            batch_size: self.value(batch, "batch")?.unwrap_or(DEFAULT_BATCH),
            epochs: self.value(epochs, "epochs")?.unwrap_or(DEFAULT_EPOCHS),
            seed: self.seed(seed)?,
        })
    }

    fn test_fraction(&self, flag: Option<f64>) -> Result<f64, AppError> {
        Ok(self
            .value(flag, "test-fraction")?
            .unwrap_or(DEFAULT_TEST_FRACTION))
    }
}

fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut entries = BTreeMap::new();
    for (number, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!("line {}: expected key=value", number + 1));
        };
        let key = key.trim();
        if !CONFIG_KEYS.contains(&key) {
            return Err(format!(
                "line {}: unknown key \"{key}\" (known: {})",
                number + 1,
                CONFIG_KEYS.join(", ")
            ));
        }
        entries.insert(key.to_string(), value.trim().to_string());
    }
    Ok(entries)
}

/// Key=value accumulator for `--report`.
struct Report {
    lines: String,
}

impl Report {
    fn new(schema: &str) -> Self {
        Report {
            lines: format!("schema={schema}\n"),
        }
    }

    fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.lines, "{key}={value}");
    }

    fn into_string(self) -> String {
        self.lines
    }
}

/// Executes a parsed command line. `env_seed` is the raw value of
/// [`SEED_ENV`], passed explicitly so tests control it.
pub fn run(cli: Cli, env_seed: Option<String>) -> Result<(), AppError> {
    let resolver = Resolver::new(cli.config.as_deref(), env_seed)?;
    let report = match cli.command {
        Command::Extract(args) => cmd_extract(&resolver, args)?,
        Command::Fingerprint(args) => cmd_fingerprint(args)?,
        Command::Train(args) => cmd_train(&resolver, args)?,
        Command::Eval(args) => cmd_eval(args)?,
        Command::Compare(args) => cmd_compare(&resolver, args)?,
        Command::Inspect(args) => cmd_inspect(args)?,
        Command::Synth(args) => cmd_synth(&resolver, args)?,
    };
    if let Some(path) = &cli.report {
        fs::write(path, report).map_err(|e| write_err("report", path, e))?;
    }
    Ok(())
}

fn print_summary(summary: &ExtractSummary) {
    println!("packets read: {}", summary.packets_read);
    println!("images written: {}", summary.images_written);
    for (reason, count) in &summary.skips {
        println!("skipped {reason}: {count}");
    }
    println!("images per class:");
    for (name, count) in &summary.per_class {
        println!("  {name}: {count}");
    }
}

/// `out.pimg` becomes `out-6x6.pimg` when several shapes are written.
fn shape_suffixed(out: &Path, width: u16, height: u16) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}-{width}x{height}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{width}x{height}"),
    };
    out.with_file_name(name)
}

fn cmd_extract(resolver: &Resolver, args: ExtractArgs) -> Result<String, AppError> {
    let encoder_name = resolver
        .value(args.encoder, "encoder")?
        .ok_or_else(|| AppError::Usage("--encoder is required (flag or config)".into()))?;
    let encoder = EncoderChoice::from_name(&encoder_name).ok_or_else(|| {
        AppError::Usage(format!(
            "unknown encoder \"{encoder_name}\" (expected lim, lotfollahi, wang, or payload784)"
        ))
    })?;
    let lim_name: Option<String> = resolver.value(args.lim_size, "lim-size")?;
    let lim = match &lim_name {
        Some(raw) => LimSizing::from_name(raw).ok_or_else(|| {
            AppError::Usage(format!(
                "invalid --lim-size \"{raw}\" (expected auto, 36, 64, 256, or 1024)"
            ))
        })?,
        None => LimSizing::Auto,
    };
    let map_path = resolver
        .value(args.mac_map, "mac-map")?
        .ok_or_else(|| AppError::Usage("--mac-map is required (flag or config)".into()))?;
    let map = read_mac_map(&map_path).map_err(input_err)?;

    let mut captures = Vec::with_capacity(args.pcaps.len());
    for path in &args.pcaps {
        let capture = open_pcap(path)
            .map_err(|e| AppError::Input(format!("{}: {e}", path.display())))?;
        captures.push(capture);
    }

    let (datasets, summary) = extract_datasets(&captures, &map, encoder, lim);
    print_summary(&summary);

    let mut report = Report::new("pktimg.extract.v1");
    report.push("encoder", encoder.name());
    report.push("packets_read", summary.packets_read);
    report.push("images_written", summary.images_written);
    for (reason, count) in &summary.skips {
        report.push(&format!("skip.{reason}"), count);
    }
    for (name, count) in &summary.per_class {
        report.push(&format!("class.{name}"), count);
    }

    if summary.images_written == 0 {
        return Err(AppError::Empty(
            "0 images written: every packet was skipped".into(),
        ));
    }

    let multi = datasets.len() > 1;
    if multi {
        println!(
            "note: {} image shapes realized; writing one dataset per shape",
            datasets.len()
        );
    }
    report.push("files", datasets.len());
    for (i, ds) in datasets.iter().enumerate() {
        let path = if multi {
            shape_suffixed(&args.out, ds.width, ds.height)
        } else {
            args.out.clone()
        };
        write_dataset(ds, &path).map_err(|e| write_err("dataset", &path, e))?;
        println!(
            "wrote {} ({} records, {}x{}, {})",
            path.display(),
            ds.len(),
            ds.width,
            ds.height,
            ds.encoder.name()
        );
        report.push(&format!("file.{i}"), path.display());
        report.push(&format!("file.{i}.records"), ds.len());
        report.push(&format!("file.{i}.width"), ds.width);
        report.push(&format!("file.{i}.height"), ds.height);
    }
    Ok(report.into_string())
}

fn cmd_fingerprint(args: FingerprintArgs) -> Result<String, AppError> {
    let (dataset, _calibration) = read_fingerprint_dataset(&args.csv).map_err(|e| match e {
        FingerprintCsvError::Empty => AppError::Empty(e.to_string()),
        other => AppError::Input(other.to_string()),
    })?;
    write_dataset(&dataset, &args.out).map_err(|e| write_err("dataset", &args.out, e))?;
    println!(
        "encoded {} rows into {} ({}x{}, {} classes)",
        dataset.len(),
        args.out.display(),
        dataset.width,
        dataset.height,
        dataset.class_names.len()
    );
    let mut report = Report::new("pktimg.fingerprint.v1");
    report.push("rows", dataset.len());
    report.push("classes", dataset.class_names.len());
    report.push("width", dataset.width);
    report.push("height", dataset.height);
    report.push("out", args.out.display());
    Ok(report.into_string())
}

fn cmd_train(resolver: &Resolver, args: TrainArgs) -> Result<String, AppError> {
    let dataset = read_dataset(&args.dataset)
        .map_err(|e| AppError::Input(format!("{}: {e}", args.dataset.display())))?;
    let cfg = resolver.train_config(args.seed, args.epochs, args.batch, args.lr)?;
    let test_fraction = resolver.test_fraction(args.test_fraction)?;
    let (train_set, test_set) = dataset
        .split_stratified(test_fraction, cfg.seed)
        .map_err(split_error)?;

    println!(
        "training on {} records, holding out {} ({} classes, {}x{})",
        train_set.len(),
        test_set.len(),
        dataset.class_names.len(),
        dataset.width,
        dataset.height
    );
    let started = Instant::now();
    let (model, history) = train(&train_set, &cfg).map_err(train_error)?;
    let train_time_s = started.elapsed().as_secs_f64();
    for stats in &history {
        println!(
            "epoch {}/{}: loss {:.6}, train accuracy {:.4}",
            stats.epoch + 1,
            cfg.epochs,
            stats.mean_loss,
            stats.accuracy
        );
    }

    let started = Instant::now();
    let eval = evaluate(&model, &test_set).map_err(train_error)?;
    let eval_time_s = started.elapsed().as_secs_f64();
    println!("held-out accuracy: {:.4}", eval.accuracy);

    save_model(&model, &cfg, &args.model_out)
        .map_err(|e| write_err("model", &args.model_out, e))?;
    let history_path = args.model_out.with_extension("history.csv");
    write_history(&history_path, &history)?;
    println!(
        "wrote model {} and history {}",
        args.model_out.display(),
        history_path.display()
    );

    let mut report = Report::new("pktimg.train.v1");
    report.push("dataset", args.dataset.display());
    report.push("records", dataset.len());
    report.push("classes", dataset.class_names.len());
    report.push("train_records", train_set.len());
    report.push("test_records", test_set.len());
    report.push("seed", cfg.seed);
    report.push("epochs", cfg.epochs);
    report.push("batch", cfg.batch_size);
    report.push("lr", cfg.learning_rate);
    report.push("test_fraction", test_fraction);
    if let Some(last) = history.last() {
        report.push("accuracy.final_train", last.accuracy);
        report.push("loss.final_train", last.mean_loss);
    }
    report.push("accuracy.holdout", eval.accuracy);
    report.push("time.train_s", train_time_s);
    report.push("time.eval_s", eval_time_s);
    report.push("model", args.model_out.display());
    report.push("history", history_path.display());
    Ok(report.into_string())
}

fn write_history(
    path: &Path,
    history: &[pktimg_core::nn::EpochStats],
) -> Result<(), AppError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| write_err("history", path, e))?;
    writer
        .write_record(["epoch", "mean_loss", "accuracy"])
        .and_then(|()| {
            history.iter().try_for_each(|s| {
                writer.write_record([
                    (s.epoch + 1).to_string(),
                    s.mean_loss.to_string(),
                    s.accuracy.to_string(),
                ])
            })
        })
        .and_then(|()| writer.flush().map_err(csv::Error::from))
        .map_err(|e| write_err("history", path, e))
}

fn push_class_metrics(report: &mut Report, prefix: &str, per_class: &[(String, ClassMetrics)]) {
    for (name, m) in per_class {
        report.push(&format!("{prefix}.{name}.precision"), m.precision);
        report.push(&format!("{prefix}.{name}.recall"), m.recall);
        report.push(&format!("{prefix}.{name}.support"), m.support);
    }
}

fn cmd_eval(args: EvalArgs) -> Result<String, AppError> {
    let dataset = read_dataset(&args.dataset)
        .map_err(|e| AppError::Input(format!("{}: {e}", args.dataset.display())))?;
    let (model, _train_cfg) = load_model(&args.model)
        .map_err(|e| AppError::Input(format!("{}: {e}", args.model.display())))?;

    let started = Instant::now();
    let eval = evaluate(&model, &dataset).map_err(train_error)?;
    let eval_time_s = started.elapsed().as_secs_f64();

    let truth: Vec<u16> = dataset.records.iter().map(|r| r.label).collect();
    let metrics = pktimg_core::stats::per_class_metrics(
        &eval.predictions,
        &truth,
        dataset.class_names.len(),
    );
    let per_class: Vec<(String, ClassMetrics)> =
        dataset.class_names.iter().cloned().zip(metrics).collect();

    println!(
        "accuracy {:.4} over {} records ({:.3} s)",
        eval.accuracy,
        dataset.len(),
        eval_time_s
    );
    for (name, m) in &per_class {
        println!(
            "  {name}: precision {:.4}, recall {:.4}, support {}",
            m.precision, m.recall, m.support
        );
    }

    let mut report = Report::new("pktimg.eval.v1");
    report.push("dataset", args.dataset.display());
    report.push("model", args.model.display());
    report.push("records", dataset.len());
    report.push("accuracy", eval.accuracy);
    report.push("time.eval_s", eval_time_s);
    push_class_metrics(&mut report, "class", &per_class);
    Ok(report.into_string())
}

fn cmd_compare(resolver: &Resolver, args: CompareArgs) -> Result<String, AppError> {
    let dataset_a = read_dataset(&args.dataset_a)
        .map_err(|e| AppError::Input(format!("{}: {e}", args.dataset_a.display())))?;
    let dataset_b = read_dataset(&args.dataset_b)
        .map_err(|e| AppError::Input(format!("{}: {e}", args.dataset_b.display())))?;
    if dataset_a.class_names != dataset_b.class_names {
        return Err(AppError::Input(format!(
            "datasets label different device sets ({:?} vs {:?}); comparison requires one label space",
            dataset_a.class_names, dataset_b.class_names
        )));
    }

    let runs = resolver.value(args.runs, "runs")?.unwrap_or(DEFAULT_RUNS);
    let hyper = resolver.train_config(args.seed, args.epochs, args.batch, args.lr)?;
    let test_fraction = resolver.test_fraction(args.test_fraction)?;
    let name_of = |path: &Path| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string())
    };

    let runs_a = run_experiment(&dataset_a, &hyper, runs, hyper.seed, test_fraction)
        .map_err(experiment_error)?;
    let runs_b = run_experiment(&dataset_b, &hyper, runs, hyper.seed, test_fraction)
        .map_err(experiment_error)?;
    let report = compare(
        &name_of(&args.dataset_a),
        &runs_a,
        &name_of(&args.dataset_b),
        &runs_b,
    )
    .map_err(experiment_error)?;

    print!("{}", report.render_text());
    Ok(report.render_kv())
}

fn cmd_inspect(args: InspectArgs) -> Result<String, AppError> {
    let dataset = read_dataset(&args.dataset)
        .map_err(|e| AppError::Input(format!("{}: {e}", args.dataset.display())))?;
    let index = args.index.unwrap_or(0);
    if index >= dataset.len() {
        return Err(AppError::Usage(format!(
            "index {index} out of range: dataset has {} record(s)",
            dataset.len()
        )));
    }
    let record = &dataset.records[index];
    let class = dataset
        .class_names
        .get(usize::from(record.label))
        .cloned()
        .unwrap_or_else(|| format!("#{}", record.label));
    let image = PseudoImage {
        width: dataset.width,
        height: dataset.height,
        pixels: record.pixels.clone(),
        encoder: dataset.encoder,
        pixel_max: dataset.pixel_max,
        label: Some(record.label),
    };
    fs::write(&args.out_pgm, image.render_pgm())
        .map_err(|e| write_err("PGM", &args.out_pgm, e))?;
    println!(
        "record {index}: class {class}, {}x{}, encoder {}",
        dataset.width,
        dataset.height,
        dataset.encoder.name()
    );
    print!("{}", image.render_ascii());
    println!("wrote {}", args.out_pgm.display());

    let mut report = Report::new("pktimg.inspect.v1");
    report.push("dataset", args.dataset.display());
    report.push("index", index);
    report.push("label", record.label);
    report.push("class", class);
    report.push("width", dataset.width);
    report.push("height", dataset.height);
    report.push("pgm", args.out_pgm.display());
    Ok(report.into_string())
}

fn cmd_synth(resolver: &Resolver, args: SynthArgs) -> Result<String, AppError> {
    let seed = resolver.seed(args.seed)?;
    let packets = args.packets.unwrap_or(DEFAULT_SYNTH_PACKETS);
    let bundle = synth::generate(seed, packets);

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| write_err("directory", &args.out_dir, e))?;
    let pcap_path = args.out_dir.join("synth.pcap");
    let map_path = args.out_dir.join("devices.csv");
    let csv_path = args.out_dir.join("fingerprint.csv");
    fs::write(&pcap_path, &bundle.pcap).map_err(|e| write_err("capture", &pcap_path, e))?;
    fs::write(&map_path, &bundle.mac_map_csv).map_err(|e| write_err("device map", &map_path, e))?;
    fs::write(&csv_path, &bundle.fingerprint_csv)
        .map_err(|e| write_err("fingerprint CSV", &csv_path, e))?;

    println!(
        "generated {} devices x {} data packets (seed {seed})",
        synth::DEVICES.len(),
        packets
    );
    println!("wrote {}", pcap_path.display());
    println!("wrote {}", map_path.display());
    println!("wrote {}", csv_path.display());

    let mut report = Report::new("pktimg.synth.v1");
    report.push("seed", seed);
    report.push("packets_per_device", packets);
    report.push("devices", synth::DEVICES.len());
    report.push("pcap", pcap_path.display());
    report.push("mac_map", map_path.display());
    report.push("fingerprint", csv_path.display());
    Ok(report.into_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_parsing_accepts_known_keys_and_comments() {
        let text = "# defaults\n\nseed = 7\nepochs=3\nlim-size=256\n";
        let entries = parse_config(text).unwrap();
        assert_eq!(entries["seed"], "7");
        assert_eq!(entries["epochs"], "3");
        assert_eq!(entries["lim-size"], "256");
    }

    #[test]
    fn config_rejects_unknown_keys_and_bad_lines() {
        let err = parse_config("speed=9\n").unwrap_err();
        assert!(err.contains("unknown key \"speed\""), "{err}");
        let err = parse_config("seed\n").unwrap_err();
        assert!(err.contains("expected key=value"), "{err}");
    }

    fn resolver_with(config: &[(&str, &str)], env_seed: Option<&str>) -> Resolver {
        Resolver {
            config: config
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            env_seed: env_seed.map(str::to_string),
        }
    }

    #[test]
    fn seed_precedence_is_flag_config_env_default() {
        let all = resolver_with(&[("seed", "10")], Some("20"));
        assert_eq!(all.seed(Some(5)).unwrap(), 5);
        assert_eq!(all.seed(None).unwrap(), 10);
        let env_only = resolver_with(&[], Some("20"));
        assert_eq!(env_only.seed(None).unwrap(), 20);
        let bare = resolver_with(&[], None);
        assert_eq!(bare.seed(None).unwrap(), DEFAULT_SEED);
    }

    #[test]
    fn bad_env_seed_is_a_usage_error() {
        let r = resolver_with(&[], Some("ten"));
        assert!(matches!(r.seed(None), Err(AppError::Usage(_))));
    }

    #[test]
    fn bad_config_value_is_a_usage_error() {
        let r = resolver_with(&[("epochs", "many")], None);
        let err = r.train_config(None, None, None, None).unwrap_err();
        assert!(matches!(err, AppError::Usage(_)));
        assert!(err.to_string().contains("epochs"));
    }

    #[test]
    fn hyper_defaults_apply_when_nothing_is_set() {
        let r = resolver_with(&[], None);
        let cfg = r.train_config(None, None, None, None).unwrap();
        assert_eq!(cfg.seed, DEFAULT_SEED);
        assert_eq!(cfg.epochs, DEFAULT_EPOCHS);
        assert_eq!(cfg.batch_size, DEFAULT_BATCH);
        assert_eq!(cfg.learning_rate, DEFAULT_LR);
        assert_eq!(r.test_fraction(None).unwrap(), DEFAULT_TEST_FRACTION);
    }

    #[test]
    fn exit_codes_match_the_contract() {
        assert_eq!(AppError::Io("x".into()).exit_code(), 1);
        assert_eq!(AppError::Usage("x".into()).exit_code(), 2);
        assert_eq!(AppError::Input("x".into()).exit_code(), 3);
        assert_eq!(AppError::Empty("x".into()).exit_code(), 4);
    }

    #[test]
    fn shape_suffix_keeps_the_extension() {
        assert_eq!(
            shape_suffixed(Path::new("out/data.pimg"), 6, 6),
            Path::new("out/data-6x6.pimg")
        );
        assert_eq!(
            shape_suffixed(Path::new("data"), 16, 16),
            Path::new("data-16x16")
        );
    }

    #[test]
    fn cli_parses_representative_lines() {
        let cli = Cli::try_parse_from([
            "pktimg", "extract", "--pcap", "a.pcap", "--pcap", "b.pcap", "--encoder",
            "payload784", "--mac-map", "m.csv", "--out", "d.pimg",
        ])
        .unwrap();
        match cli.command {
            Command::Extract(args) => {
                assert_eq!(args.pcaps.len(), 2);
                assert_eq!(args.encoder.as_deref(), Some("payload784"));
            }
            other => panic!("parsed wrong command {other:?}"),
        }

        let cli = Cli::try_parse_from([
            "pktimg",
            "--report",
            "r.txt",
            "compare",
            "--dataset-a",
            "a.pimg",
            "--dataset-b",
            "b.pimg",
            "--runs",
            "4",
        ])
        .unwrap();
        assert_eq!(cli.report.as_deref(), Some(Path::new("r.txt")));
        match cli.command {
            Command::Compare(args) => assert_eq!(args.runs, Some(4)),
            other => panic!("parsed wrong command {other:?}"),
        }

        assert!(Cli::try_parse_from(["pktimg", "extract"]).is_err());
        assert!(Cli::try_parse_from(["pktimg", "bogus"]).is_err());
    }

    #[test]
    fn error_mappings_follow_the_contract() {
        assert!(matches!(
            split_error(DatasetError::BadTestFraction(2.0)),
            AppError::Usage(_)
        ));
        assert!(matches!(
            split_error(DatasetError::Empty),
            AppError::Input(_)
        ));
        assert!(matches!(
            train_error(TrainError::ZeroEpochs),
            AppError::Usage(_)
        ));
        assert!(matches!(
            train_error(TrainError::DatasetMismatch),
            AppError::Input(_)
        ));
        assert!(matches!(
            experiment_error(ExperimentError::ZeroRuns),
            AppError::Usage(_)
        ));
    }
}
