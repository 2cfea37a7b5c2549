//! Repeated-seed train/evaluate experiments, wall-clock timing, and the
//! two-sample accuracy comparison with a Mann-Whitney U verdict.

use std::fmt::Write as _;
use std::time::Instant;

use pktimg_core::dataset::DatasetError;
use pktimg_core::nn::{evaluate, train, TrainConfig, TrainError};
use pktimg_core::stats::{mann_whitney_u, per_class_metrics, ClassMetrics, UMethod, UTestError, UTestResult};
use pktimg_core::ImageDataset;

/// Significance level for the comparison verdict.
pub const ALPHA: f64 = 0.05;

/// One split/train/evaluate cycle. Everything except the `*_time_s`
/// fields is a pure function of (dataset, hyperparameters, seed).
#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub seed: u64,
    pub accuracy: f64,
    pub train_time_s: f64,
    pub eval_time_s: f64,
    /// (class name, metrics) in label order over the held-out records.
    pub per_class: Vec<(String, ClassMetrics)>,
}

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("experiment needs at least one run")]
    ZeroRuns,
    #[error("cannot split dataset: {0}")]
    Split(#[from] DatasetError),
    #[error("training failed: {0}")]
    Train(#[from] TrainError),
    #[error("cannot compare accuracy samples: {0}")]
    UTest(#[from] UTestError),
    #[error("comparison side \"{0}\" has no runs")]
    EmptySide(String),
}

/// Runs `n_runs` independent cycles. Run `i` splits and trains with seed
/// `base_seed + i`, so a run's result is reproducible in isolation.
pub fn run_experiment(
    dataset: &ImageDataset,
    hyper: &TrainConfig,
    n_runs: usize,
    base_seed: u64,
    test_fraction: f64,
) -> Result<Vec<RunResult>, ExperimentError> {
    if n_runs == 0 {
        return Err(ExperimentError::ZeroRuns);
    }
    let mut results = Vec::with_capacity(n_runs);
    for i in 0..n_runs {
        let seed = base_seed.wrapping_add(i as u64);
        let (train_set, test_set) = dataset.split_stratified(test_fraction, seed)?;
        let cfg = TrainConfig { seed, ..*hyper };

        let started = Instant::now();
        let (model, _history) = train(&train_set, &cfg)?;
        let train_time_s = started.elapsed().as_secs_f64();

        let started = Instant::now();
        let eval = evaluate(&model, &test_set)?;
        let eval_time_s = started.elapsed().as_secs_f64();

        let truth: Vec<u16> = test_set.records.iter().map(|r| r.label).collect();
        let metrics = per_class_metrics(&eval.predictions, &truth, test_set.class_names.len());
        results.push(RunResult {
            seed,
            accuracy: eval.accuracy,
            train_time_s,
            eval_time_s,
            per_class: test_set.class_names.iter().cloned().zip(metrics).collect(),
        });
    }
    Ok(results)
}

/// Accuracy and timing aggregates for one comparison side.
#[derive(Debug, Clone, PartialEq)]
pub struct SideSummary {
    pub name: String,
    pub accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    pub median_accuracy: f64,
    pub mean_train_time_s: f64,
    pub mean_eval_time_s: f64,
}

impl SideSummary {
    fn from_runs(name: &str, runs: &[RunResult]) -> Result<Self, ExperimentError> {
        if runs.is_empty() {
            return Err(ExperimentError::EmptySide(name.to_string()));
        }
        let accuracies: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
        Ok(SideSummary {
            name: name.to_string(),
            mean_accuracy: mean(&accuracies),
            median_accuracy: median(&accuracies),
            mean_train_time_s: mean(&runs.iter().map(|r| r.train_time_s).collect::<Vec<_>>()),
            mean_eval_time_s: mean(&runs.iter().map(|r| r.eval_time_s).collect::<Vec<_>>()),
            accuracies,
        })
    }
}

fn median(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("accuracies are finite"));
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        (sorted[mid - 1] + sorted[mid]) / 2.0
    }
}

/// The two-sided comparison: per-side aggregates, the U test over the two
/// accuracy samples, and the verdict at [`ALPHA`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub a: SideSummary,
    pub b: SideSummary,
    pub runs_a: Vec<RunResult>,
    pub runs_b: Vec<RunResult>,
    pub u_test: UTestResult,
    pub alpha: f64,
    pub significant: bool,
}

/// Compares two run sequences produced under the same protocol.
pub fn compare(
    name_a: &str,
    runs_a: &[RunResult],
    name_b: &str,
    runs_b: &[RunResult],
) -> Result<ComparisonReport, ExperimentError> {
    let a = SideSummary::from_runs(name_a, runs_a)?;
    let b = SideSummary::from_runs(name_b, runs_b)?;
    let u_test = mann_whitney_u(&a.accuracies, &b.accuracies)?;
    let significant = u_test.p_value < ALPHA;
    Ok(ComparisonReport {
        a,
        b,
        runs_a: runs_a.to_vec(),
        runs_b: runs_b.to_vec(),
        u_test,
        alpha: ALPHA,
        significant,
    })
}

fn method_name(method: UMethod) -> &'static str {
    match method {
        UMethod::Exact => "exact",
        UMethod::NormalApprox => "normal-approx",
    }
}

impl ComparisonReport {
    /// Human-readable summary.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "comparison: {} ({} runs) vs {} ({} runs)",
            self.a.name,
            self.a.accuracies.len(),
            self.b.name,
            self.b.accuracies.len()
        );
        let _ = writeln!(out);
        let _ = writeln!(out, "  {:<24} {:>14} {:>14}", "", self.a.name, self.b.name);
        let row = |label: &str, a: f64, b: f64| format!("  {label:<24} {a:>14.6} {b:>14.6}\n");
        out.push_str(&row("mean accuracy", self.a.mean_accuracy, self.b.mean_accuracy));
        out.push_str(&row(
            "median accuracy",
            self.a.median_accuracy,
            self.b.median_accuracy,
        ));
        out.push_str(&row(
            "mean train time (s)",
            self.a.mean_train_time_s,
            self.b.mean_train_time_s,
        ));
        out.push_str(&row(
            "mean eval time (s)",
            self.a.mean_eval_time_s,
            self.b.mean_eval_time_s,
        ));
        let _ = writeln!(out);
        let _ = writeln!(
            out,
            "Mann-Whitney U = {} ({}), p = {}",
            self.u_test.u,
            method_name(self.u_test.method),
            self.u_test.p_value
        );
        let _ = writeln!(
            out,
            "{} at alpha = {}",
            if self.significant {
                "significant"
            } else {
                "not significant"
            },
            self.alpha
        );
        out
    }

    /// Machine-readable `key=value` lines. Every wall-clock quantity has
    /// `time` in its key, so CI can compare reports after dropping those
    /// lines; everything else is deterministic for fixed inputs.
    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "schema=pktimg.compare.v1");
        let _ = writeln!(out, "alpha={}", self.alpha);
        for (tag, side, runs) in [("a", &self.a, &self.runs_a), ("b", &self.b, &self.runs_b)] {
            let _ = writeln!(out, "{tag}.name={}", side.name);
            let _ = writeln!(out, "{tag}.runs={}", side.accuracies.len());
            let _ = writeln!(out, "{tag}.accuracy.mean={}", side.mean_accuracy);
            let _ = writeln!(out, "{tag}.accuracy.median={}", side.median_accuracy);
            let _ = writeln!(out, "{tag}.time.train_mean_s={}", side.mean_train_time_s);
            let _ = writeln!(out, "{tag}.time.eval_mean_s={}", side.mean_eval_time_s);
            for (i, run) in runs.iter().enumerate() {
                let _ = writeln!(out, "{tag}.run.{i}.seed={}", run.seed);
                let _ = writeln!(out, "{tag}.run.{i}.accuracy={}", run.accuracy);
                let _ = writeln!(out, "{tag}.run.{i}.time.train_s={}", run.train_time_s);
                let _ = writeln!(out, "{tag}.run.{i}.time.eval_s={}", run.eval_time_s);
            }
        }
        let _ = writeln!(out, "u.statistic={}", self.u_test.u);
        let _ = writeln!(out, "u.p_value={}", self.u_test.p_value);
        let _ = writeln!(out, "u.method={}", method_name(self.u_test.method));
        let _ = writeln!(out, "significant={}", self.significant);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pktimg_core::image::EncoderId;

    /// Two clearly separable classes: dim pixels vs bright pixels.
    fn toy_dataset() -> ImageDataset {
        let mut ds = ImageDataset::new(
            EncoderId::Payload784,
            255,
            12,
            12,
            vec!["dim".into(), "bright".into()],
        );
        for i in 0..24u32 {
            let dim: Vec<u8> = (0..144).map(|p| ((p as u32 + i) % 40 + 10) as u8).collect();
            let bright: Vec<u8> = (0..144).map(|p| ((p as u32 * 3 + i) % 50 + 200) as u8).collect();
            ds.push(dim, 0).unwrap();
            ds.push(bright, 1).unwrap();
        }
        ds
    }

    fn quick_hyper() -> TrainConfig {
        TrainConfig {
            learning_rate: 0.05,
            batch_size: 8,
            epochs: 3,
            seed: 0, // replaced per run
        }
    }

    #[test]
    fn runs_are_deterministic_and_seeded_in_sequence() {
        let ds = toy_dataset();
        let first = run_experiment(&ds, &quick_hyper(), 3, 7, 0.25).unwrap();
        let second = run_experiment(&ds, &quick_hyper(), 3, 7, 0.25).unwrap();
        assert_eq!(first.len(), 3);
        assert_eq!(
            first.iter().map(|r| r.seed).collect::<Vec<_>>(),
            [7, 8, 9]
        );
        for (x, y) in first.iter().zip(&second) {
            assert_eq!(x.accuracy, y.accuracy);
            assert_eq!(x.per_class, y.per_class);
        }
    }

    #[test]
    fn separable_toy_data_is_learned() {
        let ds = toy_dataset();
        let runs = run_experiment(&ds, &quick_hyper(), 2, 42, 0.25).unwrap();
        for run in &runs {
            assert!(run.accuracy >= 0.9, "accuracy {}", run.accuracy);
            let support: usize = run.per_class.iter().map(|(_, m)| m.support).sum();
            assert_eq!(support, 12); // ceil(24 * 0.25) per class
            assert!(run.train_time_s >= 0.0 && run.eval_time_s >= 0.0);
        }
    }

    #[test]
    fn zero_runs_is_rejected() {
        let ds = toy_dataset();
        assert!(matches!(
            run_experiment(&ds, &quick_hyper(), 0, 1, 0.25),
            Err(ExperimentError::ZeroRuns)
        ));
    }

    fn fake_run(seed: u64, accuracy: f64) -> RunResult {
        RunResult {
            seed,
            accuracy,
            train_time_s: 1.5,
            eval_time_s: 0.25,
            per_class: Vec::new(),
        }
    }

    #[test]
    fn identical_sides_are_not_significant() {
        let runs: Vec<RunResult> = (0..10).map(|i| fake_run(i, 0.8)).collect();
        let report = compare("a", &runs, "b", &runs).unwrap();
        assert!(report.u_test.p_value >= 0.9);
        assert!(!report.significant);
    }

    #[test]
    fn disjoint_sides_are_significant() {
        let lo: Vec<RunResult> = (0..10).map(|i| fake_run(i, 0.50 + 0.001 * i as f64)).collect();
        let hi: Vec<RunResult> = (0..10).map(|i| fake_run(i, 0.90 + 0.001 * i as f64)).collect();
        let report = compare("low", &lo, "high", &hi).unwrap();
        assert!(report.significant);
        assert!(report.u_test.p_value < 0.001, "p = {}", report.u_test.p_value);
        assert_eq!(report.u_test.u, 0.0);
    }

    #[test]
    fn empty_side_is_rejected() {
        let runs = vec![fake_run(0, 0.5)];
        assert!(matches!(
            compare("a", &runs, "b", &[]).unwrap_err(),
            ExperimentError::EmptySide(name) if name == "b"
        ));
    }

    #[test]
    fn median_handles_even_and_odd_lengths() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert_eq!(median(&[5.0]), 5.0);
    }

    #[test]
    fn kv_report_is_parseable_and_complete() {
        let lo: Vec<RunResult> = (0..3).map(|i| fake_run(i, 0.5)).collect();
        let hi: Vec<RunResult> = (0..3).map(|i| fake_run(10 + i, 0.9)).collect();
        let report = compare("payload", &lo, "fingerprint", &hi).unwrap();
        let kv = report.render_kv();

        let mut keys = std::collections::BTreeSet::new();
        for line in kv.lines() {
            let (key, _value) = line.split_once('=').expect("every line is key=value");
            assert!(keys.insert(key.to_string()), "duplicate key {key}");
        }
        for required in [
            "a.accuracy.mean",
            "b.accuracy.mean",
            "a.time.train_mean_s",
            "b.time.train_mean_s",
            "u.statistic",
            "u.p_value",
            "u.method",
            "alpha",
            "significant",
        ] {
            assert!(keys.contains(required), "missing key {required}");
        }

        let lookup = |key: &str| {
            kv.lines()
                .find_map(|l| l.strip_prefix(&format!("{key}=")))
                .unwrap()
                .to_string()
        };
        assert_eq!(lookup("a.name"), "payload");
        assert_eq!(lookup("alpha"), "0.05");
        let p: f64 = lookup("u.p_value").parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn kv_reports_differ_only_in_time_lines_across_timings() {
        let runs: Vec<RunResult> = (0..4).map(|i| fake_run(i, 0.7 + 0.01 * i as f64)).collect();
        let mut slower = runs.clone();
        for run in &mut slower {
            run.train_time_s *= 10.0;
            run.eval_time_s += 3.0;
        }
        let fast = compare("a", &runs, "b", &runs).unwrap().render_kv();
        let slow = compare("a", &slower, "b", &slower).unwrap().render_kv();
        assert_ne!(fast, slow);
        let strip = |s: &str| {
            s.lines()
                .filter(|l| !l.contains("time"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&fast), strip(&slow));
    }

    #[test]
    fn text_report_names_the_verdict() {
        let runs: Vec<RunResult> = (0..3).map(|i| fake_run(i, 0.8)).collect();
        let report = compare("a", &runs, "b", &runs).unwrap();
        let text = report.render_text();
        assert!(text.contains("not significant"));
        assert!(text.contains("alpha = 0.05"));
        assert!(text.contains("Mann-Whitney U"));
    }
}
