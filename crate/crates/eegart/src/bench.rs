//! Benchmark orchestration: corpus statistics, multi-run tuning/training/
//! evaluation, and report aggregation/rendering.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::{self, predict_epochs, AlgorithmSpec, Family, Params, TrainSet};
use crate::dataset::{build_splits, LabeledFeatureSet, PipelineConfig};
use crate::edf::{load_annotations, parse_edf, ArtifactClass, CorpusIndex};
use crate::metrics::{self, confusion, evaluate_with, EvalOptions, EvalReport};
use crate::tuning::{default_space, search, Strategy, TrialLog};
use crate::{Error, Result};

pub const DEFAULT_RUNS: usize = 5;
pub const DEFAULT_BUDGET: usize = 50;
pub const SPLIT_RATIOS: (f64, f64, f64) = (0.6, 0.2, 0.2);

fn default_runs() -> usize {
    DEFAULT_RUNS
}
fn default_budget() -> usize {
    DEFAULT_BUDGET
}
fn default_true() -> bool {
    true
}
fn default_families() -> Vec<String> {
    Family::ALL.iter().map(|f| f.name().to_string()).collect()
}
fn default_strategy() -> String {
    "tpe_lite".to_string()
}
fn default_ratios() -> [f64; 3] {
    [SPLIT_RATIOS.0, SPLIT_RATIOS.1, SPLIT_RATIOS.2]
}

/// Benchmark configuration, loadable from a key-value (TOML) file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchConfig {
    pub corpus_root: PathBuf,
    #[serde(default = "default_families")]
    pub families: Vec<String>,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub budget: usize,
    /// Re-draw the patient split for every run; when off, all runs share
    /// the split drawn from the base seed.
    #[serde(default = "default_true")]
    pub resplit_per_run: bool,
    #[serde(default = "default_strategy")]
    pub strategy: String,
    /// Train/validation/test patient fractions; validation and test sizes
    /// are floored, so small corpora need fractions where `floor(n·r) ≥ 1`.
    #[serde(default = "default_ratios")]
    pub split_ratios: [f64; 3],
    #[serde(default)]
    pub f1_exclude_null: bool,
    #[serde(default)]
    pub pipeline: PipelineConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

impl BenchConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: BenchConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("bad config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("budget must be at least 1".into()));
        }
        if self.families.is_empty() {
            return Err(Error::Config("no families selected".into()));
        }
        let sum: f64 = self.split_ratios.iter().sum();
        if self.split_ratios.iter().any(|&r| r <= 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "split_ratios must be positive and sum to 1, got {:?}",
                self.split_ratios
            )));
        }
        self.parsed_families()?;
        self.strategy.parse::<Strategy>()?;
        Ok(())
    }

    pub fn parsed_families(&self) -> Result<Vec<Family>> {
        self.families.iter().map(|f| f.parse()).collect()
    }
}

// ---------------------------------------------------------------------------
// Corpus statistics
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ClassStats {
    pub patients: usize,
    pub sessions: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CorpusStats {
    pub per_class: BTreeMap<ArtifactClass, ClassStats>,
    pub total_patients: usize,
    pub total_sessions: usize,
    pub total_seconds: f64,
}

/// Per artifact class: distinct patients, distinct sessions, annotated
/// seconds; the null row holds the unannotated remainder of the corpus.
pub fn corpus_stats(index: &CorpusIndex) -> Result<CorpusStats> {
    let mut patients: BTreeMap<ArtifactClass, BTreeSet<&str>> = BTreeMap::new();
    let mut sessions: BTreeMap<ArtifactClass, BTreeSet<(&str, &str)>> = BTreeMap::new();
    let mut seconds: BTreeMap<ArtifactClass, f64> = BTreeMap::new();
    let mut total_seconds = 0.0;
    for entry in &index.entries {
        let rec = parse_edf(&std::fs::read(&entry.edf_path)?)?;
        let duration = rec.duration_s();
        total_seconds += duration;
        let ann = load_annotations(entry, duration)?;
        for e in &ann.events {
            patients.entry(e.label).or_default().insert(&entry.patient_id);
            sessions
                .entry(e.label)
                .or_default()
                .insert((&entry.patient_id, &entry.session_id));
            *seconds.entry(e.label).or_default() += e.stop_s - e.start_s;
        }
    }
    let mut per_class = BTreeMap::new();
    let mut artifact_seconds = 0.0;
    for class in ArtifactClass::ARTIFACTS {
        let s = seconds.get(&class).copied().unwrap_or(0.0);
        artifact_seconds += s;
        per_class.insert(
            class,
            ClassStats {
                patients: patients.get(&class).map_or(0, |p| p.len()),
                sessions: sessions.get(&class).map_or(0, |s| s.len()),
                seconds: s,
            },
        );
    }
    per_class.insert(
        ArtifactClass::Null,
        ClassStats {
            patients: index.patients.len(),
            sessions: index.entries.len(),
            seconds: total_seconds - artifact_seconds,
        },
    );
    Ok(CorpusStats {
        per_class,
        total_patients: index.patients.len(),
        total_sessions: index.entries.len(),
        total_seconds,
    })
}

impl CorpusStats {
    pub fn render_table(&self) -> String {
        let mut out = format!("{:<10} {:>9} {:>9} {:>12}\n", "Class", "Patients", "Sessions", "Seconds");
        for (class, s) in &self.per_class {
            out.push_str(&format!(
                "{:<10} {:>9} {:>9} {:>12.0}\n",
                class.name(),
                s.patients,
                s.sessions,
                s.seconds
            ));
        }
        out.push_str(&format!(
            "{:<10} {:>9} {:>9} {:>12.0}\n",
            "total", self.total_patients, self.total_sessions, self.total_seconds
        ));
        out
    }
}

// ---------------------------------------------------------------------------
// Benchmark runs
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub seed: u64,
    pub best_params: Params,
    pub validation_score: f64,
    pub trials: usize,
    pub per_window: EvalReport,
    pub per_epoch: EvalReport,
}

/// Mean/stddev/min/max over runs of one scalar metric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl Aggregate {
    pub fn over(values: &[f64]) -> Aggregate {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Aggregate {
            mean,
            std: var.sqrt(),
            min: values.iter().cloned().fold(f64::INFINITY, f64::min),
            max: values.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsAgg {
    pub weighted_f1: Aggregate,
    pub accuracy: Aggregate,
    /// Only classes present in at least one run's truth appear here.
    pub sensitivity: BTreeMap<ArtifactClass, Aggregate>,
}

impl MetricsAgg {
    fn over(reports: &[&EvalReport]) -> MetricsAgg {
        let f1: Vec<f64> = reports.iter().map(|r| r.weighted_f1).collect();
        let acc: Vec<f64> = reports.iter().map(|r| r.accuracy).collect();
        let mut sensitivity = BTreeMap::new();
        for class in ArtifactClass::ALL {
            let vals: Vec<f64> = reports
                .iter()
                .filter_map(|r| r.sensitivity.get(&class).copied())
                .collect();
            if !vals.is_empty() {
                sensitivity.insert(class, Aggregate::over(&vals));
            }
        }
        MetricsAgg {
            weighted_f1: Aggregate::over(&f1),
            accuracy: Aggregate::over(&acc),
            sensitivity,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyResult {
    /// Report label, e.g. `gradient_boost (xgboost-substitute)`.
    pub family: String,
    pub runs: Vec<RunRecord>,
    /// Headline numbers: per-second epochs aggregated from window scores.
    pub per_epoch: MetricsAgg,
    pub per_window: MetricsAgg,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub config: BenchConfig,
    pub families: Vec<FamilyResult>,
}

fn to_train_set(set: &LabeledFeatureSet) -> TrainSet {
    TrainSet::from_labeled(set)
}

/// Per-window weighted-F1 of a fitted model on a labeled set; the tuning
/// objective.
fn window_f1(model: &classifiers::Model, set: &LabeledFeatureSet, opts: EvalOptions) -> Result<f64> {
    let truth: Vec<ArtifactClass> = set.rows.iter().map(|r| r.label).collect();
    let pred = window_predictions(model, set)?;
    Ok(evaluate_with(&confusion(&truth, &pred)?, opts)?.weighted_f1)
}

fn window_predictions(
    model: &classifiers::Model,
    set: &LabeledFeatureSet,
) -> Result<Vec<ArtifactClass>> {
    set.rows
        .iter()
        .map(|r| {
            let c = model.predict_class(&r.features)?;
            ArtifactClass::from_code(c)
                .ok_or_else(|| Error::Classifier(format!("predicted class code {c} out of range")))
        })
        .collect()
}

/// Evaluate per-second epochs: within each session, windows are averaged
/// into epochs and compared against the label of the window starting at
/// that whole second.
fn epoch_evaluation(
    model: &classifiers::Model,
    set: &LabeledFeatureSet,
    opts: EvalOptions,
) -> Result<EvalReport> {
    let mut sessions: BTreeMap<(&str, &str), Vec<&crate::dataset::LabeledRow>> = BTreeMap::new();
    for row in &set.rows {
        sessions
            .entry((&row.patient_id, &row.session_id))
            .or_default()
            .push(row);
    }
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for rows in sessions.values_mut() {
        rows.sort_by(|a, b| a.start_s.partial_cmp(&b.start_s).unwrap());
        let mut epoch_truth: BTreeMap<usize, ArtifactClass> = BTreeMap::new();
        for row in rows.iter() {
            if (row.start_s - row.start_s.round()).abs() < 1e-9 {
                epoch_truth.insert(row.start_s.round() as usize, row.label);
            }
        }
        let feats: Vec<(f64, Vec<f64>)> =
            rows.iter().map(|r| (r.start_s, r.features.clone())).collect();
        for (epoch, label) in predict_epochs(model, &feats)? {
            if let Some(&t) = epoch_truth.get(&epoch) {
                truth.push(t);
                pred.push(label);
            }
        }
    }
    evaluate_with(&confusion(&truth, &pred)?, opts)
}

/// Tune, refit, and evaluate every configured family over `cfg.runs` runs.
/// The whole procedure is a pure function of (corpus bytes, config).
pub fn run_benchmark(index: &CorpusIndex, cfg: &BenchConfig) -> Result<BenchmarkReport> {
    cfg.validate()?;
    let families = cfg.parsed_families()?;
    let strategy: Strategy = cfg.strategy.parse()?;
    let opts = EvalOptions { f1_exclude_null: cfg.f1_exclude_null };
    let cache_dir = cfg.output_dir.as_ref().map(|d| d.join("cache"));

    // run-major so a shared split is built once per run
    let mut per_family_runs: BTreeMap<Family, Vec<RunRecord>> = BTreeMap::new();
    for r in 1..=cfg.runs {
        let seed_r = cfg.seed ^ r as u64;
        let split_seed = if cfg.resplit_per_run { seed_r } else { cfg.seed };
        let ratios = (cfg.split_ratios[0], cfg.split_ratios[1], cfg.split_ratios[2]);
        let splits = build_splits(index, &cfg.pipeline, ratios, split_seed, cache_dir.as_deref())
            .map_err(|e| Error::Dataset(format!("run {r} split stage: {e}")))?;
        if splits.validation.rows.is_empty() || splits.test.rows.is_empty() {
            return Err(Error::Dataset(format!(
                "run {r} split stage: empty validation or test split \
                 ({} patients with ratios {:?}); adjust split_ratios",
                index.patients.len(),
                cfg.split_ratios
            )));
        }
        let train = to_train_set(&splits.train);
        for &family in &families {
            let objective = |params: &Params| -> f64 {
                let spec = AlgorithmSpec { family, hyperparams: params.clone() };
                classifiers::fit(&spec, &train, seed_r)
                    .and_then(|m| window_f1(&m, &splits.validation, opts)).unwrap_or(f64::NAN)
            };
            let log: TrialLog =
                search(&default_space(family), cfg.budget, objective, seed_r, strategy)
                    .map_err(|e| Error::Tuning(format!("run {r} {family} tuning stage: {e}")))?;
            let best = log.best();
            let spec = AlgorithmSpec { family, hyperparams: best.params.clone() };
            let model = classifiers::fit(&spec, &train, seed_r)
                .map_err(|e| Error::Classifier(format!("run {r} {family} refit stage: {e}")))?;
            let truth: Vec<ArtifactClass> = splits.test.rows.iter().map(|r| r.label).collect();
            let pred = window_predictions(&model, &splits.test)?;
            let per_window = evaluate_with(&confusion(&truth, &pred)?, opts)
                .map_err(|e| Error::Metrics(format!("run {r} {family} evaluation stage: {e}")))?;
            let per_epoch = epoch_evaluation(&model, &splits.test, opts)
                .map_err(|e| Error::Metrics(format!("run {r} {family} evaluation stage: {e}")))?;
            per_family_runs.entry(family).or_default().push(RunRecord {
                run: r,
                seed: seed_r,
                best_params: best.params.clone(),
                validation_score: best.score,
                trials: log.trials.len(),
                per_window,
                per_epoch,
            });
        }
    }

    let results = families
        .iter()
        .map(|&family| {
            let runs = per_family_runs.remove(&family).unwrap();
            let epoch_reports: Vec<&EvalReport> = runs.iter().map(|r| &r.per_epoch).collect();
            let window_reports: Vec<&EvalReport> = runs.iter().map(|r| &r.per_window).collect();
            FamilyResult {
                family: family.report_name().to_string(),
                per_epoch: MetricsAgg::over(&epoch_reports),
                per_window: MetricsAgg::over(&window_reports),
                runs,
            }
        })
        .collect();
    Ok(BenchmarkReport { config: cfg.clone(), families: results })
}

impl BenchmarkReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad report JSON: {e}")))
    }

    /// Fixed-width table of per-epoch means in the standard column order.
    pub fn render_table(&self) -> String {
        let mut out = metrics::render_header();
        out.push('\n');
        for fam in &self.families {
            let mut cells = vec![format!("{:<28}", fam.family)];
            cells.push(format!("{:>11.4}", fam.per_epoch.weighted_f1.mean));
            cells.push(format!("{:>9.2}%", fam.per_epoch.accuracy.mean * 100.0));
            for class in ArtifactClass::ALL {
                match fam.per_epoch.sensitivity.get(&class) {
                    Some(a) => cells.push(format!("{:>8.2}%", a.mean * 100.0)),
                    None => cells.push(format!("{:>9}", "-")),
                }
            }
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "algorithm,scoring,weighted_f1_mean,weighted_f1_std,accuracy_mean,accuracy_std,\
             s_eyem,s_chew,s_shiv,s_elpp,s_musc,s_null\n",
        );
        for fam in &self.families {
            for (scoring, agg) in [("per_epoch", &fam.per_epoch), ("per_window", &fam.per_window)] {
                out.push_str(&format!(
                    "{},{},{},{},{},{}",
                    fam.family,
                    scoring,
                    agg.weighted_f1.mean,
                    agg.weighted_f1.std,
                    agg.accuracy.mean,
                    agg.accuracy.std
                ));
                for class in ArtifactClass::ALL {
                    match agg.sensitivity.get(&class) {
                        Some(a) => out.push_str(&format!(",{}", a.mean)),
                        None => out.push(','),
                    }
                }
                out.push('\n');
            }
        }
        out
    }
}
