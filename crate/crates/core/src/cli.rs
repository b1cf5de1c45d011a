//! Batch commands behind the `shearwater` binary.
//!
//! Every command reads a [`RunConfig`] and works inside its output
//! directory:
//!
//! ```text
//! features/{mode}_train.csv  {mode}_test.csv  {mode}_thresholds.json
//! folds.csv
//! cv/cv_folds.csv  cv/cv_summary.csv  cv/thresholds.csv  cv/oof/<run>.csv
//! models/<run>.json
//! predictions/<run>.csv
//! ensemble.csv
//! ```
//!
//! where `<run>` is `<learner>_<mode>__seed<seed>` and the seed of replicate
//! `r` is `base_seed + r`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::boost::{fit_learner, ForestParams, GbdtParams, LearnerKind, LearnerParams, TrainedModel};
use crate::datasets::{build_dataset_with, fit_thresholds, DatasetMode, DatasetThresholds, FeatureMatrix, Imputer};
use crate::error::{Error, Result};
use crate::evalcv::{
    self, cross_validate, majority_vote, make_folds, tie_break_class, CvResult, FoldAssignment, PredictionSet,
};
use crate::io;
use crate::linsvm::SvmParams;
use crate::synthgen::{generate_corpus_streams, SynthParams};
use crate::trajdata::{labels_to_csv, load_corpus, read_labels, write_corpus, Label};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub train_dir: PathBuf,
    pub train_labels: PathBuf,
    pub test_dir: PathBuf,
    /// Ground truth for the test birds; only `evaluate` reads it.
    pub test_labels: Option<PathBuf>,
    pub output_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            train_dir: "data/train".into(),
            train_labels: "data/train_labels.csv".into(),
            test_dir: "data/test".into(),
            test_labels: Some("data/test_labels.csv".into()),
            output_dir: "out".into(),
        }
    }
}

/// Per-learner hyperparameters. Seeds inside are ignored; each replicate
/// gets its own.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub xgb_binary: GbdtParams,
    pub xgb_rank: GbdtParams,
    pub lgb_gbdt: GbdtParams,
    pub lgb_rf: ForestParams,
    pub cat: GbdtParams,
    pub sk_gbt: GbdtParams,
    pub sk_rf: ForestParams,
    pub sk_et: ForestParams,
    pub svc: SvmParams,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        let gbdt = GbdtParams::default();
        let forest = ForestParams::default();
        Hyperparameters {
            xgb_binary: gbdt,
            xgb_rank: gbdt,
            lgb_gbdt: gbdt,
            lgb_rf: forest,
            cat: GbdtParams { max_depth: 6, ..gbdt },
            sk_gbt: GbdtParams {
                n_rounds: 100,
                learning_rate: 0.1,
                max_depth: 3,
                subsample: 1.0,
                colsample: 1.0,
                ..gbdt
            },
            sk_rf: forest,
            sk_et: ForestParams {
                bootstrap: false,
                ..forest
            },
            svc: SvmParams::default(),
        }
    }
}

impl Hyperparameters {
    pub fn params_for(&self, kind: LearnerKind) -> LearnerParams {
        match kind {
            LearnerKind::XgbBinary => LearnerParams::Gbdt(self.xgb_binary),
            LearnerKind::XgbRank => LearnerParams::Gbdt(self.xgb_rank),
            LearnerKind::LgbGbdt => LearnerParams::Gbdt(self.lgb_gbdt),
            LearnerKind::Cat => LearnerParams::Gbdt(self.cat),
            LearnerKind::SkGbt => LearnerParams::Gbdt(self.sk_gbt),
            LearnerKind::LgbRf => LearnerParams::Forest(self.lgb_rf),
            LearnerKind::SkRf => LearnerParams::Forest(self.sk_rf),
            LearnerKind::SkEt => LearnerParams::Forest(self.sk_et),
            LearnerKind::Svc => LearnerParams::Svm(self.svc),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub paths: Paths,
    pub modes: Vec<DatasetMode>,
    pub learners: Vec<LearnerKind>,
    pub hyperparameters: Hyperparameters,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub k_folds: usize,
    /// Training corpus generator; its own seed is replaced by `base_seed`.
    pub synth: SynthParams,
    pub n_test_birds: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            paths: Paths::default(),
            modes: DatasetMode::ALL.to_vec(),
            learners: LearnerKind::ALL.to_vec(),
            hyperparameters: Hyperparameters::default(),
            n_seeds: 10,
            base_seed: 0,
            k_folds: 5,
            synth: SynthParams::default(),
            n_test_birds: 150,
        }
    }
}

/// One trainable (learner, dataset mode) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ModelSetting {
    pub kind: LearnerKind,
    pub mode: DatasetMode,
}

impl ModelSetting {
    pub fn name(&self) -> String {
        format!("{}_{}", self.kind, self.mode)
    }

    pub fn run_name(&self, seed: u64) -> String {
        format!("{}__seed{seed}", self.name())
    }
}

impl RunConfig {
    /// Reads a JSON config. Relative paths are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = io::read_to_string(path)?;
        let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(path))?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        let paths = &mut self.paths;
        fix(&mut paths.train_dir);
        fix(&mut paths.train_labels);
        fix(&mut paths.test_dir);
        fix(&mut paths.output_dir);
        if let Some(p) = paths.test_labels.as_mut() {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_seeds < 1 {
            return Err(Error::Config("n_seeds must be at least 1".into()));
        }
        if self.modes.is_empty() || self.learners.is_empty() {
            return Err(Error::Config(
                "at least one dataset mode and one learner must be enabled".into(),
            ));
        }
        if self.k_folds < 2 {
            return Err(Error::Config("k_folds must be at least 2".into()));
        }
        Ok(())
    }

    /// Enabled settings, learner-major in `learners` order.
    pub fn settings(&self) -> Vec<ModelSetting> {
        let mut modes = self.modes.clone();
        modes.sort();
        modes.dedup();
        let mut out = Vec::new();
        for &kind in &self.learners {
            for &mode in &modes {
                let s = ModelSetting { kind, mode };
                if !out.contains(&s) {
                    out.push(s);
                }
            }
        }
        out
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.n_seeds as u64).map(|r| self.base_seed + r).collect()
    }

    /// Every (setting, seed) run in a fixed order.
    pub fn runs(&self) -> Vec<(ModelSetting, u64)> {
        let seeds = self.seeds();
        self.settings()
            .into_iter()
            .flat_map(|s| seeds.iter().map(move |&seed| (s, seed)))
            .collect()
    }

    fn out(&self, rel: &str) -> PathBuf {
        self.paths.output_dir.join(rel)
    }

    pub fn features_path(&self, mode: DatasetMode, part: &str) -> PathBuf {
        self.out(&format!("features/{mode}_{part}.csv"))
    }

    pub fn folds_path(&self) -> PathBuf {
        self.out("folds.csv")
    }

    pub fn model_path(&self, s: ModelSetting, seed: u64) -> PathBuf {
        self.out(&format!("models/{}.json", s.run_name(seed)))
    }

    pub fn oof_path(&self, s: ModelSetting, seed: u64) -> PathBuf {
        self.out(&format!("cv/oof/{}.csv", s.run_name(seed)))
    }

    pub fn prediction_path(&self, s: ModelSetting, seed: u64) -> PathBuf {
        self.out(&format!("predictions/{}.csv", s.run_name(seed)))
    }

    pub fn ensemble_path(&self) -> PathBuf {
        self.out("ensemble.csv")
    }
}

/// Execution options shared by every command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Options {
    /// Worker threads; results do not depend on it.
    pub jobs: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }
}

fn with_pool<T: Send>(opts: Options, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {} worker threads: {e}", opts.jobs)))?;
    Ok(pool.install(f))
}

fn annotate(setting: &str, e: Error) -> Error {
    match e {
        Error::Config(m) => Error::Config(format!("{setting}: {m}")),
        Error::SchemaMismatch(m) => Error::SchemaMismatch(format!("{setting}: {m}")),
        Error::DegenerateLabels(m) => Error::DegenerateLabels(format!("{setting}: {m}")),
        other => other,
    }
}

/// Refuses to mix a fresh corpus with unrelated trajectory files.
fn check_corpus_dir(dir: &Path, ids: &[String]) -> Result<()> {
    let Ok(entries) = fs::read_dir(dir) else {
        return Ok(());
    };
    for entry in entries {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "csv") {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
            if ids.binary_search_by(|id| id.as_str().cmp(stem)).is_err() {
                return Err(Error::Config(format!(
                    "{} already holds trajectory {}; use an empty directory",
                    dir.display(),
                    path.display()
                )));
            }
        }
    }
    Ok(())
}

/// Test-corpus birds draw from streams above every training stream.
pub const TEST_STREAM_OFFSET: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSummary {
    pub n_train: usize,
    pub n_train_male: usize,
    pub n_test: usize,
}

/// Writes the synthetic training corpus and labels, and a disjoint test
/// corpus with its truth file when `n_test_birds > 0`.
pub fn cmd_synth(cfg: &RunConfig) -> Result<SynthSummary> {
    let params = SynthParams {
        seed: cfg.base_seed,
        ..cfg.synth.clone()
    };
    let train = generate_corpus_streams(&params, 0)?;
    let ids: Vec<String> = train.bird_ids().map(str::to_owned).collect();
    check_corpus_dir(&cfg.paths.train_dir, &ids)?;
    write_corpus(&cfg.paths.train_dir, &train)?;
    let labels = train.labels().expect("generated corpora are labeled");
    io::write_atomic(&cfg.paths.train_labels, labels_to_csv(labels).as_bytes())?;
    let n_train_male = labels.values().filter(|l| l.is_positive()).count();

    let mut n_test = 0;
    if cfg.n_test_birds > 0 {
        let test_params = SynthParams {
            n_birds: cfg.n_test_birds,
            id_prefix: format!("test_{}", params.id_prefix),
            ..params.clone()
        };
        let test = generate_corpus_streams(&test_params, TEST_STREAM_OFFSET)?;
        let ids: Vec<String> = test.bird_ids().map(str::to_owned).collect();
        check_corpus_dir(&cfg.paths.test_dir, &ids)?;
        write_corpus(&cfg.paths.test_dir, &test)?;
        if let Some(p) = &cfg.paths.test_labels {
            io::write_atomic(p, labels_to_csv(test.labels().expect("labeled")).as_bytes())?;
        }
        n_test = test.len();
    }
    Ok(SynthSummary {
        n_train: train.len(),
        n_train_male,
        n_test,
    })
}

/// Builds the train (and, if the test directory exists, test) matrices of
/// every enabled mode. Test features use the training-corpus thresholds.
pub fn cmd_extract(cfg: &RunConfig, opts: Options) -> Result<Vec<PathBuf>> {
    with_pool(opts, || {
        let train = load_corpus(&cfg.paths.train_dir, Some(&cfg.paths.train_labels))?;
        let test = if cfg.paths.test_dir.is_dir() {
            Some(load_corpus(&cfg.paths.test_dir, None)?)
        } else {
            None
        };
        let mut written = Vec::new();
        let mut modes = cfg.modes.clone();
        modes.sort();
        modes.dedup();
        for mode in modes {
            let th = fit_thresholds(&train, mode)?;
            let th_path = cfg.out(&format!("features/{mode}_thresholds.json"));
            io::write_atomic(&th_path, serde_json::to_string_pretty(&th)?.as_bytes())?;
            let path = cfg.features_path(mode, "train");
            build_dataset_with(&train, &th)?.write(&path)?;
            written.push(path);
            if let Some(test) = &test {
                let path = cfg.features_path(mode, "test");
                build_dataset_with(test, &th)?.write(&path)?;
                written.push(path);
            }
        }
        Ok(written)
    })?
}

pub fn read_thresholds(path: &Path) -> Result<DatasetThresholds> {
    let text = io::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::from(e).in_file(path))
}

/// Writes the shared fold assignment for the training labels.
pub fn cmd_folds(cfg: &RunConfig) -> Result<FoldAssignment> {
    let labels = read_labels(&cfg.paths.train_labels)?;
    let folds = make_folds(&labels, cfg.k_folds, cfg.base_seed)?;
    folds.write(&cfg.folds_path())?;
    Ok(folds)
}

fn read_train_matrices(cfg: &RunConfig) -> Result<BTreeMap<DatasetMode, FeatureMatrix>> {
    let mut out = BTreeMap::new();
    for s in cfg.settings() {
        if let std::collections::btree_map::Entry::Vacant(e) = out.entry(s.mode) {
            let path = cfg.features_path(s.mode, "train");
            let m = FeatureMatrix::read(&path)?;
            if m.labels.is_none() {
                return Err(Error::DegenerateLabels(format!("{} has no label column", path.display())).in_file(&path));
            }
            e.insert(m);
        }
    }
    Ok(out)
}

/// One cross-validated (setting, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRun {
    pub setting: ModelSetting,
    pub seed: u64,
    pub result: CvResult,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SettingSummary {
    pub setting: ModelSetting,
    /// Per-fold F1 averaged over seeds.
    pub fold_f1: Vec<f64>,
    pub mean_f1: f64,
    /// Mean of the per-seed thresholds.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub runs: Vec<CvRun>,
    pub settings: Vec<SettingSummary>,
    /// Per-fold F1 of the majority vote over every run's out-of-fold labels.
    pub ensemble_fold_f1: Vec<f64>,
    pub ensemble_mean_f1: f64,
}

impl CvReport {
    pub fn median_setting_f1(&self) -> f64 {
        let mut v: Vec<f64> = self.settings.iter().map(|s| s.mean_f1).collect();
        v.sort_by(f64::total_cmp);
        crate::featex::quantile_sorted(&v, 0.5)
    }
}

fn oof_csv(bird_ids: &[String], r: &CvResult) -> String {
    let mut out = String::from("bird_id,fold,score,label\n");
    let labels = r.oof_labels();
    for i in 0..bird_ids.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            bird_ids[i],
            r.fold_of_row[i],
            r.oof_scores[i],
            labels[i].as_u8()
        );
    }
    out
}

/// Cross-validates every (setting, seed) run on the shared folds and
/// writes the CV report, per-run thresholds and out-of-fold scores.
pub fn cmd_cv(cfg: &RunConfig, opts: Options) -> Result<CvReport> {
    let folds = FoldAssignment::read(&cfg.folds_path(), cfg.base_seed)?;
    let matrices = read_train_matrices(cfg)?;
    let runs = cfg.runs();
    let results: Vec<CvResult> = with_pool(opts, || {
        runs.par_iter()
            .map(|&(s, seed)| {
                let params = cfg.hyperparameters.params_for(s.kind).with_seed(seed);
                cross_validate(s.kind, &params, &matrices[&s.mode], &folds).map_err(|e| annotate(&s.run_name(seed), e))
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let runs: Vec<CvRun> = runs
        .into_iter()
        .zip(results)
        .map(|((setting, seed), result)| CvRun { setting, seed, result })
        .collect();

    let n_seeds = cfg.n_seeds as f64;
    let settings: Vec<SettingSummary> = cfg
        .settings()
        .into_iter()
        .map(|s| {
            let mine: Vec<&CvRun> = runs.iter().filter(|r| r.setting == s).collect();
            let fold_f1: Vec<f64> = (0..folds.k)
                .map(|f| mine.iter().map(|r| r.result.fold_f1[f]).sum::<f64>() / n_seeds)
                .collect();
            SettingSummary {
                setting: s,
                mean_f1: evalcv::mean(&fold_f1),
                fold_f1,
                threshold: mine.iter().map(|r| r.result.threshold).sum::<f64>() / n_seeds,
            }
        })
        .collect();

    // Every mode's matrix lists the training birds in the same sorted order.
    let any = matrices.values().next().expect("at least one mode");
    let truth = any.labels.clone().expect("checked when read");
    let sets: Vec<PredictionSet> = runs
        .iter()
        .map(|r| {
            let m = &matrices[&r.setting.mode];
            PredictionSet::new(r.setting.run_name(r.seed), m.bird_ids.clone(), r.result.oof_labels())
        })
        .collect::<Result<_>>()?;
    let voted = majority_vote(&sets, tie_break_class(&truth))?;
    let fold_of_row = folds.assign(&voted.bird_ids)?;
    let ensemble_fold_f1 = evalcv::fold_f1(&voted.labels, &truth, &fold_of_row, folds.k)?;
    let report = CvReport {
        ensemble_mean_f1: evalcv::mean(&ensemble_fold_f1),
        ensemble_fold_f1,
        settings,
        runs,
    };

    for r in &report.runs {
        let m = &matrices[&r.setting.mode];
        io::write_atomic(
            &cfg.oof_path(r.setting, r.seed),
            oof_csv(&m.bird_ids, &r.result).as_bytes(),
        )?;
    }
    let mut folds_csv = String::from("setting,fold,f1\n");
    let mut summary = String::from("setting,mean_f1,threshold\n");
    let mut thresholds = String::from("setting,seed,threshold\n");
    for s in &report.settings {
        for (f, v) in s.fold_f1.iter().enumerate() {
            let _ = writeln!(folds_csv, "{},{f},{v}", s.setting.name());
        }
        let _ = writeln!(summary, "{},{},{}", s.setting.name(), s.mean_f1, s.threshold);
    }
    for (f, v) in report.ensemble_fold_f1.iter().enumerate() {
        let _ = writeln!(folds_csv, "ensemble,{f},{v}");
    }
    let _ = writeln!(summary, "ensemble,{},", report.ensemble_mean_f1);
    for r in &report.runs {
        let _ = writeln!(thresholds, "{},{},{}", r.setting.name(), r.seed, r.result.threshold);
    }
    io::write_atomic(&cfg.out("cv/cv_folds.csv"), folds_csv.as_bytes())?;
    io::write_atomic(&cfg.out("cv/cv_summary.csv"), summary.as_bytes())?;
    io::write_atomic(&cfg.out("cv/thresholds.csv"), thresholds.as_bytes())?;
    Ok(report)
}

fn read_run_thresholds(path: &Path) -> Result<BTreeMap<(String, u64), f64>> {
    let text = io::read_to_string(path)?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut out = BTreeMap::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::from(e).in_file(path))?;
        let bad = |reason: &str| {
            Error::MalformedRow {
                line: i + 2,
                reason: reason.to_string(),
            }
            .in_file(path)
        };
        if rec.len() != 3 {
            return Err(bad("expected setting,seed,threshold"));
        }
        let seed: u64 = rec[1].parse().map_err(|_| bad("seed is not an integer"))?;
        let tau: f64 = rec[2].parse().map_err(|_| bad("threshold is not a number"))?;
        out.insert((rec[0].to_string(), seed), tau);
    }
    Ok(out)
}

/// Fits every (setting, seed) run on the full training matrix and stores
/// it with the threshold tuned during cross validation.
pub fn cmd_train(cfg: &RunConfig, opts: Options) -> Result<Vec<PathBuf>> {
    let th_path = cfg.out("cv/thresholds.csv");
    let taus = read_run_thresholds(&th_path)?;
    let matrices = read_train_matrices(cfg)?;
    let runs = cfg.runs();
    let models: Vec<TrainedModel> = with_pool(opts, || {
        runs.par_iter()
            .map(|&(s, seed)| {
                let name = s.run_name(seed);
                let tau = *taus.get(&(s.name(), seed)).ok_or_else(|| {
                    Error::Config(format!("{} has no threshold for {name}; rerun cv", th_path.display()))
                })?;
                let m = &matrices[&s.mode];
                let imputer = Imputer::fit(m);
                let filled = imputer.apply(m)?;
                let y = filled.labels.as_deref().expect("checked when read");
                let params = cfg.hyperparameters.params_for(s.kind).with_seed(seed);
                let mut model =
                    fit_learner(s.kind, &params, &filled.values, y, &filled.columns).map_err(|e| annotate(&name, e))?;
                model.threshold = Some(tau);
                model.imputer = Some(imputer);
                Ok(model)
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut written = Vec::new();
    for (&(s, seed), model) in runs.iter().zip(&models) {
        let path = cfg.model_path(s, seed);
        io::write_atomic(&path, model.to_json()?.as_bytes())?;
        written.push(path);
    }
    Ok(written)
}

pub fn read_model(path: &Path) -> Result<TrainedModel> {
    TrainedModel::from_json(&io::read_to_string(path)?).map_err(|e| e.in_file(path))
}

/// Writes one prediction set per stored model.
pub fn cmd_predict(cfg: &RunConfig, opts: Options) -> Result<Vec<PathBuf>> {
    let mut tests = BTreeMap::new();
    for s in cfg.settings() {
        if let std::collections::btree_map::Entry::Vacant(e) = tests.entry(s.mode) {
            e.insert(FeatureMatrix::read(&cfg.features_path(s.mode, "test"))?);
        }
    }
    let runs = cfg.runs();
    let sets: Vec<PredictionSet> = with_pool(opts, || {
        runs.par_iter()
            .map(|&(s, seed)| {
                let path = cfg.model_path(s, seed);
                let model = read_model(&path)?;
                let m = &tests[&s.mode];
                let tau = model
                    .threshold
                    .ok_or_else(|| Error::Config(format!("{} has no threshold", path.display())))?;
                let scores = model.score_matrix(m).map_err(|e| annotate(&s.run_name(seed), e))?;
                PredictionSet::new(
                    s.run_name(seed),
                    m.bird_ids.clone(),
                    evalcv::apply_threshold(&scores, tau),
                )
            })
            .collect::<Result<Vec<_>>>()
    })??;
    let mut written = Vec::new();
    for (&(s, seed), set) in runs.iter().zip(&sets) {
        let path = cfg.prediction_path(s, seed);
        set.write(&path)?;
        written.push(path);
    }
    Ok(written)
}

/// Majority vote over every prediction set; ties go to the more frequent
/// training class.
pub fn cmd_ensemble(cfg: &RunConfig) -> Result<PredictionSet> {
    let train_labels: Vec<Label> = read_labels(&cfg.paths.train_labels)?.into_values().collect();
    let sets = cfg
        .runs()
        .into_iter()
        .map(|(s, seed)| PredictionSet::read(&cfg.prediction_path(s, seed)))
        .collect::<Result<Vec<_>>>()?;
    let voted = majority_vote(&sets, tie_break_class(&train_labels))?;
    voted.write(&cfg.ensemble_path())?;
    Ok(voted)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub n: usize,
    pub accuracy: f64,
    pub f1: f64,
}

/// Scores a `bird_id,label` predictions file against a truth file with the
/// same birds.
pub fn cmd_evaluate(predictions: &Path, truth: &Path) -> Result<Evaluation> {
    let pred = PredictionSet::read(predictions)?.as_map();
    let truth = read_labels(truth)?;
    if pred.len() != truth.len() || !pred.keys().eq(truth.keys()) {
        return Err(Error::BirdSetMismatch.in_file(predictions));
    }
    let p: Vec<Label> = pred.into_values().collect();
    let t: Vec<Label> = truth.into_values().collect();
    Ok(Evaluation {
        n: p.len(),
        accuracy: evalcv::accuracy(&p, &t)?,
        f1: evalcv::f1_score(&p, &t)?,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub cv: CvReport,
    pub ensemble: PredictionSet,
    pub evaluation: Option<Evaluation>,
}

/// extract → folds → cv → train → predict → ensemble, then evaluate when a
/// test truth file exists.
pub fn cmd_run(cfg: &RunConfig, opts: Options) -> Result<RunSummary> {
    cmd_extract(cfg, opts)?;
    cmd_folds(cfg)?;
    let cv = cmd_cv(cfg, opts)?;
    cmd_train(cfg, opts)?;
    cmd_predict(cfg, opts)?;
    let ensemble = cmd_ensemble(cfg)?;
    let evaluation = match &cfg.paths.test_labels {
        Some(p) if p.is_file() => Some(cmd_evaluate(&cfg.ensemble_path(), p)?),
        _ => None,
    };
    Ok(RunSummary {
        cv,
        ensemble,
        evaluation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_has_eighteen_settings_and_180_runs() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.settings().len(), 18);
        assert_eq!(cfg.runs().len(), 180);
        assert_eq!(cfg.seeds(), (0..10).collect::<Vec<u64>>());
    }

    #[test]
    fn config_json_round_trip_with_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"n_seeds": 3, "learners": ["svc", "sk_et"]}"#).unwrap();
        assert_eq!(cfg.n_seeds, 3);
        assert_eq!(cfg.k_folds, 5);
        assert_eq!(cfg.settings().len(), 4);
        assert!(!cfg.hyperparameters.sk_et.bootstrap);
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs() {
        let cfg = RunConfig {
            n_seeds: 0,
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = RunConfig {
            learners: vec![],
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn run_names() {
        let s = ModelSetting {
            kind: LearnerKind::XgbRank,
            mode: DatasetMode::Split,
        };
        assert_eq!(s.run_name(3), "xgb_rank_split__seed3");
    }
}
