//! Arriving-data (Experiment 1a/1b/1c) and arriving-class (Experiment 2) benchmarks.

use std::collections::BTreeSet;
use std::fmt;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::default_gamma;
use crate::data::{
    fit_normalizer, generate_clusters, load_csv, order_classes_by_frequency, split_msets,
    stratified_folds, ClusterVariant, MSET_FRACTIONS,
};
use crate::error::{Error, Result};
use crate::eval::{evaluate, grid_search_c, median, MetricsRow, DEFAULT_C_GRID, GRID_SEARCH_FOLDS};
use crate::model::{
    BaseKind, ClassId, HyperParams, LabeledDataset, Paradigm, ParadigmModel, DEFAULT_LAMBDA_SIM,
};
use crate::paradigms::{train, UpdateStrategy};

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSource {
    Clusters(ClusterVariant),
    Csv { path: PathBuf, label_column: String },
}

impl DatasetSource {
    pub fn name(&self) -> String {
        match self {
            DatasetSource::Clusters(v) => v.name().to_string(),
            DatasetSource::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "csv".into()),
        }
    }
}

impl FromStr for DatasetSource {
    type Err = Error;

    /// `clusters_far` style names, or `csv:<path>` (label column `label`).
    fn from_str(s: &str) -> Result<Self> {
        match s.strip_prefix("csv:") {
            Some(path) if !path.is_empty() => Ok(DatasetSource::Csv {
                path: PathBuf::from(path),
                label_column: "label".into(),
            }),
            Some(_) => Err(Error::InvalidParameter("csv: needs a path".into())),
            None => Ok(DatasetSource::Clusters(s.parse()?)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExperimentKind {
    Exp1a,
    Exp1b,
    Exp1c,
    Exp2,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Exp1a => "1a",
            ExperimentKind::Exp1b => "1b",
            ExperimentKind::Exp1c => "1c",
            ExperimentKind::Exp2 => "2",
        }
    }

    fn update_strategy(self) -> Option<UpdateStrategy> {
        match self {
            ExperimentKind::Exp1a => Some(UpdateStrategy::RetrainScratch),
            ExperimentKind::Exp1b => Some(UpdateStrategy::FineTuneNewOnly),
            ExperimentKind::Exp1c => Some(UpdateStrategy::FineTuneAll),
            ExperimentKind::Exp2 => None,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().trim_start_matches("exp") {
            "1a" => Ok(ExperimentKind::Exp1a),
            "1b" => Ok(ExperimentKind::Exp1b),
            "1c" => Ok(ExperimentKind::Exp1c),
            "2" => Ok(ExperimentKind::Exp2),
            _ => Err(Error::InvalidParameter(format!(
                "unknown experiment {s:?}; expected 1a, 1b, 1c or 2"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSource,
    pub paradigms: Vec<Paradigm>,
    pub base_kinds: Vec<BaseKind>,
    pub experiment: ExperimentKind,
    pub folds: usize,
    pub seed: u64,
    pub lambda_sim: f64,
    pub c_grid: Vec<f64>,
    /// Generated datasets only.
    pub points_per_cluster: usize,
    /// Columns left unscaled by the per-fold normalizer.
    pub onehot_columns: BTreeSet<usize>,
    /// Each timed step is repeated this many times and the median is reported.
    pub timing_runs: usize,
    /// Run (fold, paradigm, base) cells concurrently. Timings are then contended.
    pub parallel: bool,
    /// Keep per-fold rows alongside the fold means.
    pub per_fold: bool,
}

impl ExperimentConfig {
    pub fn new(dataset: DatasetSource, experiment: ExperimentKind, seed: u64) -> Self {
        Self {
            dataset,
            paradigms: Paradigm::ALL.to_vec(),
            base_kinds: BaseKind::ALL.to_vec(),
            experiment,
            folds: 5,
            seed,
            lambda_sim: DEFAULT_LAMBDA_SIM,
            c_grid: DEFAULT_C_GRID.to_vec(),
            points_per_cluster: crate::data::ClusterSpec::DEFAULT_POINTS,
            onehot_columns: BTreeSet::new(),
            timing_runs: 1,
            parallel: false,
            per_fold: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paradigms.is_empty() || self.base_kinds.is_empty() {
            return Err(Error::InvalidParameter(
                "need at least one paradigm and one base classifier".into(),
            ));
        }
        if self.folds < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 folds, got {}",
                self.folds
            )));
        }
        if self.c_grid.is_empty() {
            return Err(Error::InvalidParameter("C grid is empty".into()));
        }
        if self.timing_runs == 0 {
            return Err(Error::InvalidParameter(
                "timing_runs must be at least 1".into(),
            ));
        }
        HyperParams::logistic(1.0)
            .with_lambda_sim(self.lambda_sim)
            .validate()
    }

    pub fn load_dataset(&self) -> Result<LabeledDataset> {
        match &self.dataset {
            DatasetSource::Clusters(v) => {
                generate_clusters(&v.spec(self.seed).with_points(self.points_per_cluster))
            }
            DatasetSource::Csv { path, label_column } => load_csv(path, label_column),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub paradigm: Paradigm,
    pub base_kind: BaseKind,
    /// `M=<k>` or `N<k>=<label>`.
    pub iteration: String,
    /// `None` for the mean over folds.
    pub fold: Option<usize>,
    pub metrics: MetricsRow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub dataset: String,
    pub seed: u64,
    pub folds: usize,
    pub paradigms: Vec<Paradigm>,
    pub base_kinds: Vec<BaseKind>,
    pub iterations: Vec<String>,
    /// Fold means, then per-fold rows when requested.
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    pub fn mean_row(
        &self,
        paradigm: Paradigm,
        base_kind: BaseKind,
        iteration: &str,
    ) -> Option<&MetricsRow> {
        self.rows
            .iter()
            .find(|r| {
                r.fold.is_none()
                    && r.paradigm == paradigm
                    && r.base_kind == base_kind
                    && r.iteration == iteration
            })
            .map(|r| &r.metrics)
    }

    /// Mean row of the last iteration.
    pub fn final_row(&self, paradigm: Paradigm, base_kind: BaseKind) -> Option<&MetricsRow> {
        self.mean_row(paradigm, base_kind, self.iterations.last()?)
    }
}

/// Normalized train/test views of one outer fold.
struct FoldData {
    train: LabeledDataset,
    test: LabeledDataset,
}

fn prepare_folds(data: &LabeledDataset, cfg: &ExperimentConfig) -> Result<Vec<FoldData>> {
    stratified_folds(data, cfg.folds, cfg.seed)?
        .iter()
        .map(|f| {
            let train = data.subset(&f.train)?;
            let test = data.subset(&f.test)?;
            let norm = fit_normalizer(&train, &cfg.onehot_columns)?;
            Ok(FoldData {
                train: norm.apply(&train)?,
                test: norm.apply(&test)?,
            })
        })
        .collect()
}

fn template(base_kind: BaseKind, data: &LabeledDataset, lambda_sim: f64) -> HyperParams {
    let gamma = match base_kind {
        BaseKind::SvmRbf => {
            let rows: Vec<&[f64]> = data
                .examples()
                .iter()
                .map(|e| e.features.as_slice())
                .collect();
            default_gamma(&rows)
        }
        BaseKind::LogisticRegression => 1.0,
    };
    HyperParams {
        base_kind,
        c_reg: 1.0,
        gamma,
        lambda_sim,
    }
}

fn fold_seed(seed: u64, fold: usize) -> u64 {
    seed.wrapping_add(fold as u64 + 1)
}

/// Runs `step` on a fresh clone of `model` `runs` times; returns the last
/// result and the median of the timed sections.
fn timed_update<T>(
    model: &ParadigmModel,
    runs: usize,
    mut step: impl FnMut(&mut ParadigmModel) -> Result<T>,
) -> Result<(ParadigmModel, f64)> {
    let mut times = Vec::with_capacity(runs);
    let mut last = None;
    for _ in 0..runs {
        let mut m = model.clone();
        let (res, t) = crate::eval::timed(|| step(&mut m));
        res?;
        times.push(t);
        last = Some(m);
    }
    Ok((last.expect("runs >= 1"), median(&times).expect("runs >= 1")))
}

fn timed_train(
    runs: usize,
    mut fit: impl FnMut() -> Result<ParadigmModel>,
) -> Result<(ParadigmModel, f64)> {
    let mut times = Vec::with_capacity(runs);
    let mut last = None;
    for _ in 0..runs {
        let (res, t) = crate::eval::timed(&mut fit);
        last = Some(res?);
        times.push(t);
    }
    Ok((last.expect("runs >= 1"), median(&times).expect("runs >= 1")))
}

fn exp1_cell(
    fd: &FoldData,
    fold: usize,
    paradigm: Paradigm,
    base_kind: BaseKind,
    order: &[ClassId],
    strategy: UpdateStrategy,
    cfg: &ExperimentConfig,
) -> Result<Vec<MetricsRow>> {
    let msets: Vec<LabeledDataset> =
        split_msets(&fd.train, &MSET_FRACTIONS, fold_seed(cfg.seed, fold))?
            .iter()
            .map(|p| fd.train.subset(p))
            .collect::<Result<_>>()?;
    let m0 = &msets[0];
    let hp = grid_search_c(
        m0,
        order,
        paradigm,
        &template(base_kind, m0, cfg.lambda_sim),
        &cfg.c_grid,
        GRID_SEARCH_FOLDS,
        cfg.seed,
    )?
    .best;

    let m0_sets = m0.class_sets(order);
    let (mut model, secs) = timed_train(cfg.timing_runs, || train(paradigm, &m0_sets, &hp))?;
    let mut rows = vec![MetricsRow {
        train_seconds: secs,
        ..evaluate(&model, &fd.test)?
    }];

    let mut accumulated = m0_sets;
    for mset in &msets[1..] {
        let new_sets = mset.class_sets(order);
        for (acc, new) in accumulated.iter_mut().zip(&new_sets) {
            acc.examples.extend(new.examples.iter().cloned());
        }
        let (updated, secs) = timed_update(&model, cfg.timing_runs, |m| {
            m.update_with_data(&new_sets, &accumulated, strategy, &hp)
        })?;
        model = updated;
        rows.push(MetricsRow {
            train_seconds: secs,
            ..evaluate(&model, &fd.test)?
        });
    }
    Ok(rows)
}

fn exp2_cell(
    fd: &FoldData,
    paradigm: Paradigm,
    base_kind: BaseKind,
    order: &[ClassId],
    cfg: &ExperimentConfig,
) -> Result<Vec<MetricsRow>> {
    let sets = fd.train.class_sets(order);
    let mut model: Option<ParadigmModel> = None;
    let mut rows = Vec::with_capacity(order.len().saturating_sub(1));
    for k in 1..=order.len() {
        let seen: BTreeSet<ClassId> = order[..k].iter().copied().collect();
        let seen_train = fd.train.filter_classes(&seen)?;
        let tmpl = template(base_kind, &seen_train, cfg.lambda_sim);
        if k == 1 {
            // A lone class needs no fitting; OvR waits for a second class.
            if paradigm != Paradigm::Ovr {
                model = Some(train(paradigm, &sets[..1], &tmpl)?);
            }
            continue;
        }
        let hp = grid_search_c(
            &seen_train,
            &order[..k],
            paradigm,
            &tmpl,
            &cfg.c_grid,
            GRID_SEARCH_FOLDS,
            cfg.seed,
        )?
        .best;
        let (next, secs) = match (&model, paradigm) {
            (Some(m), p) if p != Paradigm::Ovr => timed_update(m, cfg.timing_runs, |m| {
                m.add_class(&sets[k - 1], &sets[..k - 1], &hp)
            })?,
            _ => timed_train(cfg.timing_runs, || train(Paradigm::Ovr, &sets[..k], &hp))?,
        };
        let seen_test = fd.test.filter_classes(&seen)?;
        rows.push(MetricsRow {
            train_seconds: secs,
            ..evaluate(&next, &seen_test)?
        });
        model = Some(next);
    }
    Ok(rows)
}

fn iteration_labels(
    cfg: &ExperimentConfig,
    data: &LabeledDataset,
    order: &[ClassId],
) -> Vec<String> {
    match cfg.experiment {
        ExperimentKind::Exp2 => order
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| format!("N{}={}", i + 1, data.label_name(c)))
            .collect(),
        _ => (0..MSET_FRACTIONS.len())
            .map(|m| format!("M={m}"))
            .collect(),
    }
}

/// Runs the configured experiment on its dataset.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let data = cfg.load_dataset()?;
    run_experiment_on(cfg, &data)
}

/// Runs the configured experiment on an already loaded dataset.
pub fn run_experiment_on(
    cfg: &ExperimentConfig,
    data: &LabeledDataset,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    if data.class_ids().len() < 2 {
        return Err(Error::SingleClassInput);
    }
    let order = order_classes_by_frequency(data);
    let folds = prepare_folds(data, cfg)?;
    let iterations = iteration_labels(cfg, data, &order);

    let cells: Vec<(usize, BaseKind, Paradigm)> = (0..folds.len())
        .flat_map(|f| {
            cfg.base_kinds
                .iter()
                .flat_map(move |&b| cfg.paradigms.iter().map(move |&p| (f, b, p)))
        })
        .collect();
    let run_cell = |&(f, b, p): &(usize, BaseKind, Paradigm)| -> Result<Vec<MetricsRow>> {
        match cfg.experiment.update_strategy() {
            Some(strategy) => exp1_cell(&folds[f], f, p, b, &order, strategy, cfg),
            None => exp2_cell(&folds[f], p, b, &order, cfg),
        }
    };
    let results: Vec<Vec<MetricsRow>> = if cfg.parallel {
        cells.par_iter().map(run_cell).collect::<Result<_>>()?
    } else {
        cells.iter().map(run_cell).collect::<Result<_>>()?
    };

    let mut rows = Vec::new();
    let mut fold_rows = Vec::new();
    for &b in &cfg.base_kinds {
        for &p in &cfg.paradigms {
            let per_fold: Vec<&Vec<MetricsRow>> = cells
                .iter()
                .zip(&results)
                .filter(|((_, cb, cp), _)| *cb == b && *cp == p)
                .map(|(_, r)| r)
                .collect();
            for (i, label) in iterations.iter().enumerate() {
                let at: Vec<MetricsRow> = per_fold.iter().map(|r| r[i]).collect();
                rows.push(ReportRow {
                    paradigm: p,
                    base_kind: b,
                    iteration: label.clone(),
                    fold: None,
                    metrics: MetricsRow::mean(&at)?,
                });
                if cfg.per_fold {
                    fold_rows.extend(at.iter().enumerate().map(|(f, m)| ReportRow {
                        paradigm: p,
                        base_kind: b,
                        iteration: label.clone(),
                        fold: Some(f),
                        metrics: *m,
                    }));
                }
            }
        }
    }
    rows.extend(fold_rows);
    Ok(ExperimentReport {
        experiment: cfg.experiment,
        dataset: cfg.dataset.name(),
        seed: cfg.seed,
        folds: cfg.folds,
        paradigms: cfg.paradigms.clone(),
        base_kinds: cfg.base_kinds.clone(),
        iterations,
        rows,
    })
}

/// Experiment 1 with the given variant (`Exp1a`, `Exp1b` or `Exp1c`).
pub fn run_experiment_1(
    cfg: &ExperimentConfig,
    variant: ExperimentKind,
) -> Result<ExperimentReport> {
    if variant == ExperimentKind::Exp2 {
        return Err(Error::InvalidParameter(
            "run_experiment_1 takes 1a, 1b or 1c".into(),
        ));
    }
    run_experiment(&ExperimentConfig {
        experiment: variant,
        ..cfg.clone()
    })
}

pub fn run_experiment_2(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(&ExperimentConfig {
        experiment: ExperimentKind::Exp2,
        ..cfg.clone()
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            _ => Err(Error::InvalidParameter(format!(
                "unknown report format {s:?}; expected csv or markdown"
            ))),
        }
    }
}

/// Renders the fold-mean table: one block of accuracy/f1/time lines per
/// iteration, columns grouped by base classifier then paradigm.
/// `header_note` is written as a leading comment (csv) or paragraph (markdown).
pub fn emit_report(
    report: &ExperimentReport,
    format: ReportFormat,
    header_note: Option<&str>,
) -> Result<String> {
    if report.rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let columns: Vec<(BaseKind, Paradigm)> = report
        .base_kinds
        .iter()
        .flat_map(|&b| report.paradigms.iter().map(move |&p| (b, p)))
        .collect();
    let mut header = vec!["dataset".to_string(), "iteration".into(), "metric".into()];
    header.extend(columns.iter().map(|(b, p)| format!("{p} {b}")));

    let mut lines: Vec<Vec<String>> = Vec::new();
    for it in &report.iterations {
        for metric in ["accuracy", "f1", "time"] {
            let mut line = vec![report.dataset.clone(), it.clone(), metric.to_string()];
            for &(b, p) in &columns {
                let m = report.mean_row(p, b, it).ok_or(Error::EmptyInput)?;
                let v = match metric {
                    "accuracy" => m.accuracy,
                    "f1" => m.macro_f1,
                    _ => m.train_seconds,
                };
                line.push(format!("{v:.3}"));
            }
            lines.push(line);
        }
    }

    let mut out = String::new();
    let meta = format!(
        "experiment={} dataset={} seed={} folds={}",
        report.experiment, report.dataset, report.seed, report.folds
    );
    match format {
        ReportFormat::Csv => {
            writeln!(out, "# {meta}").unwrap();
            if let Some(note) = header_note {
                writeln!(out, "# {note}").unwrap();
            }
            for line in std::iter::once(&header).chain(&lines) {
                writeln!(out, "{}", line.join(",")).unwrap();
            }
        }
        ReportFormat::Markdown => {
            writeln!(
                out,
                "Experiment {} on {}: seed {}, {} folds.",
                report.experiment, report.dataset, report.seed, report.folds
            )
            .unwrap();
            if let Some(note) = header_note {
                writeln!(out, "{note}").unwrap();
            }
            writeln!(out).unwrap();
            writeln!(out, "| {} |", header.join(" | ")).unwrap();
            writeln!(out, "|{}", "---|".repeat(header.len())).unwrap();
            for line in &lines {
                writeln!(out, "| {} |", line.join(" | ")).unwrap();
            }
        }
    }
    Ok(out)
}
