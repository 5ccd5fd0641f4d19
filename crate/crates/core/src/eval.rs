//! Metrics, cross-validated selection of C, and timing.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::stratified_folds;
use crate::error::{Error, Result};
use crate::model::{ClassId, HyperParams, LabeledDataset, Paradigm, ParadigmModel};
use crate::paradigms::train;

/// Seven decades from 1e-4 to 1e2.
pub const DEFAULT_C_GRID: [f64; 7] = [1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];

/// Folds of the internal cross-validation used by [`grid_search_c`].
pub const GRID_SEARCH_FOLDS: usize = 3;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub train_seconds: f64,
}

impl MetricsRow {
    /// Component-wise mean.
    pub fn mean(rows: &[MetricsRow]) -> Result<MetricsRow> {
        if rows.is_empty() {
            return Err(Error::EmptyInput);
        }
        let n = rows.len() as f64;
        Ok(MetricsRow {
            accuracy: rows.iter().map(|r| r.accuracy).sum::<f64>() / n,
            macro_f1: rows.iter().map(|r| r.macro_f1).sum::<f64>() / n,
            train_seconds: rows.iter().map(|r| r.train_seconds).sum::<f64>() / n,
        })
    }
}

fn check_pair<T>(predictions: &[T], truths: &[T]) -> Result<()> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

pub fn accuracy<T: PartialEq>(predictions: &[T], truths: &[T]) -> Result<f64> {
    check_pair(predictions, truths)?;
    let hits = predictions
        .iter()
        .zip(truths)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / truths.len() as f64)
}

/// Unweighted mean of per-class F1 over the classes present in `truths`.
pub fn macro_f1<T: Ord + Copy>(predictions: &[T], truths: &[T]) -> Result<f64> {
    check_pair(predictions, truths)?;
    // (tp, fp, fn) per class
    let mut counts: BTreeMap<T, (usize, usize, usize)> =
        truths.iter().map(|&t| (t, (0, 0, 0))).collect();
    for (&p, &t) in predictions.iter().zip(truths) {
        if p == t {
            counts.get_mut(&t).expect("truth class registered").0 += 1;
        } else {
            counts.get_mut(&t).expect("truth class registered").2 += 1;
            if let Some(c) = counts.get_mut(&p) {
                c.1 += 1;
            }
        }
    }
    let total: f64 = counts
        .values()
        .map(|&(tp, fp, fn_)| {
            let denom = 2 * tp + fp + fn_;
            if denom == 0 {
                0.0
            } else {
                2.0 * tp as f64 / denom as f64
            }
        })
        .sum();
    Ok(total / counts.len() as f64)
}

/// Accuracy and macro-F1 of `model` on `test`; `train_seconds` is left at zero.
pub fn evaluate(model: &ParadigmModel, test: &LabeledDataset) -> Result<MetricsRow> {
    let rows: Vec<&[f64]> = test
        .examples()
        .iter()
        .map(|e| e.features.as_slice())
        .collect();
    let predictions = model.predict_many(&rows)?;
    let truths = test.labels();
    Ok(MetricsRow {
        accuracy: accuracy(&predictions, &truths)?,
        macro_f1: macro_f1(&predictions, &truths)?,
        train_seconds: 0.0,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSearchResult {
    pub best: HyperParams,
    /// `(C, mean CV accuracy)` in ascending C; non-converging candidates score `-inf`.
    pub scores: Vec<(f64, f64)>,
}

/// Picks C by stratified cross-validation on `data`, keeping every other field
/// of `template`. Classes are trained in `order` (classes absent from `data`
/// are skipped). Ties go to the smaller C.
pub fn grid_search_c(
    data: &LabeledDataset,
    order: &[ClassId],
    paradigm: Paradigm,
    template: &HyperParams,
    grid: &[f64],
    folds: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("C grid is empty".into()));
    }
    let mut grid = grid.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let candidates: Vec<HyperParams> = grid.iter().map(|&c| template.with_c(c)).collect();
    for hp in &candidates {
        hp.validate()?;
    }
    let order: Vec<ClassId> = order
        .iter()
        .copied()
        .filter(|&c| data.class_count(c) > 0)
        .collect();
    let splits = stratified_folds(data, folds, seed)?;
    let cuts = splits
        .iter()
        .map(|f| Ok((data.subset(&f.train)?, data.subset(&f.test)?)))
        .collect::<Result<Vec<_>>>()?;

    let scores = candidates
        .par_iter()
        .map(|hp| {
            let mut total = 0.0;
            for (tr, te) in &cuts {
                let model = match train(paradigm, &tr.class_sets(&order), hp) {
                    Ok(m) => m,
                    Err(Error::NonConvergence { iterations, violation }) => {
                        log::warn!("C={} did not converge ({iterations} iterations, violation {violation})", hp.c_reg);
                        return Ok(f64::NEG_INFINITY);
                    }
                    Err(e) => return Err(e),
                };
                total += evaluate(&model, te)?.accuracy;
            }
            Ok(total / cuts.len() as f64)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut best = 0;
    for (i, &s) in scores.iter().enumerate() {
        if s > scores[best] {
            best = i;
        }
    }
    if scores[best] == f64::NEG_INFINITY {
        return Err(Error::InvalidParameter(
            "no C in the grid produced a converged model".into(),
        ));
    }
    Ok(GridSearchResult {
        best: candidates[best],
        scores: grid.into_iter().zip(scores).collect(),
    })
}

/// Runs `f` and returns its result with elapsed wall-clock seconds.
pub fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}
