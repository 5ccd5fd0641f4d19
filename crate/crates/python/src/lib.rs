//! Python bindings: datasets, paradigm models, metrics and the benchmark runner.

use std::collections::BTreeMap;

use ovpsc::classifier::default_gamma;
use ovpsc::data::{generate_clusters as gen_clusters, load_csv, ClusterSpec, Normalizer};
use ovpsc::eval;
use ovpsc::experiments::{
    emit_report, run_experiment as run_exp, DatasetSource, ExperimentConfig, ExperimentKind,
    ReportFormat,
};
use ovpsc::{
    BaseKind, ClassExamples, ClassId, HyperParams, LabeledDataset, LabeledExample, ModelFile,
    Paradigm, ParadigmModel, DEFAULT_LAMBDA_SIM,
};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn py_err(e: ovpsc::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr<Err = ovpsc::Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

/// Labeled feature matrix. Labels are strings; class ids follow first appearance.
#[pyclass(module = "ovpsc_py", skip_from_py_object)]
#[derive(Clone)]
struct Dataset {
    inner: LabeledDataset,
}

#[pymethods]
impl Dataset {
    #[new]
    fn new(features: Vec<Vec<f64>>, labels: Vec<String>) -> PyResult<Self> {
        if features.len() != labels.len() {
            return Err(PyValueError::new_err(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        let mut names: Vec<String> = Vec::new();
        let mut ids: BTreeMap<String, u32> = BTreeMap::new();
        let examples = features
            .into_iter()
            .zip(labels)
            .map(|(features, label)| {
                let id = *ids.entry(label.clone()).or_insert_with(|| {
                    names.push(label);
                    names.len() as u32 - 1
                });
                LabeledExample {
                    features,
                    label: ClassId(id),
                }
            })
            .collect();
        Ok(Self {
            inner: LabeledDataset::new(examples, names).map_err(py_err)?,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (path, label_column = "label"))]
    fn from_csv(path: &str, label_column: &str) -> PyResult<Self> {
        Ok(Self {
            inner: load_csv(path, label_column).map_err(py_err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn label_names(&self) -> Vec<String> {
        self.inner
            .class_ids()
            .into_iter()
            .map(|c| self.inner.label_name(c).to_string())
            .collect()
    }

    fn features(&self) -> Vec<Vec<f64>> {
        self.inner
            .examples()
            .iter()
            .map(|e| e.features.clone())
            .collect()
    }

    fn labels(&self) -> Vec<String> {
        self.inner
            .examples()
            .iter()
            .map(|e| self.inner.label_name(e.label).to_string())
            .collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset({} examples, {} features, {} classes)",
            self.inner.len(),
            self.inner.dim(),
            self.inner.class_ids().len()
        )
    }
}

impl Dataset {
    /// Examples grouped by label name.
    fn groups(&self) -> Vec<(String, Vec<Vec<f64>>)> {
        self.inner
            .class_sets(&self.inner.class_ids())
            .into_iter()
            .map(|s| (self.inner.label_name(s.class_id).to_string(), s.examples))
            .collect()
    }
}

/// A multi-class model built with one of the four paradigms.
#[pyclass(module = "ovpsc_py", skip_from_py_object)]
#[derive(Clone)]
struct Model {
    inner: ParadigmModel,
    label_names: Vec<String>,
    /// Set for models saved by the command-line trainer.
    normalizer: Option<Normalizer>,
}

impl Model {
    fn class_of(&self, name: &str) -> Option<ClassId> {
        self.label_names
            .iter()
            .position(|n| n == name)
            .map(|i| ClassId(i as u32))
    }

    fn name_of(&self, c: ClassId) -> String {
        self.label_names
            .get(c.index())
            .cloned()
            .unwrap_or_else(|| c.to_string())
    }

    fn scale(&self, rows: Vec<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
        match &self.normalizer {
            Some(n) => rows
                .iter()
                .map(|r| n.transform_row(r))
                .collect::<ovpsc::Result<Vec<_>>>()
                .map_err(py_err),
            None => Ok(rows),
        }
    }

    fn hyperparams(
        base: &str,
        c: f64,
        gamma: Option<f64>,
        lambda_sim: f64,
        rows: &[&[f64]],
    ) -> PyResult<HyperParams> {
        let gamma = gamma.unwrap_or_else(|| default_gamma(rows));
        HyperParams::new(parse(base)?, c, gamma, lambda_sim).map_err(py_err)
    }
}

#[pymethods]
impl Model {
    /// Trains on `dataset`, inserting classes in order of first appearance.
    /// `gamma` defaults to 1 / (dim * mean feature variance).
    #[staticmethod]
    #[pyo3(signature = (dataset, paradigm = "OvPSC", base = "SVM", c = 1.0, gamma = None, lambda_sim = DEFAULT_LAMBDA_SIM))]
    fn train(
        dataset: &Dataset,
        paradigm: &str,
        base: &str,
        c: f64,
        gamma: Option<f64>,
        lambda_sim: f64,
    ) -> PyResult<Self> {
        let paradigm: Paradigm = parse(paradigm)?;
        let data = &dataset.inner;
        let rows: Vec<&[f64]> = data.examples().iter().map(|e| e.features.as_slice()).collect();
        let hp = Self::hyperparams(base, c, gamma, lambda_sim, &rows)?;
        let model = ovpsc::train(paradigm, &data.class_sets(&data.class_ids()), &hp).map_err(py_err)?;
        Ok(Self {
            inner: model,
            label_names: data.label_names().to_vec(),
            normalizer: None,
        })
    }

    /// Adds a new class. `known` must contain examples of every class the model already holds.
    #[pyo3(signature = (features, label, known, c = 1.0, gamma = None))]
    fn add_class(
        &mut self,
        features: Vec<Vec<f64>>,
        label: String,
        known: &Dataset,
        c: f64,
        gamma: Option<f64>,
    ) -> PyResult<()> {
        if self.class_of(&label).is_some() {
            return Err(PyValueError::new_err(format!("class {label:?} already in the model")));
        }
        let mut sets = Vec::new();
        for (name, examples) in known.groups() {
            let id = self
                .class_of(&name)
                .ok_or_else(|| PyValueError::new_err(format!("class {name:?} is not in the model")))?;
            sets.push(ClassExamples::new(id, self.scale(examples)?));
        }
        let new = ClassExamples::new(ClassId(self.label_names.len() as u32), self.scale(features)?);
        let rows: Vec<&[f64]> = sets
            .iter()
            .chain([&new])
            .flat_map(|s| s.examples.iter().map(Vec::as_slice))
            .collect();
        let base = self
            .inner
            .entries
            .first()
            .map_or(BaseKind::SvmRbf, |e| e.hyperparams.base_kind);
        let hp = Self::hyperparams(base.short_name(), c, gamma, self.inner.lambda_sim, &rows)?;
        self.inner.add_class(&new, &sets, &hp).map_err(py_err)?;
        self.label_names.push(label);
        Ok(())
    }

    fn predict(&self, features: Vec<Vec<f64>>) -> PyResult<Vec<String>> {
        let features = self.scale(features)?;
        Ok(self
            .inner
            .predict_many(&features)
            .map_err(py_err)?
            .into_iter()
            .map(|c| self.name_of(c))
            .collect())
    }

    #[getter]
    fn paradigm(&self) -> String {
        self.inner.paradigm.to_string()
    }

    /// Class labels in insertion order.
    #[getter]
    fn classes(&self) -> Vec<String> {
        self.inner.class_ids().into_iter().map(|c| self.name_of(c)).collect()
    }

    /// Similar-class labels of each class, in insertion order.
    fn similar_classes(&self) -> Vec<(String, Vec<String>)> {
        self.inner
            .entries
            .iter()
            .map(|e| {
                (
                    self.name_of(e.class_id),
                    e.similar.iter().map(|&c| self.name_of(c)).collect(),
                )
            })
            .collect()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        ModelFile {
            label_names: self.label_names.clone(),
            normalizer: self.normalizer.clone(),
            ..ModelFile::from_model(self.inner.clone())
        }
        .save(path)
        .map_err(py_err)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let file = ModelFile::load(path).map_err(py_err)?;
        Ok(Self {
            inner: file.model,
            label_names: file.label_names,
            normalizer: file.normalizer,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Model({}, {} classes)", self.inner.paradigm, self.inner.len())
    }
}

/// Nine uniform discs of the given radius on a 3x3 grid.
#[pyfunction]
#[pyo3(signature = (radius, seed = 42, points = ClusterSpec::DEFAULT_POINTS))]
fn generate_clusters(radius: f64, seed: u64, points: usize) -> PyResult<Dataset> {
    Ok(Dataset {
        inner: gen_clusters(&ClusterSpec::new(radius, seed).with_points(points)).map_err(py_err)?,
    })
}

#[pyfunction]
fn accuracy(predictions: Vec<String>, truths: Vec<String>) -> PyResult<f64> {
    eval::accuracy(&predictions, &truths).map_err(py_err)
}

#[pyfunction]
fn macro_f1(predictions: Vec<String>, truths: Vec<String>) -> PyResult<f64> {
    let p: Vec<&str> = predictions.iter().map(String::as_str).collect();
    let t: Vec<&str> = truths.iter().map(String::as_str).collect();
    eval::macro_f1(&p, &t).map_err(py_err)
}

/// Runs a benchmark experiment and returns the report text.
#[pyfunction]
#[pyo3(signature = (experiment, dataset, seed = 42, folds = 5, paradigms = None, bases = None, points = None, runs = 1, format = "csv"))]
#[allow(clippy::too_many_arguments)]
fn run_experiment(
    experiment: &str,
    dataset: &str,
    seed: u64,
    folds: usize,
    paradigms: Option<Vec<String>>,
    bases: Option<Vec<String>>,
    points: Option<usize>,
    runs: usize,
    format: &str,
) -> PyResult<String> {
    let kind: ExperimentKind = parse(experiment)?;
    let source: DatasetSource = parse(dataset)?;
    let format: ReportFormat = parse(format)?;
    let mut cfg = ExperimentConfig::new(source, kind, seed);
    cfg.folds = folds;
    cfg.timing_runs = runs;
    if let Some(p) = paradigms {
        cfg.paradigms = p.iter().map(|s| parse(s)).collect::<PyResult<_>>()?;
    }
    if let Some(b) = bases {
        cfg.base_kinds = b.iter().map(|s| parse(s)).collect::<PyResult<_>>()?;
    }
    if let Some(n) = points {
        cfg.points_per_cluster = n;
    }
    let report = run_exp(&cfg).map_err(py_err)?;
    emit_report(&report, format, None).map_err(py_err)
}

#[pymodule]
fn ovpsc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Dataset>()?;
    m.add_class::<Model>()?;
    m.add_function(wrap_pyfunction!(generate_clusters, m)?)?;
    m.add_function(wrap_pyfunction!(accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(macro_f1, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
