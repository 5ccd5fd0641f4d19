//! Domain types shared by every paradigm: datasets, hyperparameters and the
//! trained multi-class model with its per-class similarity bookkeeping.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::classifier::BinaryClassifier;
use crate::data::Normalizer;
use crate::error::{Error, Result};

/// Dense class identifier assigned at ingestion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledExample {
    pub features: Vec<f64>,
    pub label: ClassId,
}

/// Feature matrix plus labels, with a per-class position index.
///
/// `label_names[id]` holds the original label string of class `id`. Every
/// class listed in the index has at least one example.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledDataset {
    examples: Vec<LabeledExample>,
    class_index: BTreeMap<ClassId, Vec<usize>>,
    label_names: Vec<String>,
    dim: usize,
}

impl LabeledDataset {
    pub fn new(examples: Vec<LabeledExample>, label_names: Vec<String>) -> Result<Self> {
        let dim = examples
            .first()
            .map(|e| e.features.len())
            .ok_or(Error::EmptyInput)?;
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "examples must have at least one feature".into(),
            ));
        }
        let mut class_index: BTreeMap<ClassId, Vec<usize>> = BTreeMap::new();
        let mut max_label = 0usize;
        for (pos, ex) in examples.iter().enumerate() {
            if ex.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: ex.features.len(),
                });
            }
            if let Some(bad) = ex.features.iter().find(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "non-finite feature value {bad} in example {pos}"
                )));
            }
            max_label = max_label.max(ex.label.index());
            class_index.entry(ex.label).or_default().push(pos);
        }
        let mut label_names = label_names;
        if label_names.len() <= max_label {
            for id in label_names.len()..=max_label {
                label_names.push(id.to_string());
            }
        }
        Ok(Self {
            examples,
            class_index,
            label_names,
            dim,
        })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn examples(&self) -> &[LabeledExample] {
        &self.examples
    }

    pub fn class_index(&self) -> &BTreeMap<ClassId, Vec<usize>> {
        &self.class_index
    }

    pub fn class_ids(&self) -> Vec<ClassId> {
        self.class_index.keys().copied().collect()
    }

    pub fn class_count(&self, class: ClassId) -> usize {
        self.class_index.get(&class).map_or(0, Vec::len)
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    pub fn label_name(&self, class: ClassId) -> &str {
        self.label_names
            .get(class.index())
            .map_or("?", String::as_str)
    }

    pub fn labels(&self) -> Vec<ClassId> {
        self.examples.iter().map(|e| e.label).collect()
    }

    /// Dataset restricted to the given positions, keeping the label table.
    pub fn subset(&self, positions: &[usize]) -> Result<Self> {
        let examples = positions
            .iter()
            .map(|&p| self.examples[p].clone())
            .collect();
        Self::new(examples, self.label_names.clone())
    }

    /// Dataset restricted to the given classes.
    pub fn filter_classes(&self, classes: &BTreeSet<ClassId>) -> Result<Self> {
        let positions: Vec<usize> = (0..self.len())
            .filter(|&p| classes.contains(&self.examples[p].label))
            .collect();
        self.subset(&positions)
    }

    /// Per-class example sets in the requested order. Classes without examples
    /// yield an empty set.
    pub fn class_sets(&self, order: &[ClassId]) -> Vec<ClassExamples> {
        order
            .iter()
            .map(|&class_id| ClassExamples {
                class_id,
                examples: self
                    .class_index
                    .get(&class_id)
                    .map(|ps| {
                        ps.iter()
                            .map(|&p| self.examples[p].features.clone())
                            .collect()
                    })
                    .unwrap_or_default(),
            })
            .collect()
    }
}

/// Training examples of a single class, the unit the paradigms consume.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassExamples {
    pub class_id: ClassId,
    pub examples: Vec<Vec<f64>>,
}

impl ClassExamples {
    pub fn new(class_id: ClassId, examples: Vec<Vec<f64>>) -> Self {
        Self { class_id, examples }
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BaseKind {
    LogisticRegression,
    SvmRbf,
}

impl BaseKind {
    pub const ALL: [BaseKind; 2] = [BaseKind::LogisticRegression, BaseKind::SvmRbf];

    pub fn short_name(self) -> &'static str {
        match self {
            BaseKind::LogisticRegression => "LR",
            BaseKind::SvmRbf => "SVM",
        }
    }
}

impl fmt::Display for BaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for BaseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "logistic" | "logisticregression" => Ok(BaseKind::LogisticRegression),
            "svm" | "svm-rbf" | "svmrbf" | "rbf" => Ok(BaseKind::SvmRbf),
            other => Err(Error::InvalidParameter(format!(
                "unknown base classifier {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Paradigm {
    Ovr,
    Scl,
    Ovp,
    Ovpsc,
}

impl Paradigm {
    pub const ALL: [Paradigm; 4] = [Paradigm::Ovr, Paradigm::Scl, Paradigm::Ovp, Paradigm::Ovpsc];

    pub fn name(self) -> &'static str {
        match self {
            Paradigm::Ovr => "OvR",
            Paradigm::Scl => "SCL",
            Paradigm::Ovp => "OvP",
            Paradigm::Ovpsc => "OvPSC",
        }
    }

    /// Whether the paradigm keeps SC / CannotBe sets.
    pub fn uses_similarity(self) -> bool {
        matches!(self, Paradigm::Scl | Paradigm::Ovpsc)
    }
}

impl fmt::Display for Paradigm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Paradigm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ovr" => Ok(Paradigm::Ovr),
            "scl" => Ok(Paradigm::Scl),
            "ovp" => Ok(Paradigm::Ovp),
            "ovpsc" => Ok(Paradigm::Ovpsc),
            other => Err(Error::InvalidParameter(format!(
                "unknown paradigm {other:?}"
            ))),
        }
    }
}

pub const DEFAULT_LAMBDA_SIM: f64 = 0.02;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    pub base_kind: BaseKind,
    /// Regularization constant C.
    pub c_reg: f64,
    /// RBF width; ignored by logistic regression.
    pub gamma: f64,
    pub lambda_sim: f64,
}

impl HyperParams {
    pub fn new(base_kind: BaseKind, c_reg: f64, gamma: f64, lambda_sim: f64) -> Result<Self> {
        let hp = Self {
            base_kind,
            c_reg,
            gamma,
            lambda_sim,
        };
        hp.validate()?;
        Ok(hp)
    }

    pub fn logistic(c_reg: f64) -> Self {
        Self {
            base_kind: BaseKind::LogisticRegression,
            c_reg,
            gamma: 1.0,
            lambda_sim: DEFAULT_LAMBDA_SIM,
        }
    }

    pub fn svm(c_reg: f64, gamma: f64) -> Self {
        Self {
            base_kind: BaseKind::SvmRbf,
            c_reg,
            gamma,
            lambda_sim: DEFAULT_LAMBDA_SIM,
        }
    }

    pub fn with_c(self, c_reg: f64) -> Self {
        Self { c_reg, ..self }
    }

    pub fn with_lambda_sim(self, lambda_sim: f64) -> Self {
        Self { lambda_sim, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c_reg > 0.0 && self.c_reg.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "C must be positive, got {}",
                self.c_reg
            )));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.lambda_sim) {
            return Err(Error::InvalidParameter(format!(
                "lambda_sim must lie in [0, 1], got {}",
                self.lambda_sim
            )));
        }
        Ok(())
    }
}

/// One class of a trained model: its binary classifier and similarity sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub class_id: ClassId,
    pub classifier: BinaryClassifier,
    pub similar: BTreeSet<ClassId>,
    pub cannot_be: BTreeSet<ClassId>,
    pub hyperparams: HyperParams,
}

impl ClassEntry {
    pub fn new(class_id: ClassId, classifier: BinaryClassifier, hyperparams: HyperParams) -> Self {
        Self {
            class_id,
            classifier,
            similar: BTreeSet::new(),
            cannot_be: BTreeSet::new(),
            hyperparams,
        }
    }
}

/// A multi-class model: per-class classifiers in build order.
///
/// Prediction only reads the model, so a fitted model can be shared across
/// threads. The fallback counter tracks SCL predictions that had to fall back
/// to the first-built class.
#[derive(Debug, Serialize, Deserialize)]
pub struct ParadigmModel {
    pub paradigm: Paradigm,
    pub entries: Vec<ClassEntry>,
    pub lambda_sim: f64,
    #[serde(skip)]
    fallbacks: AtomicU64,
}

impl Clone for ParadigmModel {
    fn clone(&self) -> Self {
        Self {
            paradigm: self.paradigm,
            entries: self.entries.clone(),
            lambda_sim: self.lambda_sim,
            fallbacks: AtomicU64::new(self.fallback_count()),
        }
    }
}

impl PartialEq for ParadigmModel {
    fn eq(&self, other: &Self) -> bool {
        self.paradigm == other.paradigm
            && self.lambda_sim == other.lambda_sim
            && self.entries == other.entries
    }
}

impl ParadigmModel {
    pub fn new(paradigm: Paradigm, lambda_sim: f64) -> Self {
        Self {
            paradigm,
            entries: Vec::new(),
            lambda_sim,
            fallbacks: AtomicU64::new(0),
        }
    }

    pub fn from_entries(paradigm: Paradigm, lambda_sim: f64, entries: Vec<ClassEntry>) -> Self {
        Self {
            entries,
            ..Self::new(paradigm, lambda_sim)
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_ids(&self) -> Vec<ClassId> {
        self.entries.iter().map(|e| e.class_id).collect()
    }

    pub fn contains(&self, class: ClassId) -> bool {
        self.position(class).is_some()
    }

    /// Build-order position of a class.
    pub fn position(&self, class: ClassId) -> Option<usize> {
        self.entries.iter().position(|e| e.class_id == class)
    }

    pub fn entry(&self, class: ClassId) -> Option<&ClassEntry> {
        self.entries.iter().find(|e| e.class_id == class)
    }

    pub fn fallback_count(&self) -> u64 {
        self.fallbacks.load(Ordering::Relaxed)
    }

    pub(crate) fn record_fallback(&self) {
        self.fallbacks.fetch_add(1, Ordering::Relaxed);
    }

    /// Checks the structural invariants of the paradigm.
    pub fn check_invariants(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for e in &self.entries {
            if !seen.insert(e.class_id) {
                return Err(Error::DuplicateClass(e.class_id));
            }
            if e.similar.contains(&e.class_id) || e.cannot_be.contains(&e.class_id) {
                return Err(Error::InvalidParameter(format!(
                    "class {} references itself",
                    e.class_id
                )));
            }
            if e.similar.intersection(&e.cannot_be).next().is_some() {
                return Err(Error::InvalidParameter(format!(
                    "class {} has overlapping SC and CannotBe sets",
                    e.class_id
                )));
            }
        }
        match self.paradigm {
            Paradigm::Ovr | Paradigm::Ovp => {
                if self
                    .entries
                    .iter()
                    .any(|e| !e.similar.is_empty() || !e.cannot_be.is_empty())
                {
                    return Err(Error::InvalidParameter(format!(
                        "{} model must not carry similarity sets",
                        self.paradigm
                    )));
                }
            }
            Paradigm::Scl => {
                for e in &self.entries {
                    for s in &e.similar {
                        let back = self.entry(*s).ok_or(Error::UnknownClass(*s))?;
                        if !back.similar.contains(&e.class_id) {
                            return Err(Error::InvalidParameter(format!(
                                "SCL similarity between {} and {} is not symmetric",
                                e.class_id, s
                            )));
                        }
                    }
                }
            }
            Paradigm::Ovpsc => {
                for (i, e) in self.entries.iter().enumerate() {
                    for s in &e.similar {
                        let j = self.position(*s).ok_or(Error::UnknownClass(*s))?;
                        if j >= i {
                            return Err(Error::InvalidParameter(format!(
                                "OvPSC similarity edge {} -> {} points forward",
                                e.class_id, s
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        ModelFile::from_model(self.clone()).to_json()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(ModelFile::from_json(text)?.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        ModelFile::from_model(self.clone()).save(path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(ModelFile::load(path)?.model)
    }
}

pub const MODEL_FORMAT: &str = "ovpsc-model";
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Versioned JSON container for a model plus the preprocessing needed to
/// apply it to raw data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub version: u32,
    pub model: ParadigmModel,
    #[serde(default)]
    pub normalizer: Option<Normalizer>,
    #[serde(default)]
    pub label_names: Vec<String>,
}

impl ModelFile {
    pub fn from_model(model: ParadigmModel) -> Self {
        Self {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_FORMAT_VERSION,
            model,
            normalizer: None,
            label_names: Vec::new(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.format != MODEL_FORMAT {
            return Err(Error::ModelFormat(format!(
                "unexpected format tag {:?}",
                file.format
            )));
        }
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported version {}",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
