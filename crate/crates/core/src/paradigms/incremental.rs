//! Updating a trained model when a new class or new data for known classes
//! arrives.

use std::collections::HashMap;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{in_build_order, ovp, ovpsc, scl, train_with_stats, DataIndex, TrainStats};
use crate::classifier::BinaryClassifier;
use crate::error::{Error, Result};
use crate::model::{ClassExamples, ClassId, HyperParams, Paradigm, ParadigmModel};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum UpdateStrategy {
    /// Discard parameters and train on all accumulated data.
    RetrainScratch,
    /// Warm-start every classifier and fit on the new data only.
    FineTuneNewOnly,
    /// Warm-start every classifier and fit on all accumulated data.
    FineTuneAll,
}

impl FromStr for UpdateStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "retrainscratch" | "scratch" => Ok(UpdateStrategy::RetrainScratch),
            "finetunenewonly" | "newonly" => Ok(UpdateStrategy::FineTuneNewOnly),
            "finetuneall" | "all" => Ok(UpdateStrategy::FineTuneAll),
            other => Err(Error::InvalidParameter(format!(
                "unknown update strategy {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UpdateReport {
    pub fit_calls: usize,
    /// Classes already in the model whose classifier was refit.
    pub retrained: Vec<ClassId>,
    /// Wall-clock time of the update, including similarity tests.
    pub seconds: f64,
}

impl UpdateReport {
    fn from_stats(stats: TrainStats, started: Instant) -> Self {
        Self {
            fit_calls: stats.fit_calls,
            retrained: stats.retrained,
            seconds: started.elapsed().as_secs_f64(),
        }
    }
}

/// Training data for the classes in `model`, taken from `sets`, in build order.
fn data_in_build_order(
    model: &ParadigmModel,
    sets: &[ClassExamples],
) -> Result<Vec<ClassExamples>> {
    let by_class: HashMap<ClassId, &ClassExamples> = sets.iter().map(|s| (s.class_id, s)).collect();
    model
        .entries
        .iter()
        .map(|e| {
            by_class
                .get(&e.class_id)
                .map(|s| (*s).clone())
                .ok_or_else(|| {
                    Error::InvalidParameter(format!(
                        "no training data supplied for class {}",
                        e.class_id
                    ))
                })
        })
        .collect()
}

impl ParadigmModel {
    /// Adds a class the model has not seen.
    ///
    /// `known` must hold training examples for every class already in the
    /// model: OvR retrains on all of it, OvP uses it as the negative set, and
    /// SCL and OvPSC train the new class against its similar classes from it.
    pub fn add_class(
        &mut self,
        new_class: &ClassExamples,
        known: &[ClassExamples],
        hp: &HyperParams,
    ) -> Result<UpdateReport> {
        hp.validate()?;
        if self.contains(new_class.class_id) {
            return Err(Error::DuplicateClass(new_class.class_id));
        }
        if new_class.is_empty() {
            return Err(Error::ClassTooSmall {
                class: new_class.class_id,
                size: 0,
                required: 1,
            });
        }
        let started = Instant::now();
        let mut data = data_in_build_order(self, known)?;
        data.push(new_class.clone());
        let index = DataIndex::new(&data)?;
        let mut stats = TrainStats::default();

        match self.paradigm {
            Paradigm::Ovr => {
                let (model, s) = train_with_stats(Paradigm::Ovr, &data, hp)?;
                stats = s;
                stats.retrained = self.class_ids();
                *self = model;
            }
            Paradigm::Ovp => {
                let entry = ovp::new_entry(self, &index, new_class.class_id, hp, &mut stats)?;
                self.entries.push(entry);
            }
            Paradigm::Scl => scl::insert(self, &index, new_class.class_id, hp, &mut stats)?,
            Paradigm::Ovpsc => ovpsc::insert(self, &index, new_class.class_id, hp, &mut stats)?,
        }
        Ok(UpdateReport::from_stats(stats, started))
    }

    /// Updates the classifiers of known classes with new data.
    ///
    /// Scratch retraining rebuilds the model (recomputing similarity sets)
    /// with `hp`. Fine-tuning keeps SC / CannotBe frozen, warm-starts each
    /// classifier from its current parameters with its stored
    /// hyperparameters, and leaves untouched any classifier whose binary
    /// problem lacks positive or negative examples in the chosen data.
    pub fn update_with_data(
        &mut self,
        new_data: &[ClassExamples],
        accumulated: &[ClassExamples],
        strategy: UpdateStrategy,
        hp: &HyperParams,
    ) -> Result<UpdateReport> {
        for set in new_data {
            if !self.contains(set.class_id) {
                return Err(Error::UnknownClass(set.class_id));
            }
        }
        let started = Instant::now();
        match strategy {
            UpdateStrategy::RetrainScratch => {
                let data = data_in_build_order(self, accumulated)?;
                let (model, stats) = train_with_stats(self.paradigm, &data, hp)?;
                *self = model;
                Ok(UpdateReport::from_stats(stats, started))
            }
            UpdateStrategy::FineTuneNewOnly => self.fine_tune(new_data, started),
            UpdateStrategy::FineTuneAll => self.fine_tune(accumulated, started),
        }
    }

    fn fine_tune(&mut self, source: &[ClassExamples], started: Instant) -> Result<UpdateReport> {
        let index = DataIndex::new(source)?;
        let order = self.class_ids();
        let mut stats = TrainStats::default();
        let mut refits: Vec<(usize, BinaryClassifier)> = Vec::new();
        for (j, entry) in self.entries.iter().enumerate() {
            if entry.classifier.is_dummy() {
                continue;
            }
            let negatives: Vec<ClassId> = match self.paradigm {
                Paradigm::Ovr => order
                    .iter()
                    .copied()
                    .filter(|&c| c != entry.class_id)
                    .collect(),
                Paradigm::Ovp => order[..j].to_vec(),
                Paradigm::Scl | Paradigm::Ovpsc => in_build_order(&order, &entry.similar),
            };
            let has_positive = !index.examples(entry.class_id).is_empty();
            let has_negative = negatives.iter().any(|&c| !index.examples(c).is_empty());
            if !(has_positive && has_negative) {
                continue;
            }
            let refit = index.fit(
                entry.class_id,
                &negatives,
                &entry.hyperparams,
                Some(&entry.classifier),
                &mut stats,
            )?;
            refits.push((j, refit));
        }
        for (j, refit) in refits {
            self.entries[j].classifier = refit;
            stats.retrained.push(self.entries[j].class_id);
        }
        Ok(UpdateReport::from_stats(stats, started))
    }
}
