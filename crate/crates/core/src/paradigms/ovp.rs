use super::{expect_paradigm, DataIndex, TrainStats};
use crate::classifier::BinaryClassifier;
use crate::error::{Error, Result};
use crate::model::{ClassEntry, ClassExamples, ClassId, HyperParams, Paradigm, ParadigmModel};

/// One vs Previous: the first class gets the dummy, every later class is
/// trained against all classes inserted before it.
pub fn train_ovp(data: &[ClassExamples], hp: &HyperParams) -> Result<ParadigmModel> {
    train(data, hp, &mut TrainStats::default())
}

pub(super) fn train(
    data: &[ClassExamples],
    hp: &HyperParams,
    stats: &mut TrainStats,
) -> Result<ParadigmModel> {
    if data.is_empty() {
        return Err(Error::EmptyInput);
    }
    let index = DataIndex::new(data)?;
    index.require_non_empty()?;
    let mut model = ParadigmModel::new(Paradigm::Ovp, hp.lambda_sim);
    for &class in index.order() {
        let entry = new_entry(&model, &index, class, hp, stats)?;
        model.entries.push(entry);
    }
    Ok(model)
}

/// Entry for `class` trained against every class already in `model`.
pub(crate) fn new_entry(
    model: &ParadigmModel,
    index: &DataIndex<'_>,
    class: ClassId,
    hp: &HyperParams,
    stats: &mut TrainStats,
) -> Result<ClassEntry> {
    let classifier = if model.is_empty() {
        BinaryClassifier::Dummy
    } else {
        index.fit(class, &model.class_ids(), hp, None, stats)?
    };
    Ok(ClassEntry::new(class, classifier, *hp))
}

/// Scans classifiers newest-first and returns the first positive one.
pub fn predict_ovp(model: &ParadigmModel, x: &[f64]) -> Result<ClassId> {
    expect_paradigm(model, Paradigm::Ovp)?;
    for entry in model.entries.iter().rev() {
        if entry.classifier.confidence(x)? > 0.0 {
            return Ok(entry.class_id);
        }
    }
    // Unreachable while the first entry is the dummy.
    Ok(model.entries[0].class_id)
}
