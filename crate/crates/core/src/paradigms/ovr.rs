use super::{expect_paradigm, DataIndex, TrainStats};
use crate::error::{Error, Result};
use crate::model::{ClassEntry, ClassExamples, ClassId, HyperParams, Paradigm, ParadigmModel};

/// One classifier per class against the union of all other classes.
pub fn train_ovr(data: &[ClassExamples], hp: &HyperParams) -> Result<ParadigmModel> {
    train(data, hp, &mut TrainStats::default())
}

pub(super) fn train(
    data: &[ClassExamples],
    hp: &HyperParams,
    stats: &mut TrainStats,
) -> Result<ParadigmModel> {
    if data.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "OvR needs at least 2 classes, got {}",
            data.len()
        )));
    }
    let index = DataIndex::new(data)?;
    index.require_non_empty()?;
    let mut model = ParadigmModel::new(Paradigm::Ovr, hp.lambda_sim);
    for &class in index.order() {
        let negatives: Vec<ClassId> = index
            .order()
            .iter()
            .copied()
            .filter(|&c| c != class)
            .collect();
        let classifier = index.fit(class, &negatives, hp, None, stats)?;
        model.entries.push(ClassEntry::new(class, classifier, *hp));
    }
    Ok(model)
}

/// Argmax of confidences; ties go to the earliest-built class.
pub fn predict_ovr(model: &ParadigmModel, x: &[f64]) -> Result<ClassId> {
    expect_paradigm(model, Paradigm::Ovr)?;
    let mut best = model.entries[0].class_id;
    let mut best_conf = f64::NEG_INFINITY;
    for entry in &model.entries {
        let conf = entry.classifier.confidence(x)?;
        if conf > best_conf {
            best_conf = conf;
            best = entry.class_id;
        }
    }
    Ok(best)
}
