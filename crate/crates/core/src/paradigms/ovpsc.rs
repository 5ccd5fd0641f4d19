use std::collections::BTreeSet;

use super::{expect_paradigm, in_build_order, is_similar, DataIndex, TrainStats};
use crate::classifier::BinaryClassifier;
use crate::error::{Error, Result};
use crate::model::{ClassEntry, ClassExamples, ClassId, HyperParams, Paradigm, ParadigmModel};

/// One vs Previous Similar Classes: OvP insertion where each class is trained
/// only against the earlier classes whose classifiers fire on it. Existing
/// classifiers are never refit.
pub fn train_ovpsc(data: &[ClassExamples], hp: &HyperParams) -> Result<ParadigmModel> {
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
    let mut model = ParadigmModel::new(Paradigm::Ovpsc, hp.lambda_sim);
    for &class in index.order() {
        insert(&mut model, &index, class, hp, stats)?;
    }
    Ok(model)
}

pub(crate) fn insert(
    model: &mut ParadigmModel,
    index: &DataIndex<'_>,
    class: ClassId,
    hp: &HyperParams,
    stats: &mut TrainStats,
) -> Result<()> {
    if model.is_empty() {
        model
            .entries
            .push(ClassEntry::new(class, BinaryClassifier::Dummy, *hp));
        return Ok(());
    }
    let new_examples = index.examples(class);
    let mut similar = BTreeSet::new();
    let mut dissimilar = Vec::new();
    for (j, entry) in model.entries.iter().enumerate() {
        if is_similar(&entry.classifier, new_examples, model.lambda_sim)? {
            similar.insert(entry.class_id);
        } else {
            dissimilar.push(j);
        }
    }
    let classifier = if similar.is_empty() {
        // Only reachable if the first entry is not the dummy.
        BinaryClassifier::Dummy
    } else {
        index.fit(
            class,
            &in_build_order(&model.class_ids(), &similar),
            hp,
            None,
            stats,
        )?
    };
    for j in dissimilar {
        model.entries[j].cannot_be.insert(class);
    }
    let mut entry = ClassEntry::new(class, classifier, *hp);
    entry.similar = similar;
    model.entries.push(entry);
    Ok(())
}

/// Forward scan with CannotBe pruning; the last positive class wins.
pub fn predict_ovpsc(model: &ParadigmModel, x: &[f64]) -> Result<ClassId> {
    expect_paradigm(model, Paradigm::Ovpsc)?;
    let mut cannot_be: BTreeSet<ClassId> = BTreeSet::new();
    let mut answer = None;
    for entry in &model.entries {
        if cannot_be.contains(&entry.class_id) {
            continue;
        }
        if entry.classifier.confidence(x)? > 0.0 {
            cannot_be.extend(entry.cannot_be.iter().copied());
            answer = Some(entry.class_id);
        }
    }
    Ok(answer.unwrap_or(model.entries[0].class_id))
}
