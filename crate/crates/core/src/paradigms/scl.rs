use std::collections::BTreeSet;

use super::{expect_paradigm, in_build_order, is_similar, DataIndex, TrainStats};
use crate::classifier::BinaryClassifier;
use crate::error::{Error, Result};
use crate::model::{ClassEntry, ClassExamples, ClassId, HyperParams, Paradigm, ParadigmModel};

/// Similar Classes Learning: each class is trained only against the classes
/// whose classifiers fire on its examples, and those classifiers are refit
/// to include the newcomer in their negative set.
pub fn train_scl(data: &[ClassExamples], hp: &HyperParams) -> Result<ParadigmModel> {
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
    let mut model = ParadigmModel::new(Paradigm::Scl, hp.lambda_sim);
    for &class in index.order() {
        insert(&mut model, &index, class, hp, stats)?;
    }
    Ok(model)
}

/// One pass of the SCL insertion loop for `class`. `index` must hold the
/// examples of every class already in the model as well as the new one.
/// The model is only modified once every fit has succeeded.
pub(crate) fn insert(
    model: &mut ParadigmModel,
    index: &DataIndex<'_>,
    class: ClassId,
    hp: &HyperParams,
    stats: &mut TrainStats,
) -> Result<()> {
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

    let mut build_order = model.class_ids();
    build_order.push(class);

    // Existing classifiers that fired are refit from scratch against their enlarged SC.
    let mut refits = Vec::new();
    for (j, entry) in model.entries.iter().enumerate() {
        if !similar.contains(&entry.class_id) {
            continue;
        }
        let mut sc = entry.similar.clone();
        sc.insert(class);
        let negatives = in_build_order(&build_order, &sc);
        let classifier = index.fit(entry.class_id, &negatives, hp, None, stats)?;
        refits.push((j, sc, classifier));
    }

    let classifier = if similar.is_empty() {
        BinaryClassifier::Dummy
    } else {
        index.fit(
            class,
            &in_build_order(&build_order, &similar),
            hp,
            None,
            stats,
        )?
    };

    for (j, sc, refit) in refits {
        let entry = &mut model.entries[j];
        entry.similar = sc;
        entry.classifier = refit;
        entry.hyperparams = *hp;
        stats.retrained.push(entry.class_id);
    }
    for j in dissimilar {
        model.entries[j].cannot_be.insert(class);
    }
    let mut entry = ClassEntry::new(class, classifier, *hp);
    entry.similar = similar;
    model.entries.push(entry);
    Ok(())
}

/// Build-order scan that skips classes pruned by the running CannotBe union
/// and returns the evaluated class with the highest confidence.
pub fn predict_scl(model: &ParadigmModel, x: &[f64]) -> Result<ClassId> {
    expect_paradigm(model, Paradigm::Scl)?;
    let mut cannot_be: BTreeSet<ClassId> = BTreeSet::new();
    let mut top: Option<ClassId> = None;
    let mut biggest = f64::NEG_INFINITY;
    for entry in &model.entries {
        if cannot_be.contains(&entry.class_id) {
            continue;
        }
        let conf = entry.classifier.confidence(x)?;
        if conf > biggest {
            biggest = conf;
            top = Some(entry.class_id);
        }
        if conf > 0.0 {
            cannot_be.extend(entry.cannot_be.iter().copied());
        }
    }
    Ok(top.unwrap_or_else(|| {
        model.record_fallback();
        log::debug!("SCL prediction fell back to the first-built class");
        model.entries[0].class_id
    }))
}
