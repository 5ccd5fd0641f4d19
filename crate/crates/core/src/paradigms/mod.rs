//! Training and prediction for the four multi-class paradigms, plus the
//! incremental entry points in [`incremental`].
//!
//! All training functions take per-class example sets in insertion order;
//! that order becomes the model's build order.

pub mod incremental;
mod ovp;
mod ovpsc;
mod ovr;
mod scl;

use std::collections::{BTreeSet, HashMap};

pub use incremental::{UpdateReport, UpdateStrategy};
pub use ovp::{predict_ovp, train_ovp};
pub use ovpsc::{predict_ovpsc, train_ovpsc};
pub use ovr::{predict_ovr, train_ovr};
pub use scl::{predict_scl, train_scl};

use crate::classifier::{fit_binary, BinaryClassifier};
use crate::error::{Error, Result};
use crate::model::{ClassExamples, ClassId, HyperParams, Paradigm, ParadigmModel};

/// True iff strictly more than `lambda_sim * examples.len()` examples are
/// classified positive.
pub fn is_similar(clf: &BinaryClassifier, examples: &[Vec<f64>], lambda_sim: f64) -> Result<bool> {
    if examples.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(0.0..=1.0).contains(&lambda_sim) {
        return Err(Error::InvalidParameter(format!(
            "lambda_sim must lie in [0, 1], got {lambda_sim}"
        )));
    }
    let mut count = 0usize;
    for e in examples {
        if clf.classifies_positive(e)? {
            count += 1;
        }
    }
    Ok(count as f64 > lambda_sim * examples.len() as f64)
}

/// Counters collected while building or updating a model.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainStats {
    /// Base-classifier fits performed (dummies excluded).
    pub fit_calls: usize,
    /// Existing classes whose classifier was refit.
    pub retrained: Vec<ClassId>,
}

/// Lookup from class id to its examples, validated for consistency.
pub(crate) struct DataIndex<'a> {
    by_class: HashMap<ClassId, &'a ClassExamples>,
    order: Vec<ClassId>,
}

impl<'a> DataIndex<'a> {
    pub(crate) fn new(data: &'a [ClassExamples]) -> Result<Self> {
        let mut by_class = HashMap::with_capacity(data.len());
        let mut order = Vec::with_capacity(data.len());
        let mut dim: Option<usize> = None;
        for set in data {
            if by_class.insert(set.class_id, set).is_some() {
                return Err(Error::DuplicateClass(set.class_id));
            }
            order.push(set.class_id);
            for e in &set.examples {
                match dim {
                    None => dim = Some(e.len()),
                    Some(d) if d != e.len() => {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: e.len(),
                        })
                    }
                    _ => {}
                }
            }
        }
        Ok(Self { by_class, order })
    }

    pub(crate) fn order(&self) -> &[ClassId] {
        &self.order
    }

    pub(crate) fn examples(&self, class: ClassId) -> &'a [Vec<f64>] {
        self.by_class
            .get(&class)
            .map_or(&[], |s| s.examples.as_slice())
    }

    /// Errors unless every class listed has at least one example.
    pub(crate) fn require_non_empty(&self) -> Result<()> {
        for &c in &self.order {
            if self.examples(c).is_empty() {
                return Err(Error::ClassTooSmall {
                    class: c,
                    size: 0,
                    required: 1,
                });
            }
        }
        Ok(())
    }

    /// Positives first, then negatives in the order given.
    pub(crate) fn binary_problem(
        &self,
        positive: ClassId,
        negatives: &[ClassId],
    ) -> (Vec<&'a [f64]>, Vec<f64>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for e in self.examples(positive) {
            x.push(e.as_slice());
            y.push(1.0);
        }
        for &neg in negatives {
            for e in self.examples(neg) {
                x.push(e.as_slice());
                y.push(-1.0);
            }
        }
        (x, y)
    }

    pub(crate) fn fit(
        &self,
        positive: ClassId,
        negatives: &[ClassId],
        hp: &HyperParams,
        warm_from: Option<&BinaryClassifier>,
        stats: &mut TrainStats,
    ) -> Result<BinaryClassifier> {
        let (x, y) = self.binary_problem(positive, negatives);
        stats.fit_calls += 1;
        fit_binary(&x, &y, hp, warm_from)
    }
}

/// Members of `set` listed in `build_order` order.
pub(crate) fn in_build_order(build_order: &[ClassId], set: &BTreeSet<ClassId>) -> Vec<ClassId> {
    build_order
        .iter()
        .copied()
        .filter(|c| set.contains(c))
        .collect()
}

pub(crate) fn expect_paradigm(model: &ParadigmModel, expected: Paradigm) -> Result<()> {
    if model.paradigm != expected {
        return Err(Error::WrongParadigm {
            expected: expected.name(),
            found: model.paradigm.name(),
        });
    }
    if model.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(())
}

/// Trains a model of the given paradigm from scratch.
pub fn train(
    paradigm: Paradigm,
    data: &[ClassExamples],
    hp: &HyperParams,
) -> Result<ParadigmModel> {
    Ok(train_with_stats(paradigm, data, hp)?.0)
}

pub fn train_with_stats(
    paradigm: Paradigm,
    data: &[ClassExamples],
    hp: &HyperParams,
) -> Result<(ParadigmModel, TrainStats)> {
    hp.validate()?;
    let mut stats = TrainStats::default();
    let model = match paradigm {
        Paradigm::Ovr => ovr::train(data, hp, &mut stats)?,
        Paradigm::Scl => scl::train(data, hp, &mut stats)?,
        Paradigm::Ovp => ovp::train(data, hp, &mut stats)?,
        Paradigm::Ovpsc => ovpsc::train(data, hp, &mut stats)?,
    };
    Ok((model, stats))
}

impl ParadigmModel {
    /// Predicts with the rule matching the model's paradigm.
    pub fn predict(&self, x: &[f64]) -> Result<ClassId> {
        match self.paradigm {
            Paradigm::Ovr => predict_ovr(self, x),
            Paradigm::Scl => predict_scl(self, x),
            Paradigm::Ovp => predict_ovp(self, x),
            Paradigm::Ovpsc => predict_ovpsc(self, x),
        }
    }

    pub fn predict_many<R: AsRef<[f64]>>(&self, rows: &[R]) -> Result<Vec<ClassId>> {
        rows.iter().map(|r| self.predict(r.as_ref())).collect()
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;

    fn examples(n: usize) -> Vec<Vec<f64>> {
        (0..n).map(|i| vec![i as f64]).collect()
    }

    #[test]
    fn dummy_is_similar_to_everything() {
        assert!(is_similar(&BinaryClassifier::Dummy, &examples(10), 0.02).unwrap());
    }

    #[test]
    fn similarity_threshold_is_strict() {
        use crate::classifier::LogisticModel;
        // Positive only for x > 97.5: exactly 2 of 100 examples.
        let clf = BinaryClassifier::Logistic(LogisticModel {
            weights: vec![1.0],
            bias: -97.5,
        });
        assert!(!is_similar(&clf, &examples(100), 0.02).unwrap());
        let clf = BinaryClassifier::Logistic(LogisticModel {
            weights: vec![1.0],
            bias: -96.5,
        });
        assert!(is_similar(&clf, &examples(100), 0.02).unwrap());
        let never = BinaryClassifier::Logistic(LogisticModel {
            weights: vec![0.0],
            bias: -1.0,
        });
        assert!(!is_similar(&never, &examples(100), 0.02).unwrap());
    }

    #[test]
    fn similarity_rejects_empty_input() {
        assert!(matches!(
            is_similar(&BinaryClassifier::Dummy, &[], 0.02),
            Err(Error::EmptyInput)
        ));
    }

    #[test]
    fn duplicate_classes_in_training_data() {
        let mut data = three_class_1d();
        data[1].class_id = ClassId(0);
        assert!(matches!(
            train(Paradigm::Ovp, &data, &lr()),
            Err(Error::DuplicateClass(_))
        ));
    }

    #[test]
    fn every_paradigm_returns_known_classes() {
        let data = three_class_1d();
        for paradigm in Paradigm::ALL {
            for hp in [lr(), svm()] {
                let model = train(paradigm, &data, &hp).unwrap();
                model.check_invariants().unwrap();
                for k in -40..=40 {
                    let c = model.predict(&[k as f64 / 10.0]).unwrap();
                    assert!(model.contains(c));
                }
            }
        }
    }

    #[test]
    fn wrong_paradigm_is_rejected() {
        let model = train(Paradigm::Ovp, &three_class_1d(), &lr()).unwrap();
        assert!(matches!(
            predict_ovr(&model, &[0.0]),
            Err(Error::WrongParadigm { .. })
        ));
    }
}
