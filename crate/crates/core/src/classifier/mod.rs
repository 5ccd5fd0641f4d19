//! Binary base classifiers. Each one maps a feature vector to a signed
//! confidence; a positive value claims the classifier's class.

mod logistic;
mod svm;

pub use logistic::{
    fit_logistic, fit_logistic_detailed, logistic_gradient, logistic_objective, LogisticFit,
    LogisticModel, LOGISTIC_GRAD_TOL,
};
pub use svm::{
    default_gamma, fit_svm_rbf, fit_svm_rbf_detailed, rbf_kernel, SvmFit, SvmModel, SMO_TOL,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BaseKind, HyperParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum BinaryClassifier {
    /// Claims every input with the largest finite score.
    Dummy,
    Logistic(LogisticModel),
    SvmRbf(SvmModel),
}

impl BinaryClassifier {
    pub fn is_dummy(&self) -> bool {
        matches!(self, BinaryClassifier::Dummy)
    }

    /// Feature dimension the classifier expects; `None` for the dummy.
    pub fn dim(&self) -> Option<usize> {
        match self {
            BinaryClassifier::Dummy => None,
            BinaryClassifier::Logistic(m) => Some(m.weights.len()),
            BinaryClassifier::SvmRbf(m) => Some(m.dim()),
        }
    }

    /// Signed decision value.
    pub fn confidence(&self, x: &[f64]) -> Result<f64> {
        match self {
            BinaryClassifier::Dummy => Ok(f64::MAX),
            BinaryClassifier::Logistic(m) => m.decision(x),
            BinaryClassifier::SvmRbf(m) => m.decision(x),
        }
    }

    pub fn classifies_positive(&self, x: &[f64]) -> Result<bool> {
        Ok(self.confidence(x)? > 0.0)
    }
}

/// Fits the base classifier selected by `hp.base_kind`.
pub fn fit_binary(
    x: &[&[f64]],
    y: &[f64],
    hp: &HyperParams,
    warm_from: Option<&BinaryClassifier>,
) -> Result<BinaryClassifier> {
    match hp.base_kind {
        BaseKind::LogisticRegression => fit_logistic(x, y, hp, warm_from),
        BaseKind::SvmRbf => fit_svm_rbf(x, y, hp, warm_from),
    }
}

/// Shared precondition checks for the binary fits; returns the feature dimension.
pub(crate) fn check_binary_problem(x: &[&[f64]], y: &[f64]) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::EmptyInput);
    }
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let dim = x[0].len();
    if dim == 0 {
        return Err(Error::InvalidParameter(
            "examples must have at least one feature".into(),
        ));
    }
    if let Some(row) = x.iter().find(|r| r.len() != dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: row.len(),
        });
    }
    let mut pos = false;
    let mut neg = false;
    for &label in y {
        if label == 1.0 {
            pos = true;
        } else if label == -1.0 {
            neg = true;
        } else {
            return Err(Error::InvalidParameter(format!(
                "binary labels must be +1 or -1, got {label}"
            )));
        }
    }
    if !(pos && neg) {
        return Err(Error::SingleClassInput);
    }
    Ok(dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dummy_scores_max_everywhere() {
        let d = BinaryClassifier::Dummy;
        assert_eq!(d.confidence(&[1.0, 2.0]).unwrap(), f64::MAX);
        assert_eq!(d.confidence(&[-1e300; 7]).unwrap(), f64::MAX);
        assert!(d.classifies_positive(&[0.0]).unwrap());
    }

    #[test]
    fn logistic_confidence_is_affine() {
        let m = BinaryClassifier::Logistic(LogisticModel {
            weights: vec![1.0, 0.0],
            bias: -1.0,
        });
        assert_eq!(m.confidence(&[1.0, 5.0]).unwrap(), 0.0);
        let m = BinaryClassifier::Logistic(LogisticModel {
            weights: vec![2.0],
            bias: 0.0,
        });
        assert_eq!(m.confidence(&[-3.0]).unwrap(), -6.0);
    }

    #[test]
    fn zero_score_is_not_positive() {
        let m = BinaryClassifier::Logistic(LogisticModel {
            weights: vec![1.0],
            bias: 0.0,
        });
        assert!(!m.classifies_positive(&[0.0]).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let m = BinaryClassifier::Logistic(LogisticModel {
            weights: vec![1.0, 2.0],
            bias: 0.0,
        });
        assert!(matches!(
            m.confidence(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 2,
                found: 1
            })
        ));
    }

    #[test]
    fn single_sign_labels_are_rejected() {
        let rows = [[1.0], [2.0]];
        let x: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        assert!(matches!(
            check_binary_problem(&x, &[1.0, 1.0]),
            Err(Error::SingleClassInput)
        ));
        assert!(check_binary_problem(&x, &[1.0, -1.0]).is_ok());
    }
}
