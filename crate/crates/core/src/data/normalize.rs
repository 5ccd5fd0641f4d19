use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{LabeledDataset, LabeledExample};

/// Per-column standardization with population statistics. Masked (one-hot)
/// and zero-variance columns pass through unchanged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    pub passthrough: Vec<bool>,
}

pub fn fit_normalizer(
    train: &LabeledDataset,
    onehot_columns: &BTreeSet<usize>,
) -> Result<Normalizer> {
    if train.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dim = train.dim();
    if let Some(&bad) = onehot_columns.iter().find(|&&c| c >= dim) {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: bad + 1,
        });
    }
    let n = train.len() as f64;
    let mut mean = vec![0.0; dim];
    for e in train.examples() {
        for (m, v) in mean.iter_mut().zip(&e.features) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; dim];
    for e in train.examples() {
        for k in 0..dim {
            var[k] += (e.features[k] - mean[k]).powi(2);
        }
    }
    let std: Vec<f64> = var.iter().map(|v| (v / n).sqrt()).collect();
    let passthrough = (0..dim)
        .map(|k| onehot_columns.contains(&k) || std[k] == 0.0)
        .collect();
    Ok(Normalizer {
        mean,
        std,
        passthrough,
    })
}

impl Normalizer {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: row.len(),
            });
        }
        Ok(row
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if self.passthrough[k] {
                    v
                } else {
                    (v - self.mean[k]) / self.std[k]
                }
            })
            .collect())
    }

    pub fn apply(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        let examples = data
            .examples()
            .iter()
            .map(|e| {
                Ok(LabeledExample {
                    features: self.transform_row(&e.features)?,
                    label: e.label,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        LabeledDataset::new(examples, data.label_names().to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ClassId;

    fn dataset(rows: &[&[f64]]) -> LabeledDataset {
        let examples = rows
            .iter()
            .map(|r| LabeledExample {
                features: r.to_vec(),
                label: ClassId(0),
            })
            .collect();
        LabeledDataset::new(examples, vec![]).unwrap()
    }

    #[test]
    fn standardizes_with_population_std() {
        let ds = dataset(&[&[1.0], &[2.0], &[3.0]]);
        let norm = fit_normalizer(&ds, &BTreeSet::new()).unwrap();
        let out = norm.apply(&ds).unwrap();
        let expected = [-1.224744871391589, 0.0, 1.224744871391589];
        for (e, want) in out.examples().iter().zip(expected) {
            assert!((e.features[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_and_onehot_columns_pass_through() {
        let ds = dataset(&[&[5.0, 0.0, 1.0], &[5.0, 1.0, 2.0], &[5.0, 0.0, 3.0]]);
        let norm = fit_normalizer(&ds, &BTreeSet::from([1])).unwrap();
        assert_eq!(norm.passthrough, vec![true, true, false]);
        let out = norm.apply(&ds).unwrap();
        let col0: Vec<f64> = out.examples().iter().map(|e| e.features[0]).collect();
        let col1: Vec<f64> = out.examples().iter().map(|e| e.features[1]).collect();
        assert_eq!(col0, vec![5.0, 5.0, 5.0]);
        assert_eq!(col1, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn apply_checks_dimension() {
        let norm = fit_normalizer(&dataset(&[&[1.0, 2.0], &[2.0, 3.0]]), &BTreeSet::new()).unwrap();
        assert!(matches!(
            norm.apply(&dataset(&[&[1.0]])),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
