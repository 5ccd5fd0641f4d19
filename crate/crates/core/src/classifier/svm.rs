use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{check_binary_problem, BinaryClassifier};
use crate::error::{Error, Result};
use crate::model::HyperParams;

/// Stopping tolerance on the maximal KKT violation `m(a) - M(a)`.
pub const SMO_TOL: f64 = 1e-3;

const MAX_SMO_ITERS: usize = 1_000_000;
const TAU: f64 = 1e-12;
/// Problems up to this size keep the whole kernel matrix in memory.
const FULL_KERNEL_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub support_vectors: Vec<Vec<f64>>,
    /// `alpha_k * y_k` for each retained support vector.
    pub dual_coeffs: Vec<f64>,
    pub bias: f64,
    pub gamma: f64,
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.support_vectors.first().map_or(0, Vec::len)
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        let dim = self.dim();
        if !self.support_vectors.is_empty() && x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: x.len(),
            });
        }
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.dual_coeffs)
            .map(|(sv, coef)| coef * rbf_kernel(sv, x, self.gamma))
            .sum();
        Ok(sum + self.bias)
    }
}

#[derive(Clone, Debug)]
pub struct SvmFit {
    pub model: SvmModel,
    /// Dual variable of every training example, in input order.
    pub alphas: Vec<f64>,
    pub iterations: usize,
    pub violation: f64,
}

pub fn rbf_kernel(a: &[f64], b: &[f64], gamma: f64) -> f64 {
    let sq: f64 = a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    (-gamma * sq).exp()
}

/// `1 / (d * mean per-feature population variance)`; falls back to `1 / d`
/// when every feature is constant.
pub fn default_gamma(x: &[&[f64]]) -> f64 {
    let Some(first) = x.first() else { return 1.0 };
    let d = first.len().max(1);
    let n = x.len() as f64;
    let mut total_var = 0.0;
    for k in 0..first.len() {
        let mean = x.iter().map(|r| r[k]).sum::<f64>() / n;
        total_var += x.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
    }
    let mean_var = total_var / d as f64;
    if mean_var > 0.0 {
        1.0 / (d as f64 * mean_var)
    } else {
        1.0 / d as f64
    }
}

pub fn fit_svm_rbf(
    x: &[&[f64]],
    y: &[f64],
    hp: &HyperParams,
    warm_from: Option<&BinaryClassifier>,
) -> Result<BinaryClassifier> {
    let warm = match warm_from {
        None | Some(BinaryClassifier::Dummy) => None,
        Some(BinaryClassifier::SvmRbf(m)) => Some(m),
        Some(BinaryClassifier::Logistic(_)) => {
            return Err(Error::InvalidParameter(
                "cannot warm-start an SVM from logistic regression".into(),
            ))
        }
    };
    Ok(BinaryClassifier::SvmRbf(
        fit_svm_rbf_detailed(x, y, hp.c_reg, hp.gamma, warm)?.model,
    ))
}

struct Kernel<'a> {
    x: &'a [&'a [f64]],
    gamma: f64,
    full: Option<Vec<f64>>,
}

impl<'a> Kernel<'a> {
    fn new(x: &'a [&'a [f64]], gamma: f64) -> Self {
        let n = x.len();
        let full = (n <= FULL_KERNEL_LIMIT).then(|| {
            let mut k = vec![0.0; n * n];
            for i in 0..n {
                k[i * n + i] = 1.0;
                for j in 0..i {
                    let v = rbf_kernel(x[i], x[j], gamma);
                    k[i * n + j] = v;
                    k[j * n + i] = v;
                }
            }
            k
        });
        Self { x, gamma, full }
    }

    fn row(&self, i: usize, out: &mut [f64]) {
        let n = self.x.len();
        match &self.full {
            Some(k) => out.copy_from_slice(&k[i * n..(i + 1) * n]),
            None => {
                for (t, slot) in out.iter_mut().enumerate() {
                    *slot = rbf_kernel(self.x[i], self.x[t], self.gamma);
                }
            }
        }
    }
}

fn feature_key(row: &[f64]) -> Vec<u64> {
    row.iter().map(|v| v.to_bits()).collect()
}

/// Initial dual variables carried over from a previous model: examples whose
/// features exactly match a retained support vector inherit its |coefficient|
/// (clipped to C); the rest start at zero. The equality constraint
/// `sum alpha_i y_i = 0` is then restored by shrinking the heavier side.
fn warm_alphas(x: &[&[f64]], y: &[f64], c_reg: f64, warm: &SvmModel) -> Vec<f64> {
    let mut carried: HashMap<Vec<u64>, f64> = HashMap::with_capacity(warm.support_vectors.len());
    for (sv, coef) in warm.support_vectors.iter().zip(&warm.dual_coeffs) {
        carried.entry(feature_key(sv)).or_insert(coef.abs());
    }
    let mut alpha: Vec<f64> = x
        .iter()
        .map(|row| carried.get(&feature_key(row)).map_or(0.0, |a| a.min(c_reg)))
        .collect();
    let pos: f64 = alpha
        .iter()
        .zip(y)
        .filter(|(_, &l)| l > 0.0)
        .map(|(a, _)| a)
        .sum();
    let neg: f64 = alpha
        .iter()
        .zip(y)
        .filter(|(_, &l)| l < 0.0)
        .map(|(a, _)| a)
        .sum();
    if pos > neg && pos > 0.0 {
        let scale = neg / pos;
        alpha
            .iter_mut()
            .zip(y)
            .filter(|(_, &l)| l > 0.0)
            .for_each(|(a, _)| *a *= scale);
    } else if neg > pos && neg > 0.0 {
        let scale = pos / neg;
        alpha
            .iter_mut()
            .zip(y)
            .filter(|(_, &l)| l < 0.0)
            .for_each(|(a, _)| *a *= scale);
    }
    alpha
}

/// C-SVM dual solved by SMO with maximal-violating-pair working-set selection.
pub fn fit_svm_rbf_detailed(
    x: &[&[f64]],
    y: &[f64],
    c_reg: f64,
    gamma: f64,
    warm_from: Option<&SvmModel>,
) -> Result<SvmFit> {
    let dim = check_binary_problem(x, y)?;
    if !(c_reg > 0.0 && c_reg.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "C must be positive, got {c_reg}"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive, got {gamma}"
        )));
    }
    if let Some(w) = warm_from {
        if !w.support_vectors.is_empty() && w.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: w.dim(),
            });
        }
    }

    let n = x.len();
    let kernel = Kernel::new(x, gamma);
    let mut alpha = match warm_from {
        Some(w) => warm_alphas(x, y, c_reg, w),
        None => vec![0.0; n],
    };

    // G = Q alpha - e, with Q_ij = y_i y_j K_ij.
    let mut grad = vec![-1.0; n];
    let mut row_i = vec![0.0; n];
    let mut row_j = vec![0.0; n];
    for s in 0..n {
        if alpha[s] != 0.0 {
            kernel.row(s, &mut row_i);
            let ays = alpha[s] * y[s];
            for t in 0..n {
                grad[t] += y[t] * ays * row_i[t];
            }
        }
    }

    let mut iterations = 0usize;
    let violation = loop {
        let mut gmax = f64::NEG_INFINITY;
        let mut gmin = f64::INFINITY;
        let mut sel_i = usize::MAX;
        let mut sel_j = usize::MAX;
        for t in 0..n {
            let score = -y[t] * grad[t];
            let in_up = if y[t] > 0.0 {
                alpha[t] < c_reg
            } else {
                alpha[t] > 0.0
            };
            let in_low = if y[t] > 0.0 {
                alpha[t] > 0.0
            } else {
                alpha[t] < c_reg
            };
            if in_up && score > gmax {
                gmax = score;
                sel_i = t;
            }
            if in_low && score < gmin {
                gmin = score;
                sel_j = t;
            }
        }
        let violation = gmax - gmin;
        if sel_i == usize::MAX || sel_j == usize::MAX || violation <= SMO_TOL {
            break violation.max(0.0);
        }
        if iterations >= MAX_SMO_ITERS {
            return Err(Error::NonConvergence {
                iterations,
                violation,
            });
        }
        iterations += 1;

        let (i, j) = (sel_i, sel_j);
        kernel.row(i, &mut row_i);
        kernel.row(j, &mut row_j);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let kij = row_i[j];
        let quad = (row_i[i] + row_j[j] - 2.0 * kij).max(TAU);

        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c_reg {
                    alpha[i] = c_reg;
                    alpha[j] = c_reg - diff;
                }
            } else if alpha[j] > c_reg {
                alpha[j] = c_reg;
                alpha[i] = c_reg + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c_reg {
                if alpha[i] > c_reg {
                    alpha[i] = c_reg;
                    alpha[j] = sum - c_reg;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c_reg {
                if alpha[j] > c_reg {
                    alpha[j] = c_reg;
                    alpha[i] = sum - c_reg;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = (alpha[i] - old_i) * y[i];
        let dj = (alpha[j] - old_j) * y[j];
        for t in 0..n {
            grad[t] += y[t] * (di * row_i[t] + dj * row_j[t]);
        }
    };

    let rho = compute_rho(&alpha, y, &grad, c_reg);
    let mut support_vectors = Vec::new();
    let mut dual_coeffs = Vec::new();
    for t in 0..n {
        if alpha[t] > 0.0 {
            support_vectors.push(x[t].to_vec());
            dual_coeffs.push(alpha[t] * y[t]);
        }
    }
    Ok(SvmFit {
        model: SvmModel {
            support_vectors,
            dual_coeffs,
            bias: -rho,
            gamma,
        },
        alphas: alpha,
        iterations,
        violation,
    })
}

/// Offset from free support vectors, or the midpoint of the feasible
/// interval when every variable sits at a bound.
fn compute_rho(alpha: &[f64], y: &[f64], grad: &[f64], c_reg: f64) -> f64 {
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free_count = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c_reg {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_count += 1;
            free_sum += yg;
        }
    }
    if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (upper + lower) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(data: &[Vec<f64>]) -> Vec<&[f64]> {
        data.iter().map(Vec::as_slice).collect()
    }

    #[test]
    fn two_point_problem_is_symmetric() {
        let data = vec![vec![-2.0], vec![2.0]];
        let fit = fit_svm_rbf_detailed(&rows(&data), &[-1.0, 1.0], 1.0, 1.0, None).unwrap();
        let m = &fit.model;
        assert!(m.decision(&[-2.0]).unwrap() < 0.0);
        assert!(m.decision(&[2.0]).unwrap() > 0.0);
        assert!(m.decision(&[0.0]).unwrap().abs() < 1e-3);
        assert!(BinaryClassifier::SvmRbf(m.clone())
            .classifies_positive(&[2.0])
            .unwrap());
    }

    #[test]
    fn concentric_rings_are_separated() {
        let mut data = Vec::new();
        let mut y = Vec::new();
        for k in 0..40 {
            let t = k as f64 / 40.0 * std::f64::consts::TAU;
            data.push(vec![0.5 * t.cos(), 0.5 * t.sin()]);
            y.push(1.0);
            data.push(vec![2.0 * t.cos(), 2.0 * t.sin()]);
            y.push(-1.0);
        }
        let fit = fit_svm_rbf_detailed(&rows(&data), &y, 10.0, 1.0, None).unwrap();
        for (row, &label) in data.iter().zip(&y) {
            assert_eq!(fit.model.decision(row).unwrap() > 0.0, label > 0.0);
        }
    }

    #[test]
    fn dual_coefficients_respect_box() {
        let data: Vec<Vec<f64>> = (0..30)
            .map(|i| vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()])
            .collect();
        let y: Vec<f64> = (0..30)
            .map(|i| if i % 3 == 0 { 1.0 } else { -1.0 })
            .collect();
        let c = 0.5;
        let fit = fit_svm_rbf_detailed(&rows(&data), &y, c, 2.0, None).unwrap();
        assert_eq!(fit.model.dual_coeffs.len(), fit.model.support_vectors.len());
        assert!(fit.model.dual_coeffs.iter().all(|a| a.abs() <= c + 1e-12));
        let balance: f64 = fit.alphas.iter().zip(&y).map(|(a, l)| a * l).sum();
        assert!(balance.abs() < 1e-9);
    }

    #[test]
    fn warm_start_on_same_problem_needs_no_work() {
        let data: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![i as f64 / 4.0, ((i * 7) % 5) as f64])
            .collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 10 { -1.0 } else { 1.0 }).collect();
        let first = fit_svm_rbf_detailed(&rows(&data), &y, 1.0, 0.5, None).unwrap();
        let second = fit_svm_rbf_detailed(&rows(&data), &y, 1.0, 0.5, Some(&first.model)).unwrap();
        assert!(second.iterations <= first.iterations);
        for row in &data {
            assert_eq!(
                first.model.decision(row).unwrap() > 0.0,
                second.model.decision(row).unwrap() > 0.0
            );
        }
    }

    #[test]
    fn default_gamma_uses_mean_variance() {
        let data = vec![vec![0.0, 1.0], vec![2.0, 1.0]];
        // variances 1 and 0 -> mean 0.5, d = 2 -> gamma = 1.
        assert!((default_gamma(&rows(&data)) - 1.0).abs() < 1e-12);
    }
}
