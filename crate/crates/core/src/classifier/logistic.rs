use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{check_binary_problem, BinaryClassifier};
use crate::error::{Error, Result};
use crate::model::HyperParams;

/// Convergence threshold on the Euclidean norm of the objective gradient.
pub const LOGISTIC_GRAD_TOL: f64 = 1e-4;

const MAX_NEWTON_ITERS: usize = 200;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogisticModel {
    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.weights.len(),
                found: x.len(),
            });
        }
        Ok(dot(&self.weights, x) + self.bias)
    }
}

#[derive(Clone, Debug)]
pub struct LogisticFit {
    pub model: LogisticModel,
    /// Newton steps taken; zero when the starting point already met the tolerance.
    pub iterations: usize,
    pub gradient_norm: f64,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// log(1 + exp(t)) without overflow.
fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `(1/2)||w||^2 + C * sum_i log(1 + exp(-y_i (w.x_i + b)))`. The bias is
/// not regularized.
pub fn logistic_objective(weights: &[f64], bias: f64, x: &[&[f64]], y: &[f64], c_reg: f64) -> f64 {
    let reg = 0.5 * dot(weights, weights);
    let loss: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &label)| softplus(-label * (dot(weights, row) + bias)))
        .sum();
    reg + c_reg * loss
}

/// Gradient of [`logistic_objective`] as `(d/dw, d/db)`.
pub fn logistic_gradient(
    weights: &[f64],
    bias: f64,
    x: &[&[f64]],
    y: &[f64],
    c_reg: f64,
) -> (Vec<f64>, f64) {
    let mut gw = weights.to_vec();
    let mut gb = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let margin = label * (dot(weights, row) + bias);
        let coef = -c_reg * label * sigmoid(-margin);
        for (g, v) in gw.iter_mut().zip(row.iter()) {
            *g += coef * v;
        }
        gb += coef;
    }
    (gw, gb)
}

fn norm(gw: &[f64], gb: f64) -> f64 {
    (dot(gw, gw) + gb * gb).sqrt()
}

pub fn fit_logistic(
    x: &[&[f64]],
    y: &[f64],
    hp: &HyperParams,
    warm_from: Option<&BinaryClassifier>,
) -> Result<BinaryClassifier> {
    let warm = match warm_from {
        None | Some(BinaryClassifier::Dummy) => None,
        Some(BinaryClassifier::Logistic(m)) => Some(m),
        Some(BinaryClassifier::SvmRbf(_)) => {
            return Err(Error::InvalidParameter(
                "cannot warm-start logistic regression from an SVM".into(),
            ))
        }
    };
    Ok(BinaryClassifier::Logistic(
        fit_logistic_detailed(x, y, hp.c_reg, warm)?.model,
    ))
}

/// Damped Newton's method with Armijo backtracking on the primal objective.
pub fn fit_logistic_detailed(
    x: &[&[f64]],
    y: &[f64],
    c_reg: f64,
    warm_from: Option<&LogisticModel>,
) -> Result<LogisticFit> {
    let dim = check_binary_problem(x, y)?;
    if !(c_reg > 0.0 && c_reg.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "C must be positive, got {c_reg}"
        )));
    }
    let (mut w, mut b) = match warm_from {
        Some(m) => {
            if m.weights.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.weights.len(),
                });
            }
            (m.weights.clone(), m.bias)
        }
        None => (vec![0.0; dim], 0.0),
    };

    let p = dim + 1;
    let mut objective = logistic_objective(&w, b, x, y, c_reg);
    for iteration in 0..=MAX_NEWTON_ITERS {
        let (gw, gb) = logistic_gradient(&w, b, x, y, c_reg);
        let gnorm = norm(&gw, gb);
        if gnorm <= LOGISTIC_GRAD_TOL {
            return Ok(LogisticFit {
                model: LogisticModel {
                    weights: w,
                    bias: b,
                },
                iterations: iteration,
                gradient_norm: gnorm,
            });
        }
        if iteration == MAX_NEWTON_ITERS {
            return Err(Error::NonConvergence {
                iterations: iteration,
                violation: gnorm,
            });
        }

        let mut hessian = DMatrix::<f64>::zeros(p, p);
        for k in 0..dim {
            hessian[(k, k)] = 1.0;
        }
        for row in x {
            let s = sigmoid(dot(&w, row) + b);
            let curvature = c_reg * s * (1.0 - s);
            if curvature == 0.0 {
                continue;
            }
            for r in 0..p {
                let xr = if r < dim { row[r] } else { 1.0 };
                for c in 0..=r {
                    let xc = if c < dim { row[c] } else { 1.0 };
                    hessian[(r, c)] += curvature * xr * xc;
                }
            }
        }
        for r in 0..p {
            for c in (r + 1)..p {
                hessian[(r, c)] = hessian[(c, r)];
            }
        }
        let grad = DVector::from_iterator(p, gw.iter().copied().chain(std::iter::once(gb)));
        let direction = newton_direction(hessian, &grad);

        let slope = grad.dot(&direction);
        // Near the optimum the predicted decrease drops below the rounding
        // error of the objective sum; allow that much slack.
        let noise = 64.0 * f64::EPSILON * objective.abs().max(1.0);
        let mut step = 1.0;
        let accepted = loop {
            let trial_w: Vec<f64> = w
                .iter()
                .enumerate()
                .map(|(k, v)| v - step * direction[k])
                .collect();
            let trial_b = b - step * direction[dim];
            let trial_obj = logistic_objective(&trial_w, trial_b, x, y, c_reg);
            if trial_obj <= objective - 1e-4 * step * slope + noise {
                break Some((trial_w, trial_b, trial_obj));
            }
            step *= 0.5;
            if step < 1e-12 {
                break None;
            }
        };
        match accepted {
            Some((nw, nb, nobj)) => {
                w = nw;
                b = nb;
                objective = nobj;
            }
            // No decrease is representable; the iterate is as good as floating point allows.
            None => {
                return Ok(LogisticFit {
                    model: LogisticModel {
                        weights: w,
                        bias: b,
                    },
                    iterations: iteration,
                    gradient_norm: gnorm,
                })
            }
        }
    }
    unreachable!("loop returns on the final iteration")
}

/// Solves `H d = g`, adding diagonal damping if `H` is not numerically positive definite.
fn newton_direction(hessian: DMatrix<f64>, grad: &DVector<f64>) -> DVector<f64> {
    let mut damping = 0.0;
    loop {
        let mut h = hessian.clone();
        if damping > 0.0 {
            for k in 0..h.nrows() {
                h[(k, k)] += damping;
            }
        }
        if let Some(chol) = h.cholesky() {
            return chol.solve(grad);
        }
        damping = if damping == 0.0 {
            1e-10
        } else {
            damping * 10.0
        };
    }
}
