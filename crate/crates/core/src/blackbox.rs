//! L2-regularized logistic regression trained from scratch, plus the
//! regularization-strength tuning and base-rate threshold calibration used
//! to turn probability scores into labels.
//!
//! The objective follows the usual inverse-regularization parameterization:
//!
//! ```text
//! f(w, b) = 0.5 ||w||^2 + C * sum_i ln(1 + exp(-s_i (w . x_i + b)))
//! ```
//!
//! with `s_i in {-1, +1}` and an unregularized intercept. The optimizer is
//! a deterministic limited-memory BFGS with Armijo backtracking, so the
//! recorded objective trace is non-increasing and identical runs produce
//! identical models.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::dataset::{Dataset, Label};
use crate::error::{domain, Error, Result};
use crate::math;
use crate::sparse::SparseMatrix;

/// Training-time diagnostics kept with the fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub converged: bool,
    pub final_objective: f64,
    pub final_grad_norm: f64,
    /// Objective value before each accepted step (index 0 is the start).
    pub objective_trace: Vec<f64>,
}

/// A fitted logistic regression model.
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    weights: Vec<f64>,
    intercept: f64,
    c: f64,
    meta: TrainingMeta,
}

impl LogisticModel {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn meta(&self) -> &TrainingMeta {
        &self.meta
    }

    /// Reassembles a model from stored parameters (deserialization path).
    pub fn from_parts(weights: Vec<f64>, intercept: f64, c: f64) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite()) || !intercept.is_finite() {
            return Err(domain("model parameters must be finite"));
        }
        if !(c > 0.0) {
            return Err(domain("C must be positive"));
        }
        let reg = 0.5 * weights.iter().map(|w| w * w).sum::<f64>();
        Ok(LogisticModel {
            weights,
            intercept,
            c,
            meta: TrainingMeta {
                iterations: 0,
                converged: true,
                final_objective: reg,
                final_grad_norm: 0.0,
                objective_trace: Vec::new(),
            },
        })
    }
}

/// A model plus the decision threshold applied to its probability scores.
/// Instances with score strictly above the threshold are predicted positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdedClassifier {
    pub model: LogisticModel,
    threshold: f64,
}

impl ThresholdedClassifier {
    pub fn new(model: LogisticModel, threshold: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(domain(format!("threshold {threshold} outside [0, 1]")));
        }
        Ok(ThresholdedClassifier {
            model,
            threshold,
        })
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Labels via `score > threshold`.
    pub fn predict_labels(&self, x: &SparseMatrix) -> Result<Vec<Label>> {
        let scores = predict_proba(&self.model, x)?;
        Ok(scores
            .iter()
            .map(|&s| if s > self.threshold { 1 } else { 0 })
            .collect())
    }
}

/// Result of base-rate threshold calibration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub threshold: f64,
    /// Fraction of training scores strictly above the threshold.
    pub achieved_rate: f64,
    /// True when score ties prevented matching the target rate.
    pub tie_degenerate: bool,
}

/// Binary classification metrics with respect to the positive class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    /// Set when no instance was predicted positive; precision is then
    /// reported as 0 by convention.
    pub no_predicted_positives: bool,
}

fn signed_label(l: Label) -> f64 {
    if l == 1 {
        1.0
    } else {
        -1.0
    }
}

/// Objective value at `(weights, intercept)`.
pub fn logistic_objective(
    x: &SparseMatrix,
    y: &[Label],
    c: f64,
    weights: &[f64],
    intercept: f64,
) -> Result<f64> {
    check_problem(x, y, weights)?;
    let mut loss = 0.0;
    for i in 0..x.n_rows() {
        let z = row_dot(x, i, weights) + intercept;
        loss += math::softplus(-signed_label(y[i]) * z);
    }
    let reg = 0.5 * weights.iter().map(|w| w * w).sum::<f64>();
    Ok(reg + c * loss)
}

/// Analytic gradient at `(weights, intercept)`; returns `(grad_w, grad_b)`.
pub fn logistic_gradient(
    x: &SparseMatrix,
    y: &[Label],
    c: f64,
    weights: &[f64],
    intercept: f64,
) -> Result<(Vec<f64>, f64)> {
    check_problem(x, y, weights)?;
    let mut grad = weights.to_vec();
    let mut grad_b = 0.0;
    for i in 0..x.n_rows() {
        let s = signed_label(y[i]);
        let z = row_dot(x, i, weights) + intercept;
        let coeff = -s * math::sigmoid(-s * z) * c;
        let (cols, vals) = x.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            grad[j as usize] += coeff * v;
        }
        grad_b += coeff;
    }
    Ok((grad, grad_b))
}

fn check_problem(x: &SparseMatrix, y: &[Label], weights: &[f64]) -> Result<()> {
    if y.len() != x.n_rows() {
        return Err(Error::Dimension {
            what: "label array length",
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    if weights.len() != x.n_cols() {
        return Err(Error::Dimension {
            what: "weight vector length",
            expected: x.n_cols(),
            got: weights.len(),
        });
    }
    Ok(())
}

#[inline]
fn row_dot(x: &SparseMatrix, i: usize, weights: &[f64]) -> f64 {
    let (cols, vals) = x.row(i);
    cols.iter()
        .zip(vals)
        .map(|(&c, &v)| weights[c as usize] * v)
        .sum()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, &x| acc.max(math::abs(x)))
}

/// Fused objective and gradient over the stacked parameter vector
/// `theta = [w, b]`.
fn value_and_grad(x: &SparseMatrix, y: &[Label], c: f64, theta: &[f64]) -> (f64, Vec<f64>) {
    let m = x.n_cols();
    let (w, b) = (&theta[..m], theta[m]);
    let mut grad = vec![0.0; m + 1];
    grad[..m].copy_from_slice(w);
    let mut loss = 0.0;
    for i in 0..x.n_rows() {
        let s = signed_label(y[i]);
        let z = row_dot(x, i, w) + b;
        loss += math::softplus(-s * z);
        let coeff = -s * math::sigmoid(-s * z) * c;
        let (cols, vals) = x.row(i);
        for (&j, &v) in cols.iter().zip(vals) {
            grad[j as usize] += coeff * v;
        }
        grad[m] += coeff;
    }
    let reg = 0.5 * dot(w, w);
    (reg + c * loss, grad)
}

const LBFGS_MEMORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

/// Trains a logistic regression model by minimizing the regularized
/// log-loss. Stops when the gradient max-norm drops below `tol` or after
/// `max_iter` accepted steps; the convergence flag is recorded in the
/// training metadata.
pub fn train_logreg(
    x: &SparseMatrix,
    y: &[Label],
    c: f64,
    max_iter: usize,
    tol: f64,
) -> Result<LogisticModel> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(domain(format!("C must be a positive real, got {c}")));
    }
    if !(tol > 0.0) {
        return Err(domain("tol must be positive"));
    }
    if max_iter == 0 {
        return Err(domain("max_iter must be at least 1"));
    }
    if y.len() != x.n_rows() {
        return Err(Error::Dimension {
            what: "label array length",
            expected: x.n_rows(),
            got: y.len(),
        });
    }
    let positives = y.iter().filter(|&&l| l == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(domain("training labels contain a single class"));
    }

    let dim = x.n_cols() + 1;
    let mut theta = vec![0.0; dim];
    let (mut f, mut grad) = value_and_grad(x, y, c, &theta);
    let mut trace = vec![f];
    let mut history: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut iterations = 0;
    let mut converged = max_abs(&grad) < tol;

    while !converged && iterations < max_iter {
        let mut direction = lbfgs_direction(&grad, &history);
        let mut slope = dot(&grad, &direction);
        if !(slope < 0.0) {
            // Not a descent direction; fall back to steepest descent.
            history.clear();
            direction = grad.iter().map(|g| -g).collect();
            slope = dot(&grad, &direction);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let candidate: Vec<f64> = theta
                .iter()
                .zip(&direction)
                .map(|(t, d)| t + step * d)
                .collect();
            let (f_new, grad_new) = value_and_grad(x, y, c, &candidate);
            if f_new.is_finite() && f_new <= f + ARMIJO_C1 * step * slope {
                accepted = Some((candidate, f_new, grad_new));
                break;
            }
            step *= 0.5;
        }
        let Some((theta_new, f_new, grad_new)) = accepted else {
            break; // step size underflow; report not converged
        };

        let s_vec: Vec<f64> = theta_new.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y_vec: Vec<f64> = grad_new.iter().zip(&grad).map(|(a, b)| a - b).collect();
        let sy = dot(&s_vec, &y_vec);
        if sy > 1e-12 {
            if history.len() == LBFGS_MEMORY {
                history.remove(0);
            }
            history.push((s_vec, y_vec, 1.0 / sy));
        }

        theta = theta_new;
        f = f_new;
        grad = grad_new;
        trace.push(f);
        iterations += 1;
        converged = max_abs(&grad) < tol;
    }

    let m = x.n_cols();
    let grad_norm = max_abs(&grad);
    Ok(LogisticModel {
        weights: theta[..m].to_vec(),
        intercept: theta[m],
        c,
        meta: TrainingMeta {
            iterations,
            converged,
            final_objective: f,
            final_grad_norm: grad_norm,
            objective_trace: trace,
        },
    })
}

fn lbfgs_direction(grad: &[f64], history: &[(Vec<f64>, Vec<f64>, f64)]) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.last() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

/// Sigmoid scores `sigma(w . x + b)` for every row.
pub fn predict_proba(model: &LogisticModel, x: &SparseMatrix) -> Result<Vec<f64>> {
    if x.n_cols() != model.weights.len() {
        return Err(Error::Dimension {
            what: "feature dimension",
            expected: model.weights.len(),
            got: x.n_cols(),
        });
    }
    Ok((0..x.n_rows())
        .map(|i| math::sigmoid(row_dot(x, i, &model.weights) + model.intercept))
        .collect())
}

/// Chooses the threshold whose strictly-above count is the largest count
/// `c` with `c / n <= rate`, i.e. the predicted-positive fraction matches
/// the target rate as closely as possible from below. Score ties that
/// collapse the achievable counts are flagged.
pub fn calibrate_threshold(train_scores: &[f64], train_positive_rate: f64) -> Result<Calibration> {
    if train_scores.is_empty() {
        return Err(domain("cannot calibrate on an empty score array"));
    }
    if !(0.0..=1.0).contains(&train_positive_rate) {
        return Err(domain(format!(
            "positive rate {train_positive_rate} outside [0, 1]"
        )));
    }
    let n = train_scores.len();
    let mut target = math::round(train_positive_rate * n as f64) as usize;
    target = target.min(n);
    while target > 0 && target as f64 / n as f64 > train_positive_rate {
        target -= 1;
    }
    while target < n && (target + 1) as f64 / n as f64 <= train_positive_rate {
        target += 1;
    }

    let mut sorted = train_scores.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let threshold = if target >= n {
        0.0
    } else {
        sorted[target].clamp(0.0, 1.0)
    };
    let above = train_scores.iter().filter(|&&s| s > threshold).count();
    Ok(Calibration {
        threshold,
        achieved_rate: above as f64 / n as f64,
        tie_degenerate: above != target,
    })
}

/// Grid search over the inverse regularization strength `C`, scored by the
/// validation accuracy of the threshold-calibrated classifier. Ties are
/// broken toward the smaller (more strongly regularized) value.
pub fn tune_c(
    train: &Dataset,
    val: &Dataset,
    grid: &[f64],
    max_iter: usize,
    tol: f64,
) -> Result<(f64, LogisticModel)> {
    if grid.is_empty() {
        return Err(domain("C grid must be nonempty"));
    }
    if val.n_instances() == 0 {
        return Err(domain("validation set is empty; cannot tune C"));
    }
    let mut cs: Vec<f64> = grid.to_vec();
    cs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cs.dedup();

    let rate = train.positive_fraction();
    let mut best: Option<(f64, f64, LogisticModel)> = None;
    for &c in &cs {
        let model = train_logreg(train.x(), train.y(), c, max_iter, tol)?;
        let train_scores = predict_proba(&model, train.x())?;
        let calib = calibrate_threshold(&train_scores, rate)?;
        let clf = ThresholdedClassifier::new(model, calib.threshold)?;
        let pred = clf.predict_labels(val.x())?;
        let correct = pred
            .iter()
            .zip(val.y())
            .filter(|(p, t)| p == t)
            .count();
        let acc = correct as f64 / val.n_instances() as f64;
        match &best {
            Some((_, best_acc, _)) if acc <= *best_acc => {}
            _ => best = Some((c, acc, clf.model)),
        }
    }
    let (c, _, model) = best.expect("grid is nonempty");
    Ok((c, model))
}

/// Standard binary metrics of `y_pred` against `y_true`.
pub fn classification_metrics(y_true: &[Label], y_pred: &[Label]) -> Result<MetricsReport> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Dimension {
            what: "prediction length",
            expected: y_true.len(),
            got: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(domain("metrics require at least one instance"));
    }
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut fn_ = 0usize;
    let mut tn = 0usize;
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (1, 1) => tp += 1,
            (0, 1) => fp += 1,
            (1, 0) => fn_ += 1,
            _ => tn += 1,
        }
    }
    let n = y_true.len() as f64;
    let accuracy = (tp + tn) as f64 / n;
    let no_predicted_positives = tp + fp == 0;
    let precision = if no_predicted_positives {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = if tp + fn_ == 0 {
        0.0
    } else {
        tp as f64 / (tp + fn_) as f64
    };
    let f_score = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(MetricsReport {
        accuracy,
        precision,
        recall,
        f_score,
        no_predicted_positives,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn random_problem(n: usize, m: usize, seed: u64) -> (SparseMatrix, Vec<Label>) {
        let mut rng = rng_from_seed(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            for j in 0..m {
                if rng.gen::<f64>() < 0.6 {
                    trip.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        let x = SparseMatrix::from_triplets(n, m, &trip).unwrap();
        let mut y: Vec<Label> = (0..n).map(|_| rng.gen_range(0..2) as Label).collect();
        // Guarantee both classes.
        y[0] = 0;
        y[n - 1] = 1;
        (x, y)
    }

    #[test]
    fn separable_two_points_fit_perfectly() {
        let x = SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, -1.0)]).unwrap();
        let y = vec![1u8, 0];
        let model = train_logreg(&x, &y, 1.0, 200, 1e-6).unwrap();
        let clf = ThresholdedClassifier::new(model, 0.5).unwrap();
        assert_eq!(clf.predict_labels(&x).unwrap(), vec![1, 0]);
    }

    #[test]
    fn single_class_labels_rejected() {
        let x = SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, -1.0)]).unwrap();
        assert!(train_logreg(&x, &[1, 1], 1.0, 100, 1e-6).is_err());
    }

    #[test]
    fn gradient_small_at_optimum() {
        let (x, y) = random_problem(20, 5, 3);
        let model = train_logreg(&x, &y, 1.0, 500, 1e-7).unwrap();
        assert!(model.meta().converged);
        let (g, gb) = logistic_gradient(&x, &y, 1.0, model.weights(), model.intercept()).unwrap();
        let norm = g
            .iter()
            .chain(core::iter::once(&gb))
            .fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(norm < 1e-7, "gradient max-norm {norm}");
    }

    #[test]
    fn objective_trace_non_increasing() {
        let (x, y) = random_problem(40, 8, 11);
        let model = train_logreg(&x, &y, 2.0, 300, 1e-8).unwrap();
        let trace = &model.meta().objective_trace;
        assert!(trace.len() >= 2);
        for w in trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "objective increased: {w:?}");
        }
        // Objective is bounded below by the regularization term alone.
        let reg = 0.5 * model.weights().iter().map(|w| w * w).sum::<f64>();
        assert!(model.meta().final_objective >= reg - 1e-12);
    }

    #[test]
    fn gradient_matches_central_finite_differences() {
        let (x, y) = random_problem(10, 6, 7);
        let mut rng = rng_from_seed(21);
        for _ in 0..5 {
            let w: Vec<f64> = (0..6).map(|_| rng.gen_range(-0.8..0.8)).collect();
            let b: f64 = rng.gen_range(-0.5..0.5);
            let (grad, grad_b) = logistic_gradient(&x, &y, 1.5, &w, b).unwrap();
            let h = 1e-6;
            for j in 0..6 {
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[j] += h;
                wm[j] -= h;
                let fp = logistic_objective(&x, &y, 1.5, &wp, b).unwrap();
                let fm = logistic_objective(&x, &y, 1.5, &wm, b).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let rel = (grad[j] - fd).abs() / fd.abs().max(1e-8);
                assert!(rel < 1e-5, "coord {j}: analytic {} fd {fd}", grad[j]);
            }
            let fp = logistic_objective(&x, &y, 1.5, &w, b + h).unwrap();
            let fm = logistic_objective(&x, &y, 1.5, &w, b - h).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let rel = (grad_b - fd).abs() / fd.abs().max(1e-8);
            assert!(rel < 1e-5, "intercept: analytic {grad_b} fd {fd}");
        }
    }

    #[test]
    fn proba_is_half_at_zero_score() {
        let x = SparseMatrix::from_triplets(2, 3, &[(0, 1, 2.0)]).unwrap();
        let model = LogisticModel::from_parts(vec![0.0; 3], 0.0, 1.0).unwrap();
        let p = predict_proba(&model, &x).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn proba_matches_dense_oracle() {
        let (x, _) = random_problem(5, 4, 17);
        let mut rng = rng_from_seed(31);
        let w: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = 0.3;
        let model = LogisticModel::from_parts(w.clone(), b, 1.0).unwrap();
        let p = predict_proba(&model, &x).unwrap();
        for i in 0..5 {
            let mut z = b;
            for j in 0..4 {
                z += x.get(i, j) * w[j];
            }
            let expected = 1.0 / (1.0 + (-z).exp());
            assert!((p[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn proba_dimension_mismatch_rejected() {
        let x = SparseMatrix::from_triplets(1, 3, &[(0, 0, 1.0)]).unwrap();
        let model = LogisticModel::from_parts(vec![0.0; 2], 0.0, 1.0).unwrap();
        assert!(predict_proba(&model, &x).is_err());
    }

    #[test]
    fn calibration_hits_target_rate() {
        let cal = calibrate_threshold(&[0.9, 0.8, 0.3, 0.1], 0.5).unwrap();
        assert!(cal.threshold >= 0.3 && cal.threshold < 0.8);
        assert!((cal.achieved_rate - 0.5).abs() < 1e-12);
        assert!(!cal.tie_degenerate);
    }

    #[test]
    fn calibration_rate_zero_predicts_nothing() {
        let cal = calibrate_threshold(&[0.2, 0.7, 0.5], 0.0).unwrap();
        assert!(cal.threshold >= 0.7);
        assert_eq!(cal.achieved_rate, 0.0);
    }

    #[test]
    fn calibration_flags_tied_scores() {
        let cal = calibrate_threshold(&[0.4, 0.4, 0.4, 0.4], 0.5).unwrap();
        assert!(cal.tie_degenerate);
        assert!(cal.achieved_rate == 0.0 || cal.achieved_rate == 1.0);
    }

    #[test]
    fn predict_labels_uses_strict_inequality() {
        let x = SparseMatrix::from_triplets(2, 1, &[(0, 0, 1.0), (1, 0, -1.0)]).unwrap();
        let model = LogisticModel::from_parts(vec![1.0], 0.0, 1.0).unwrap();
        let clf = ThresholdedClassifier::new(model.clone(), 0.5).unwrap();
        assert_eq!(clf.predict_labels(&x).unwrap(), vec![1, 0]);
        let all_neg = ThresholdedClassifier::new(model, 1.0).unwrap();
        assert_eq!(all_neg.predict_labels(&x).unwrap(), vec![0, 0]);
    }

    #[test]
    fn calibrated_classifier_reproduces_base_rate() {
        let (x, y) = random_problem(1000, 10, 5);
        let model = train_logreg(&x, &y, 1.0, 200, 1e-6).unwrap();
        let scores = predict_proba(&model, &x).unwrap();
        let rate = y.iter().filter(|&&l| l == 1).count() as f64 / y.len() as f64;
        let cal = calibrate_threshold(&scores, rate).unwrap();
        let clf = ThresholdedClassifier::new(model, cal.threshold).unwrap();
        let pred = clf.predict_labels(&x).unwrap();
        let pos = pred.iter().filter(|&&l| l == 1).count() as f64 / y.len() as f64;
        assert!(
            (pos - rate).abs() <= 1.0 / y.len() as f64 + 1e-12,
            "rate {rate}, predicted {pos}"
        );
    }

    #[test]
    fn metrics_match_hand_counts() {
        let r = classification_metrics(&[1, 0, 1, 1], &[1, 1, 1, 0]).unwrap();
        assert!((r.accuracy - 0.5).abs() < 1e-12);
        assert!((r.precision - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.recall - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.f_score - 2.0 / 3.0).abs() < 1e-12);

        let perfect = classification_metrics(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!(
            (perfect.accuracy, perfect.precision, perfect.recall, perfect.f_score),
            (1.0, 1.0, 1.0, 1.0)
        );

        let none = classification_metrics(&[1, 0], &[0, 0]).unwrap();
        assert!(none.no_predicted_positives);
        assert_eq!((none.precision, none.recall, none.f_score), (0.0, 0.0, 0.0));
    }

    #[test]
    fn metrics_agree_with_exhaustive_confusion_oracle() {
        // All 2^4 x 2^4 label pairs of length 4.
        for t_bits in 0..16u32 {
            for p_bits in 0..16u32 {
                let y_true: Vec<Label> = (0..4).map(|i| ((t_bits >> i) & 1) as Label).collect();
                let y_pred: Vec<Label> = (0..4).map(|i| ((p_bits >> i) & 1) as Label).collect();
                let r = classification_metrics(&y_true, &y_pred).unwrap();
                let mut tp = 0.0;
                let mut fp = 0.0;
                let mut fn_ = 0.0;
                let mut correct = 0.0;
                for i in 0..4 {
                    if y_true[i] == y_pred[i] {
                        correct += 1.0;
                    }
                    match (y_true[i], y_pred[i]) {
                        (1, 1) => tp += 1.0,
                        (0, 1) => fp += 1.0,
                        (1, 0) => fn_ += 1.0,
                        _ => {}
                    }
                }
                let precision = if tp + fp > 0.0 { tp / (tp + fp) } else { 0.0 };
                let recall = if tp + fn_ > 0.0 { tp / (tp + fn_) } else { 0.0 };
                let f = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                assert_eq!(r.accuracy, correct / 4.0);
                assert_eq!(r.precision, precision);
                assert_eq!(r.recall, recall);
                assert_eq!(r.f_score, f);
                // Harmonic-mean invariant when both parts are defined.
                if precision > 0.0 && recall > 0.0 {
                    assert!((r.f_score - 2.0 * precision * recall / (precision + recall)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn tune_c_single_value_and_tie_rules() {
        let (x, y) = random_problem(60, 6, 13);
        let d = Dataset::with_default_names(x, y).unwrap();
        let plan = crate::sampling::split_train_val_test(&d, 0.7, 0.7, 1).unwrap();
        let train = d.subset(&plan.train_idx).unwrap();
        let val = d.subset(&plan.val_idx).unwrap();

        let (c, _) = tune_c(&train, &val, &[0.5], 200, 1e-6).unwrap();
        assert_eq!(c, 0.5);

        // A duplicate-heavy grid still returns the smallest C on ties.
        let (c2, _) = tune_c(&train, &val, &[2.0, 2.0, 2.0], 200, 1e-6).unwrap();
        assert_eq!(c2, 2.0);
    }

    #[test]
    fn tune_c_selects_max_validation_accuracy() {
        let (x, y) = random_problem(120, 8, 29);
        let d = Dataset::with_default_names(x, y).unwrap();
        let plan = crate::sampling::split_train_val_test(&d, 0.7, 0.6, 2).unwrap();
        let train = d.subset(&plan.train_idx).unwrap();
        let val = d.subset(&plan.val_idx).unwrap();
        let grid = [0.001, 0.01, 0.1, 1.0, 10.0];
        let (c_best, _) = tune_c(&train, &val, &grid, 300, 1e-6).unwrap();

        // Exhaustive re-evaluation.
        let rate = train.positive_fraction();
        let mut accs = Vec::new();
        for &c in &grid {
            let model = train_logreg(train.x(), train.y(), c, 300, 1e-6).unwrap();
            let scores = predict_proba(&model, train.x()).unwrap();
            let cal = calibrate_threshold(&scores, rate).unwrap();
            let clf = ThresholdedClassifier::new(model, cal.threshold).unwrap();
            let pred = clf.predict_labels(val.x()).unwrap();
            let acc = pred.iter().zip(val.y()).filter(|(p, t)| p == t).count() as f64
                / val.n_instances() as f64;
            accs.push((c, acc));
        }
        let best_acc = accs.iter().map(|&(_, a)| a).fold(0.0f64, f64::max);
        let selected_acc = accs.iter().find(|&&(c, _)| c == c_best).unwrap().1;
        assert!((selected_acc - best_acc).abs() < 1e-12);
        // Tie rule: no smaller C attains the same accuracy.
        for &(c, a) in &accs {
            if (a - best_acc).abs() < 1e-12 {
                assert!(c_best <= c);
            }
        }
    }
}
