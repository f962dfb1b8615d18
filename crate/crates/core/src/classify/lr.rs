use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vectorize::SparseVector;

use super::{argmax_exact, class_index, validate_inputs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrConfig {
    /// Inverse regularization strength.
    pub c: f64,
    pub max_iter: usize,
    /// Stop once the largest absolute gradient component falls below this.
    pub tol: f64,
    /// Recorded for the run manifest; full-batch training draws no randomness.
    pub seed: u64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            c: 1.0,
            max_iter: 100,
            tol: 1e-4,
            seed: 0,
        }
    }
}

/// Multinomial (softmax) logistic regression with an L2 penalty on the
/// weights. Biases are not penalized.
#[derive(Debug, Clone, PartialEq)]
pub struct LrModel<T> {
    pub(crate) classes: Vec<Label>,
    /// `[class][feature]`
    pub(crate) weights: Vec<Vec<T>>,
    pub(crate) bias: Vec<T>,
    pub(crate) c: T,
    pub(crate) max_iter: usize,
    pub(crate) tol: T,
    pub(crate) iterations: usize,
}

/// Training objective
/// `mean_i CE(softmax(W x_i + b), y_i) + ||W||^2 / (2 C N)`
/// over a flat parameter vector: the `K x V` weight matrix row-major,
/// followed by the `K` biases.
pub struct LrProblem<'a, T> {
    x: &'a [SparseVector<T>],
    targets: Vec<usize>,
    classes: Vec<Label>,
    n_features: usize,
    c: T,
}

impl<'a, T: Scalar> LrProblem<'a, T> {
    pub fn new(x: &'a [SparseVector<T>], y: &[Label], n_features: usize, c: T) -> Result<Self> {
        validate_inputs(x, y, n_features)?;
        if !(c > T::zero()) {
            return Err(Error::InvalidArgument(format!("C must be positive, got {c}")));
        }
        let (classes, targets) = class_index(y);
        if classes.len() < 2 {
            return Err(Error::TooFewClasses(classes.len()));
        }
        Ok(LrProblem {
            x,
            targets,
            classes,
            n_features,
            c,
        })
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_params(&self) -> usize {
        self.n_classes() * (self.n_features + 1)
    }

    fn penalty_scale(&self) -> T {
        T::one() / (self.c * T::of_usize(self.x.len()))
    }

    pub fn objective(&self, params: &[T]) -> T {
        self.evaluate(params, None)
    }

    pub fn value_and_gradient(&self, params: &[T]) -> (T, Vec<T>) {
        let mut grad = vec![T::zero(); params.len()];
        let value = self.evaluate(params, Some(&mut grad));
        (value, grad)
    }

    fn evaluate(&self, params: &[T], mut grad: Option<&mut Vec<T>>) -> T {
        let k = self.n_classes();
        let v = self.n_features;
        let (w, b) = params.split_at(k * v);
        let n = T::of_usize(self.x.len());
        let mut loss = T::zero();
        let mut scores = vec![T::zero(); k];
        for (row, &target) in self.x.iter().zip(&self.targets) {
            for (c, s) in scores.iter_mut().enumerate() {
                *s = b[c] + row.dot(&w[c * v..(c + 1) * v]);
            }
            let probs = softmax(&scores);
            let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
            let log_sum = max + scores.iter().map(|&s| (s - max).exp()).sum::<T>().ln();
            loss += log_sum - scores[target];
            if let Some(g) = grad.as_deref_mut() {
                for (c, &p) in probs.iter().enumerate() {
                    let err = (p - if c == target { T::one() } else { T::zero() }) / n;
                    for (f, value) in row.iter() {
                        g[c * v + f] += err * value;
                    }
                    g[k * v + c] += err;
                }
            }
        }
        let scale = self.penalty_scale();
        let norm: T = w.iter().map(|&p| p * p).sum();
        if let Some(g) = grad {
            for (gi, &wi) in g.iter_mut().zip(w) {
                *gi += scale * wi;
            }
        }
        loss / n + scale * norm / T::lit(2.0)
    }
}

pub fn softmax<T: Scalar>(scores: &[T]) -> Vec<T> {
    let max = scores.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = scores.iter().map(|&s| (s - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&p, &q)| p * q).sum()
}

const HISTORY: usize = 10;

impl<T: Scalar> LrModel<T> {
    /// Minimizes [`LrProblem`]'s objective from zero with limited-memory BFGS
    /// and a backtracking (Armijo) line search.
    pub fn fit(x: &[SparseVector<T>], y: &[Label], n_features: usize, cfg: &LrConfig) -> Result<Self> {
        let problem = LrProblem::new(x, y, n_features, T::lit(cfg.c))?;
        let tol = T::lit(cfg.tol);
        let mut params = vec![T::zero(); problem.n_params()];
        let (mut value, mut grad) = problem.value_and_gradient(&params);
        if !value.is_finite() {
            return Err(Error::NonFinite { iteration: 0 });
        }
        let mut history: VecDeque<(Vec<T>, Vec<T>, T)> = VecDeque::with_capacity(HISTORY);
        let mut iterations = 0;
        while iterations < cfg.max_iter {
            if max_abs(&grad) < tol {
                break;
            }
            iterations += 1;
            let mut direction = two_loop(&grad, &history);
            let mut slope = dot(&grad, &direction);
            if !(slope < T::zero()) {
                history.clear();
                direction = grad.iter().map(|&g| -g).collect();
                slope = dot(&grad, &direction);
            }
            let mut step = if history.is_empty() {
                T::one().min(T::one() / max_abs(&grad).max(T::min_positive_value()))
            } else {
                T::one()
            };
            let accepted = loop {
                let trial: Vec<T> = params
                    .iter()
                    .zip(&direction)
                    .map(|(&p, &d)| p + step * d)
                    .collect();
                let (trial_value, trial_grad) = problem.value_and_gradient(&trial);
                if !trial_value.is_finite() && step < T::lit(1e-30) {
                    return Err(Error::NonFinite { iteration: iterations });
                }
                if trial_value.is_finite() && trial_value <= value + T::lit(1e-4) * step * slope {
                    break Some((trial, trial_value, trial_grad));
                }
                step /= T::lit(2.0);
                if step < T::lit(1e-20) {
                    break None;
                }
            };
            let Some((next, next_value, next_grad)) = accepted else {
                log::debug!("lr: line search stalled at iteration {iterations}");
                break;
            };
            let s: Vec<T> = next.iter().zip(&params).map(|(&a, &b)| a - b).collect();
            let yv: Vec<T> = next_grad.iter().zip(&grad).map(|(&a, &b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy > T::epsilon() * dot(&yv, &yv) {
                if history.len() == HISTORY {
                    history.pop_front();
                }
                history.push_back((s, yv, T::one() / sy));
            }
            params = next;
            value = next_value;
            grad = next_grad;
        }
        log::debug!("lr: stopped after {iterations} iterations, objective {value}");

        let k = problem.n_classes();
        let (w, b) = params.split_at(k * n_features);
        Ok(LrModel {
            classes: problem.classes.clone(),
            weights: w.chunks(n_features.max(1)).take(k).map(<[T]>::to_vec).collect(),
            bias: b.to_vec(),
            c: T::lit(cfg.c),
            max_iter: cfg.max_iter,
            tol,
            iterations,
        })
    }

    /// A model with all-zero parameters over `classes`.
    pub fn zeros(classes: Vec<Label>, n_features: usize) -> Self {
        let k = classes.len();
        LrModel {
            classes,
            weights: vec![vec![T::zero(); n_features]; k],
            bias: vec![T::zero(); k],
            c: T::one(),
            max_iter: 0,
            tol: T::zero(),
            iterations: 0,
        }
    }

    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn weights(&self) -> &[Vec<T>] {
        &self.weights
    }

    pub fn bias(&self) -> &[T] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [T] {
        &mut self.bias
    }

    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    /// Optimizer iterations actually taken.
    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn scores(&self, x: &SparseVector<T>) -> Vec<T> {
        let v = self.n_features();
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, &b)| b + x.iter().filter(|&(f, _)| f < v).map(|(f, val)| val * w[f]).sum::<T>())
            .collect()
    }

    pub fn predict_proba(&self, x: &SparseVector<T>) -> Vec<T> {
        softmax(&self.scores(x))
    }

    pub fn predict(&self, x: &SparseVector<T>) -> Label {
        self.classes[argmax_exact(&self.scores(x))]
    }
}

fn max_abs<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &g| m.max(g.abs()))
}

/// L-BFGS two-loop recursion; returns the search direction `-H g`.
fn two_loop<T: Scalar>(grad: &[T], history: &VecDeque<(Vec<T>, Vec<T>, T)>) -> Vec<T> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = *rho * dot(s, &q);
        for (qi, &yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in q.iter_mut() {
            *qi *= gamma;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = *rho * dot(y, &q);
        for (qi, &si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.into_iter().map(|v| -v).collect()
}
