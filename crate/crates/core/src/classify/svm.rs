use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vectorize::SparseVector;

use super::{argmax_exact, class_index, validate_inputs};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    pub c: f64,
    pub epochs: usize,
    /// Seeds the per-epoch example shuffle.
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            c: 1.0,
            epochs: 200,
            seed: 0,
        }
    }
}

/// One-vs-rest linear SVM.
///
/// `degree` and `gamma` are carried for manifest fidelity only; the linear
/// kernel never reads them.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel<T> {
    pub(crate) classes: Vec<Label>,
    /// `[class][feature]`
    pub(crate) weights: Vec<Vec<T>>,
    pub(crate) bias: Vec<T>,
    pub(crate) c: T,
    pub(crate) epochs: usize,
    pub(crate) degree: u32,
    pub(crate) gamma: String,
}

pub const KERNEL: &str = "linear";

/// Per-class objective of the epoch-averaged weights after each epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SvmTrace<T> {
    /// `[class][epoch]`
    pub objective: Vec<Vec<T>>,
}

/// `(lambda / 2) (||w||^2 + b^2) + mean_i max(0, 1 - y_i (w . x_i + b))`
/// with `lambda = 1 / (C N)` and `y_i = +1` for `positive`, `-1` otherwise.
/// The bias is trained as the weight of a constant feature, so it is
/// regularized together with `w`.
pub fn hinge_objective<T: Scalar>(
    x: &[SparseVector<T>],
    targets: &[usize],
    positive: usize,
    w: &[T],
    b: T,
    c: T,
) -> T {
    let n = T::of_usize(x.len());
    let lambda = T::one() / (c * n);
    let norm: T = w.iter().map(|&v| v * v).sum::<T>() + b * b;
    let hinge: T = x
        .iter()
        .zip(targets)
        .map(|(row, &t)| {
            let y = if t == positive { T::one() } else { -T::one() };
            (T::one() - y * (row.dot(w) + b)).max(T::zero())
        })
        .sum();
    lambda / T::lit(2.0) * norm + hinge / n
}

/// Pegasos state for one binary problem: `w = scale * v`, with the bias as
/// the last component of `v`.
struct Pegasos<T> {
    v: Vec<T>,
    scale: T,
    /// Sum of end-of-epoch iterates.
    sum: Vec<T>,
}

impl<T: Scalar> Pegasos<T> {
    fn new(dim: usize) -> Self {
        Pegasos {
            v: vec![T::zero(); dim + 1],
            scale: T::one(),
            sum: vec![T::zero(); dim + 1],
        }
    }

    fn margin(&self, row: &SparseVector<T>) -> T {
        let bias = *self.v.last().unwrap();
        self.scale * (row.dot(&self.v) + bias)
    }

    /// `w <- (1 - 1/t) w + eta y x [y (w . x) < 1]`, `eta = 1 / (lambda t)`.
    fn step(&mut self, row: &SparseVector<T>, y: T, t: usize, lambda: T) {
        let violated = y * self.margin(row) < T::one();
        let t = T::of_usize(t);
        let shrink = T::one() - T::one() / t;
        if shrink == T::zero() {
            self.v.iter_mut().for_each(|v| *v = T::zero());
            self.scale = T::one();
        } else {
            self.scale *= shrink;
        }
        if violated {
            let eta = T::one() / (lambda * t);
            let g = eta * y / self.scale;
            for (f, val) in row.iter() {
                self.v[f] += g * val;
            }
            *self.v.last_mut().unwrap() += g;
        }
        if self.scale < T::lit(1e-6) {
            let s = self.scale;
            self.v.iter_mut().for_each(|v| *v *= s);
            self.scale = T::one();
        }
    }

    fn end_epoch(&mut self) {
        for (acc, &v) in self.sum.iter_mut().zip(&self.v) {
            *acc += self.scale * v;
        }
    }

    fn averaged(&self, epochs: usize) -> (Vec<T>, T) {
        let e = T::of_usize(epochs.max(1));
        let mut w: Vec<T> = self.sum.iter().map(|&s| s / e).collect();
        let b = w.pop().unwrap();
        (w, b)
    }
}

impl<T: Scalar> SvmModel<T> {
    pub fn fit(x: &[SparseVector<T>], y: &[Label], n_features: usize, cfg: &SvmConfig) -> Result<Self> {
        Self::fit_with_trace(x, y, n_features, cfg).map(|(m, _)| m)
    }

    /// Epoch-ordered Pegasos subgradient descent per class, one shared
    /// shuffle per epoch. The returned weights are the average of the
    /// end-of-epoch iterates.
    pub fn fit_with_trace(
        x: &[SparseVector<T>],
        y: &[Label],
        n_features: usize,
        cfg: &SvmConfig,
    ) -> Result<(Self, SvmTrace<T>)> {
        validate_inputs(x, y, n_features)?;
        if !(cfg.c > 0.0) {
            return Err(Error::InvalidArgument(format!("C must be positive, got {}", cfg.c)));
        }
        let (classes, targets) = class_index(y);
        if classes.len() < 2 {
            return Err(Error::TooFewClasses(classes.len()));
        }
        let c = T::lit(cfg.c);
        let lambda = T::one() / (c * T::of_usize(x.len()));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..x.len()).collect();
        let mut states: Vec<Pegasos<T>> = classes.iter().map(|_| Pegasos::new(n_features)).collect();
        let mut trace = vec![Vec::with_capacity(cfg.epochs); classes.len()];
        let mut t = 0;
        for epoch in 1..=cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                t += 1;
                for (class, state) in states.iter_mut().enumerate() {
                    let sign = if targets[i] == class { T::one() } else { -T::one() };
                    state.step(&x[i], sign, t, lambda);
                }
            }
            for (class, state) in states.iter_mut().enumerate() {
                state.end_epoch();
                let (w, b) = state.averaged(epoch);
                let obj = hinge_objective(x, &targets, class, &w, b, c);
                if !obj.is_finite() {
                    return Err(Error::NonFinite { iteration: epoch });
                }
                trace[class].push(obj);
            }
        }
        let (weights, bias) = states.iter().map(|s| s.averaged(cfg.epochs)).unzip();
        Ok((
            SvmModel {
                classes,
                weights,
                bias,
                c,
                epochs: cfg.epochs,
                degree: 3,
                gamma: "auto".into(),
            },
            SvmTrace { objective: trace },
        ))
    }

    pub fn zeros(classes: Vec<Label>, n_features: usize) -> Self {
        let k = classes.len();
        SvmModel {
            classes,
            weights: vec![vec![T::zero(); n_features]; k],
            bias: vec![T::zero(); k],
            c: T::one(),
            epochs: 0,
            degree: 3,
            gamma: "auto".into(),
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

    pub fn n_features(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn kernel(&self) -> &'static str {
        KERNEL
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn gamma(&self) -> &str {
        &self.gamma
    }

    pub fn scores(&self, x: &SparseVector<T>) -> Vec<T> {
        let v = self.n_features();
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, &b)| b + x.iter().filter(|&(f, _)| f < v).map(|(f, val)| val * w[f]).sum::<T>())
            .collect()
    }

    pub fn predict(&self, x: &SparseVector<T>) -> Label {
        self.classes[argmax_exact(&self.scores(x))]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(usize, f64)]) -> SparseVector<f64> {
        SparseVector::from_pairs(pairs.to_vec())
    }

    #[test]
    fn zero_model_predicts_lowest_code() {
        let m = SvmModel::<f64>::zeros(Label::ALL.to_vec(), 3);
        assert_eq!(m.scores(&sv(&[(0, 1.0)])), vec![0.0; 3]);
        assert_eq!(m.predict(&sv(&[(0, 1.0)])), Label::Neutral);
        assert_eq!(m.kernel(), "linear");
        assert_eq!(m.degree(), 3);
        assert_eq!(m.gamma(), "auto");
    }

    #[test]
    fn separable_clusters_fit_perfectly() {
        let centers = [(0.0, 0.0), (5.0, 0.0), (0.0, 5.0)];
        let labels = [Label::Neutral, Label::NonHope, Label::Hope];
        let mut x = Vec::new();
        let mut y = Vec::new();
        for (k, &(cx, cy)) in centers.iter().enumerate() {
            for j in 0..10 {
                let dx = ((j * 7 % 10) as f64 - 4.5) * 0.05;
                let dy = ((j * 3 % 10) as f64 - 4.5) * 0.05;
                x.push(SparseVector::from_dense(&[cx + dx, cy + dy]));
                y.push(labels[k]);
            }
        }
        let m = SvmModel::fit(&x, &y, 2, &SvmConfig::default()).unwrap();
        for (row, &label) in x.iter().zip(&y) {
            assert_eq!(m.predict(row), label);
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let x = vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)]), sv(&[(0, 0.3), (1, 0.4)])];
        let y = vec![Label::Hope, Label::NonHope, Label::Hope];
        let cfg = SvmConfig {
            epochs: 20,
            ..SvmConfig::default()
        };
        assert_eq!(
            SvmModel::fit(&x, &y, 2, &cfg).unwrap(),
            SvmModel::fit(&x, &y, 2, &cfg).unwrap()
        );
    }

    #[test]
    fn needs_two_classes() {
        assert!(matches!(
            SvmModel::fit(&[sv(&[(0, 1.0)])], &[Label::Hope], 1, &SvmConfig::default()),
            Err(Error::TooFewClasses(1))
        ));
    }
}
