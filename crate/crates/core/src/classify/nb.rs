use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::vectorize::SparseVector;

use super::{argmax_with_tolerance, class_index, validate_inputs};

/// Multinomial naive Bayes over non-negative (possibly fractional) feature
/// weights, with additive smoothing `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct NbModel<T> {
    pub(crate) classes: Vec<Label>,
    pub(crate) log_prior: Vec<T>,
    /// `[class][feature]`
    pub(crate) log_likelihood: Vec<Vec<T>>,
    pub(crate) alpha: T,
    pub(crate) n_features: usize,
}

impl<T: Scalar> NbModel<T> {
    /// `prior(c) = count(c) / N`;
    /// `P(t | c) = (sum of t's weight in c + alpha) / (sum of all weight in c + alpha * V)`.
    pub fn fit(x: &[SparseVector<T>], y: &[Label], n_features: usize, alpha: T) -> Result<Self> {
        validate_inputs(x, y, n_features)?;
        if !(alpha > T::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha must be positive, got {alpha}")));
        }
        if n_features == 0 {
            return Err(Error::InvalidArgument("no features".into()));
        }
        for row in x {
            for (feature, weight) in row.iter() {
                if weight < T::zero() {
                    return Err(Error::NegativeWeight {
                        feature,
                        weight: weight.to_string(),
                    });
                }
            }
        }
        let (classes, targets) = class_index(y);
        let k = classes.len();
        let mut class_count = vec![0usize; k];
        let mut feature_mass = vec![vec![T::zero(); n_features]; k];
        for (row, &c) in x.iter().zip(&targets) {
            class_count[c] += 1;
            for (f, w) in row.iter() {
                feature_mass[c][f] += w;
            }
        }
        let n = T::of_usize(y.len());
        let log_prior = class_count
            .iter()
            .map(|&cnt| (T::of_usize(cnt) / n).ln())
            .collect();
        let smoothing = alpha * T::of_usize(n_features);
        let log_likelihood = feature_mass
            .into_iter()
            .map(|mass| {
                let total: T = mass.iter().copied().sum();
                let denom = (total + smoothing).ln();
                mass.into_iter().map(|m| (m + alpha).ln() - denom).collect()
            })
            .collect();
        Ok(NbModel {
            classes,
            log_prior,
            log_likelihood,
            alpha,
            n_features,
        })
    }

    pub fn classes(&self) -> &[Label] {
        &self.classes
    }

    pub fn log_prior(&self) -> &[T] {
        &self.log_prior
    }

    pub fn log_likelihood(&self, class: usize) -> &[T] {
        &self.log_likelihood[class]
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Joint log-scores `log prior(c) + sum_t weight(t) * log P(t | c)`, in
    /// [`classes`](Self::classes) order. Out-of-range features are ignored.
    pub fn log_scores(&self, x: &SparseVector<T>) -> Vec<T> {
        self.log_prior
            .iter()
            .zip(&self.log_likelihood)
            .map(|(&prior, table)| {
                prior
                    + x.iter()
                        .filter(|&(f, _)| f < self.n_features)
                        .map(|(f, w)| w * table[f])
                        .sum::<T>()
            })
            .collect()
    }

    /// Highest log-score; scores equal up to rounding count as tied and go to
    /// the lower label code.
    pub fn predict(&self, x: &SparseVector<T>) -> Label {
        self.classes[argmax_with_tolerance(&self.log_scores(x))]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(usize, f64)]) -> SparseVector<f64> {
        SparseVector::from_pairs(pairs.to_vec())
    }

    // Features: 0 = "good", 1 = "bad". A = Hope, B = NonHope.
    fn ab_model(alpha: f64) -> NbModel<f64> {
        let x = vec![sv(&[(0, 2.0)]), sv(&[(1, 1.0)])];
        let y = vec![Label::Hope, Label::NonHope];
        NbModel::fit(&x, &y, 2, alpha).unwrap()
    }

    fn likelihood(m: &NbModel<f64>, label: Label, f: usize) -> f64 {
        let c = m.classes.iter().position(|&l| l == label).unwrap();
        m.log_likelihood[c][f].exp()
    }

    #[test]
    fn hand_bayes_arithmetic() {
        let m = ab_model(1.0);
        assert!((likelihood(&m, Label::Hope, 0) - 0.75).abs() < 1e-12);
        assert!((likelihood(&m, Label::Hope, 1) - 0.25).abs() < 1e-12);
        assert!((likelihood(&m, Label::NonHope, 0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((likelihood(&m, Label::NonHope, 1) - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(m.predict(&sv(&[(0, 1.0)])), Label::Hope);
    }

    #[test]
    fn tables_are_normalized() {
        let m = ab_model(1.0);
        let prior: f64 = m.log_prior.iter().map(|p| p.exp()).sum();
        assert!((prior - 1.0).abs() < 1e-9);
        for table in &m.log_likelihood {
            let s: f64 = table.iter().map(|p| p.exp()).sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn large_alpha_approaches_uniform() {
        let m = ab_model(1e6);
        for label in [Label::Hope, Label::NonHope] {
            for f in 0..2 {
                assert!((likelihood(&m, label, f) - 0.5).abs() < 1e-3);
            }
        }
    }

    #[test]
    fn single_class_always_predicted() {
        let x = vec![sv(&[(0, 1.0)]), sv(&[(1, 3.0)])];
        let m = NbModel::fit(&x, &[Label::Neutral, Label::Neutral], 2, 1.0).unwrap();
        assert_eq!(m.predict(&sv(&[(1, 9.0)])), Label::Neutral);
        assert_eq!(m.predict(&sv(&[])), Label::Neutral);
    }

    #[test]
    fn empty_input_uses_priors() {
        let x = vec![sv(&[(0, 1.0)]), sv(&[(0, 1.0)]), sv(&[(1, 1.0)])];
        let y = [Label::NonHope, Label::NonHope, Label::Hope];
        let m = NbModel::fit(&x, &y, 2, 1.0).unwrap();
        assert_eq!(m.predict(&sv(&[])), Label::NonHope);
    }

    #[test]
    fn symmetric_tie_goes_to_lower_code() {
        let x = vec![sv(&[(0, 1.0)]), sv(&[(1, 1.0)])];
        let m = NbModel::fit(&x, &[Label::Hope, Label::Neutral], 2, 1.0).unwrap();
        assert_eq!(m.predict(&sv(&[(0, 1.0), (1, 1.0)])), Label::Neutral);
        assert_eq!(m.predict(&sv(&[])), Label::Neutral);
    }

    #[test]
    fn rejects_negative_weights_and_empty_input() {
        let x = vec![sv(&[(0, -1.0)])];
        assert!(matches!(
            NbModel::fit(&x, &[Label::Hope], 1, 1.0),
            Err(Error::NegativeWeight { feature: 0, .. })
        ));
        assert!(matches!(
            NbModel::<f64>::fit(&[], &[], 1, 1.0),
            Err(Error::EmptyTrainingSet)
        ));
        assert!(NbModel::fit(&[sv(&[(0, 1.0)])], &[Label::Hope], 1, 0.0).is_err());
    }
}
