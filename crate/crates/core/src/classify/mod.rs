//! Multinomial naive Bayes, softmax logistic regression and one-vs-rest
//! linear SVM over sparse feature vectors.
//!
//! Each model learns over the classes present in its training labels, kept
//! in ascending label-code order. Ties in every argmax go to the lower code.

mod lr;
mod nb;
mod persist;
mod svm;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use lr::{softmax, LrConfig, LrModel, LrProblem};
pub use nb::NbModel;
pub use persist::FORMAT_VERSION;
pub use svm::{hinge_objective, SvmConfig, SvmModel, SvmTrace, KERNEL};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::scalar::{tie_tolerance, Scalar};
use crate::vectorize::SparseVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Nb,
    Lr,
    Svm,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Nb => "nb",
            ModelKind::Lr => "lr",
            ModelKind::Svm => "svm",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nb" => Ok(ModelKind::Nb),
            "lr" => Ok(ModelKind::Lr),
            "svm" => Ok(ModelKind::Svm),
            other => Err(Error::InvalidArgument(format!("unknown model {other:?}"))),
        }
    }
}

/// Hyperparameters for all three models; only the selected model's are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub nb_alpha: f64,
    pub lr: LrConfig,
    pub svm: SvmConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            nb_alpha: 1.0,
            lr: LrConfig::default(),
            svm: SvmConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClassifierModel<T> {
    Nb(NbModel<T>),
    Lr(LrModel<T>),
    Svm(SvmModel<T>),
}

impl<T: Scalar> ClassifierModel<T> {
    pub fn train(
        kind: ModelKind,
        x: &[SparseVector<T>],
        y: &[Label],
        n_features: usize,
        cfg: &TrainConfig,
    ) -> Result<Self> {
        Ok(match kind {
            ModelKind::Nb => Self::Nb(NbModel::fit(x, y, n_features, T::lit(cfg.nb_alpha))?),
            ModelKind::Lr => Self::Lr(LrModel::fit(x, y, n_features, &cfg.lr)?),
            ModelKind::Svm => Self::Svm(SvmModel::fit(x, y, n_features, &cfg.svm)?),
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Self::Nb(_) => ModelKind::Nb,
            Self::Lr(_) => ModelKind::Lr,
            Self::Svm(_) => ModelKind::Svm,
        }
    }

    pub fn classes(&self) -> &[Label] {
        match self {
            Self::Nb(m) => m.classes(),
            Self::Lr(m) => m.classes(),
            Self::Svm(m) => m.classes(),
        }
    }

    pub fn n_features(&self) -> usize {
        match self {
            Self::Nb(m) => m.n_features(),
            Self::Lr(m) => m.n_features(),
            Self::Svm(m) => m.n_features(),
        }
    }

    pub fn predict(&self, x: &SparseVector<T>) -> Label {
        match self {
            Self::Nb(m) => m.predict(x),
            Self::Lr(m) => m.predict(x),
            Self::Svm(m) => m.predict(x),
        }
    }

    pub fn predict_batch(&self, x: &[SparseVector<T>]) -> Vec<Label> {
        x.iter().map(|row| self.predict(row)).collect()
    }

    pub fn to_text(&self) -> String {
        persist::write_model(self)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        persist::read_model(text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

pub(crate) fn validate_inputs<T: Scalar>(
    x: &[SparseVector<T>],
    y: &[Label],
    n_features: usize,
) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    if n_features == 0 {
        return Err(Error::InvalidArgument("no features".into()));
    }
    for row in x {
        if row.min_dim() > n_features {
            return Err(Error::FeatureOutOfRange {
                index: row.min_dim() - 1,
                dim: n_features,
            });
        }
    }
    Ok(())
}

/// Sorted distinct classes and each label's position among them.
pub(crate) fn class_index(y: &[Label]) -> (Vec<Label>, Vec<usize>) {
    let mut classes = y.to_vec();
    classes.sort();
    classes.dedup();
    let targets = y
        .iter()
        .map(|l| classes.binary_search(l).expect("label among classes"))
        .collect();
    (classes, targets)
}

/// First index of the maximum; later entries must win strictly.
pub(crate) fn argmax_exact<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Like [`argmax_exact`], but a later entry must beat the incumbent by more
/// than rounding noise.
pub(crate) fn argmax_with_tolerance<T: Scalar>(scores: &[T]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        let incumbent = scores[best];
        if s > incumbent + tie_tolerance(s, incumbent) {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_prefers_first_on_ties() {
        assert_eq!(argmax_exact(&[1.0, 1.0, 0.5]), 0);
        assert_eq!(argmax_exact(&[0.0, 2.0, 2.0]), 1);
        assert_eq!(argmax_with_tolerance(&[-3.0, -3.0 + 1e-15, -4.0]), 0);
        assert_eq!(argmax_with_tolerance(&[-3.0, -2.9, -4.0]), 1);
    }

    #[test]
    fn class_index_sorts_by_code() {
        let (classes, targets) = class_index(&[Label::Hope, Label::Neutral, Label::Hope]);
        assert_eq!(classes, vec![Label::Neutral, Label::Hope]);
        assert_eq!(targets, vec![1, 0, 1]);
    }

    #[test]
    fn empty_batch() {
        let m = ClassifierModel::Svm(SvmModel::<f64>::zeros(Label::ALL.to_vec(), 2));
        assert!(m.predict_batch(&[]).is_empty());
    }

    #[test]
    fn rejects_out_of_range_features() {
        let x = vec![SparseVector::from_pairs(vec![(5, 1.0)])];
        assert!(matches!(
            validate_inputs(&x, &[Label::Hope], 3),
            Err(Error::FeatureOutOfRange { index: 5, dim: 3 })
        ));
    }
}
