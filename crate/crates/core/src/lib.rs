//! Three-class hope-speech classification: comment normalization, TF-IDF
//! features, SMOTE/ADASYN balancing, naive Bayes / logistic regression /
//! linear SVM, evaluation reports, and multi-annotator relabeling.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annotate;
pub mod balance;
pub mod classify;
pub mod corpus;
pub mod error;
pub mod evaluate;
pub mod formats;
pub mod pipeline;
pub mod preprocess;
pub mod scalar;
pub mod seed;
pub mod synthetic;
pub mod vectorize;

pub use corpus::{Dataset, Label, LabeledExample};
pub use error::{Error, Result};
pub use scalar::Scalar;

pub type SparseVectorF64 = vectorize::SparseVector<f64>;
pub type SparseVectorF32 = vectorize::SparseVector<f32>;
pub type TfidfModelF64 = vectorize::TfidfModel<f64>;
pub type TfidfModelF32 = vectorize::TfidfModel<f32>;
pub type NbModelF64 = classify::NbModel<f64>;
pub type NbModelF32 = classify::NbModel<f32>;
pub type LrModelF64 = classify::LrModel<f64>;
pub type LrModelF32 = classify::LrModel<f32>;
pub type SvmModelF64 = classify::SvmModel<f64>;
pub type SvmModelF32 = classify::SvmModel<f32>;
pub type ClassifierModelF64 = classify::ClassifierModel<f64>;
pub type ClassifierModelF32 = classify::ClassifierModel<f32>;
