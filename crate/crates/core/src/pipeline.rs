//! End-to-end run: preprocessing, TF-IDF, optional balancing of the training
//! vectors, classifier training, and evaluation on the test split.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::balance::{balance, BalanceMethod, BalancerConfig};
use crate::classify::{ClassifierModel, LrConfig, ModelKind, SvmConfig, TrainConfig};
use crate::corpus::{class_distribution, write_dataset, Dataset, Label};
use crate::error::{Error, Result};
use crate::evaluate::{confusion, render_text, ClassReport, ConfusionMatrix, ReportDocument};
use crate::preprocess::{lexicon_digest, Preprocessor, TokenSeq};
use crate::seed::{stage_seed, Stage};
use crate::vectorize::{SparseVector, TfidfModel, Variant};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every knob of a run. Serialized verbatim into the run manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub model: ModelKind,
    pub variant: Variant,
    pub balance: BalanceMethod,
    pub k_neighbors: usize,
    pub seed: u64,
    pub nb_alpha: f64,
    pub lr_c: f64,
    pub lr_max_iter: usize,
    pub lr_tol: f64,
    pub svm_c: f64,
    pub svm_epochs: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        PipelineConfig {
            model: ModelKind::Svm,
            variant: Variant::Augmented,
            balance: BalanceMethod::None,
            k_neighbors: BalancerConfig::default().k_neighbors,
            seed: 0,
            nb_alpha: train.nb_alpha,
            lr_c: train.lr.c,
            lr_max_iter: train.lr.max_iter,
            lr_tol: train.lr.tol,
            svm_c: train.svm.c,
            svm_epochs: train.svm.epochs,
        }
    }
}

impl PipelineConfig {
    pub fn balancer(&self) -> BalancerConfig {
        BalancerConfig {
            method: self.balance,
            k_neighbors: self.k_neighbors,
            seed: stage_seed(self.seed, Stage::Balance),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            nb_alpha: self.nb_alpha,
            lr: LrConfig {
                c: self.lr_c,
                max_iter: self.lr_max_iter,
                tol: self.lr_tol,
                seed: stage_seed(self.seed, Stage::Lr),
            },
            svm: SvmConfig {
                c: self.svm_c,
                epochs: self.svm_epochs,
                seed: stage_seed(self.seed, Stage::Svm),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Digests {
    pub lexicon: String,
    pub stoplist: String,
    pub rules: String,
    pub train: String,
    pub test: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DerivedSeeds {
    pub balance: u64,
    pub lr: u64,
    pub svm: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
}

/// Everything needed to reproduce a run. Timestamps are left out of the copy
/// embedded in reports so reruns stay byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config: PipelineConfig,
    pub derived_seeds: DerivedSeeds,
    pub digests: Digests,
    /// Multinomial softmax, L2 on weights only.
    pub lr_formulation: String,
    pub train_distribution: BTreeMap<String, usize>,
    pub test_distribution: BTreeMap<String, usize>,
    pub balanced_train_size: usize,
    pub balance_skipped: Vec<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Timestamps>,
}

impl RunManifest {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// SHA-256 of a dataset's canonical CSV form.
pub fn dataset_digest(ds: &Dataset) -> String {
    let mut buf = Vec::new();
    write_dataset(ds, &mut buf).expect("in-memory write");
    lexicon_digest(&buf)
}

fn distribution(ds: &Dataset) -> BTreeMap<String, usize> {
    class_distribution(ds)
        .into_iter()
        .map(|(l, n)| (l.code().to_string(), n))
        .collect()
}

pub struct PipelineOutput {
    pub vectorizer: TfidfModel<f64>,
    pub model: ClassifierModel<f64>,
    pub test_ids: Vec<String>,
    pub truth: Vec<Label>,
    pub predictions: Vec<Label>,
    pub confusion: ConfusionMatrix,
    pub report: ClassReport,
    pub manifest: RunManifest,
}

impl PipelineOutput {
    pub fn model_text(&self) -> String {
        self.model.to_text()
    }

    pub fn report_document(&self) -> ReportDocument {
        let manifest = serde_json::to_value(&self.manifest).expect("manifest serializes");
        ReportDocument::new(self.model.kind().as_str(), &self.confusion, &self.report, manifest)
    }

    pub fn report_json(&self) -> String {
        self.report_document().to_json()
    }

    pub fn report_text(&self) -> String {
        render_text(self.model.kind().as_str(), &self.confusion, &self.report)
    }
}

pub fn tokenize_dataset(ds: &Dataset, pre: &Preprocessor) -> Vec<TokenSeq> {
    ds.examples.iter().map(|e| pre.process(&e.text)).collect()
}

pub fn require_labels(ds: &Dataset) -> Result<Vec<Label>> {
    ds.examples
        .iter()
        .map(|e| {
            e.label
                .ok_or_else(|| Error::InvalidArgument(format!("example {:?} has no label", e.id)))
        })
        .collect()
}

/// Balanced rows, their labels, and the classes left unbalanced.
pub type BalancedRows = (Vec<SparseVector<f64>>, Vec<Label>, Vec<Label>);

/// Balances sparse training rows through a dense round trip.
pub fn balance_sparse(
    x: &[SparseVector<f64>],
    y: &[Label],
    dim: usize,
    cfg: &BalancerConfig,
) -> Result<BalancedRows> {
    if cfg.method == BalanceMethod::None {
        return Ok((x.to_vec(), y.to_vec(), Vec::new()));
    }
    let dense: Vec<Vec<f64>> = x.iter().map(|v| v.to_dense(dim)).collect();
    let out = balance(&dense, y, cfg)?;
    let mut rows = x.to_vec();
    rows.extend(out.x[x.len()..].iter().map(|r| SparseVector::from_dense(r)));
    Ok((rows, out.y, out.skipped))
}

pub fn run_pipeline(train: &Dataset, test: &Dataset, cfg: &PipelineConfig, pre: &Preprocessor) -> Result<PipelineOutput> {
    let train_labels = require_labels(train)?;
    let truth = require_labels(test)?;

    let train_tokens = tokenize_dataset(train, pre);
    let test_tokens = tokenize_dataset(test, pre);
    let vectorizer = TfidfModel::<f64>::fit(&train_tokens, cfg.variant)?;
    let dim = vectorizer.dim();
    let x_train = vectorizer.transform_all(&train_tokens);
    let x_test = vectorizer.transform_all(&test_tokens);

    let balancer = cfg.balancer();
    let (x_fit, y_fit, skipped) = balance_sparse(&x_train, &train_labels, dim, &balancer)?;
    let train_cfg = cfg.train_config();
    let model = ClassifierModel::train(cfg.model, &x_fit, &y_fit, dim, &train_cfg)?;
    let predictions = model.predict_batch(&x_test);
    let cm = confusion(&truth, &predictions)?;
    let report = ClassReport::from_confusion(&cm);

    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        config: cfg.clone(),
        derived_seeds: DerivedSeeds {
            balance: balancer.seed,
            lr: train_cfg.lr.seed,
            svm: train_cfg.svm.seed,
        },
        digests: Digests {
            lexicon: pre.lexicon.digest().to_string(),
            stoplist: pre.stoplist.digest().to_string(),
            rules: pre.rules.digest().to_string(),
            train: dataset_digest(train),
            test: dataset_digest(test),
        },
        lr_formulation: "multinomial softmax, l2 on weights".into(),
        train_distribution: distribution(train),
        test_distribution: distribution(test),
        balanced_train_size: y_fit.len(),
        balance_skipped: skipped,
        timestamps: None,
    };

    Ok(PipelineOutput {
        vectorizer,
        model,
        test_ids: test.examples.iter().map(|e| e.id.clone()).collect(),
        truth,
        predictions,
        confusion: cm,
        report,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::separable_split;

    #[test]
    fn runs_every_model() {
        let (train, test) = separable_split(20, 6, 3);
        let pre = Preprocessor::shipped();
        for model in [ModelKind::Nb, ModelKind::Lr, ModelKind::Svm] {
            let cfg = PipelineConfig {
                model,
                svm_epochs: 30,
                ..Default::default()
            };
            let out = run_pipeline(&train, &test, &cfg, &pre).unwrap();
            assert_eq!(out.predictions.len(), 18);
            assert!(out.report.macro_avg.f1 > 0.8, "{model}: {}", out.report.macro_avg.f1);
        }
    }

    #[test]
    fn balancing_grows_training_set() {
        let (mut train, test) = separable_split(20, 6, 4);
        // Drop half of the Hope examples.
        let mut dropped = 0;
        train.examples.retain(|e| {
            if e.label == Some(Label::Hope) && dropped < 10 {
                dropped += 1;
                false
            } else {
                true
            }
        });
        let cfg = PipelineConfig {
            model: ModelKind::Nb,
            balance: BalanceMethod::Smote,
            ..Default::default()
        };
        let out = run_pipeline(&train, &test, &cfg, &Preprocessor::shipped()).unwrap();
        assert_eq!(out.manifest.balanced_train_size, 60);
        assert!(out.manifest.balance_skipped.is_empty());
    }

    #[test]
    fn unlabeled_test_is_rejected() {
        let (train, mut test) = separable_split(5, 2, 1);
        test.examples[0].label = None;
        assert!(run_pipeline(&train, &test, &PipelineConfig::default(), &Preprocessor::shipped()).is_err());
    }

    #[test]
    fn report_embeds_manifest_without_timestamps() {
        let (train, test) = separable_split(5, 2, 1);
        let cfg = PipelineConfig {
            model: ModelKind::Nb,
            ..Default::default()
        };
        let out = run_pipeline(&train, &test, &cfg, &Preprocessor::shipped()).unwrap();
        let doc: serde_json::Value = serde_json::from_str(&out.report_json()).unwrap();
        assert_eq!(doc["run_manifest"]["config"]["model"], "nb");
        assert!(doc["run_manifest"].get("timestamps").is_none());
    }
}
