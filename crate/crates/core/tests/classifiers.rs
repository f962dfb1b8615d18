use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hopeml_core::classify::{
    ClassifierModel, LrConfig, LrModel, ModelKind, NbModel, SvmConfig, SvmModel, TrainConfig,
};
use hopeml_core::pipeline::tokenize_dataset;
use hopeml_core::preprocess::Preprocessor;
use hopeml_core::synthetic::{separable_corpus, separable_split};
use hopeml_core::vectorize::{SparseVector, TfidfModel, Variant};
use hopeml_core::{Label, SparseVectorF32};

struct Fixture {
    x: Vec<SparseVector<f64>>,
    y: Vec<Label>,
    probes: Vec<SparseVector<f64>>,
    dim: usize,
}

fn fixture() -> Fixture {
    let (train, _) = separable_split(20, 0, 5);
    let probes = separable_corpus(34, 77, "probe");
    let pre = Preprocessor::shipped();
    let tokens = tokenize_dataset(&train, &pre);
    let tfidf = TfidfModel::<f64>::fit(&tokens, Variant::Augmented).unwrap();
    let mut probe_x = tfidf.transform_all(&tokenize_dataset(&probes, &pre));
    probe_x.truncate(100);
    Fixture {
        x: tfidf.transform_all(&tokens),
        y: train.examples.iter().map(|e| e.label.unwrap()).collect(),
        probes: probe_x,
        dim: tfidf.dim(),
    }
}

fn permuted(f: &Fixture, seed: u64) -> (Vec<SparseVector<f64>>, Vec<Label>) {
    let mut order: Vec<usize> = (0..f.y.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (
        order.iter().map(|&i| f.x[i].clone()).collect(),
        order.iter().map(|&i| f.y[i]).collect(),
    )
}

#[test]
fn nb_tables_are_normalized() {
    let f = fixture();
    let model = NbModel::fit(&f.x, &f.y, f.dim, 1.0).unwrap();
    let prior: f64 = model.log_prior().iter().map(|p| p.exp()).sum();
    assert!((prior - 1.0).abs() < 1e-12);
    for c in 0..model.classes().len() {
        let total: f64 = model.log_likelihood(c).iter().map(|p| p.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn nb_ignores_training_order() {
    let f = fixture();
    let (xp, yp) = permuted(&f, 1);
    let a = NbModel::fit(&f.x, &f.y, f.dim, 1.0).unwrap();
    let b = NbModel::fit(&xp, &yp, f.dim, 1.0).unwrap();
    for p in &f.probes {
        assert_eq!(a.predict(p), b.predict(p));
    }
}

#[test]
fn lr_is_deterministic_and_order_free() {
    let f = fixture();
    let cfg = LrConfig::default();
    let a = LrModel::fit(&f.x, &f.y, f.dim, &cfg).unwrap();
    let again = LrModel::fit(&f.x, &f.y, f.dim, &cfg).unwrap();
    assert_eq!(a.weights(), again.weights());
    assert_eq!(a.bias(), again.bias());
    let (xp, yp) = permuted(&f, 2);
    let b = LrModel::fit(&xp, &yp, f.dim, &cfg).unwrap();
    for p in &f.probes {
        assert_eq!(a.predict(p), b.predict(p));
    }
}

#[test]
fn lr_probabilities_sum_to_one() {
    let f = fixture();
    let model = LrModel::fit(&f.x, &f.y, f.dim, &LrConfig::default()).unwrap();
    for p in &f.probes {
        let total: f64 = model.predict_proba(p).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn svm_is_deterministic() {
    let f = fixture();
    let cfg = SvmConfig {
        epochs: 40,
        ..Default::default()
    };
    let a = SvmModel::fit(&f.x, &f.y, f.dim, &cfg).unwrap();
    let b = SvmModel::fit(&f.x, &f.y, f.dim, &cfg).unwrap();
    assert_eq!(a.weights(), b.weights());
    assert_eq!(a.bias(), b.bias());
}

#[test]
fn svm_averaged_objective_does_not_increase() {
    let f = fixture();
    let cfg = SvmConfig {
        epochs: 60,
        seed: 3,
        ..Default::default()
    };
    let (_, trace) = SvmModel::fit_with_trace(&f.x, &f.y, f.dim, &cfg).unwrap();
    for (class, curve) in trace.objective.iter().enumerate() {
        assert!(curve[9] < curve[0], "class {class}: {} then {}", curve[0], curve[9]);
        for (epoch, pair) in curve.windows(2).enumerate() {
            assert!(
                pair[1] <= pair[0] * (1.0 + 1e-9),
                "class {class} epoch {}: {} -> {}",
                epoch + 1,
                pair[0],
                pair[1]
            );
        }
    }
}

#[test]
fn saved_models_predict_identically() {
    let f = fixture();
    assert_eq!(f.probes.len(), 100);
    let cfg = TrainConfig {
        svm: SvmConfig {
            epochs: 30,
            ..Default::default()
        },
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    for kind in [ModelKind::Nb, ModelKind::Lr, ModelKind::Svm] {
        let model = ClassifierModel::train(kind, &f.x, &f.y, f.dim, &cfg).unwrap();
        let path = dir.path().join(format!("{kind}.model"));
        model.save(&path).unwrap();
        let loaded = ClassifierModel::<f64>::load(&path).unwrap();
        assert_eq!(loaded.to_text(), model.to_text());
        assert_eq!(loaded.predict_batch(&f.probes), model.predict_batch(&f.probes));
    }
}

#[test]
fn f32_models_train_and_agree_on_easy_data() {
    let f = fixture();
    let to32 = |v: &SparseVector<f64>| -> SparseVectorF32 {
        SparseVector::from_pairs(v.iter().map(|(i, w)| (i, w as f32)).collect())
    };
    let x32: Vec<SparseVectorF32> = f.x.iter().map(to32).collect();
    let p32: Vec<SparseVectorF32> = f.probes.iter().map(to32).collect();
    let cfg = TrainConfig::default();
    for kind in [ModelKind::Nb, ModelKind::Lr] {
        let m64 = ClassifierModel::train(kind, &f.x, &f.y, f.dim, &cfg).unwrap();
        let m32 = ClassifierModel::train(kind, &x32, &f.y, f.dim, &cfg).unwrap();
        let agree = m64
            .predict_batch(&f.probes)
            .iter()
            .zip(m32.predict_batch(&p32))
            .filter(|(a, b)| **a == *b)
            .count();
        assert!(agree >= 98, "{kind}: {agree}/100");
        assert!(ClassifierModel::<f64>::from_text(&m32.to_text()).is_err());
    }
}
