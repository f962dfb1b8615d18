//! Acceptance suite. Prints one PASS/FAIL/SKIP line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hopeml_core::annotate::{aggregate_records, AnnotationRecord};
use hopeml_core::balance::{balance, BalanceMethod, Balanced, BalancerConfig};
use hopeml_core::classify::{LrProblem, ModelKind, NbModel};
use hopeml_core::evaluate::{precision_recall_f1, ConfusionMatrix};
use hopeml_core::pipeline::{run_pipeline, PipelineConfig, RunManifest};
use hopeml_core::preprocess::{Preprocessor, TokenSeq};
use hopeml_core::synthetic::separable_split;
use hopeml_core::vectorize::{SparseVector, TfidfModel, Variant};
use hopeml_core::Label;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
/// Model name, confusion matrix, and printed precision/recall/F1 per class.
type Published = (&'static str, [[usize; 3]; 3], [[f64; 3]; 3]);

// Rows and metric triples both in label order -1, 0, 1.
const PUBLISHED: [Published; 3] = [
    (
        "nb",
        [[747, 264, 61], [277, 687, 26], [238, 185, 283]],
        [[0.59, 0.70, 0.64], [0.60, 0.69, 0.65], [0.76, 0.40, 0.53]],
    ),
    (
        "lr",
        [[731, 222, 119], [260, 662, 68], [178, 121, 407]],
        [[0.63, 0.68, 0.65], [0.66, 0.67, 0.66], [0.69, 0.58, 0.63]],
    ),
    (
        "svm",
        [[744, 220, 108], [259, 663, 68], [186, 121, 399]],
        [[0.63, 0.69, 0.66], [0.66, 0.67, 0.66], [0.69, 0.57, 0.62]],
    ),
];

fn metric_fidelity() -> Outcome {
    let mut worst = 0.0f64;
    for (model, counts, printed) in PUBLISHED {
        let cm = ConfusionMatrix::from_rows(counts);
        for (row, label) in Label::ALL.into_iter().enumerate() {
            let m = precision_recall_f1(&cm, label);
            for (got, want) in [m.precision, m.recall, m.f1].into_iter().zip(printed[row]) {
                let err = (got - want).abs();
                worst = worst.max(err);
                if err > 0.005 + 1e-12 {
                    return Err(format!("{model} label {}: {got:.4} vs printed {want}", label.code()));
                }
            }
        }
    }
    Ok(format!("27 values, max |error| {worst:.4}"))
}

fn rel_err(got: f64, want: f64) -> f64 {
    if want == 0.0 {
        got.abs()
    } else {
        (got - want).abs() / want.abs()
    }
}

/// Direct evaluation of tf, idf, tf*idf and idf/|D| + tf*idf.
fn tfidf_oracle(corpus: &[Vec<String>], doc: &[String], variant: Variant) -> Vec<(String, f64)> {
    let mut terms: Vec<String> = corpus.iter().flatten().cloned().collect();
    terms.sort();
    terms.dedup();
    let n = corpus.len() as f64;
    let max_count = doc
        .iter()
        .map(|t| doc.iter().filter(|u| *u == t).count())
        .max()
        .unwrap_or(0) as f64;
    let mut out = Vec::new();
    for term in terms {
        let df = corpus.iter().filter(|d| d.contains(&term)).count() as f64;
        let idf = (n / df).ln();
        let count = doc.iter().filter(|t| **t == term).count() as f64;
        let tf = count / max_count;
        let w = match variant {
            Variant::Plain => tf * idf,
            Variant::Augmented if count > 0.0 => idf / n + tf * idf,
            Variant::Augmented => 0.0,
        };
        out.push((term, w));
    }
    out
}

fn random_doc(rng: &mut ChaCha8Rng, n_terms: usize) -> Vec<String> {
    let len = rng.gen_range(1..=8);
    (0..len).map(|_| format!("w{}", rng.gen_range(0..n_terms))).collect()
}

fn tfidf_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for case in 0..1000 {
        let n_terms = rng.gen_range(1..=12);
        let n_docs = rng.gen_range(1..=8);
        let corpus: Vec<Vec<String>> = (0..n_docs).map(|_| random_doc(&mut rng, n_terms)).collect();
        // Out-of-vocabulary tokens still count toward the max frequency.
        let mut query = random_doc(&mut rng, n_terms);
        query.push("unseen".into());
        let tokens: Vec<TokenSeq> = corpus.iter().cloned().map(TokenSeq::from).collect();
        for variant in [Variant::Plain, Variant::Augmented] {
            let model = TfidfModel::<f64>::fit(&tokens, variant).map_err(|e| e.to_string())?;
            for doc in corpus.iter().chain([&query]) {
                let got = model.transform(doc);
                let want = tfidf_oracle(&corpus, doc, variant);
                if model.dim() != want.len() {
                    return Err(format!("case {case}: dim {} vs {}", model.dim(), want.len()));
                }
                for (i, (term, w)) in want.iter().enumerate() {
                    if model.vocabulary().term(i) != term {
                        return Err(format!("case {case}: vocabulary order differs at {i}"));
                    }
                    let e = rel_err(got.get(i), *w);
                    worst = worst.max(e);
                    checked += 1;
                    if e > 1e-12 {
                        return Err(format!("case {case} {variant} term {term}: {} vs {w}", got.get(i)));
                    }
                }
            }
        }
    }
    Ok(format!("{checked} weights, max relative error {worst:.2e}"))
}

/// Exact posterior argmax over rationals; ties go to the lowest label code.
fn nb_oracle(docs: &[Vec<u32>], labels: &[Label], query: &[u32]) -> Label {
    let v = query.len();
    let mut classes: Vec<Label> = labels.to_vec();
    classes.sort();
    classes.dedup();
    let mut best: Option<(BigRational, Label)> = None;
    for &c in &classes {
        let members: Vec<&Vec<u32>> = docs
            .iter()
            .zip(labels)
            .filter(|(_, &l)| l == c)
            .map(|(d, _)| d)
            .collect();
        let mut score = BigRational::new(BigInt::from(members.len()), BigInt::from(docs.len()));
        let total: u32 = members.iter().map(|d| d.iter().sum::<u32>()).sum();
        for t in 0..v {
            let mass: u32 = members.iter().map(|d| d[t]).sum();
            let p = BigRational::new(BigInt::from(mass + 1), BigInt::from(total as usize + v));
            for _ in 0..query[t] {
                score *= &p;
            }
        }
        match &best {
            Some((b, _)) if *b >= score => {}
            _ => best = Some((score, c)),
        }
    }
    best.unwrap().1
}

fn to_sparse(counts: &[u32]) -> SparseVector<f64> {
    SparseVector::from_dense(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>())
}

fn nb_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut queries = 0;
    for case in 0..500 {
        let v = rng.gen_range(1..=6);
        let n_docs = rng.gen_range(2..=5);
        let n_classes = rng.gen_range(2..=3).min(n_docs);
        let mut chosen: Vec<Label> = Label::ALL.choose_multiple(&mut rng, n_classes).copied().collect();
        chosen.sort();
        let mut labels = chosen.clone();
        while labels.len() < n_docs {
            labels.push(*chosen.choose(&mut rng).unwrap());
        }
        labels.shuffle(&mut rng);
        let docs: Vec<Vec<u32>> = (0..n_docs)
            .map(|_| (0..v).map(|_| rng.gen_range(0..4)).collect())
            .collect();
        let x: Vec<SparseVector<f64>> = docs.iter().map(|d| to_sparse(d)).collect();
        let model = NbModel::fit(&x, &labels, v, 1.0).map_err(|e| e.to_string())?;
        let mut probes = docs.clone();
        for _ in 0..4 {
            probes.push((0..v).map(|_| rng.gen_range(0..4)).collect());
        }
        for q in &probes {
            let want = nb_oracle(&docs, &labels, q);
            let got = model.predict(&to_sparse(q));
            queries += 1;
            if got != want {
                return Err(format!("case {case}: predicted {got}, exact {want} for {q:?}"));
            }
        }
    }
    Ok(format!("{queries} predictions agree"))
}

fn lr_gradient_check() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for case in 0..100 {
        let v = rng.gen_range(1..=6);
        let n = rng.gen_range(2..=8);
        let mut y: Vec<Label> = (0..n).map(|_| Label::ALL[rng.gen_range(0..3)]).collect();
        y[0] = Label::Neutral;
        y[1] = Label::Hope;
        let x: Vec<SparseVector<f64>> = (0..n)
            .map(|_| {
                let row: Vec<f64> = (0..v)
                    .map(|_| if rng.gen_bool(0.6) { rng.gen_range(0.0..2.0) } else { 0.0 })
                    .collect();
                SparseVector::from_dense(&row)
            })
            .collect();
        let c = rng.gen_range(0.1..10.0);
        let problem = LrProblem::new(&x, &y, v, c).map_err(|e| e.to_string())?;
        let params: Vec<f64> = (0..problem.n_params()).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (_, grad) = problem.value_and_gradient(&params);
        let mut diff = 0.0;
        let mut scale = 0.0f64;
        for i in 0..params.len() {
            let mut plus = params.clone();
            let mut minus = params.clone();
            plus[i] += h;
            minus[i] -= h;
            let fd = (problem.objective(&plus) - problem.objective(&minus)) / (2.0 * h);
            diff += (grad[i] - fd).powi(2);
            scale += fd.powi(2).max(grad[i].powi(2));
        }
        let e = diff.sqrt() / scale.sqrt().max(1e-8);
        worst = worst.max(e);
        if e > 1e-5 {
            return Err(format!("case {case}: relative error {e:.3e}"));
        }
    }
    Ok(format!("max relative error {worst:.2e}"))
}

fn imbalanced_fixture(seed: u64) -> (Vec<Vec<f64>>, Vec<Label>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::new();
    let mut y = Vec::new();
    for (label, n, center) in [(Label::NonHope, 40, 0.0), (Label::Neutral, 17, 2.0), (Label::Hope, 9, 4.0)] {
        for _ in 0..n {
            x.push((0..4).map(|_| center + rng.gen_range(-1.5..1.5)).collect());
            y.push(label);
        }
    }
    (x, y)
}

/// Some same-class pair (a, b) and u in [0, 1] give `row = a + u (b - a)`.
fn convex_member(row: &[f64], class_rows: &[&Vec<f64>]) -> bool {
    class_rows.iter().any(|a| {
        class_rows.iter().any(|b| {
            let mut u: Option<f64> = None;
            for ((&r, &p), &q) in row.iter().zip(a.iter()).zip(b.iter()) {
                let span = q - p;
                if span.abs() < 1e-12 {
                    if (r - p).abs() > 1e-9 {
                        return false;
                    }
                    continue;
                }
                let t = (r - p) / span;
                if !(-1e-9..=1.0 + 1e-9).contains(&t) {
                    return false;
                }
                match u {
                    Some(prev) if (prev - t).abs() > 1e-7 => return false,
                    _ => u = Some(t),
                }
            }
            true
        })
    })
}

fn bits(b: &Balanced<f64>) -> Vec<u64> {
    b.x.iter().flatten().map(|v| v.to_bits()).collect()
}

fn balancing() -> Outcome {
    let mut synthetic = 0;
    for seed in 0..5 {
        let (x, y) = imbalanced_fixture(100 + seed);
        for method in [BalanceMethod::Smote, BalanceMethod::Adasyn] {
            let cfg = BalancerConfig {
                method,
                k_neighbors: 5,
                seed,
            };
            let out = balance(&x, &y, &cfg).map_err(|e| e.to_string())?;
            let mut counts = BTreeMap::new();
            for l in &out.y {
                *counts.entry(*l).or_insert(0usize) += 1;
            }
            if counts.len() != 3 || counts.values().any(|&c| c != 40) {
                return Err(format!("{method} seed {seed}: counts {counts:?}"));
            }
            if out.x[..x.len()] != x[..] || out.y[..y.len()] != y[..] {
                return Err(format!("{method}: originals altered"));
            }
            for (row, &label) in out.x.iter().zip(&out.y).skip(x.len()) {
                let members: Vec<&Vec<f64>> = x
                    .iter()
                    .zip(&y)
                    .filter(|(_, &l)| l == label)
                    .map(|(r, _)| r)
                    .collect();
                if !convex_member(row, &members) {
                    return Err(format!("{method}: synthetic {row:?} not between two {label} rows"));
                }
                synthetic += 1;
            }
            let again = balance(&x, &y, &cfg).map_err(|e| e.to_string())?;
            if bits(&out) != bits(&again) || out.y != again.y {
                return Err(format!("{method} seed {seed}: rerun differs"));
            }
        }
    }
    Ok(format!("{synthetic} synthetic rows verified"))
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let (train, test) = separable_split(100, 30, 2024);
    let cfg = PipelineConfig {
        model: ModelKind::Svm,
        seed: 42,
        ..Default::default()
    };
    let out = run_pipeline(&train, &test, &cfg, &Preprocessor::shipped()).map_err(|e| e.to_string())?;
    let f1 = out.report.macro_avg.f1;
    let elapsed = start.elapsed();
    if elapsed > Duration::from_secs(60) {
        return Err(format!("took {elapsed:?}"));
    }
    if f1 < 0.90 {
        return Err(format!("macro-F1 {f1:.4}"));
    }
    Ok(format!("macro-F1 {f1:.4} in {:.2}s", elapsed.as_secs_f64()))
}

fn precedence_rank(l: Label) -> usize {
    [Label::NonHope, Label::Neutral, Label::Hope]
        .iter()
        .position(|&p| p == l)
        .unwrap()
}

fn aggregation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut ties = 0;
    for case in 0..1000 {
        let n_comments = rng.gen_range(1..=4);
        let n_annotators = rng.gen_range(1..=6);
        let order: Vec<String> = (0..n_comments).map(|i| format!("c{i}")).collect();
        let mut records = Vec::new();
        for c in &order {
            for a in 0..n_annotators {
                if rng.gen_bool(0.2) {
                    continue;
                }
                // Resubmissions carry strictly later timestamps.
                let rounds = rng.gen_range(1..=3);
                for r in 0..rounds {
                    records.push(AnnotationRecord {
                        comment_id: c.clone(),
                        annotator_id: format!("a{a}"),
                        label: Label::ALL[rng.gen_range(0..3)],
                        ts: (r * 10 + rng.gen_range(0..5)) as u64,
                    });
                }
            }
        }
        let min_votes = rng.gen_range(1..=4);
        let got = aggregate_records(&records, &order, min_votes);

        let mut expected = Vec::new();
        for c in &order {
            let mut counts = [0usize; 3];
            let mut voters = 0;
            for a in 0..n_annotators {
                let aid = format!("a{a}");
                let last = records
                    .iter()
                    .filter(|r| &r.comment_id == c && r.annotator_id == aid)
                    .max_by_key(|r| r.ts);
                if let Some(r) = last {
                    counts[r.label.index()] += 1;
                    voters += 1;
                }
            }
            if voters == 0 || voters < min_votes {
                continue;
            }
            let top = *counts.iter().max().unwrap();
            let mut winners: Vec<Label> = Label::ALL
                .into_iter()
                .filter(|l| counts[l.index()] == top)
                .collect();
            winners.sort_by_key(|&l| precedence_rank(l));
            expected.push((c.clone(), winners[0], winners.len() > 1, counts, voters));
        }
        if got.len() != expected.len() {
            return Err(format!("case {case}: {} results vs {}", got.len(), expected.len()));
        }
        for (g, (id, label, tie, counts, voters)) in got.iter().zip(&expected) {
            let gc = [g.votes.neutral, g.votes.non_hope, g.votes.hope];
            if &g.comment_id != id || g.label != *label || g.tie != *tie || gc != *counts || g.annotators != *voters {
                return Err(format!("case {case}: {g:?} vs {label} tie={tie} {counts:?}"));
            }
            ties += usize::from(*tie);
        }
        for _ in 0..3 {
            let mut shuffled = records.clone();
            shuffled.shuffle(&mut rng);
            if aggregate_records(&shuffled, &order, min_votes) != got {
                return Err(format!("case {case}: result depends on log order"));
            }
        }
    }
    Ok(format!("1000 vote sets, {ties} ties resolved by precedence"))
}

fn determinism() -> Outcome {
    let (train, test) = separable_split(30, 10, 9);
    let pre = Preprocessor::shipped();
    for (model, method) in [
        (ModelKind::Nb, BalanceMethod::Smote),
        (ModelKind::Lr, BalanceMethod::Adasyn),
        (ModelKind::Svm, BalanceMethod::Smote),
    ] {
        let cfg = PipelineConfig {
            model,
            balance: method,
            seed: 7,
            svm_epochs: 50,
            ..Default::default()
        };
        let first = run_pipeline(&train, &test, &cfg, &pre).map_err(|e| e.to_string())?;
        let manifest: RunManifest = serde_json::from_str(&first.manifest.to_json()).map_err(|e| e.to_string())?;
        let second = run_pipeline(&train, &test, &manifest.config, &pre).map_err(|e| e.to_string())?;
        if first.model_text() != second.model_text() {
            return Err(format!("{model}: model files differ"));
        }
        if first.report_json() != second.report_json() || first.report_text() != second.report_text() {
            return Err(format!("{model}: reports differ"));
        }
        if second.manifest != manifest {
            return Err(format!("{model}: manifest differs on rerun"));
        }
    }
    Ok("nb, lr, svm reruns byte-identical".into())
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("metric fidelity to published confusion matrices (+-0.005)", metric_fidelity),
        ("tf-idf oracle equivalence (rel err <= 1e-12)", tfidf_oracle_equivalence),
        ("naive Bayes exact oracle equivalence", nb_oracle_equivalence),
        ("logistic regression gradient check (rel err <= 1e-5)", lr_gradient_check),
        ("SMOTE/ADASYN counts, convexity, reproducibility", balancing),
        ("end-to-end SVM macro-F1 >= 0.90 on separable corpus", end_to_end),
        ("mode aggregation vs brute force, precedence, permutation", aggregation),
        ("determinism of model files and reports", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        match check() {
            Ok(detail) => println!("PASS  {name}: {detail} [{:.2}s]", start.elapsed().as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("SKIP  published SVM per-class F1 on the relabelled corpus: dataset not bundled, excluded from CI");
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
