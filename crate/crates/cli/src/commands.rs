use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::BufReader;
use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde_json::json;

use hopeml_core::annotate::{aggregate_records, export_relabelled, read_log, AnnotationStore};
use hopeml_core::balance::BalanceMethod;
use hopeml_core::classify::ClassifierModel;
use hopeml_core::corpus::{load_dataset, ColumnSpec, Dataset};
use hopeml_core::evaluate::{confusion, render_text, ClassReport, ReportDocument};
use hopeml_core::formats::{
    load_predictions, load_tokens, load_vectors, save_predictions, save_tokens, save_vectors, Prediction, Row,
    TokenRow, VectorFile,
};
use hopeml_core::pipeline::{balance_sparse, dataset_digest, run_pipeline, Digests, PipelineConfig, RunManifest, Timestamps};
use hopeml_core::preprocess::{ContractionLexicon, Preprocessor, Stoplist, SuffixRules, TokenSeq};
use hopeml_core::vectorize::{SparseVector, TfidfModel};
use hopeml_core::{Error, Label};

use crate::manifest::{now_ms, StepManifest};
use crate::{
    AggregateArgs, BalanceArgs, CleanArgs, ColumnArgs, Command, EvaluateArgs, PipelineArgs, PredictArgs,
    PreprocessArgs, ServeArgs, TrainArgs, VectorizeArgs,
};

/// Exit status classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failure {
    Usage,
    Data,
    Internal,
}

impl Failure {
    pub fn code(self) -> u8 {
        match self {
            Failure::Usage => 1,
            Failure::Data => 2,
            Failure::Internal => 3,
        }
    }

    pub fn kind(self) -> &'static str {
        match self {
            Failure::Usage => "usage",
            Failure::Data => "data",
            Failure::Internal => "internal",
        }
    }
}

#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug)]
pub struct DataError(pub String);

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

pub fn classify(err: &anyhow::Error) -> Failure {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return Failure::Usage;
        }
        if cause.is::<DataError>()
            || cause.is::<std::io::Error>()
            || cause.is::<serde_json::Error>()
            || cause.is::<toml::de::Error>()
        {
            return Failure::Data;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::InvalidArgument(_) => Failure::Usage,
                Error::NonFinite { .. } => Failure::Internal,
                _ => Failure::Data,
            };
        }
    }
    Failure::Internal
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Clean(a) => clean(a),
        Command::Vectorize(a) => vectorize(a),
        Command::Balance(a) => balance(a),
        Command::Train(a) => train(a),
        Command::Predict(a) => predict(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Serve(a) => serve(a),
        Command::Aggregate(a) => aggregate(a),
        Command::Pipeline(a) => pipeline(a),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }.into())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    }.into())
}

fn column_spec(c: &ColumnArgs) -> ColumnSpec {
    ColumnSpec {
        id: c.id_column.clone(),
        text: c.text_column.clone(),
        label: c.label_column.clone(),
    }
}

fn load_corpus(path: &Path, columns: &ColumnArgs) -> Result<Dataset> {
    let loaded = load_dataset(path, &column_spec(columns))
        .with_context(|| format!("loading {}", path.display()))?;
    Ok(loaded.dataset)
}

fn preprocessor(args: &PreprocessArgs) -> Result<Preprocessor> {
    fn load<T>(path: &Option<std::path::PathBuf>, parse: fn(&str) -> hopeml_core::Result<T>, shipped: fn() -> T) -> Result<T> {
        match path {
            Some(p) => parse(&read_text(p)?).with_context(|| format!("parsing {}", p.display())),
            None => Ok(shipped()),
        }
    }
    Ok(Preprocessor::new(
        load(&args.lexicon, ContractionLexicon::parse, ContractionLexicon::shipped)?,
        load(&args.stoplist, Stoplist::parse, Stoplist::shipped)?,
        load(&args.rules, SuffixRules::parse, SuffixRules::shipped)?,
    ))
}

fn preprocess_digests(pre: &Preprocessor) -> serde_json::Value {
    json!({
        "lexicon": pre.lexicon.digest(),
        "stoplist": pre.stoplist.digest(),
        "rules": pre.rules.digest(),
    })
}

fn labelled(rows: &[Row<SparseVector<f64>>], path: &Path) -> Result<Vec<Label>> {
    rows.iter()
        .map(|r| {
            r.label
                .ok_or_else(|| DataError(format!("{}: row {:?} has no label", path.display(), r.id)).into())
        })
        .collect()
}

fn clean(a: CleanArgs) -> Result<()> {
    let started = now_ms();
    let pre = preprocessor(&a.preprocess)?;
    let ds = load_corpus(&a.input, &a.columns)?;
    let rows: Vec<TokenRow> = ds
        .examples
        .iter()
        .map(|e| Row {
            id: e.id.clone(),
            label: e.label,
            payload: pre.process(&e.text),
        })
        .collect();
    save_tokens(&rows, &a.output)?;
    let params = json!({ "preprocess": preprocess_digests(&pre) });
    StepManifest::new("clean", params, &[&a.input])?.finish(started, &[&a.output])?;
    log::info!("clean: {} rows -> {}", rows.len(), a.output.display());
    Ok(())
}

fn vectorize(a: VectorizeArgs) -> Result<()> {
    let started = now_ms();
    let rows = load_tokens(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    let docs: Vec<TokenSeq> = rows.iter().map(|r| r.payload.clone()).collect();
    let model = if a.fit {
        let model = TfidfModel::<f64>::fit(&docs, a.variant)?;
        let mut buf = Vec::new();
        model.write_vocabulary(&mut buf)?;
        fs::write(&a.vocab, buf).map_err(|e| Error::Io {
            path: a.vocab.clone(),
            source: e,
        })?;
        model
    } else {
        let file = fs::File::open(&a.vocab).map_err(|e| Error::Io {
            path: a.vocab.clone(),
            source: e,
        })?;
        TfidfModel::read_vocabulary(BufReader::new(file)).with_context(|| format!("reading {}", a.vocab.display()))?
    };
    let vectors = VectorFile {
        dim: model.dim(),
        rows: rows
            .into_iter()
            .zip(model.transform_all(&docs))
            .map(|(r, v)| Row {
                id: r.id,
                label: r.label,
                payload: v,
            })
            .collect(),
    };
    save_vectors(&vectors, &a.output)?;
    let params = json!({ "fit": a.fit, "variant": model.variant().to_string(), "dim": model.dim() });
    if a.fit {
        StepManifest::new("vectorize", params, &[&a.input])?.finish(started, &[&a.output, &a.vocab])?;
    } else {
        StepManifest::new("vectorize", params, &[&a.input, &a.vocab])?.finish(started, &[&a.output])?;
    }
    Ok(())
}

fn balance(a: BalanceArgs) -> Result<()> {
    let started = now_ms();
    if a.method == BalanceMethod::None {
        log::info!("balance: method none copies the input");
    }
    let file = load_vectors::<f64>(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    let y = labelled(&file.rows, &a.input)?;
    let x: Vec<SparseVector<f64>> = file.rows.iter().map(|r| r.payload.clone()).collect();
    let cfg = PipelineConfig {
        balance: a.method,
        k_neighbors: a.k_neighbors,
        seed: a.seed,
        ..Default::default()
    };
    let balancer = cfg.balancer();
    let (bx, by, skipped) = balance_sparse(&x, &y, file.dim, &balancer)?;
    let ids: HashSet<&str> = file.rows.iter().map(|r| r.id.as_str()).collect();
    let mut rows = file.rows.clone();
    for (n, (v, label)) in bx.into_iter().zip(by).enumerate().skip(x.len()) {
        let id = format!("synthetic-{}", n - x.len());
        if ids.contains(id.as_str()) {
            bail!(DataError(format!("input already uses the id {id:?} reserved for synthetic rows")));
        }
        rows.push(Row {
            id,
            label: Some(label),
            payload: v,
        });
    }
    let added = rows.len() - file.rows.len();
    save_vectors(&VectorFile { dim: file.dim, rows }, &a.output)?;
    let params = json!({
        "method": a.method.to_string(),
        "k_neighbors": a.k_neighbors,
        "seed": a.seed,
        "stage_seed": balancer.seed,
        "skipped": skipped,
        "synthetic_rows": added,
    });
    StepManifest::new("balance", params, &[&a.input])?.finish(started, &[&a.output])?;
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let started = now_ms();
    let file = load_vectors::<f64>(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    let y = labelled(&file.rows, &a.input)?;
    let x: Vec<SparseVector<f64>> = file.rows.iter().map(|r| r.payload.clone()).collect();
    let mut cfg = PipelineConfig {
        model: a.model,
        seed: a.seed,
        ..Default::default()
    };
    a.hyper.apply(&mut cfg);
    let model = ClassifierModel::train(a.model, &x, &y, file.dim, &cfg.train_config())?;
    model.save(&a.output)?;
    let params = json!({ "config": cfg });
    StepManifest::new("train", params, &[&a.input])?.finish(started, &[&a.output])?;
    Ok(())
}

fn predict(a: PredictArgs) -> Result<()> {
    let started = now_ms();
    let model = ClassifierModel::<f64>::load(&a.model).with_context(|| format!("loading {}", a.model.display()))?;
    let file = load_vectors::<f64>(&a.input).with_context(|| format!("loading {}", a.input.display()))?;
    if file.dim != model.n_features() {
        bail!(DataError(format!(
            "{} has {} features but the model expects {}",
            a.input.display(),
            file.dim,
            model.n_features()
        )));
    }
    let rows: Vec<Prediction> = file
        .rows
        .iter()
        .map(|r| Prediction {
            id: r.id.clone(),
            truth: r.label,
            predicted: model.predict(&r.payload),
        })
        .collect();
    save_predictions(&rows, &a.output)?;
    let params = json!({ "model": model.kind().as_str() });
    StepManifest::new("predict", params, &[&a.model, &a.input])?.finish(started, &[&a.output])?;
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let started = now_ms();
    let rows = load_predictions(&a.predictions).with_context(|| format!("loading {}", a.predictions.display()))?;
    let mut truth = Vec::with_capacity(rows.len());
    for r in &rows {
        let t = r
            .truth
            .ok_or_else(|| DataError(format!("{}: row {:?} has no true label", a.predictions.display(), r.id)))?;
        truth.push(t);
    }
    let predicted: Vec<Label> = rows.iter().map(|r| r.predicted).collect();
    let cm = confusion(&truth, &predicted)?;
    let report = ClassReport::from_confusion(&cm);
    let manifest = StepManifest::new("evaluate", json!({ "model_name": a.model_name }), &[&a.predictions])?;
    let doc = ReportDocument::new(&a.model_name, &cm, &report, manifest.timeless());
    write_text(&a.output, &doc.to_json())?;
    let mut outputs = vec![a.output.as_path()];
    if let Some(text) = &a.text {
        write_text(text, &render_text(&a.model_name, &cm, &report))?;
        outputs.push(text);
    }
    manifest.finish(started, &outputs)?;
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    let started = now_ms();
    let ds = load_corpus(&a.corpus, &a.columns)?;
    let store = AnnotationStore::open(&ds, Some(&a.log), &a.annotators, a.quorum)
        .with_context(|| format!("opening {}", a.log.display()))?;
    let params = json!({ "annotators": a.annotators, "quorum": a.quorum, "addr": a.addr.to_string() });
    StepManifest::new("serve", params, &[&a.corpus])?.finish(started, &[&a.log])?;
    let runtime = tokio::runtime::Runtime::new().context("starting async runtime")?;
    runtime.block_on(hopeml_server::serve(a.addr, Arc::new(store)))?;
    Ok(())
}

fn aggregate(a: AggregateArgs) -> Result<()> {
    let started = now_ms();
    let ds = load_corpus(&a.corpus, &a.columns)?;
    if !a.log.is_file() {
        bail!(DataError(format!("{}: no such log file", a.log.display())));
    }
    let records = read_log(&a.log).with_context(|| format!("reading {}", a.log.display()))?;
    let order: Vec<String> = ds.examples.iter().map(|e| e.id.clone()).collect();
    let known: HashSet<&str> = order.iter().map(String::as_str).collect();
    if let Some(r) = records.iter().find(|r| !known.contains(r.comment_id.as_str())) {
        return Err(Error::UnknownComment(r.comment_id.clone())).with_context(|| format!("reading {}", a.log.display()));
    }
    let results = aggregate_records(&records, &order, a.min_votes);
    export_relabelled(&results, &ds, &a.output)?;
    let mut outputs = vec![a.output.as_path()];
    if let Some(path) = &a.results {
        let mut text = serde_json::to_string_pretty(&results)?;
        text.push('\n');
        write_text(path, &text)?;
        outputs.push(path);
    }
    let params = json!({ "min_votes": a.min_votes, "aggregated": results.len() });
    StepManifest::new("aggregate", params, &[&a.corpus, &a.log])?.finish(started, &outputs)?;
    Ok(())
}

fn resolve_config(a: &PipelineArgs) -> Result<(PipelineConfig, Option<Digests>)> {
    let (mut cfg, expected) = if let Some(path) = &a.config {
        let cfg = toml::from_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
        (cfg, None)
    } else if let Some(path) = &a.from_manifest {
        let m: RunManifest =
            serde_json::from_str(&read_text(path)?).with_context(|| format!("parsing {}", path.display()))?;
        (m.config, Some(m.digests))
    } else {
        (PipelineConfig::default(), None)
    };
    if let Some(v) = a.model {
        cfg.model = v;
    }
    if let Some(v) = a.variant {
        cfg.variant = v;
    }
    if let Some(v) = a.balance {
        cfg.balance = v;
    }
    if let Some(v) = a.k_neighbors {
        cfg.k_neighbors = v;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    a.hyper.apply(&mut cfg);
    Ok((cfg, expected))
}

fn check_digests(expected: &Digests, actual: &Digests) -> Result<()> {
    let pairs = [
        ("lexicon", &expected.lexicon, &actual.lexicon),
        ("stoplist", &expected.stoplist, &actual.stoplist),
        ("rules", &expected.rules, &actual.rules),
        ("train", &expected.train, &actual.train),
        ("test", &expected.test, &actual.test),
    ];
    let differing: Vec<&str> = pairs
        .iter()
        .filter(|(_, e, a)| e != a)
        .map(|(name, _, _)| *name)
        .collect();
    if !differing.is_empty() {
        bail!(DataError(format!(
            "inputs differ from the manifest: {}",
            differing.join(", ")
        )));
    }
    Ok(())
}

fn pipeline(a: PipelineArgs) -> Result<()> {
    let started = now_ms();
    let (cfg, expected) = resolve_config(&a)?;
    let pre = preprocessor(&a.preprocess)?;
    let train = load_corpus(&a.train, &a.columns)?;
    let test = load_corpus(&a.test, &a.columns)?;
    if let Some(expected) = &expected {
        let actual = Digests {
            lexicon: pre.lexicon.digest().to_string(),
            stoplist: pre.stoplist.digest().to_string(),
            rules: pre.rules.digest().to_string(),
            train: dataset_digest(&train),
            test: dataset_digest(&test),
        };
        check_digests(expected, &actual)?;
    }
    let out = run_pipeline(&train, &test, &cfg, &pre)?;

    fs::create_dir_all(&a.out_dir).map_err(|e| Error::Io {
        path: a.out_dir.clone(),
        source: e,
    })?;
    let dir = &a.out_dir;
    out.model.save(dir.join("model.txt"))?;
    let mut vocab = Vec::new();
    out.vectorizer.write_vocabulary(&mut vocab)?;
    write_text(&dir.join("vocab.tsv"), &String::from_utf8(vocab)?)?;
    let predictions: Vec<Prediction> = out
        .test_ids
        .iter()
        .zip(&out.truth)
        .zip(&out.predictions)
        .map(|((id, &t), &p)| Prediction {
            id: id.clone(),
            truth: Some(t),
            predicted: p,
        })
        .collect();
    save_predictions(&predictions, dir.join("predictions.tsv"))?;
    write_text(&dir.join("report.json"), &out.report_json())?;
    write_text(&dir.join("report.txt"), &out.report_text())?;
    let mut manifest = out.manifest.clone();
    manifest.timestamps = Some(Timestamps {
        started_unix_ms: started,
        finished_unix_ms: now_ms(),
    });
    write_text(&dir.join("manifest.json"), &manifest.to_json())?;
    println!("{}", out.report_text().trim_end());
    Ok(())
}
