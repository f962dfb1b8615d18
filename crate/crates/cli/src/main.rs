mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use hopeml_core::balance::BalanceMethod;
use hopeml_core::classify::ModelKind;
use hopeml_core::pipeline::PipelineConfig;
use hopeml_core::vectorize::Variant;

/// Hope-speech classification toolkit.
#[derive(Parser, Debug)]
#[command(name = "hopeml", version, about)]
struct Cli {
    /// Also print failures as a one-line JSON document on stderr.
    #[arg(long, global = true)]
    error_json: bool,

    /// Log more (-v info, -vv debug). RUST_LOG takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Preprocess a corpus CSV into a tokens file.
    Clean(CleanArgs),
    /// Turn a tokens file into TF-IDF vectors, fitting or reusing a vocabulary.
    Vectorize(VectorizeArgs),
    /// Oversample minority classes of a vectors file.
    Balance(BalanceArgs),
    /// Train a classifier on a vectors file.
    Train(TrainArgs),
    /// Predict labels for a vectors file.
    Predict(PredictArgs),
    /// Score a predictions file.
    Evaluate(EvaluateArgs),
    /// Run the annotation HTTP service.
    Serve(ServeArgs),
    /// Aggregate an annotation log and export the relabelled corpus.
    Aggregate(AggregateArgs),
    /// Preprocess, vectorize, balance, train and evaluate in one run.
    Pipeline(PipelineArgs),
}

#[derive(Args, Debug, Default)]
struct PreprocessArgs {
    /// Contraction lexicon (TAB-separated); defaults to the bundled one.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Stopword list, one word per line.
    #[arg(long)]
    stoplist: Option<PathBuf>,
    /// Suffix rules file.
    #[arg(long)]
    rules: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ColumnArgs {
    #[arg(long, default_value = "id")]
    id_column: String,
    #[arg(long, default_value = "text")]
    text_column: String,
    #[arg(long, default_value = "label")]
    label_column: String,
}

#[derive(Args, Debug)]
struct CleanArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    preprocess: PreprocessArgs,
}

#[derive(Args, Debug)]
struct VectorizeArgs {
    /// Tokens file from `clean`.
    #[arg(long)]
    input: PathBuf,
    /// Vocabulary file; written with --fit, read otherwise.
    #[arg(long)]
    vocab: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Fit the vocabulary on the input.
    #[arg(long)]
    fit: bool,
    /// Weighting used when fitting.
    #[arg(long, default_value_t = Variant::Augmented)]
    variant: Variant,
}

#[derive(Args, Debug)]
struct BalanceArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = BalanceMethod::Smote)]
    method: BalanceMethod,
    #[arg(long, default_value_t = 5)]
    k_neighbors: usize,
    /// Master seed; the balancing stage seed is derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Hyperparameter overrides shared by `train` and `pipeline`.
#[derive(Args, Debug, Default)]
struct HyperArgs {
    #[arg(long)]
    nb_alpha: Option<f64>,
    #[arg(long)]
    lr_c: Option<f64>,
    #[arg(long)]
    lr_max_iter: Option<usize>,
    #[arg(long)]
    lr_tol: Option<f64>,
    #[arg(long)]
    svm_c: Option<f64>,
    #[arg(long)]
    svm_epochs: Option<usize>,
}

impl HyperArgs {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.nb_alpha {
            cfg.nb_alpha = v;
        }
        if let Some(v) = self.lr_c {
            cfg.lr_c = v;
        }
        if let Some(v) = self.lr_max_iter {
            cfg.lr_max_iter = v;
        }
        if let Some(v) = self.lr_tol {
            cfg.lr_tol = v;
        }
        if let Some(v) = self.svm_c {
            cfg.svm_c = v;
        }
        if let Some(v) = self.svm_epochs {
            cfg.svm_epochs = v;
        }
    }
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    model: ModelKind,
    /// Master seed; per-model stage seeds are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Model file from `train`.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Predictions file from `predict`; every row needs a true label.
    #[arg(long)]
    predictions: PathBuf,
    /// JSON report.
    #[arg(long)]
    output: PathBuf,
    /// Also write the plain-text table here.
    #[arg(long)]
    text: Option<PathBuf>,
    /// Model name recorded in the report.
    #[arg(long, default_value = "unspecified")]
    model_name: String,
}

#[derive(Args, Debug)]
struct ServeArgs {
    /// Corpus CSV of comments to label.
    #[arg(long)]
    corpus: PathBuf,
    /// Append-only vote log, replayed on start.
    #[arg(long)]
    log: PathBuf,
    /// Registered annotator ids, comma-separated; empty accepts any id.
    #[arg(long, value_delimiter = ',')]
    annotators: Vec<String>,
    /// Votes a comment needs to count as fully voted.
    #[arg(long, default_value_t = hopeml_core::annotate::DEFAULT_MIN_VOTES)]
    quorum: usize,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: std::net::SocketAddr,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args, Debug)]
struct AggregateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    log: PathBuf,
    #[arg(long, default_value_t = hopeml_core::annotate::DEFAULT_MIN_VOTES)]
    min_votes: usize,
    /// Relabelled corpus CSV.
    #[arg(long)]
    output: PathBuf,
    /// Also write the aggregation results as JSON.
    #[arg(long)]
    results: Option<PathBuf>,
    #[command(flatten)]
    columns: ColumnArgs,
}

#[derive(Args, Debug)]
struct PipelineArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Directory for model, vocabulary, predictions, reports and manifest.
    #[arg(long)]
    out_dir: PathBuf,
    /// TOML file with any PipelineConfig keys. Flags override it.
    #[arg(long, conflicts_with = "from_manifest")]
    config: Option<PathBuf>,
    /// Reuse the configuration of an earlier run; input digests must match.
    #[arg(long)]
    from_manifest: Option<PathBuf>,
    #[arg(long)]
    model: Option<ModelKind>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    balance: Option<BalanceMethod>,
    #[arg(long)]
    k_neighbors: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[command(flatten)]
    hyper: HyperArgs,
    #[command(flatten)]
    columns: ColumnArgs,
    #[command(flatten)]
    preprocess: PreprocessArgs,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
}

fn main() -> ExitCode {
    let wants_json = std::env::args().any(|a| a == "--error-json");
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            if code != 0 && wants_json {
                let message = e.kind().to_string();
                eprintln!("{}", json!({ "error": { "kind": "usage", "exit_code": 1, "message": message } }));
            }
            return ExitCode::from(code);
        }
    };
    init_logging(cli.verbose);
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let failure = commands::classify(&err);
            let message = format!("{err:#}");
            eprintln!("hopeml: error: {message}");
            if cli.error_json {
                eprintln!(
                    "{}",
                    json!({ "error": { "kind": failure.kind(), "exit_code": failure.code(), "message": message } })
                );
            }
            ExitCode::from(failure.code())
        }
    }
}
