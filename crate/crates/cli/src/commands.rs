//! Subcommand argument structs and implementations.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};
use serde_json::json;

use emoji_combo_core::{
    build_vocabulary, compare_strategies, dataset, extract_samples, greedy_topk,
    mine_candidates, naive_top3, preprocess, train_bow, BowModel, Combination, EmojiTable,
    EmojiVocabulary, Error, EvalReport, ExternalModel, ProbabilityModel, Ranker, Sample,
    StrategySpec, TrainConfig, DEFAULT_DICT_SIZE, DEFAULT_FEATURE_DIM, DEFAULT_VOCAB_SIZE,
    MAX_COMBINATION_LEN,
};

use crate::config::{pick, require, CliFailure, CliResult, FileConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    Naive,
    Greedy,
    Retrieval,
}

impl StrategyArg {
    fn parse_name(name: &str) -> CliResult<Self> {
        match name {
            "naive" => Ok(StrategyArg::Naive),
            "greedy" => Ok(StrategyArg::Greedy),
            "retrieval" => Ok(StrategyArg::Retrieval),
            other => Err(CliFailure::usage(format!(
                "unknown strategy {other:?} (expected naive, greedy or retrieval)"
            ))),
        }
    }
}

fn load_table(flag: Option<PathBuf>, file: &FileConfig) -> CliResult<Arc<EmojiTable>> {
    match flag.or_else(|| file.emoji_table.clone()) {
        Some(path) => Ok(Arc::new(EmojiTable::load(&path)?)),
        None => Ok(Arc::new(EmojiTable::bundled().clone())),
    }
}

fn validate_max_target_len(len: usize) -> CliResult<usize> {
    if (1..=MAX_COMBINATION_LEN).contains(&len) {
        Ok(len)
    } else {
        Err(CliFailure::usage(format!(
            "--max-target-len must be in 1..={MAX_COMBINATION_LEN}, got {len}"
        )))
    }
}

fn validate_thr(thr: f64) -> CliResult<f64> {
    if thr > 0.0 && thr <= 1.0 {
        Ok(thr)
    } else {
        Err(CliFailure::usage(format!(
            "--thr must be in (0, 1], got {thr}"
        )))
    }
}

fn validate_pen(pen: f64) -> CliResult<f64> {
    if pen.is_finite() && pen >= 0.0 {
        Ok(pen)
    } else {
        Err(CliFailure::usage(format!("--pen must be >= 0, got {pen}")))
    }
}

#[derive(Debug, Args)]
pub struct BuildDatasetArgs {
    /// Corpus JSONL file (one {"text": ...} object per line).
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Output vocabulary TSV.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Output dataset JSONL.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Vocabulary size K.
    #[arg(long)]
    k: Option<usize>,
    /// Maximum target combination length.
    #[arg(long)]
    max_target_len: Option<usize>,
    /// Emoji table TSV overriding the bundled Unicode 11.0 table.
    #[arg(long)]
    emoji_table: Option<PathBuf>,
}

pub fn build_dataset(args: BuildDatasetArgs, file: &FileConfig) -> CliResult {
    let corpus = require(args.corpus, file.corpus.clone(), "corpus")?;
    let vocab_path = require(args.vocab, file.vocab.clone(), "vocab")?;
    let dataset_path = require(args.dataset, file.dataset.clone(), "dataset")?;
    let k = pick(args.k, file.k, DEFAULT_VOCAB_SIZE);
    let max_len = validate_max_target_len(pick(
        args.max_target_len,
        file.max_target_len,
        MAX_COMBINATION_LEN,
    ))?;
    let table = load_table(args.emoji_table, file)?;

    let posts: Vec<String> = dataset::CorpusReader::open(&corpus)?
        .map(|r| r.map(|text| preprocess(&text)))
        .collect::<Result<_, _>>()?;
    let vocab = build_vocabulary(&posts, k, &table)?;
    let samples: Vec<Sample> = posts
        .iter()
        .flat_map(|p| extract_samples(p, &vocab, &table, max_len))
        .collect();
    if samples.is_empty() {
        return Err(Error::NoSamples(format!(
            "{} yields no (context, target) samples",
            corpus.display()
        ))
        .into());
    }

    dataset::write_vocabulary(&vocab_path, &vocab)?;
    dataset::write_dataset(&dataset_path, &samples, &vocab)?;
    println!(
        "vocabulary: {} emojis -> {}",
        vocab.k(),
        vocab_path.display()
    );
    println!(
        "dataset: {} samples from {} posts -> {}",
        samples.len(),
        posts.len(),
        dataset_path.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct MineCandidatesArgs {
    /// Dataset JSONL with training samples.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Vocabulary TSV the dataset was built against.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Output candidate dictionary TSV.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Dictionary size N (top combinations kept).
    #[arg(long)]
    dict_size: Option<usize>,
}

pub fn mine(args: MineCandidatesArgs, file: &FileConfig) -> CliResult {
    let dataset_path = require(args.dataset, file.dataset.clone(), "dataset")?;
    let vocab_path = require(args.vocab, file.vocab.clone(), "vocab")?;
    let dict_path = require(args.dict, file.dict.clone(), "dict")?;
    let n = pick(args.dict_size, file.dict_size, DEFAULT_DICT_SIZE);

    let vocab = dataset::read_vocabulary(&vocab_path)?;
    let samples = dataset::read_dataset(&dataset_path, &vocab)?;
    let dict = mine_candidates(&samples, n, vocab.k())?;
    dataset::write_candidates(&dict_path, &dict, &vocab)?;
    println!(
        "dictionary: {} candidates ({} mined from {} samples) -> {}",
        dict.len(),
        dict.candidates().iter().filter(|c| c.frequency > 0).count(),
        samples.len(),
        dict_path.display()
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training dataset JSONL.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Vocabulary TSV.
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Output model checkpoint.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Learning rate for plain mini-batch gradient descent.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Hashed feature space size.
    #[arg(long)]
    feature_dim: Option<usize>,
    #[arg(long)]
    emoji_table: Option<PathBuf>,
    /// Print the mean loss of every epoch instead of just the last.
    #[arg(long)]
    verbose: bool,
}

pub fn train(args: TrainArgs, file: &FileConfig) -> CliResult {
    let dataset_path = require(args.dataset, file.dataset.clone(), "dataset")?;
    let vocab_path = require(args.vocab, file.vocab.clone(), "vocab")?;
    let model_path = require(args.model, file.model.clone(), "model")?;
    let config = TrainConfig {
        epochs: pick(args.epochs, file.epochs, 30),
        batch_size: pick(args.batch_size, file.batch_size, 64),
        learning_rate: pick(args.lr, file.lr, 0.5),
        seed: pick(args.seed, file.seed, 42),
        feature_dim: pick(args.feature_dim, file.feature_dim, DEFAULT_FEATURE_DIM),
    };
    let table = load_table(args.emoji_table, file)?;

    let vocab = dataset::read_vocabulary(&vocab_path)?;
    let samples = dataset::read_dataset(&dataset_path, &vocab)?;
    let trained = train_bow(&samples, vocab.k(), table, vocab.checksum(), &config)?;
    trained.model.save(&model_path)?;
    if args.verbose {
        for (epoch, loss) in trained.epoch_loss.iter().enumerate() {
            println!("epoch {epoch}: mean loss {loss:.6}");
        }
    }
    match trained.epoch_loss.last() {
        Some(loss) => println!(
            "trained {} epochs on {} samples, final mean loss {loss:.6} -> {}",
            config.epochs,
            samples.len(),
            model_path.display()
        ),
        None => println!(
            "trained 0 epochs (initialized model) -> {}",
            model_path.display()
        ),
    }
    Ok(())
}

/// Loads the model side of predict/evaluate: a checkpoint or an external
/// distributions file, never both.
fn load_model(
    model: Option<PathBuf>,
    external: Option<PathBuf>,
    table: Arc<EmojiTable>,
    vocab: &EmojiVocabulary,
    contexts: &[String],
) -> CliResult<Box<dyn ProbabilityModel>> {
    match (model, external) {
        (Some(_), Some(_)) => Err(CliFailure::usage(
            "--model and --external are mutually exclusive",
        )),
        (None, None) => Err(CliFailure::usage(
            "one of --model or --external is required",
        )),
        (Some(path), None) => {
            let model = BowModel::load(&path, table)?;
            let expected = vocab.checksum();
            if model.vocab_checksum() != expected {
                return Err(Error::ChecksumMismatch {
                    artifact: format!("model {}", path.display()),
                    expected: model.vocab_checksum().to_string(),
                    found: expected,
                }
                .into());
            }
            Ok(Box::new(model))
        }
        (None, Some(path)) => Ok(Box::new(ExternalModel::load(&path, contexts, vocab.k())?)),
    }
}

/// Dataset records for prediction: `"context"` required, `"target"` optional.
fn read_contexts(path: &Path) -> CliResult<Vec<String>> {
    use std::io::BufRead;
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut contexts = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        match value.get("context").and_then(|v| v.as_str()) {
            Some(ctx) => contexts.push(ctx.to_string()),
            None => {
                return Err(Error::parse(path, i + 1, "missing \"context\" field").into());
            }
        }
    }
    if contexts.is_empty() {
        return Err(Error::NoSamples(format!("{} has no contexts", path.display())).into());
    }
    Ok(contexts)
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Input JSONL; each line needs a "context" field.
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Candidate dictionary TSV (required for the retrieval strategy).
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Trained model checkpoint.
    #[arg(long)]
    model: Option<PathBuf>,
    /// CSV of externally computed distributions, one row per input line.
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    /// Greedy cumulative-probability threshold.
    #[arg(long)]
    thr: Option<f64>,
    /// Retrieval size penalty.
    #[arg(long)]
    pen: Option<f64>,
    /// Output predictions JSONL (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    emoji_table: Option<PathBuf>,
}

struct ResolvedStrategy {
    arg: StrategyArg,
    thr: f64,
    pen: f64,
}

impl ResolvedStrategy {
    fn resolve(
        strategy: Option<StrategyArg>,
        thr: Option<f64>,
        pen: Option<f64>,
        file: &FileConfig,
    ) -> CliResult<Self> {
        let arg = match strategy {
            Some(s) => s,
            None => match &file.strategy {
                Some(name) => StrategyArg::parse_name(name)?,
                None => StrategyArg::Retrieval,
            },
        };
        Ok(ResolvedStrategy {
            arg,
            thr: validate_thr(pick(thr, file.thr, 0.3))?,
            pen: validate_pen(pick(pen, file.pen, 0.3))?,
        })
    }

    fn spec(&self) -> StrategySpec {
        match self.arg {
            StrategyArg::Naive => StrategySpec::Naive,
            StrategyArg::Greedy => StrategySpec::Greedy { threshold: self.thr },
            StrategyArg::Retrieval => StrategySpec::Retrieval { penalty: self.pen },
        }
    }
}

/// Applies one strategy to one distribution, returning the combination and
/// its reported score (the candidate cross-entropy; penalized for retrieval).
pub fn apply_strategy(
    spec: &StrategySpec,
    p: &emoji_combo_core::ProbDistribution,
    ranker: Option<&Ranker>,
) -> Result<(Combination, f64), Error> {
    match spec {
        StrategySpec::Naive => {
            let c = naive_top3(p)?;
            let score = emoji_combo_core::score_candidate(p, &c);
            Ok((c, score))
        }
        StrategySpec::Greedy { threshold } => {
            let c = greedy_topk(p, *threshold, MAX_COMBINATION_LEN);
            let score = emoji_combo_core::score_candidate(p, &c);
            Ok((c, score))
        }
        StrategySpec::Retrieval { penalty } => {
            let ranked = ranker
                .expect("retrieval strategy requires a dictionary")
                .predict(p, *penalty);
            Ok((ranked.combination, ranked.score))
        }
    }
}

pub fn predict(args: PredictArgs, file: &FileConfig) -> CliResult {
    let dataset_path = require(args.dataset, file.dataset.clone(), "dataset")?;
    let vocab_path = require(args.vocab, file.vocab.clone(), "vocab")?;
    let strategy = ResolvedStrategy::resolve(args.strategy, args.thr, args.pen, file)?;
    let table = load_table(args.emoji_table, file)?;

    let vocab = dataset::read_vocabulary(&vocab_path)?;
    let contexts = read_contexts(&dataset_path)?;
    let model = load_model(
        args.model.or_else(|| file.model.clone()),
        args.external.or_else(|| file.external.clone()),
        table,
        &vocab,
        &contexts,
    )?;

    let dict = match (strategy.arg, args.dict.or_else(|| file.dict.clone())) {
        (StrategyArg::Retrieval, None) => {
            return Err(CliFailure::usage(
                "--dict is required for the retrieval strategy",
            ));
        }
        (_, Some(path)) => Some(dataset::read_candidates(&path, &vocab)?),
        (_, None) => None,
    };
    let ranker = dict.as_ref().map(Ranker::new);
    let spec = strategy.spec();

    let mut lines = Vec::with_capacity(contexts.len() + 1);
    lines.push(json!({ "vocab_sha256": vocab.checksum() }).to_string());
    for (i, context) in contexts.iter().enumerate() {
        let p = model.predict_sample(i, context);
        let (combination, score) = apply_strategy(&spec, &p, ranker.as_ref())?;
        let rendered: Vec<&str> = combination
            .ids()
            .iter()
            .map(|&id| vocab.emoji(id).as_str())
            .collect();
        lines.push(
            json!({ "context": context, "prediction": rendered, "score": score }).to_string(),
        );
    }

    match args.out.or_else(|| file.out.clone()) {
        Some(path) => {
            dataset::atomic_write(&path, |w| {
                for line in &lines {
                    writeln!(w, "{line}").map_err(|e| Error::io(&path, e))?;
                }
                Ok(())
            })?;
            println!("{} predictions -> {}", contexts.len(), path.display());
        }
        None => {
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            for line in &lines {
                writeln!(out, "{line}")
                    .map_err(|e| CliFailure::data(format!("writing stdout: {e}")))?;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Test dataset JSONL (contexts and targets).
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    dict: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    external: Option<PathBuf>,
    /// Output report CSV.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Comma-separated greedy thresholds for the grid.
    #[arg(long)]
    thr_grid: Option<String>,
    /// Comma-separated retrieval penalties for the grid.
    #[arg(long)]
    pen_grid: Option<String>,
    #[arg(long)]
    emoji_table: Option<PathBuf>,
}

fn parse_grid(raw: &str, what: &str) -> CliResult<Vec<f64>> {
    raw.split(',')
        .map(|tok| {
            tok.trim()
                .parse::<f64>()
                .map_err(|_| CliFailure::usage(format!("bad {what} value {tok:?}")))
        })
        .collect()
}

pub fn evaluate(args: EvaluateArgs, file: &FileConfig) -> CliResult {
    let dataset_path = require(args.dataset, file.dataset.clone(), "dataset")?;
    let vocab_path = require(args.vocab, file.vocab.clone(), "vocab")?;
    let dict_path = require(args.dict, file.dict.clone(), "dict")?;
    let report_path = require(args.report, file.report.clone(), "report")?;
    let table = load_table(args.emoji_table, file)?;

    let thr_grid = match args.thr_grid.as_deref().or(file.thr_grid.as_deref()) {
        Some(raw) => parse_grid(raw, "threshold")?,
        None => vec![0.4, 0.3, 0.2],
    };
    let pen_grid = match args.pen_grid.as_deref().or(file.pen_grid.as_deref()) {
        Some(raw) => parse_grid(raw, "penalty")?,
        None => vec![0.0, 0.2, 0.3, 0.4],
    };
    let mut grid = vec![StrategySpec::Naive];
    for &thr in &thr_grid {
        grid.push(StrategySpec::Greedy {
            threshold: validate_thr(thr)?,
        });
    }
    for &pen in &pen_grid {
        grid.push(StrategySpec::Retrieval {
            penalty: validate_pen(pen)?,
        });
    }

    let vocab = dataset::read_vocabulary(&vocab_path)?;
    let samples = dataset::read_dataset(&dataset_path, &vocab)?;
    let contexts: Vec<String> = samples.iter().map(|s| s.context.clone()).collect();
    let model = load_model(
        args.model.or_else(|| file.model.clone()),
        args.external.or_else(|| file.external.clone()),
        table,
        &vocab,
        &contexts,
    )?;
    let dict = dataset::read_candidates(&dict_path, &vocab)?;

    let reports = compare_strategies(model.as_ref(), &samples, &dict, &grid)?;
    let csv = emoji_combo_core::report_csv(&reports);
    dataset::atomic_write(&report_path, |w| {
        w.write_all(csv.as_bytes())
            .map_err(|e| Error::io(&report_path, e))
    })?;
    print_table(&reports);
    println!("report -> {}", report_path.display());
    Ok(())
}

fn print_table(reports: &[EvalReport]) {
    println!(
        "{:<22} {:>9} {:>12} {:>8} {:>8} {:>8}",
        "strategy", "recall(%)", "precision(%)", "F1(x100)", "exact(%)", "n"
    );
    for r in reports {
        let name = if r.params.is_empty() {
            r.strategy.clone()
        } else {
            format!("{} {}", r.strategy, r.params)
        };
        println!(
            "{:<22} {:>9.1} {:>12.1} {:>8.1} {:>8.1} {:>8}",
            name,
            r.recall_pct(),
            r.precision_pct(),
            r.f1_x100(),
            r.exact_match_pct(),
            r.n_samples
        );
    }
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Default strategy for requests that do not name one.
    #[arg(long, value_enum)]
    strategy: Option<StrategyArg>,
    #[arg(long)]
    thr: Option<f64>,
    #[arg(long)]
    pen: Option<f64>,
    /// Listen on a TCP port instead of stdin/stdout.
    #[arg(long)]
    serve_port: Option<u16>,
    #[arg(long)]
    emoji_table: Option<PathBuf>,
}

pub fn serve(args: ServeArgs, file: &FileConfig) -> CliResult {
    let vocab_path = require(args.vocab, file.vocab.clone(), "vocab")?;
    let model_path = require(args.model, file.model.clone(), "model")?;
    let dict_path = require(args.dict, file.dict.clone(), "dict")?;
    let strategy = ResolvedStrategy::resolve(args.strategy, args.thr, args.pen, file)?;
    let table = load_table(args.emoji_table, file)?;

    let vocab = dataset::read_vocabulary(&vocab_path)?;
    let model = BowModel::load(&model_path, table)?;
    let expected = vocab.checksum();
    if model.vocab_checksum() != expected {
        return Err(Error::ChecksumMismatch {
            artifact: format!("model {}", model_path.display()),
            expected: model.vocab_checksum().to_string(),
            found: expected,
        }
        .into());
    }
    let dict = dataset::read_candidates(&dict_path, &vocab)?;

    let state = crate::serve::ServeState {
        model,
        vocab,
        dict,
        default_strategy: strategy.arg,
        default_thr: strategy.thr,
        default_pen: strategy.pen,
    };
    match args.serve_port.or(file.serve_port) {
        Some(port) => crate::serve::run_tcp(state, port),
        None => crate::serve::run_stdio(state),
    }
}
