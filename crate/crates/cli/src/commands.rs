use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use emosuggest_core::classifier::{evaluate, load_model, read_labeled, save_model, split_dataset, train, AccuracyReport, DEFAULT_SPLIT};
use emosuggest_core::corpus::ingest_corpus;
use emosuggest_core::evaluation::{
    attach_suggestions, build_report, collect_item_ranks, read_item_emotions, read_worker_ranks, select_eval_messages,
    write_items, write_worker_ranks, SyntheticWorkers,
};
use emosuggest_core::session::TimingConfig;
use emosuggest_core::{Bm25Params, ColorMap, CorpusError, Emotion, InvertedIndex, Suggester, TrainConfig};
use emosuggest_service::{AppState, ServiceConfig};
use tracing::info;

use crate::demo;

/// Exit code for a corpus with too many malformed lines.
pub const EXIT_MALFORMED: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "emosuggest", version, about = "Emotion-aware response suggestion toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a dialog corpus, pair turns and build the BM25 index.
    Ingest {
        corpus: PathBuf,
        /// Model used to label messages without a gold label.
        #[arg(long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        bm25: Bm25Args,
    },
    /// Train the emotion classifier on a `label<TAB>text` file.
    Train(TrainArgs),
    #[command(subcommand)]
    Evaluate(EvaluateCommand),
    /// Start the HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Train on the built-in demo corpus and show suggestions.
    Demo {
        #[arg(long, default_value = "how are you?")]
        received: String,
        #[arg(long, default_value = "I am fine")]
        typed: String,
        #[arg(long, default_value_t = 40)]
        epochs: usize,
        /// Serve the demo engine on this address instead of exiting.
        #[arg(long)]
        serve: Option<SocketAddr>,
    },
}

#[derive(Debug, Args)]
pub struct Bm25Args {
    #[arg(long, default_value_t = 1.2)]
    pub k1: f64,
    #[arg(long, default_value_t = 0.75)]
    pub b: f64,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    pub labeled: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub embed_dim: usize,
    #[arg(long, default_value_t = 40)]
    pub seq_len: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    /// Train on every example and select on training accuracy.
    #[arg(long)]
    pub no_split: bool,
}

#[derive(Debug, Subcommand)]
pub enum EvaluateCommand {
    /// Per-class accuracy of a saved model on a labeled file.
    Model {
        model: PathBuf,
        labeled: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Select evaluation items from a corpus and attach both suggestions.
    Select {
        corpus: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate synthetic worker ranks for an item sheet.
    Simulate {
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Mean quality of input, Baseline and +Emotion.
        #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [0.6, 0.0, 0.1])]
        quality: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
    },
    /// Aggregate worker ranks into average ranks and Good Suggestion Rates.
    Ranks {
        ranks: PathBuf,
        #[arg(long)]
        items: PathBuf,
        #[arg(long)]
        json: bool,
    },
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<CorpusError>() {
        Some(CorpusError::TooManyMalformed { .. }) => EXIT_MALFORMED,
        _ => 1,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { corpus, model, bm25 } => ingest(&corpus, model.as_deref(), Bm25Params { k1: bm25.k1, b: bm25.b }),
        Command::Train(args) => train_cmd(&args),
        Command::Evaluate(cmd) => evaluate_cmd(cmd),
        Command::Serve { config } => serve(&config),
        Command::Demo {
            received,
            typed,
            epochs,
            serve,
        } => demo_cmd(&received, &typed, epochs, serve),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn ingest(corpus: &Path, model: Option<&Path>, bm25: Bm25Params) -> Result<()> {
    let model = model.map(load_model).transpose().context("loading model")?;
    if !corpus.exists() {
        bail!("corpus {} does not exist", corpus.display());
    }
    let annotator = model.as_ref().map(|m| m as &dyn emosuggest_core::EmotionAnnotator);
    let (store, stats) = ingest_corpus(corpus, annotator)?;
    let index = InvertedIndex::build(&store, bm25)?;
    println!("lines:            {}", stats.lines);
    println!("malformed:        {}", stats.malformed);
    println!("messages:         {}", stats.messages);
    println!("dialogs:          {}", stats.dialogs);
    println!("turns:            {}", stats.turns);
    println!("gold labels:      {}", stats.gold_labels);
    println!("predicted labels: {}", stats.predicted_labels);
    println!("missing labels:   {}", stats.missing_labels);
    println!("index terms:      {}", index.vocabulary_size());
    println!("avg doc length:   {:.3}", index.avgdl());
    Ok(())
}

fn print_accuracy(report: &AccuracyReport) {
    println!("{:<14}{:>8}{:>8}{:>10}", "emotion", "correct", "total", "accuracy");
    for (emotion, tally) in &report.per_class {
        println!("{:<14}{:>8}{:>8}{:>10.4}", emotion.title(), tally.correct, tally.total, tally.accuracy());
    }
    println!("{:<14}{:>8}{:>8}{:>10.4}", "overall", report.correct(), report.total(), report.overall());
}

fn train_cmd(args: &TrainArgs) -> Result<()> {
    let examples = read_labeled(open(&args.labeled)?).with_context(|| format!("reading {}", args.labeled.display()))?;
    let config = TrainConfig {
        embed_dim: args.embed_dim,
        seq_len: args.seq_len,
        learning_rate: args.lr,
        epochs: args.epochs,
        batch_size: args.batch_size,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let (model, report, test) = if args.no_split {
        let (model, report) = train(&examples, &[], &config)?;
        (model, report, examples)
    } else {
        let split = split_dataset(&examples, DEFAULT_SPLIT, args.seed)?;
        println!("split: {} train, {} valid, {} test", split.train.len(), split.valid.len(), split.test.len());
        let (model, report) = train(&split.train, &split.valid, &config)?;
        (model, report, split.test)
    };
    for e in &report.epochs {
        info!(epoch = e.epoch, loss = e.mean_loss, train = e.train_accuracy, valid = ?e.valid_accuracy, "epoch");
    }
    println!("kept epoch {} of {}", report.best_epoch, report.epochs.len());
    if report.skipped_examples > 0 {
        println!("skipped {} examples without tokens", report.skipped_examples);
    }
    save_model(&args.out, &model)?;
    println!("model written to {}", args.out.display());
    println!("{}", if args.no_split { "training-set accuracy:" } else { "test-set accuracy:" });
    print_accuracy(&evaluate(&model, &test)?);
    Ok(())
}

fn evaluate_cmd(cmd: EvaluateCommand) -> Result<()> {
    match cmd {
        EvaluateCommand::Model { model, labeled, json } => {
            let model = load_model(&model).context("loading model")?;
            let examples = read_labeled(open(&labeled)?)?;
            let report = evaluate(&model, &examples)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_accuracy(&report);
            }
        }
        EvaluateCommand::Select { corpus, model, out } => {
            let model = Arc::new(load_model(&model).context("loading model")?);
            if !corpus.exists() {
                bail!("corpus {} does not exist", corpus.display());
            }
            let (store, _) = ingest_corpus(&corpus, Some(model.as_ref()))?;
            let index = InvertedIndex::build(&store, Bm25Params::default())?;
            let items = select_eval_messages(&store);
            let selected = items.len();
            let suggester = Suggester::new(Arc::new(store), Arc::new(index), model);
            let (items, dropped) = attach_suggestions(items, &suggester);
            let mut w = create(&out)?;
            write_items(&mut w, &items)?;
            w.flush()?;
            println!("selected {selected} messages, {dropped} without suggestions, {} written", items.len());
        }
        EvaluateCommand::Simulate {
            items,
            out,
            seed,
            quality,
            noise,
        } => {
            let gold = read_item_emotions(open(&items)?)?;
            let mut ids: Vec<String> = gold.into_keys().collect();
            ids.sort();
            let workers = SyntheticWorkers {
                quality: [quality[0], quality[1], quality[2]],
                noise_sd: noise,
                seed,
            };
            let ranks = workers.rank_items(&ids);
            let mut w = create(&out)?;
            write_worker_ranks(&mut w, &ranks)?;
            w.flush()?;
            println!("{} rankings for {} items written", ranks.len(), ids.len());
        }
        EvaluateCommand::Ranks { ranks, items, json } => {
            let gold = read_item_emotions(open(&items)?)?;
            let ranks = read_worker_ranks(open(&ranks)?)?;
            let items = collect_item_ranks(&ranks, &gold)?;
            let report = build_report(&items)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                println!("{} items", report.items);
                print!("{}", report.render_text());
            }
        }
    }
    Ok(())
}

fn runtime() -> Result<tokio::runtime::Runtime> {
    Ok(tokio::runtime::Builder::new_multi_thread().enable_all().build()?)
}

async fn ctrl_c() {
    tokio::signal::ctrl_c().await.ok();
}

fn serve(config: &Path) -> Result<()> {
    let config = ServiceConfig::load(config)?;
    runtime()?.block_on(emosuggest_service::serve(config, ctrl_c()))?;
    Ok(())
}

fn demo_cmd(received: &str, typed: &str, epochs: usize, serve: Option<SocketAddr>) -> Result<()> {
    let config = TrainConfig {
        epochs,
        ..demo::demo_train_config()
    };
    let (model, report) = demo::train_demo_model(&config)?;
    let accuracy = report.epochs.get(report.best_epoch.wrapping_sub(1)).map_or(0.0, |e| e.train_accuracy);
    println!("demo model: epoch {} kept, training accuracy {:.3}", report.best_epoch, accuracy);
    let engine = demo::demo_engine(model)?;
    let payload = engine.suggester().build_swipe_payload(received, typed);
    println!("received: {received}");
    println!("typed:    {typed}");
    let colors = ColorMap::default();
    for entry in &payload.entries {
        let e: Emotion = entry.emotion;
        let p = payload.prediction.probability(e);
        match &entry.suggestion {
            Some(s) => println!("  {:<13}{} p={p:.3}  {}", e.title(), colors.color_of(e), s.text),
            None => println!("  {:<13}{} p={p:.3}  (no suggestion)", e.title(), colors.color_of(e)),
        }
    }
    if let Some(addr) = serve {
        let state = Arc::new(AppState::in_memory(TimingConfig::default(), colors));
        state.install(engine);
        runtime()?.block_on(async move {
            let listener = tokio::net::TcpListener::bind(addr).await?;
            emosuggest_service::serve_on(listener, state, ctrl_c()).await?;
            Ok::<_, anyhow::Error>(())
        })?;
    }
    io::stdout().flush()?;
    Ok(())
}
