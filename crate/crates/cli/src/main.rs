use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use atlas_cli::artifacts::Atlas;
use atlas_cli::config::{LdaParams, PipelineConfig, RelevanceParams, TsneParams};
use atlas_cli::pipeline::{self, JobState};
use atlas_cli::stages::{self, CaptionLabels, RelevanceModel, StageError, TargetEmbedding};
use atlas_cli::{service, CliError, Result};
use atlas_core::atlas::MapType;
use atlas_core::corpus::{self, Corpus};
use atlas_core::textproc::Vocabulary;
use atlas_core::topics::TopicModel;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "atlas", version, about = "Literature atlas: topic, caption and element maps with a filter query engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Read JSON-lines or XML article files into one corpus file.
    Ingest {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Train or apply the relevance classifier.
    Classify {
        #[command(subcommand)]
        action: ClassifyAction,
    },
    /// Fit an LDA topic model to the abstracts.
    Lda {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 15)]
        topics: usize,
        #[arg(long, default_value_t = 500)]
        passes: usize,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long, default_value_t = 0.01)]
        beta: f64,
        #[arg(long, default_value_t = 1)]
        min_df: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// t-SNE map of abstracts or captions.
    Embed {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, default_value_t = 200.0)]
        learning_rate: f64,
        #[arg(long, default_value_t = 1)]
        min_df: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write `id,x,y` rows here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Chemical element markers.
    Chem {
        #[command(subcommand)]
        action: ChemAction,
    },
    /// Rule-based caption labels.
    Captions {
        #[command(subcommand)]
        action: CaptionsAction,
    },
    /// Map documents from embeddings.
    Map {
        #[command(subcommand)]
        action: MapAction,
    },
    /// Print the doc_ids matching a filter expression, one per line.
    Query {
        expr: String,
        #[arg(long, default_value = "out")]
        dir: PathBuf,
        /// Print matching caption ids instead.
        #[arg(long)]
        captions: bool,
    },
    /// Serve a pipeline output directory over HTTP.
    Serve {
        #[arg(long, default_value = "out")]
        dir: PathBuf,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
    /// Run every stage from a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Subcommand)]
enum ClassifyAction {
    Train {
        /// JSON-lines records with `"label": 0|1`.
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        l2_lambda: f64,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        #[arg(long, default_value_t = 0.8)]
        train_ratio: f64,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
    Apply {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        /// Drop documents classified irrelevant instead of only tagging them.
        #[arg(long)]
        filter: bool,
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum ChemAction {
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        min_doc_freq: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum CaptionsAction {
    Label {
        #[arg(long)]
        corpus: PathBuf,
        /// Rule table; the default table when omitted.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Subcommand)]
enum MapAction {
    Build {
        #[arg(long = "type", value_enum)]
        kind: MapKind,
        /// Output of `atlas embed`.
        #[arg(long)]
        embedding: PathBuf,
        /// Topic model, for `--type lda`.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Caption labels, for `--type ccp`.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// `KEY=NAME` where KEY is a topic id or `@term`.
        #[arg(long = "topic-name")]
        topic_names: Vec<String>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Abstracts,
    Captions,
}

#[derive(Clone, Copy, ValueEnum)]
enum MapKind {
    Lda,
    Ccp,
}

fn invalid(path: &Path) -> impl Fn(StageError) -> CliError + '_ {
    move |e| CliError::Validation(format!("{}: {e}", path.display()))
}

fn failed(stage: &str) -> impl Fn(StageError) -> CliError + '_ {
    move |e| CliError::stage(stage, e)
}

fn load_corpus(path: &Path) -> Result<Corpus> {
    corpus::load_corpus(path).map_err(|e| CliError::Validation(e.to_string()))
}

fn stopwords(path: Option<&Path>) -> Result<atlas_core::textproc::StopWords> {
    stages::stopwords(path).map_err(|e| CliError::Validation(e.to_string()))
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest { inputs, output } => {
            let corpus = stages::ingest(&inputs).map_err(|e| CliError::Validation(e.to_string()))?;
            corpus::save_corpus(&corpus, &output).map_err(|e| CliError::stage("ingest", e))?;
            eprintln!("{} documents, {} captions -> {}", corpus.len(), corpus.caption_count(), output.display());
        }
        Command::Classify { action: ClassifyAction::Train { labeled, seed, l2_lambda, max_iters, train_ratio, stopwords: sw, output } } => {
            let params = RelevanceParams { labeled: labeled.clone(), l2_lambda, max_iters, train_ratio, filter: true, seed };
            let set = corpus::load_labeled_set(&labeled).map_err(|e| CliError::Validation(e.to_string()))?;
            let model = stages::train_relevance(&set, &stopwords(sw.as_deref())?, &params).map_err(failed("classify"))?;
            stages::write_json(&output, &model).map_err(failed("classify"))?;
            let m = &model.metrics;
            eprintln!("held out: accuracy {:.3}, precision {:.3}, recall {:.3}", m.accuracy, m.precision, m.recall);
        }
        Command::Classify { action: ClassifyAction::Apply { model, corpus, filter, stopwords: sw, output } } => {
            let m: RelevanceModel = stages::read_json(&model).map_err(invalid(&model))?;
            let c = load_corpus(&corpus)?;
            let kept = stages::apply_relevance(&m, &c, &stopwords(sw.as_deref())?, filter).map_err(failed("classify"))?;
            corpus::save_corpus(&kept, &output).map_err(|e| CliError::stage("classify", e))?;
            let relevant = kept.documents().iter().filter(|d| d.relevant == Some(true)).count();
            eprintln!("{relevant} of {} documents relevant", c.len());
        }
        Command::Lda { corpus, topics, passes, alpha, beta, min_df, seed, stopwords: sw, output } => {
            let c = load_corpus(&corpus)?;
            let params = LdaParams { topics, passes, alpha, beta, min_df, seed };
            let model = stages::fit_topics(&c, &stopwords(sw.as_deref())?, &params).map_err(failed("lda"))?;
            stages::write_json(&output, &model).map_err(failed("lda"))?;
            for t in 0..model.k() {
                let words: Vec<String> = model.top_words(t, 8).expect("topic in range").into_iter().map(|(w, _)| w).collect();
                println!("{t}\t{}", words.join(" "));
            }
        }
        Command::Embed { corpus, target, perplexity, iters, learning_rate, min_df, seed, stopwords: sw, output, csv } => {
            let c = load_corpus(&corpus)?;
            let stop = stopwords(sw.as_deref())?;
            let config = stages::tsne_config(&TsneParams { perplexity, iters, learning_rate, seed });
            let (ids, tokens) = match target {
                Target::Abstracts => (stages::doc_ids(&c), stages::abstract_tokens(&c, &stop)),
                Target::Captions => (stages::caption_ids(&c), stages::caption_tokens(&c, &stop)),
            };
            let vocab = if tokens.is_empty() { None } else { Some(Vocabulary::build(&tokens, min_df).map_err(|e| CliError::stage("embed", e))?) };
            let emb = stages::embed_tokens(ids, &tokens, vocab.as_ref(), &config).map_err(failed("embed"))?;
            stages::write_json(&output, &emb).map_err(failed("embed"))?;
            if let Some(path) = csv {
                let file = std::fs::File::create(&path).map_err(|e| CliError::stage("embed", format!("{}: {e}", path.display())))?;
                emb.embedding.write_csv(&emb.ids, std::io::BufWriter::new(file)).map_err(|e| CliError::stage("embed", e))?;
            }
            if let Some(kl) = emb.embedding.kl_trace.last() {
                eprintln!("{} points, final KL {kl:.4}", emb.ids.len());
            }
        }
        Command::Chem { action: ChemAction::Extract { corpus, lexicon, min_doc_freq, output } } => {
            let c = load_corpus(&corpus)?;
            let lex = stages::lexicon(lexicon.as_deref()).map_err(|e| CliError::Validation(e.to_string()))?;
            let m = stages::markers(&c, &lex, min_doc_freq).map_err(failed("chem"))?;
            stages::write_markers(&output, &m).map_err(failed("chem"))?;
        }
        Command::Captions { action: CaptionsAction::Label { corpus, rules, output } } => {
            let c = load_corpus(&corpus)?;
            let r = stages::rules(rules.as_deref()).map_err(|e| CliError::Validation(e.to_string()))?;
            let labels = stages::label_captions(&c, &r);
            stages::write_json(&output, &labels).map_err(failed("captions"))?;
            eprintln!("{} of {} captions labeled", labels.labels.iter().flatten().count(), labels.labels.len());
        }
        Command::Map { action: MapAction::Build { kind, embedding, model, labels, topic_names, output } } => {
            let emb: TargetEmbedding = stages::read_json(&embedding).map_err(invalid(&embedding))?;
            let map = match kind {
                MapKind::Lda => {
                    let path = model.ok_or_else(|| CliError::Validation("--type lda needs --model".into()))?;
                    let m: TopicModel = stages::read_json(&path).map_err(invalid(&path))?;
                    let mut wanted = BTreeMap::new();
                    for pair in &topic_names {
                        let (k, v) = pair.split_once('=').ok_or_else(|| CliError::Validation(format!("--topic-name {pair:?} is not KEY=NAME")))?;
                        wanted.insert(k.to_string(), v.to_string());
                    }
                    let names = stages::resolve_topic_names(&m, &wanted).map_err(|e| CliError::Validation(e.to_string()))?;
                    stages::lda_map(&emb, &m, &names).map_err(failed("map"))?
                }
                MapKind::Ccp => {
                    let path = labels.ok_or_else(|| CliError::Validation("--type ccp needs --labels".into()))?;
                    let l: CaptionLabels = stages::read_json(&path).map_err(invalid(&path))?;
                    stages::ccp_map(&emb, &l).map_err(failed("map"))?
                }
            };
            debug_assert!(matches!((kind, map.map_type), (MapKind::Lda, MapType::Lda) | (MapKind::Ccp, MapType::Ccp)));
            atlas_core::atlas::export_map(&map, &output).map_err(|e| CliError::stage("map", e))?;
        }
        Command::Query { expr, dir, captions } => {
            let atlas = Atlas::load(&dir)?;
            let result = atlas.query(&expr).map_err(|e| CliError::Validation(e.to_string()))?;
            let ids = if captions { result.caption_ids } else { result.doc_ids };
            for id in ids {
                println!("{id}");
            }
        }
        Command::Serve { dir, port, host } => {
            let atlas = Arc::new(Atlas::load(&dir)?);
            let addr = SocketAddr::new(host, port);
            let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::stage("serve", e))?;
            eprintln!("serving {} on http://{addr}", dir.display());
            rt.block_on(service::serve(atlas, addr)).map_err(|e| CliError::stage("serve", e))?;
        }
        Command::Run { config } => {
            let config = PipelineConfig::load(&config)?;
            let manifest = pipeline::run_pipeline_with(&config, |s| {
                let how = match (s.state, s.skipped) {
                    (JobState::Done, true) => "skipped",
                    (JobState::Done, false) => "done",
                    _ => "failed",
                };
                eprintln!("{:<10} {:<8} {:>8.2}s", s.stage, how, s.seconds);
            })?;
            for (name, hash) in &manifest.artifacts {
                println!("{hash}  {name}");
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("atlas: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
