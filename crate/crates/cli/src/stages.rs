//! Stage computations and their on-disk artifact formats, shared by the
//! pipeline and the single-step subcommands.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufReader;
use std::path::Path;

use atlas_core::atlas::{self, LabelRule, MapDocument, RuleSet};
use atlas_core::chemparse::{self, DocumentElementMatrix, Lexicon};
use atlas_core::corpus::{self, Corpus, Document};
use atlas_core::embed::{self, Embedding2D, TsneConfig};
use atlas_core::relevance::{self, EvalMetrics, LogRegModel, TrainConfig};
use atlas_core::textproc::{self, StopWords, TokenList, Vocabulary};
use atlas_core::topics::{self, LdaConfig, TopicModel};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{LdaParams, RelevanceParams, TsneParams};

pub type StageError = Box<dyn std::error::Error + Send + Sync>;
pub type StageResult<T> = std::result::Result<T, StageError>;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> StageResult<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> StageResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?)
}

/// Reads JSON-lines and XML (`.xml`) article files into one corpus.
pub fn ingest(paths: &[impl AsRef<Path>]) -> StageResult<Corpus> {
    let mut docs: Vec<Document> = Vec::new();
    for p in paths {
        let p = p.as_ref();
        if p.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml")) {
            let text = std::fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            docs.extend(corpus::parse_article_collection(&text).map_err(|e| format!("{}: {e}", p.display()))?);
        } else {
            docs.extend(corpus::load_corpus(p)?.documents().iter().cloned());
        }
    }
    Ok(Corpus::from_documents(docs)?)
}

pub fn stopwords(path: Option<&Path>) -> StageResult<StopWords> {
    match path {
        Some(p) => Ok(StopWords::from_file(p).map_err(|e| format!("{}: {e}", p.display()))?),
        None => Ok(StopWords::english()),
    }
}

pub fn lexicon(path: Option<&Path>) -> StageResult<Lexicon> {
    match path {
        Some(p) => Ok(Lexicon::from_file(p)?),
        None => Ok(Lexicon::english()),
    }
}

pub fn rules(path: Option<&Path>) -> StageResult<RuleSet> {
    match path {
        Some(p) => Ok(RuleSet::from_file(p)?),
        None => Ok(atlas::default_rules()),
    }
}

pub fn abstract_tokens(corpus: &Corpus, stop: &StopWords) -> Vec<TokenList> {
    corpus.documents().iter().map(|d| textproc::tokenize(&d.abstract_text, stop)).collect()
}

pub fn caption_tokens(corpus: &Corpus, stop: &StopWords) -> Vec<TokenList> {
    corpus.captions().map(|(_, c)| textproc::tokenize(&c.text, stop)).collect()
}

pub fn caption_ids(corpus: &Corpus) -> Vec<String> {
    corpus.captions().map(|(_, c)| c.caption_id.clone()).collect()
}

pub fn doc_ids(corpus: &Corpus) -> Vec<String> {
    corpus.documents().iter().map(|d| d.doc_id.clone()).collect()
}

/// Abstract and caption dictionaries. `captions` is absent for a corpus
/// without captions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vocabularies {
    pub abstracts: Vocabulary,
    pub captions: Option<Vocabulary>,
}

pub fn vectorize(corpus: &Corpus, stop: &StopWords, min_df: usize) -> StageResult<Vocabularies> {
    let abstracts = Vocabulary::build(&abstract_tokens(corpus, stop), min_df)?;
    let caps = caption_tokens(corpus, stop);
    let captions = if caps.is_empty() { None } else { Some(Vocabulary::build(&caps, min_df)?) };
    Ok(Vocabularies { abstracts, captions })
}

/// Trained relevance classifier with its own dictionary and held-out metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevanceModel {
    pub vocabulary: Vocabulary,
    pub model: LogRegModel,
    pub metrics: EvalMetrics,
    pub train_size: usize,
    pub test_size: usize,
}

pub fn train_relevance(labeled: &[(Document, bool)], stop: &StopWords, params: &RelevanceParams) -> StageResult<RelevanceModel> {
    let (train, test) = relevance::split(labeled, params.train_ratio, params.seed)?;
    let train_tokens: Vec<(TokenList, bool)> = train.iter().map(|(d, y)| (textproc::tokenize(&d.abstract_text, stop), *y)).collect();
    let vocabulary = Vocabulary::build(&train_tokens.iter().map(|(t, _)| t.clone()).collect::<Vec<_>>(), 1)?;
    let encode = |t: &TokenList| textproc::vectorize_tfidf::<f64>(t, &vocabulary);
    let examples: Vec<_> = train_tokens.iter().map(|(t, y)| (encode(t), *y)).collect();
    let config = TrainConfig { l2_lambda: params.l2_lambda, max_iters: params.max_iters, seed: params.seed, ..TrainConfig::default() };
    let model = relevance::train_logreg(&examples, &config)?;
    let held_out: Vec<_> = test.iter().map(|(d, y)| (encode(&textproc::tokenize(&d.abstract_text, stop)), *y)).collect();
    let metrics = relevance::evaluate(&model, &held_out)?;
    Ok(RelevanceModel { vocabulary, model, metrics, train_size: train.len(), test_size: test.len() })
}

/// Tags every document with the classifier's decision; with `filter`,
/// documents classified irrelevant are dropped.
pub fn apply_relevance(model: &RelevanceModel, corpus: &Corpus, stop: &StopWords, filter: bool) -> StageResult<Corpus> {
    let flags = corpus
        .documents()
        .iter()
        .map(|d| model.model.classify(&textproc::vectorize_tfidf(&textproc::tokenize(&d.abstract_text, stop), &model.vocabulary)))
        .collect::<std::result::Result<Vec<bool>, _>>()?;
    let mut tagged = corpus.clone();
    tagged.set_relevance(&flags);
    Ok(if filter { tagged.retain_indices(|i, _| flags[i]) } else { tagged })
}

pub fn fit_topics(corpus: &Corpus, stop: &StopWords, params: &LdaParams) -> StageResult<TopicModel> {
    let config = LdaConfig {
        topics: params.topics,
        passes: params.passes,
        alpha: params.alpha,
        beta: params.beta,
        seed: params.seed,
        min_df: params.min_df,
        ..LdaConfig::default()
    };
    Ok(topics::fit_lda(&abstract_tokens(corpus, stop), &config)?)
}

/// Display names from `topic_names` config keys: a topic id, or `@term` for
/// the topic giving `term` its highest probability (lowest id on ties).
pub fn resolve_topic_names(model: &TopicModel, wanted: &BTreeMap<String, String>) -> StageResult<BTreeMap<usize, String>> {
    let mut out: BTreeMap<usize, String> = BTreeMap::new();
    let mut source: BTreeMap<usize, &str> = BTreeMap::new();
    for (key, name) in wanted {
        let topic = match key.strip_prefix('@') {
            Some(term) => {
                let term = term.to_lowercase();
                let id = model.terms().iter().position(|t| *t == term).ok_or_else(|| format!("topic_names: term {term:?} is not in the model vocabulary"))?;
                let column: Vec<f64> = model.phi().iter().map(|row| row[id]).collect();
                topics::argmax(&column)
            }
            None => key.parse::<usize>().ok().filter(|&t| t < model.k()).ok_or_else(|| format!("topic_names: {key:?} is not a topic id"))?,
        };
        if let Some(prev) = source.insert(topic, key) {
            return Err(format!("topic_names: {prev:?} and {key:?} both name topic {topic}").into());
        }
        out.insert(topic, name.clone());
    }
    let mut seen = BTreeSet::new();
    for t in 0..model.k() {
        let name = atlas::topic_name(&out, t).to_lowercase();
        if !seen.insert(name.clone()) {
            return Err(format!("topic name {name:?} is used twice").into());
        }
    }
    Ok(out)
}

/// One t-SNE map with the ids of its points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetEmbedding {
    pub ids: Vec<String>,
    pub embedding: Embedding2D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embeddings {
    pub abstracts: TargetEmbedding,
    pub captions: TargetEmbedding,
}

pub fn tsne_config(params: &TsneParams) -> TsneConfig {
    TsneConfig { perplexity: params.perplexity, iters: params.iters, learning_rate: params.learning_rate, seed: params.seed, ..TsneConfig::default() }
}

/// TF-IDF vectors, cosine distances, affinities and t-SNE for one target.
/// No points give an empty embedding.
pub fn embed_tokens(ids: Vec<String>, tokens: &[TokenList], vocab: Option<&Vocabulary>, config: &TsneConfig) -> StageResult<TargetEmbedding> {
    let vocab = match vocab {
        Some(v) if !tokens.is_empty() => v,
        _ => return Ok(TargetEmbedding { ids, embedding: Embedding2D { coords: Vec::new(), kl_trace: Vec::new(), config: *config } }),
    };
    let vectors: Vec<_> = tokens.iter().map(|t| textproc::vectorize_tfidf::<f64>(t, vocab)).collect();
    let distances = textproc::pairwise_cosine_distance(&vectors)?;
    let p = embed::joint_probabilities(&distances, config.perplexity)?;
    Ok(TargetEmbedding { ids, embedding: embed::tsne_fit(&p, config)? })
}

pub fn embed_abstracts(corpus: &Corpus, stop: &StopWords, vocabs: &Vocabularies, config: &TsneConfig) -> StageResult<TargetEmbedding> {
    embed_tokens(doc_ids(corpus), &abstract_tokens(corpus, stop), Some(&vocabs.abstracts), config)
}

pub fn embed_captions(corpus: &Corpus, stop: &StopWords, vocabs: &Vocabularies, config: &TsneConfig) -> StageResult<TargetEmbedding> {
    embed_tokens(caption_ids(corpus), &caption_tokens(corpus, stop), vocabs.captions.as_ref(), config)
}

pub fn markers(corpus: &Corpus, lexicon: &Lexicon, min_doc_freq: usize) -> StageResult<DocumentElementMatrix> {
    let species = chemparse::extract_corpus_species(corpus, lexicon);
    Ok(chemparse::element_markers_min_freq(corpus, &species, lexicon.element_count(), min_doc_freq)?)
}

pub fn write_markers(path: &Path, m: &DocumentElementMatrix) -> StageResult<()> {
    let mut buf = Vec::new();
    m.write_csv(&mut buf)?;
    std::fs::write(path, buf).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(())
}

pub fn read_markers(path: &Path) -> StageResult<DocumentElementMatrix> {
    let file = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(DocumentElementMatrix::read_csv(BufReader::new(file))?)
}

/// Rule table and one label per caption, in corpus caption order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptionLabels {
    pub rules: Vec<LabelRule>,
    pub caption_ids: Vec<String>,
    pub labels: Vec<Option<String>>,
}

impl CaptionLabels {
    pub fn rule_set(&self) -> StageResult<RuleSet> {
        Ok(RuleSet::new(self.rules.clone())?)
    }
}

pub fn label_captions(corpus: &Corpus, rules: &RuleSet) -> CaptionLabels {
    CaptionLabels { rules: rules.rules().to_vec(), caption_ids: caption_ids(corpus), labels: atlas::label_captions(corpus, rules) }
}

pub fn lda_map(emb: &TargetEmbedding, model: &TopicModel, names: &BTreeMap<usize, String>) -> StageResult<MapDocument> {
    Ok(atlas::build_lda_map(&emb.embedding, model, &emb.ids, names)?)
}

pub fn ccp_map(emb: &TargetEmbedding, labels: &CaptionLabels) -> StageResult<MapDocument> {
    if emb.ids != labels.caption_ids {
        return Err("caption embedding and caption labels list different captions".into());
    }
    Ok(atlas::build_ccp_map(&emb.embedding, &emb.ids, &labels.labels)?)
}
