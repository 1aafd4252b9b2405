//! Sequential stage runner with content-hash skipping.
//!
//! Each stage has an input key: a hash over its parameters and the hashes of
//! every file it reads. A stage is skipped when the previous manifest holds
//! the same key and its outputs are still on disk with the recorded hashes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use atlas_core::corpus::{self, Corpus};
use atlas_core::textproc::StopWords;
use atlas_core::topics::TopicModel;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::config::PipelineConfig;
use crate::stages::{self, CaptionLabels, Embeddings, StageResult, Vocabularies};
use crate::{file_hash, sha256_hex, CliError, Result};

pub const MANIFEST: &str = "manifest.json";
pub const CORPUS: &str = "corpus.jsonl";
pub const VOCABULARY: &str = "vocabulary.json";
pub const RELEVANCE_MODEL: &str = "relevance_model.json";
pub const RELEVANT_CORPUS: &str = "corpus_relevant.jsonl";
pub const LDA_MODEL: &str = "lda_model.json";
pub const EMBEDDINGS: &str = "embeddings.json";
pub const MARKERS: &str = "markers.csv";
pub const CAPTION_LABELS: &str = "caption_labels.json";
pub const MAP_LDA: &str = "map_lda.json";
pub const MAP_CCP: &str = "map_ccp.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JobState {
    Pending,
    Running,
    Done,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobStatus {
    pub stage: String,
    pub state: JobState,
    /// Done without executing because inputs and outputs were unchanged.
    pub skipped: bool,
    pub seconds: f64,
    pub input_key: String,
    /// Output file name to sha256.
    pub artifacts: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl JobStatus {
    pub fn new(stage: &str) -> Self {
        JobStatus {
            stage: stage.to_string(),
            state: JobState::Pending,
            skipped: false,
            seconds: 0.0,
            input_key: String::new(),
            artifacts: BTreeMap::new(),
            error: None,
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.state, JobState::Done | JobState::Failed)
    }

    /// Pending to Running to Done or Failed; terminal states never change.
    pub fn advance(&mut self, to: JobState) -> std::result::Result<(), String> {
        let ok = matches!((self.state, to), (JobState::Pending, JobState::Running) | (JobState::Running, JobState::Done | JobState::Failed));
        if !ok {
            return Err(format!("stage {}: illegal transition {:?} -> {:?}", self.stage, self.state, to));
        }
        self.state = to;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: Vec<JobStatus>,
    /// Every artifact file name to sha256.
    pub artifacts: BTreeMap<String, String>,
    /// Resolved topic display names.
    pub topic_names: BTreeMap<usize, String>,
    /// Working corpus file for downstream consumers.
    pub corpus: String,
}

impl Manifest {
    pub fn load(dir: &Path) -> StageResult<Manifest> {
        stages::read_json(&dir.join(MANIFEST))
    }

    pub fn stage(&self, name: &str) -> Option<&JobStatus> {
        self.stages.iter().find(|s| s.stage == name)
    }

    /// Stages that ran rather than being skipped.
    pub fn executed(&self) -> Vec<&str> {
        self.stages.iter().filter(|s| s.state == JobState::Done && !s.skipped).map(|s| s.stage.as_str()).collect()
    }
}

struct StageDef {
    name: &'static str,
    outputs: &'static [&'static str],
}

fn stage_defs(with_relevance: bool) -> Vec<StageDef> {
    let mut v = vec![StageDef { name: "ingest", outputs: &[CORPUS] }, StageDef { name: "vectorize", outputs: &[VOCABULARY] }];
    if with_relevance {
        v.push(StageDef { name: "relevance", outputs: &[RELEVANCE_MODEL, RELEVANT_CORPUS] });
    }
    v.extend([
        StageDef { name: "lda", outputs: &[LDA_MODEL] },
        StageDef { name: "embed", outputs: &[EMBEDDINGS] },
        StageDef { name: "chem", outputs: &[MARKERS] },
        StageDef { name: "labels", outputs: &[CAPTION_LABELS] },
        StageDef { name: "map_lda", outputs: &[MAP_LDA] },
        StageDef { name: "map_ccp", outputs: &[MAP_CCP] },
    ]);
    v
}

struct Runner<'c> {
    config: &'c PipelineConfig,
    out: PathBuf,
    hashes: BTreeMap<String, String>,
    stopwords: Option<StopWords>,
}

impl Runner<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn working_corpus(&self) -> &'static str {
        if self.config.relevance.is_some() {
            RELEVANT_CORPUS
        } else {
            CORPUS
        }
    }

    fn external(path: Option<&Path>) -> StageResult<String> {
        match path {
            Some(p) => Ok(file_hash(p).map_err(|e| format!("{}: {e}", p.display()))?),
            None => Ok(concat!("builtin-", env!("CARGO_PKG_VERSION")).to_string()),
        }
    }

    fn stop(&mut self) -> StageResult<StopWords> {
        if self.stopwords.is_none() {
            self.stopwords = Some(stages::stopwords(self.config.paths.stopwords.as_deref())?);
        }
        Ok(self.stopwords.clone().expect("just loaded"))
    }

    fn artifact(&self, name: &str) -> StageResult<String> {
        self.hashes.get(name).cloned().ok_or_else(|| format!("artifact {name} has not been produced").into())
    }

    fn input_key(&self, stage: &str) -> StageResult<String> {
        let c = self.config;
        let wc = self.working_corpus();
        let key = match stage {
            "ingest" => {
                let files = c.paths.corpus.iter().map(|p| Self::external(Some(p))).collect::<StageResult<Vec<_>>>()?;
                json!({ "files": files })
            }
            "vectorize" => json!({ "corpus": self.artifact(CORPUS)?, "stopwords": Self::external(c.paths.stopwords.as_deref())?, "params": c.vectorize }),
            "relevance" => {
                let r = c.relevance.as_ref().expect("relevance stage only runs when configured");
                json!({
                    "corpus": self.artifact(CORPUS)?,
                    "labeled": Self::external(Some(&r.labeled))?,
                    "stopwords": Self::external(c.paths.stopwords.as_deref())?,
                    "params": r,
                })
            }
            "lda" => json!({ "corpus": self.artifact(wc)?, "stopwords": Self::external(c.paths.stopwords.as_deref())?, "params": c.lda }),
            "embed" => json!({
                "corpus": self.artifact(wc)?,
                "vocabulary": self.artifact(VOCABULARY)?,
                "stopwords": Self::external(c.paths.stopwords.as_deref())?,
                "params": c.tsne,
            }),
            "chem" => json!({ "corpus": self.artifact(wc)?, "lexicon": Self::external(c.paths.lexicon.as_deref())?, "params": c.chem }),
            "labels" => json!({ "corpus": self.artifact(wc)?, "rules": Self::external(c.paths.rules.as_deref())? }),
            "map_lda" => json!({ "embeddings": self.artifact(EMBEDDINGS)?, "model": self.artifact(LDA_MODEL)?, "topic_names": c.topic_names }),
            "map_ccp" => json!({ "embeddings": self.artifact(EMBEDDINGS)?, "labels": self.artifact(CAPTION_LABELS)? }),
            other => unreachable!("unknown stage {other}"),
        };
        Ok(sha256_hex(json!({ "stage": stage, "inputs": key }).to_string().as_bytes()))
    }

    fn load_working(&self) -> StageResult<Corpus> {
        Ok(corpus::load_corpus(self.path(self.working_corpus()))?)
    }

    fn execute(&mut self, stage: &str, topic_names: &mut BTreeMap<usize, String>) -> StageResult<()> {
        let c = self.config;
        match stage {
            "ingest" => corpus::save_corpus(&stages::ingest(&c.paths.corpus)?, self.path(CORPUS))?,
            "vectorize" => {
                let corpus = corpus::load_corpus(self.path(CORPUS))?;
                let v = stages::vectorize(&corpus, &self.stop()?, c.vectorize.min_df)?;
                stages::write_json(&self.path(VOCABULARY), &v)?;
            }
            "relevance" => {
                let r = c.relevance.as_ref().expect("relevance stage only runs when configured");
                let stop = self.stop()?;
                let labeled = corpus::load_labeled_set(&r.labeled)?;
                let model = stages::train_relevance(&labeled, &stop, r)?;
                let corpus = corpus::load_corpus(self.path(CORPUS))?;
                let kept = stages::apply_relevance(&model, &corpus, &stop, r.filter)?;
                stages::write_json(&self.path(RELEVANCE_MODEL), &model)?;
                corpus::save_corpus(&kept, self.path(RELEVANT_CORPUS))?;
            }
            "lda" => {
                let model = stages::fit_topics(&self.load_working()?, &self.stop()?, &c.lda)?;
                stages::write_json(&self.path(LDA_MODEL), &model)?;
            }
            "embed" => {
                let corpus = self.load_working()?;
                let stop = self.stop()?;
                let vocabs: Vocabularies = stages::read_json(&self.path(VOCABULARY))?;
                let tsne = stages::tsne_config(&c.tsne);
                let abstracts = stages::embed_abstracts(&corpus, &stop, &vocabs, &tsne)?;
                let captions = stages::embed_captions(&corpus, &stop, &vocabs, &tsne)?;
                stages::write_json(&self.path(EMBEDDINGS), &Embeddings { abstracts, captions })?;
            }
            "chem" => {
                let lexicon = stages::lexicon(c.paths.lexicon.as_deref())?;
                let m = stages::markers(&self.load_working()?, &lexicon, c.chem.min_doc_freq)?;
                stages::write_markers(&self.path(MARKERS), &m)?;
            }
            "labels" => {
                let rules = stages::rules(c.paths.rules.as_deref())?;
                stages::write_json(&self.path(CAPTION_LABELS), &stages::label_captions(&self.load_working()?, &rules))?;
            }
            "map_lda" => {
                let emb: Embeddings = stages::read_json(&self.path(EMBEDDINGS))?;
                let model: TopicModel = stages::read_json(&self.path(LDA_MODEL))?;
                *topic_names = stages::resolve_topic_names(&model, &c.topic_names)?;
                stages::write_json(&self.path(MAP_LDA), &stages::lda_map(&emb.abstracts, &model, topic_names)?)?;
            }
            "map_ccp" => {
                let emb: Embeddings = stages::read_json(&self.path(EMBEDDINGS))?;
                let labels: CaptionLabels = stages::read_json(&self.path(CAPTION_LABELS))?;
                stages::write_json(&self.path(MAP_CCP), &stages::ccp_map(&emb.captions, &labels)?)?;
            }
            other => unreachable!("unknown stage {other}"),
        }
        Ok(())
    }
}

fn unchanged(prev: Option<&JobStatus>, key: &str, out: &Path) -> bool {
    let Some(p) = prev else { return false };
    p.state == JobState::Done
        && p.input_key == key
        && !p.artifacts.is_empty()
        && p.artifacts.iter().all(|(name, h)| file_hash(&out.join(name)).is_ok_and(|actual| actual == *h))
}

pub fn run_pipeline(config: &PipelineConfig) -> Result<Manifest> {
    run_pipeline_with(config, |_| {})
}

/// Runs every stage in order, calling `on_stage` as each one finishes, and
/// writes the manifest after every stage.
pub fn run_pipeline_with(config: &PipelineConfig, mut on_stage: impl FnMut(&JobStatus)) -> Result<Manifest> {
    config.validate()?;
    let out = config.paths.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| CliError::stage("setup", format!("{}: {e}", out.display())))?;
    let previous = Manifest::load(&out).ok();
    let defs = stage_defs(config.relevance.is_some());
    let mut runner = Runner { config, out: out.clone(), hashes: BTreeMap::new(), stopwords: None };
    let mut manifest = Manifest {
        stages: defs.iter().map(|d| JobStatus::new(d.name)).collect(),
        corpus: runner.working_corpus().to_string(),
        ..Manifest::default()
    };
    let mut topic_names = previous.as_ref().map(|p| p.topic_names.clone()).unwrap_or_default();

    for (i, def) in defs.iter().enumerate() {
        let started = Instant::now();
        let status = &mut manifest.stages[i];
        status.advance(JobState::Running).map_err(|e| CliError::stage(def.name, e))?;
        let result = runner.input_key(def.name).and_then(|key| {
            status.input_key = key.clone();
            let prev = previous.as_ref().and_then(|p| p.stage(def.name));
            if unchanged(prev, &key, &out) {
                status.skipped = true;
                return Ok(prev.expect("unchanged implies a previous entry").artifacts.clone());
            }
            runner.execute(def.name, &mut topic_names)?;
            def.outputs
                .iter()
                .map(|name| Ok((name.to_string(), file_hash(&out.join(name)).map_err(|e| format!("{name}: {e}"))?)))
                .collect::<StageResult<BTreeMap<_, _>>>()
        });
        status.seconds = started.elapsed().as_secs_f64();
        match result {
            Ok(artifacts) => {
                runner.hashes.extend(artifacts.clone());
                status.artifacts = artifacts;
                status.advance(JobState::Done).map_err(|e| CliError::stage(def.name, e))?;
            }
            Err(e) => {
                status.error = Some(e.to_string());
                status.advance(JobState::Failed).map_err(|e| CliError::stage(def.name, e))?;
            }
        }
        on_stage(status);
        manifest.artifacts = runner.hashes.clone();
        manifest.topic_names = topic_names.clone();
        stages::write_json(&out.join(MANIFEST), &manifest).map_err(|e| CliError::stage(def.name, e))?;
        if let Some(err) = &manifest.stages[i].error {
            return Err(CliError::stage(def.name, err));
        }
    }
    Ok(manifest)
}
