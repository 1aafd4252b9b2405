//! A pipeline output directory loaded into memory, and the read-only
//! queries the service and the `query` subcommand answer from it.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use atlas_core::atlas::{self, AtlasError, AxisProfile, LabelRule, MapDocument, MapType, OverlayMode, QueryIndex, QueryResult};
use atlas_core::chemparse::DocumentElementMatrix;
use atlas_core::corpus::{self, Corpus, Document};
use atlas_core::topics::TopicModel;
use serde::{Deserialize, Serialize};

use crate::pipeline::{self, Manifest};
use crate::stages::{self, CaptionLabels};
use crate::{CliError, Result};

/// Words listed per topic by [`Atlas::topics`].
pub const TOP_WORDS: usize = 10;

pub struct Atlas {
    pub dir: PathBuf,
    pub manifest: Manifest,
    pub corpus: Corpus,
    pub model: TopicModel,
    pub markers: DocumentElementMatrix,
    pub caption_labels: CaptionLabels,
    pub map_lda: MapDocument,
    pub map_ccp: MapDocument,
    pub index: QueryIndex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub documents: usize,
    pub captions: usize,
    pub labeled_captions: usize,
    pub topics: usize,
    /// Elements marked in at least one document.
    pub elements: usize,
    pub lda_points: usize,
    pub ccp_points: usize,
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopWord {
    pub term: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicSummary {
    pub id: usize,
    pub name: String,
    pub documents: usize,
    pub top_words: Vec<TopWord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTable {
    pub rules: Vec<LabelRule>,
    /// Captions per label; every rule label is listed, zero included.
    pub counts: BTreeMap<String, usize>,
    pub unlabeled: usize,
    /// Label distances to the four axes on the caption map; absent for an
    /// empty map.
    pub axes: Option<AxisProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub map: MapType,
    pub mode: OverlayMode,
    pub elements: Vec<String>,
    pub ids: Vec<String>,
}

fn load_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Validation(format!("{}: {e}", path.display()))
}

impl Atlas {
    /// Loads every artifact; missing files are reported together.
    pub fn load(dir: impl AsRef<Path>) -> Result<Atlas> {
        let dir = dir.as_ref().to_path_buf();
        let manifest = Manifest::load(&dir).map_err(|e| CliError::Validation(format!("no usable manifest in {}: {e}", dir.display())))?;
        let wanted = [
            manifest.corpus.as_str(),
            pipeline::LDA_MODEL,
            pipeline::MARKERS,
            pipeline::CAPTION_LABELS,
            pipeline::MAP_LDA,
            pipeline::MAP_CCP,
        ];
        let missing: Vec<&str> = wanted.iter().copied().filter(|f| !dir.join(f).is_file()).collect();
        if !missing.is_empty() {
            return Err(CliError::Validation(format!("missing artifacts in {}: {}", dir.display(), missing.join(", "))));
        }
        let p = |f: &str| dir.join(f);
        let corpus = corpus::load_corpus(p(&manifest.corpus)).map_err(|e| load_err(&p(&manifest.corpus), e))?;
        let model: TopicModel = stages::read_json(&p(pipeline::LDA_MODEL)).map_err(|e| CliError::Validation(e.to_string()))?;
        let markers = stages::read_markers(&p(pipeline::MARKERS)).map_err(|e| load_err(&p(pipeline::MARKERS), e))?;
        let caption_labels: CaptionLabels = stages::read_json(&p(pipeline::CAPTION_LABELS)).map_err(|e| CliError::Validation(e.to_string()))?;
        let map_lda = atlas::import_map(p(pipeline::MAP_LDA)).map_err(|e| CliError::Validation(e.to_string()))?;
        let map_ccp = atlas::import_map(p(pipeline::MAP_CCP)).map_err(|e| CliError::Validation(e.to_string()))?;
        let known = caption_labels.rules.iter().map(|r| r.label.clone()).collect::<Vec<_>>();
        let index = QueryIndex::new(&corpus, &model, &manifest.topic_names, markers.clone(), &caption_labels.labels, known)
            .map_err(|e| CliError::Validation(format!("{}: {e}", dir.display())))?;
        Ok(Atlas { dir, manifest, corpus, model, markers, caption_labels, map_lda, map_ccp, index })
    }

    pub fn stats(&self) -> Stats {
        Stats {
            documents: self.corpus.len(),
            captions: self.corpus.caption_count(),
            labeled_captions: self.caption_labels.labels.iter().flatten().count(),
            topics: self.model.k(),
            elements: self.markers.elements().filter(|&e| self.markers.frequency(e) > 0).count(),
            lda_points: self.map_lda.points.len(),
            ccp_points: self.map_ccp.points.len(),
            artifacts: self.manifest.artifacts.clone(),
        }
    }

    pub fn topics(&self) -> Vec<TopicSummary> {
        let sizes = self.model.topic_histogram();
        (0..self.model.k())
            .map(|t| TopicSummary {
                id: t,
                name: atlas::topic_name(&self.manifest.topic_names, t),
                documents: sizes[t],
                top_words: self
                    .model
                    .top_words(t, TOP_WORDS)
                    .expect("topic id is in range")
                    .into_iter()
                    .map(|(term, weight)| TopWord { term, weight })
                    .collect(),
            })
            .collect()
    }

    pub fn labels(&self) -> LabelTable {
        let mut counts: BTreeMap<String, usize> = self.caption_labels.rules.iter().map(|r| (r.label.clone(), 0)).collect();
        for l in self.caption_labels.labels.iter().flatten() {
            *counts.entry(l.clone()).or_default() += 1;
        }
        let axes = atlas::default_anchors(&self.map_ccp.points).and_then(|a| atlas::axis_profile(&self.map_ccp.labels, &a)).ok();
        LabelTable {
            rules: self.caption_labels.rules.clone(),
            counts,
            unlabeled: self.caption_labels.labels.iter().filter(|l| l.is_none()).count(),
            axes,
        }
    }

    pub fn map(&self, kind: MapType) -> &MapDocument {
        match kind {
            MapType::Lda => &self.map_lda,
            MapType::Ccp => &self.map_ccp,
        }
    }

    pub fn overlay(&self, kind: MapType, elements: &[String], mode: OverlayMode) -> std::result::Result<Overlay, AtlasError> {
        let ids = atlas::element_overlay(self.map(kind), &self.markers, &self.corpus, elements, mode)?;
        Ok(Overlay { map: kind, mode, elements: elements.to_vec(), ids })
    }

    pub fn query(&self, expr: &str) -> std::result::Result<QueryResult, AtlasError> {
        self.index.query_str(expr)
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.corpus.get(doc_id).or_else(|| self.corpus.get(&corpus::normalize_doc_id(doc_id)))
    }
}
