#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use atlas_cli::config::PipelineConfig;
use atlas_cli::pipeline::{self, Manifest};
use atlas_cli::stages::{self, CaptionLabels};
use atlas_core::corpus::{self, Corpus};
use atlas_core::topics::TopicModel;
use atlas_testkit::filters::{DocFacts, Inventory};
use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::Value;
use tower::ServiceExt;

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// The bundled config with its output redirected to `out`.
pub fn default_config(out: &Path) -> PipelineConfig {
    let mut c = PipelineConfig::load(data_dir().join("atlas.json")).expect("bundled config is valid");
    c.paths.output_dir = out.to_path_buf();
    c
}

/// sha256 of every regular file in `dir`.
pub fn dir_hashes(dir: &Path) -> BTreeMap<String, String> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), atlas_cli::file_hash(&p).unwrap()))
        .collect()
}

/// Artifacts read straight from disk, without going through `Atlas`.
pub struct Raw {
    pub manifest: Manifest,
    pub corpus: Corpus,
    pub model: TopicModel,
    pub markers: atlas_core::chemparse::DocumentElementMatrix,
    pub labels: CaptionLabels,
}

pub fn read_raw(dir: &Path) -> Raw {
    let manifest = Manifest::load(dir).unwrap();
    Raw {
        corpus: corpus::load_corpus(dir.join(&manifest.corpus)).unwrap(),
        model: stages::read_json(&dir.join(pipeline::LDA_MODEL)).unwrap(),
        markers: stages::read_markers(&dir.join(pipeline::MARKERS)).unwrap(),
        labels: stages::read_json(&dir.join(pipeline::CAPTION_LABELS)).unwrap(),
        manifest,
    }
}

impl Raw {
    pub fn topic_name(&self, t: usize) -> String {
        self.manifest.topic_names.get(&t).cloned().unwrap_or_else(|| t.to_string())
    }

    pub fn facts(&self) -> Vec<DocFacts> {
        let mut caps: Vec<Vec<(String, Option<String>)>> = vec![Vec::new(); self.corpus.len()];
        for ((d, c), l) in self.corpus.captions().zip(&self.labels.labels) {
            caps[d].push((c.caption_id.clone(), l.clone()));
        }
        self.corpus
            .documents()
            .iter()
            .zip(caps)
            .enumerate()
            .map(|(i, (d, captions))| DocFacts {
                doc_id: d.doc_id.clone(),
                topic: self.topic_name(self.model.assignments()[i]),
                topic_id: self.model.assignments()[i],
                elements: self.markers.row_elements(i).into_iter().map(|e| e.symbol().to_string()).collect(),
                abstract_text: d.abstract_text.clone(),
                captions,
            })
            .collect()
    }

    /// Names that occur in the corpus, plus a few phrases and a numeric topic id.
    pub fn inventory(&self) -> Inventory {
        let mut topics: Vec<String> = (0..self.model.k()).map(|t| self.topic_name(t)).collect();
        topics.push("0".into());
        let elements: BTreeSet<String> =
            self.markers.elements().filter(|&e| self.markers.frequency(e) > 0).map(|e| e.symbol().to_string()).collect();
        let mut elements: Vec<String> = elements.into_iter().collect();
        elements.push("U".into());
        Inventory {
            topics,
            elements,
            phrases: ["solid state synthesis", "melt quenching", "sol-gel", "Bioactive", "fibre", "crack", "glass"].map(String::from).to_vec(),
            labels: self.labels.rules.iter().map(|r| r.label.clone()).collect(),
        }
    }
}

pub async fn call(app: &Router, method: &str, uri: &str, body: Option<&str>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map(|b| Body::from(b.to_string())).unwrap_or_else(Body::empty))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).expect("JSON body") };
    (status, value)
}

/// Percent-encodes a path segment.
pub fn encode(s: &str) -> String {
    s.bytes()
        .map(|b| match b {
            b'A'..=b'Z' | b'a'..=b'z' | b'0'..=b'9' | b'-' | b'_' | b'.' | b'~' | b'/' => (b as char).to_string(),
            _ => format!("%{b:02X}"),
        })
        .collect()
}
