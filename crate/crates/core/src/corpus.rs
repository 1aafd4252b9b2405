//! Article records: ingestion from flat XML and line-delimited JSON, and
//! persistence back to JSON lines.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: invalid record: {message}")]
    Line { line: usize, message: String },
    #[error("line {line}: duplicate doc_id `{doc_id}`")]
    DuplicateId { line: usize, doc_id: String },
    #[error("malformed XML at byte {offset}: {message}")]
    Markup { offset: usize, message: String },
    #[error("schema error: {0}")]
    Schema(String),
}

pub type Result<T> = std::result::Result<T, CorpusError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caption {
    pub caption_id: String,
    pub text: String,
    pub figure_ordinal: u32,
}

impl Caption {
    pub fn new(doc_id: &str, figure_ordinal: u32, text: impl Into<String>) -> Self {
        Caption {
            caption_id: caption_id(doc_id, figure_ordinal),
            text: text.into(),
            figure_ordinal,
        }
    }
}

/// Identifier of the `ordinal`-th figure caption of `doc_id`.
pub fn caption_id(doc_id: &str, ordinal: u32) -> String {
    format!("{doc_id}#fig{ordinal}")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub abstract_text: String,
    pub journal: Option<String>,
    pub authors: Option<Vec<String>>,
    pub captions: Vec<Caption>,
    pub relevant: Option<bool>,
}

impl Document {
    /// Document with no captions or optional metadata.
    pub fn new(doc_id: impl Into<String>, title: impl Into<String>, abstract_text: impl Into<String>) -> Self {
        Document {
            doc_id: doc_id.into(),
            title: title.into(),
            abstract_text: abstract_text.into(),
            journal: None,
            authors: None,
            captions: Vec::new(),
            relevant: None,
        }
    }

    /// Checks the per-document invariants.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.doc_id.is_empty() {
            return Err("doc_id is empty".into());
        }
        if self.abstract_text.trim().is_empty() && self.captions.is_empty() {
            return Err(format!("document `{}` has neither abstract nor captions", self.doc_id));
        }
        for (i, c) in self.captions.iter().enumerate() {
            let expected = i as u32 + 1;
            if c.figure_ordinal != expected {
                return Err(format!(
                    "document `{}`: caption ordinals must be 1..n in order, found {} at position {}",
                    self.doc_id, c.figure_ordinal, expected
                ));
            }
            if c.text.trim().is_empty() {
                return Err(format!("document `{}`: caption {} has empty text", self.doc_id, expected));
            }
            if c.caption_id != caption_id(&self.doc_id, expected) {
                return Err(format!("document `{}`: caption id `{}` does not match", self.doc_id, c.caption_id));
            }
        }
        Ok(())
    }
}

/// Trims the id and lowercases a DOI scheme prefix (`DOI:`, `https://doi.org/`, ...).
pub fn normalize_doc_id(raw: &str) -> String {
    const PREFIXES: [&str; 5] = [
        "doi:",
        "https://doi.org/",
        "http://doi.org/",
        "https://dx.doi.org/",
        "http://dx.doi.org/",
    ];
    let id = raw.trim();
    for p in PREFIXES {
        if id.len() >= p.len() && id.is_char_boundary(p.len()) && id[..p.len()].eq_ignore_ascii_case(p) {
            return format!("{}{}", p, &id[p.len()..]);
        }
    }
    id.to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub records: usize,
}

/// Ordered collection of documents with unique ids.
///
/// Equality compares documents only; the source manifest records where the
/// documents came from and is not part of the corpus content.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Corpus {
    documents: Vec<Document>,
    pub source_manifest: Vec<ManifestEntry>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.documents == other.documents
    }
}

impl Corpus {
    /// Builds a corpus, checking document invariants and id uniqueness.
    pub fn from_documents(documents: Vec<Document>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (i, d) in documents.iter().enumerate() {
            d.validate().map_err(|m| CorpusError::Line { line: i + 1, message: m })?;
            if !seen.insert(d.doc_id.as_str()) {
                return Err(CorpusError::DuplicateId { line: i + 1, doc_id: d.doc_id.clone() });
            }
        }
        Ok(Corpus { documents, source_manifest: Vec::new() })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.doc_id == doc_id)
    }

    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.documents.iter().position(|d| d.doc_id == doc_id)
    }

    pub fn captions(&self) -> impl Iterator<Item = (usize, &Caption)> {
        self.documents
            .iter()
            .enumerate()
            .flat_map(|(i, d)| d.captions.iter().map(move |c| (i, c)))
    }

    pub fn caption_count(&self) -> usize {
        self.documents.iter().map(|d| d.captions.len()).sum()
    }

    /// Keeps the documents for which `keep` returns true, preserving order.
    pub fn retain_indices(&self, mut keep: impl FnMut(usize, &Document) -> bool) -> Corpus {
        let documents = self
            .documents
            .iter()
            .enumerate()
            .filter(|(i, d)| keep(*i, d))
            .map(|(_, d)| d.clone())
            .collect();
        Corpus { documents, source_manifest: self.source_manifest.clone() }
    }

    /// Records classifier output on each document, in corpus order.
    pub fn set_relevance(&mut self, flags: &[bool]) {
        assert_eq!(flags.len(), self.documents.len(), "one relevance flag per document");
        for (d, &f) in self.documents.iter_mut().zip(flags) {
            d.relevant = Some(f);
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CaptionRecord {
    figure: u32,
    text: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DocumentRecord {
    doc_id: String,
    title: String,
    #[serde(rename = "abstract")]
    abstract_text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    journal: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    authors: Option<Vec<String>>,
    #[serde(default)]
    captions: Vec<CaptionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    relevant: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<u8>,
}

impl DocumentRecord {
    fn into_document(self) -> std::result::Result<(Document, Option<u8>), String> {
        let doc_id = normalize_doc_id(&self.doc_id);
        let captions = self
            .captions
            .into_iter()
            .map(|c| Caption::new(&doc_id, c.figure, c.text))
            .collect();
        let doc = Document {
            doc_id,
            title: self.title,
            abstract_text: self.abstract_text,
            journal: self.journal,
            authors: self.authors,
            captions,
            relevant: self.relevant,
        };
        doc.validate()?;
        if let Some(l) = self.label {
            if l > 1 {
                return Err(format!("label must be 0 or 1, got {l}"));
            }
        }
        Ok((doc, self.label))
    }

    fn from_document(d: &Document, label: Option<u8>) -> Self {
        DocumentRecord {
            doc_id: d.doc_id.clone(),
            title: d.title.clone(),
            abstract_text: d.abstract_text.clone(),
            journal: d.journal.clone(),
            authors: d.authors.clone(),
            captions: d
                .captions
                .iter()
                .map(|c| CaptionRecord { figure: c.figure_ordinal, text: c.text.clone() })
                .collect(),
            relevant: d.relevant,
            label,
        }
    }
}

fn read_records(path: &Path) -> Result<Vec<(Document, Option<u8>)>> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io { path: path.to_path_buf(), source })?;
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();
    let parsed: Vec<Result<(Document, Option<u8>)>> = lines
        .par_iter()
        .map(|&(line, l)| {
            let rec: DocumentRecord =
                serde_json::from_str(l).map_err(|e| CorpusError::Line { line, message: e.to_string() })?;
            rec.into_document().map_err(|message| CorpusError::Line { line, message })
        })
        .collect();

    let mut out = Vec::with_capacity(parsed.len());
    let mut seen = HashSet::new();
    for (r, &(line, _)) in parsed.into_iter().zip(&lines) {
        let (doc, label) = r?;
        if !seen.insert(doc.doc_id.clone()) {
            return Err(CorpusError::DuplicateId { line, doc_id: doc.doc_id });
        }
        out.push((doc, label));
    }
    Ok(out)
}

/// Loads a JSON-lines corpus. Any invalid line aborts the load.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let records = read_records(path)?;
    let n = records.len();
    Ok(Corpus {
        documents: records.into_iter().map(|(d, _)| d).collect(),
        source_manifest: vec![ManifestEntry { path: path.to_path_buf(), records: n }],
    })
}

/// Loads a corpus file whose records each carry `"label": 0|1`.
pub fn load_labeled_set(path: impl AsRef<Path>) -> Result<Vec<(Document, bool)>> {
    let path = path.as_ref();
    read_records(path)?
        .into_iter()
        .enumerate()
        .map(|(i, (d, label))| match label {
            Some(l) => Ok((d, l == 1)),
            None => Err(CorpusError::Line { line: i + 1, message: format!("record `{}` has no label", d.doc_id) }),
        })
        .collect()
}

fn write_records<'a>(path: &Path, records: impl Iterator<Item = (&'a Document, Option<u8>)>) -> Result<()> {
    let io_err = |source| CorpusError::Io { path: path.to_path_buf(), source };
    let file = fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    for (d, label) in records {
        let line = serde_json::to_string(&DocumentRecord::from_document(d, label))
            .expect("document records always serialize");
        w.write_all(line.as_bytes()).map_err(io_err)?;
        w.write_all(b"\n").map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    write_records(path.as_ref(), corpus.documents.iter().map(|d| (d, None)))
}

pub fn save_labeled_set(examples: &[(Document, bool)], path: impl AsRef<Path>) -> Result<()> {
    write_records(path.as_ref(), examples.iter().map(|(d, l)| (d, Some(*l as u8))))
}

fn byte_offset(text: &str, pos: roxmltree::TextPos) -> usize {
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == pos.row as usize {
            let col = (pos.col as usize).saturating_sub(1);
            return offset + line.char_indices().nth(col).map(|(b, _)| b).unwrap_or(line.len());
        }
        offset += line.len();
    }
    text.len()
}

/// Concatenated descendant text with runs of whitespace collapsed; inline
/// markup such as `<sub>` or `<p>` is dropped.
fn flat_text(node: roxmltree::Node) -> String {
    let mut raw = String::new();
    for d in node.descendants() {
        if d.is_text() {
            raw.push_str(d.text().unwrap_or(""));
        } else if d.is_element() && d != node && matches!(d.tag_name().name(), "p" | "para" | "br") {
            raw.push(' ');
        }
    }
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn child<'a, 'i>(node: roxmltree::Node<'a, 'i>, name: &str) -> Option<roxmltree::Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == name)
}

fn document_from_node(article: roxmltree::Node) -> Result<Document> {
    let doc_id = child(article, "id")
        .map(|n| normalize_doc_id(&flat_text(n)))
        .filter(|id| !id.is_empty())
        .ok_or_else(|| CorpusError::Schema("article record has no <id>".into()))?;
    let title = child(article, "title").map(flat_text).unwrap_or_default();
    let abstract_text = child(article, "abstract").map(flat_text).unwrap_or_default();
    let journal = child(article, "journal").map(flat_text).filter(|j| !j.is_empty());
    let authors = child(article, "authors").map(|a| {
        a.children()
            .filter(|c| c.is_element() && c.tag_name().name() == "author")
            .map(flat_text)
            .collect::<Vec<_>>()
    });
    let captions = child(article, "figures")
        .map(|f| {
            f.descendants()
                .filter(|c| c.is_element() && c.tag_name().name() == "caption")
                .enumerate()
                .map(|(i, c)| Caption::new(&doc_id, i as u32 + 1, flat_text(c)))
                .collect::<Vec<_>>()
        })
        .unwrap_or_default();
    let doc = Document { doc_id, title, abstract_text, journal, authors, captions, relevant: None };
    doc.validate().map_err(CorpusError::Schema)?;
    Ok(doc)
}

/// Parses a single `<article>` record.
pub fn parse_article_record(xml_text: &str) -> Result<Document> {
    let tree = roxmltree::Document::parse(xml_text)
        .map_err(|e| CorpusError::Markup { offset: byte_offset(xml_text, e.pos()), message: e.to_string() })?;
    let root = tree.root_element();
    if root.tag_name().name() != "article" {
        return Err(CorpusError::Schema(format!("expected <article>, found <{}>", root.tag_name().name())));
    }
    document_from_node(root)
}

/// Parses either one `<article>` or any root element wrapping several of them.
pub fn parse_article_collection(xml_text: &str) -> Result<Vec<Document>> {
    let tree = roxmltree::Document::parse(xml_text)
        .map_err(|e| CorpusError::Markup { offset: byte_offset(xml_text, e.pos()), message: e.to_string() })?;
    let root = tree.root_element();
    if root.tag_name().name() == "article" {
        return Ok(vec![document_from_node(root)?]);
    }
    root.children()
        .filter(|c| c.is_element() && c.tag_name().name() == "article")
        .map(document_from_node)
        .collect()
}
