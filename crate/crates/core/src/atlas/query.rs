//! Filter expressions over topic, element, phrase and caption-label terms.
//!
//! ```text
//! expr := or
//! or   := and ("OR" and)*
//! and  := not ("AND" not)*
//! not  := "NOT" not | "(" expr ")" | term
//! term := "topic:" name | "element:" Symbol | "phrase:" quoted | "caption:" name | "*"
//! ```
//!
//! Names are bare (no whitespace or parentheses) or double-quoted with `\"`
//! and `\\` escapes.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::map::topic_name;
use super::{AtlasError, Result};
use crate::chemparse::{DocumentElementMatrix, Element, EXTENDED_ELEMENTS};
use crate::corpus::Corpus;
use crate::scalar::Scalar;
use crate::topics::TopicModel;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FilterExpr {
    All,
    Topic(String),
    Element(String),
    Phrase(String),
    Caption(String),
    Not(Box<FilterExpr>),
    And(Vec<FilterExpr>),
    Or(Vec<FilterExpr>),
}

impl FilterExpr {
    pub fn not(e: FilterExpr) -> Self {
        FilterExpr::Not(Box::new(e))
    }
}

fn needs_quotes(s: &str) -> bool {
    s.is_empty() || s.chars().any(|c| c.is_whitespace() || matches!(c, '(' | ')' | '"' | '\\')) || matches!(s, "AND" | "OR" | "NOT")
}

fn write_quoted(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        if matches!(c, '"' | '\\') {
            f.write_str("\\")?;
        }
        write!(f, "{c}")?;
    }
    f.write_str("\"")
}

fn write_name(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    if needs_quotes(s) {
        write_quoted(f, s)
    } else {
        f.write_str(s)
    }
}

/// Prints an expression that parses back to the same tree.
impl fmt::Display for FilterExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let child = |f: &mut fmt::Formatter<'_>, e: &FilterExpr| match e {
            FilterExpr::And(_) | FilterExpr::Or(_) => write!(f, "({e})"),
            _ => write!(f, "{e}"),
        };
        match self {
            FilterExpr::All => f.write_str("*"),
            FilterExpr::Topic(n) => {
                f.write_str("topic:")?;
                write_name(f, n)
            }
            FilterExpr::Element(s) => {
                f.write_str("element:")?;
                write_name(f, s)
            }
            FilterExpr::Phrase(p) => {
                f.write_str("phrase:")?;
                write_quoted(f, p)
            }
            FilterExpr::Caption(l) => {
                f.write_str("caption:")?;
                write_name(f, l)
            }
            FilterExpr::Not(e) => {
                f.write_str("NOT ")?;
                child(f, e)
            }
            FilterExpr::And(items) | FilterExpr::Or(items) => {
                let sep = if matches!(self, FilterExpr::And(_)) { " AND " } else { " OR " };
                for (i, e) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(sep)?;
                    }
                    child(f, e)?;
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Star,
    Term(TermKind, String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum TermKind {
    Topic,
    Element,
    Phrase,
    Caption,
}

fn syntax(message: impl Into<String>, position: usize) -> AtlasError {
    AtlasError::Parse { message: message.into(), position }
}

struct Lexer<'s> {
    src: &'s str,
    pos: usize,
}

impl<'s> Lexer<'s> {
    fn rest(&self) -> &'s str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn quoted(&mut self) -> Result<String> {
        let start = self.pos;
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, e @ ('"' | '\\'))) => out.push(e),
                    Some((j, e)) => return Err(syntax(format!("unknown escape \\{e}"), self.pos + j)),
                    None => break,
                },
                c => out.push(c),
            }
        }
        Err(syntax("unterminated string", start))
    }

    fn bare(&mut self) -> String {
        let end = self.rest().find(|c: char| c.is_whitespace() || c == '(' || c == ')').unwrap_or(self.rest().len());
        let word = self.rest()[..end].to_string();
        self.pos += end;
        word
    }

    fn tokens(mut self) -> Result<Vec<(usize, Tok)>> {
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            let start = self.pos;
            let Some(c) = self.rest().chars().next() else { return Ok(out) };
            let tok = match c {
                '(' => {
                    self.pos += 1;
                    Tok::LParen
                }
                ')' => {
                    self.pos += 1;
                    Tok::RParen
                }
                '*' => {
                    self.pos += 1;
                    Tok::Star
                }
                '"' => return Err(syntax("string without a term prefix", start)),
                _ => {
                    let word_end = self.rest().find(|c: char| c.is_whitespace() || c == '(' || c == ')' || c == ':').unwrap_or(self.rest().len());
                    let word = &self.rest()[..word_end];
                    let has_colon = self.rest()[word_end..].starts_with(':');
                    match (word, has_colon) {
                        ("AND", false) => {
                            self.pos += 3;
                            Tok::And
                        }
                        ("OR", false) => {
                            self.pos += 2;
                            Tok::Or
                        }
                        ("NOT", false) => {
                            self.pos += 3;
                            Tok::Not
                        }
                        (prefix, true) => {
                            let kind = match prefix {
                                "topic" => TermKind::Topic,
                                "element" => TermKind::Element,
                                "phrase" => TermKind::Phrase,
                                "caption" => TermKind::Caption,
                                other => return Err(syntax(format!("unknown term prefix {other:?}"), start)),
                            };
                            self.pos += word_end + 1;
                            let value_at = self.pos;
                            let value = if self.rest().starts_with('"') {
                                self.quoted()?
                            } else if kind == TermKind::Phrase {
                                return Err(syntax("phrase needs a quoted string", value_at));
                            } else {
                                let v = self.bare();
                                if v.is_empty() {
                                    return Err(syntax("missing name", value_at));
                                }
                                v
                            };
                            Tok::Term(kind, value)
                        }
                        (other, false) => return Err(syntax(format!("unexpected {other:?}"), start)),
                    }
                }
            };
            out.push((start, tok));
        }
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn position(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn or(&mut self, depth: usize) -> Result<FilterExpr> {
        let mut items = vec![self.and(depth)?];
        while self.peek() == Some(&Tok::Or) {
            self.at += 1;
            items.push(self.and(depth)?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one item") } else { FilterExpr::Or(items) })
    }

    fn and(&mut self, depth: usize) -> Result<FilterExpr> {
        let mut items = vec![self.not(depth)?];
        while self.peek() == Some(&Tok::And) {
            self.at += 1;
            items.push(self.not(depth)?);
        }
        Ok(if items.len() == 1 { items.pop().expect("one item") } else { FilterExpr::And(items) })
    }

    fn not(&mut self, depth: usize) -> Result<FilterExpr> {
        if depth > 256 {
            return Err(syntax("expression nested too deeply", self.position()));
        }
        let pos = self.position();
        let tok = self.peek().cloned().ok_or_else(|| syntax("unexpected end of expression", pos))?;
        self.at += 1;
        match tok {
            Tok::Not => Ok(FilterExpr::not(self.not(depth + 1)?)),
            Tok::LParen => {
                let e = self.or(depth + 1)?;
                if self.peek() != Some(&Tok::RParen) {
                    return Err(syntax("expected ')'", self.position()));
                }
                self.at += 1;
                Ok(e)
            }
            Tok::Star => Ok(FilterExpr::All),
            Tok::Term(kind, v) => Ok(match kind {
                TermKind::Topic => FilterExpr::Topic(v),
                TermKind::Element => FilterExpr::Element(v),
                TermKind::Phrase => FilterExpr::Phrase(v),
                TermKind::Caption => FilterExpr::Caption(v),
            }),
            Tok::RParen | Tok::And | Tok::Or => Err(syntax("expected a term, NOT or '('", pos)),
        }
    }
}

/// Parses a filter; errors carry the byte offset of the offending token.
pub fn parse_filter(s: &str) -> Result<FilterExpr> {
    let toks = Lexer { src: s, pos: 0 }.tokens()?;
    let mut p = Parser { toks, at: 0, end: s.len() };
    let e = p.or(0)?;
    if p.at < p.toks.len() {
        return Err(syntax("unexpected trailing input", p.position()));
    }
    Ok(e)
}

/// Documents and captions selected by a query, in corpus order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryResult {
    pub doc_ids: Vec<String>,
    pub caption_ids: Vec<String>,
}

/// Everything a query needs, aligned to corpus order.
#[derive(Debug, Clone)]
pub struct QueryIndex {
    doc_ids: Vec<String>,
    abstracts: Vec<String>,
    topics: Vec<usize>,
    topic_names: Vec<String>,
    markers: DocumentElementMatrix,
    /// Per document: `(caption_id, label)`.
    captions: Vec<Vec<(String, Option<String>)>>,
    labels: BTreeSet<String>,
}

#[derive(Debug, Clone)]
enum Compiled {
    All,
    Topic(usize),
    Element(Element),
    Phrase(String),
    Caption(String),
    Not(Box<Compiled>),
    And(Vec<Compiled>),
    Or(Vec<Compiled>),
}

impl QueryIndex {
    /// `known_labels` adds rule labels that may not occur in any caption.
    pub fn new<F: Scalar>(
        corpus: &Corpus,
        model: &TopicModel<F>,
        topic_names: &BTreeMap<usize, String>,
        markers: DocumentElementMatrix,
        caption_labels: &[Option<String>],
        known_labels: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        Self::from_parts(corpus, model.assignments(), model.k(), topic_names, markers, caption_labels, known_labels)
    }

    pub fn from_parts(
        corpus: &Corpus,
        assignments: &[usize],
        k: usize,
        topic_names: &BTreeMap<usize, String>,
        markers: DocumentElementMatrix,
        caption_labels: &[Option<String>],
        known_labels: impl IntoIterator<Item = String>,
    ) -> Result<Self> {
        let n = corpus.len();
        if assignments.len() != n {
            return Err(AtlasError::Alignment(format!("{} topic assignments for {n} documents", assignments.len())));
        }
        if let Some(&t) = assignments.iter().find(|&&t| t >= k) {
            return Err(AtlasError::Alignment(format!("assignment to topic {t} with only {k} topics")));
        }
        let doc_ids: Vec<String> = corpus.documents().iter().map(|d| d.doc_id.clone()).collect();
        if markers.doc_ids() != doc_ids.as_slice() {
            return Err(AtlasError::Alignment("marker rows do not match corpus documents".into()));
        }
        if caption_labels.len() != corpus.caption_count() {
            return Err(AtlasError::Alignment(format!("{} caption labels for {} captions", caption_labels.len(), corpus.caption_count())));
        }
        let mut captions = vec![Vec::new(); n];
        for ((d, c), label) in corpus.captions().zip(caption_labels) {
            captions[d].push((c.caption_id.clone(), label.clone()));
        }
        let mut labels: BTreeSet<String> = known_labels.into_iter().collect();
        labels.extend(caption_labels.iter().flatten().cloned());
        Ok(QueryIndex {
            doc_ids,
            abstracts: corpus.documents().iter().map(|d| d.abstract_text.to_lowercase()).collect(),
            topics: assignments.to_vec(),
            topic_names: (0..k).map(|t| topic_name(topic_names, t)).collect(),
            markers,
            captions,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn topic_names(&self) -> &[String] {
        &self.topic_names
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn markers(&self) -> &DocumentElementMatrix {
        &self.markers
    }

    /// Topic id for a name (case-insensitive) or a numeric id.
    pub fn resolve_topic(&self, name: &str) -> Option<usize> {
        self.topic_names
            .iter()
            .position(|t| t.eq_ignore_ascii_case(name))
            .or_else(|| name.parse::<usize>().ok().filter(|&t| t < self.topic_names.len()))
    }

    pub fn resolve_label(&self, name: &str) -> Option<&str> {
        self.labels.get(name).or_else(|| self.labels.iter().find(|l| l.eq_ignore_ascii_case(name))).map(String::as_str)
    }

    fn compile(&self, e: &FilterExpr) -> Result<Compiled> {
        let extended = self.markers.element_count() == EXTENDED_ELEMENTS;
        Ok(match e {
            FilterExpr::All => Compiled::All,
            FilterExpr::Topic(n) => Compiled::Topic(self.resolve_topic(n).ok_or_else(|| AtlasError::UnknownTopic(n.clone()))?),
            FilterExpr::Element(s) => Compiled::Element(Element::from_symbol(s, extended).ok_or_else(|| AtlasError::UnknownElement(s.clone()))?),
            FilterExpr::Phrase(p) => Compiled::Phrase(p.to_lowercase()),
            FilterExpr::Caption(l) => Compiled::Caption(self.resolve_label(l).ok_or_else(|| AtlasError::UnknownLabel(l.clone()))?.to_string()),
            FilterExpr::Not(inner) => Compiled::Not(Box::new(self.compile(inner)?)),
            FilterExpr::And(items) => Compiled::And(items.iter().map(|i| self.compile(i)).collect::<Result<_>>()?),
            FilterExpr::Or(items) => Compiled::Or(items.iter().map(|i| self.compile(i)).collect::<Result<_>>()?),
        })
    }

    /// Checks that every referenced topic, element and label exists.
    pub fn validate(&self, e: &FilterExpr) -> Result<()> {
        self.compile(e).map(|_| ())
    }

    fn eval(&self, c: &Compiled, doc: usize) -> bool {
        match c {
            Compiled::All => true,
            Compiled::Topic(t) => self.topics[doc] == *t,
            Compiled::Element(e) => self.markers.get(doc, *e),
            Compiled::Phrase(p) => self.abstracts[doc].contains(p.as_str()),
            Compiled::Caption(l) => self.captions[doc].iter().any(|(_, cl)| cl.as_deref() == Some(l.as_str())),
            Compiled::Not(inner) => !self.eval(inner, doc),
            Compiled::And(items) => items.iter().all(|i| self.eval(i, doc)),
            Compiled::Or(items) => items.iter().any(|i| self.eval(i, doc)),
        }
    }

    /// Matching documents, plus their captions. When the expression names
    /// caption labels outside a negation, only captions carrying one of those
    /// labels are returned.
    pub fn query(&self, e: &FilterExpr) -> Result<QueryResult> {
        let compiled = self.compile(e)?;
        let hits: Vec<bool> = (0..self.len()).into_par_iter().map(|d| self.eval(&compiled, d)).collect();
        let mut wanted = BTreeSet::new();
        positive_labels(&compiled, true, &mut wanted);
        let mut out = QueryResult::default();
        for (d, _) in hits.iter().enumerate().filter(|(_, &h)| h) {
            out.doc_ids.push(self.doc_ids[d].clone());
            for (cid, label) in &self.captions[d] {
                if wanted.is_empty() || label.as_ref().is_some_and(|l| wanted.contains(l.as_str())) {
                    out.caption_ids.push(cid.clone());
                }
            }
        }
        Ok(out)
    }

    pub fn query_str(&self, s: &str) -> Result<QueryResult> {
        self.query(&parse_filter(s)?)
    }
}

fn positive_labels<'c>(c: &'c Compiled, positive: bool, out: &mut BTreeSet<&'c str>) {
    match c {
        Compiled::Caption(l) if positive => {
            out.insert(l.as_str());
        }
        Compiled::Not(inner) => positive_labels(inner, !positive, out),
        Compiled::And(items) | Compiled::Or(items) => items.iter().for_each(|i| positive_labels(i, positive, out)),
        _ => {}
    }
}
