//! Tokenization, corpus vocabulary, TF-IDF vectors and cosine distances.
//!
//! Term weights use a binary term frequency (1 if the term occurs in the
//! text at all) times `ln(N / df)`, where `N` is the number of documents the
//! vocabulary was built over and `df` the number of those containing the term.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum TextError {
    #[error("cannot build a vocabulary from zero documents")]
    EmptyCorpus,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("need at least 2 vectors for a distance matrix, got {0}")]
    TooFewVectors(usize),
    #[error("invalid sparse vector: {0}")]
    InvalidVector(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, TextError>;

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    /// One token per line; `#` starts a comment; blank lines ignored.
    pub fn parse(text: &str) -> Self {
        StopWords(
            text.lines()
                .map(|l| l.split('#').next().unwrap_or("").trim())
                .filter(|l| !l.is_empty())
                .map(str::to_lowercase)
                .collect(),
        )
    }

    pub fn from_file(path: impl AsRef<Path>) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn none() -> Self {
        StopWords(HashSet::new())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Lowercase tokens, none empty, letterless, or a stopword.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenList(Vec<String>);

impl TokenList {
    /// Wraps pre-split tokens, lowercasing them and dropping letterless ones.
    pub fn new<S: AsRef<str>>(tokens: impl IntoIterator<Item = S>) -> Self {
        TokenList(
            tokens
                .into_iter()
                .map(|t| t.as_ref().to_lowercase())
                .filter(|t| t.chars().any(char::is_alphabetic))
                .collect(),
        )
    }

    pub fn tokens(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }
}

fn is_token_char(c: char) -> bool {
    c.is_alphanumeric() || c == '+' || c == '-'
}

/// Splits into maximal runs of letters, digits, `+` and `-`; lowercases;
/// drops runs without a letter and stopwords.
pub fn tokenize(text: &str, stopwords: &StopWords) -> TokenList {
    TokenList(
        text.split(|c: char| !is_token_char(c))
            .filter(|t| t.chars().any(char::is_alphabetic))
            .map(str::to_lowercase)
            .filter(|t| !stopwords.contains(t))
            .collect(),
    )
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TfMode {
    /// 1 if the term occurs in the document.
    #[default]
    Binary,
    /// Raw occurrence count.
    Count,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    terms: Vec<String>,
    doc_freq: Vec<usize>,
    corpus_size: usize,
}

/// Corpus dictionary: one dimension per retained term, in sorted term order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    corpus_size: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r.terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Vocabulary { terms: r.terms, index, doc_freq: r.doc_freq, corpus_size: r.corpus_size }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr { terms: v.terms, doc_freq: v.doc_freq, corpus_size: v.corpus_size }
    }
}

impl Vocabulary {
    /// Every token occurring in at least `min_df` documents gets a dimension.
    pub fn build(docs: &[TokenList], min_df: usize) -> Result<Self> {
        if docs.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let unique: HashSet<&str> = doc.iter().collect();
            for t in unique {
                *df.entry(t).or_default() += 1;
            }
        }
        let min_df = min_df.max(1);
        let (terms, doc_freq): (Vec<String>, Vec<usize>) = df
            .into_iter()
            .filter(|&(_, n)| n >= min_df)
            .map(|(t, n)| (t.to_string(), n))
            .unzip();
        let index = terms.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Vocabulary { terms, index, doc_freq, corpus_size: docs.len() })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term(&self, id: usize) -> &str {
        &self.terms[id]
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn doc_freq(&self, id: usize) -> usize {
        self.doc_freq[id]
    }

    /// `ln(N / df)` for dimension `id`.
    pub fn idf<F: Scalar>(&self, id: usize) -> F {
        (F::of_usize(self.corpus_size) / F::of_usize(self.doc_freq[id])).ln()
    }

    /// Maps tokens to dimension ids, skipping out-of-vocabulary tokens.
    pub fn encode(&self, doc: &TokenList) -> Vec<usize> {
        doc.iter().filter_map(|t| self.id(t)).collect()
    }
}

/// Nonnegative sparse vector with strictly increasing dimension ids and no
/// explicit zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct SparseVector<F = f64> {
    entries: Vec<(usize, F)>,
    dim: usize,
}

impl<F: Scalar> SparseVector<F> {
    /// Validates the entries; explicit zero weights are dropped.
    pub fn new(dim: usize, entries: Vec<(usize, F)>) -> Result<Self> {
        let mut prev: Option<usize> = None;
        for &(i, w) in &entries {
            if i >= dim {
                return Err(TextError::InvalidVector(format!("dimension {i} out of range {dim}")));
            }
            if prev.is_some_and(|p| p >= i) {
                return Err(TextError::InvalidVector("dimension ids must be strictly increasing".into()));
            }
            if !(w >= F::zero()) || !w.is_finite() {
                return Err(TextError::InvalidVector(format!("weight at {i} must be finite and nonnegative")));
            }
            prev = Some(i);
        }
        let entries = entries.into_iter().filter(|&(_, w)| w != F::zero()).collect();
        Ok(SparseVector { entries, dim })
    }

    /// Builds from a dense slice, dropping zeros.
    pub fn from_dense(values: &[F]) -> Result<Self> {
        let entries = values.iter().copied().enumerate().filter(|&(_, w)| w != F::zero()).collect();
        Self::new(values.len(), entries)
    }

    pub fn zeros(dim: usize) -> Self {
        SparseVector { entries: Vec::new(), dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, F)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn get(&self, i: usize) -> F {
        self.entries
            .binary_search_by_key(&i, |&(j, _)| j)
            .map(|k| self.entries[k].1)
            .unwrap_or_else(|_| F::zero())
    }

    pub fn norm(&self) -> F {
        self.entries.iter().map(|&(_, w)| w * w).sum::<F>().sqrt()
    }

    /// Sparse-sparse dot product by merging the sorted supports.
    pub fn dot(&self, other: &Self) -> F {
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        let mut acc = F::zero();
        while let (Some(&&(i, x)), Some(&&(j, y))) = (a.peek(), b.peek()) {
            match i.cmp(&j) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => {
                    acc += x * y;
                    a.next();
                    b.next();
                }
            }
        }
        acc
    }

    /// Dot product with a dense vector of the same dimension.
    pub fn dot_dense(&self, dense: &[F]) -> F {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<F> {
        let mut v = vec![F::zero(); self.dim];
        for &(i, w) in &self.entries {
            v[i] = w;
        }
        v
    }
}

/// TF-IDF vector of `doc` with the default binary term frequency.
pub fn vectorize_tfidf<F: Scalar>(doc: &TokenList, vocab: &Vocabulary) -> SparseVector<F> {
    vectorize_with(doc, vocab, TfMode::Binary)
}

pub fn vectorize_with<F: Scalar>(doc: &TokenList, vocab: &Vocabulary, mode: TfMode) -> SparseVector<F> {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for id in vocab.encode(doc) {
        *counts.entry(id).or_default() += 1;
    }
    let entries = counts
        .into_iter()
        .map(|(id, n)| {
            let tf = match mode {
                TfMode::Binary => F::one(),
                TfMode::Count => F::of_usize(n),
            };
            (id, tf * vocab.idf::<F>(id))
        })
        .filter(|&(_, w)| w > F::zero())
        .collect();
    SparseVector { entries, dim: vocab.len() }
}

/// `dot(a, b) / (|a| |b|)`, 0 when either norm is 0, clamped to `[0, 1]`.
pub fn cosine_similarity<F: Scalar>(a: &SparseVector<F>, b: &SparseVector<F>) -> Result<F> {
    if a.dim != b.dim {
        return Err(TextError::DimensionMismatch { left: a.dim, right: b.dim });
    }
    Ok(cosine_with_norms(a, b, a.norm(), b.norm()))
}

fn cosine_with_norms<F: Scalar>(a: &SparseVector<F>, b: &SparseVector<F>, na: F, nb: F) -> F {
    if na == F::zero() || nb == F::zero() {
        return F::zero();
    }
    (a.dot(b) / (na * nb)).max(F::zero()).min(F::one())
}

/// Dense symmetric `n x n` matrix, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct DistanceMatrix<F = f64> {
    n: usize,
    data: Vec<F>,
}

impl<F: Scalar> DistanceMatrix<F> {
    /// Wraps a row-major buffer after checking shape, symmetry and the zero diagonal.
    pub fn from_rows(n: usize, data: Vec<F>) -> Result<Self> {
        if data.len() != n * n {
            return Err(TextError::DimensionMismatch { left: data.len(), right: n * n });
        }
        for i in 0..n {
            if data[i * n + i] != F::zero() {
                return Err(TextError::InvalidVector(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..i {
                let (x, y) = (data[i * n + j], data[j * n + i]);
                if (x - y).abs() > F::of(1e-12) * F::one().max(x.abs()) || x < F::zero() || !x.is_finite() {
                    return Err(TextError::InvalidVector(format!("entry ({i},{j}) breaks symmetry or sign")));
                }
            }
        }
        Ok(DistanceMatrix { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    /// CSV with a header row of ids, then one row per id.
    pub fn write_csv<W: Write>(&self, ids: &[String], mut w: W) -> Result<()> {
        if ids.len() != self.n {
            return Err(TextError::DimensionMismatch { left: ids.len(), right: self.n });
        }
        write!(w, "id")?;
        for id in ids {
            write!(w, ",{id}")?;
        }
        writeln!(w)?;
        for (i, id) in ids.iter().enumerate() {
            write!(w, "{id}")?;
            for x in self.row(i) {
                write!(w, ",{x}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// `D[i][j] = 1 - cos(v_i, v_j)`, computed on the upper triangle in parallel
/// and mirrored, with an exact zero diagonal.
pub fn pairwise_cosine_distance<F: Scalar>(vectors: &[SparseVector<F>]) -> Result<DistanceMatrix<F>> {
    let n = vectors.len();
    if n < 2 {
        return Err(TextError::TooFewVectors(n));
    }
    let dim = vectors[0].dim;
    if let Some(v) = vectors.iter().find(|v| v.dim != dim) {
        return Err(TextError::DimensionMismatch { left: dim, right: v.dim });
    }
    let norms: Vec<F> = vectors.iter().map(SparseVector::norm).collect();
    let upper: Vec<Vec<F>> = (0..n)
        .into_par_iter()
        .map(|i| {
            ((i + 1)..n)
                .map(|j| F::one() - cosine_with_norms(&vectors[i], &vectors[j], norms[i], norms[j]))
                .collect()
        })
        .collect();
    let mut data = vec![F::zero(); n * n];
    for (i, row) in upper.into_iter().enumerate() {
        for (k, d) in row.into_iter().enumerate() {
            let j = i + 1 + k;
            data[i * n + j] = d;
            data[j * n + i] = d;
        }
    }
    Ok(DistanceMatrix { n, data })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tl(words: &[&str]) -> TokenList {
        TokenList::new(words.iter().copied())
    }

    #[test]
    fn tokenize_keeps_ion_tokens() {
        let t = tokenize("Er3+ doped glasses, annealed at 500 C.", &StopWords::english());
        assert_eq!(t.tokens(), ["er3+", "doped", "glasses", "annealed"]);
    }

    #[test]
    fn tokenize_empty_and_stopwords_only() {
        let sw = StopWords::english();
        assert!(tokenize("", &sw).is_empty());
        assert!(tokenize("the of and", &sw).is_empty());
        assert!(tokenize("12 3.5 -- + 1e", &StopWords::none()).tokens() == ["1e"]);
    }

    #[test]
    fn stopword_file_format() {
        let sw = StopWords::parse("# comment\nThe\n\n  glass  # trailing\n");
        assert!(sw.contains("the") && sw.contains("glass"));
        assert_eq!(sw.len(), 2);
    }

    #[test]
    fn vocabulary_counts_documents() {
        let docs = [tl(&["a", "b"]), tl(&["b", "c"])];
        let v = Vocabulary::build(&docs, 1).unwrap();
        assert_eq!(v.terms(), ["a", "b", "c"]);
        assert_eq!((0..3).map(|i| v.doc_freq(i)).collect::<Vec<_>>(), [1, 2, 1]);
        assert_eq!(v.corpus_size(), 2);

        let pruned = Vocabulary::build(&docs, 2).unwrap();
        assert_eq!(pruned.terms(), ["b"]);

        let with_empty = Vocabulary::build(&[tl(&["a", "a"]), tl(&[])], 1).unwrap();
        assert_eq!(with_empty.corpus_size(), 2);
        assert_eq!(with_empty.doc_freq(0), 1);

        assert!(matches!(Vocabulary::build(&[], 1), Err(TextError::EmptyCorpus)));
    }

    #[test]
    fn tfidf_weights() {
        // N = 8; "x" in 2 docs, "all" in every doc.
        let mut docs: Vec<TokenList> = (0..8).map(|_| tl(&["all"])).collect();
        docs[0] = tl(&["all", "x", "x"]);
        docs[1] = tl(&["all", "x"]);
        let v = Vocabulary::build(&docs, 1).unwrap();
        let x = v.id("x").unwrap();
        let vec: SparseVector = vectorize_tfidf(&docs[0], &v);
        assert_eq!(vec.entries().len(), 1, "idf-zero term omitted");
        assert!((vec.get(x) - 4f64.ln()).abs() < 1e-12);
        assert!((vec.get(x) - 1.386294).abs() < 1e-6);
        let counted: SparseVector = vectorize_with(&docs[0], &v, TfMode::Count);
        assert!((counted.get(x) - 2.0 * 4f64.ln()).abs() < 1e-12);
        let absent: SparseVector = vectorize_tfidf(&docs[5], &v);
        assert_eq!(absent.get(x), 0.0);
    }

    #[test]
    fn cosine_cases() {
        let a = SparseVector::new(3, vec![(0, 1.0), (1, 1.0)]).unwrap();
        let b = SparseVector::new(3, vec![(0, 1.0)]).unwrap();
        let c = SparseVector::new(3, vec![(2, 5.0)]).unwrap();
        assert!((cosine_similarity(&a, &a).unwrap() - 1.0f64).abs() < 1e-12);
        assert_eq!(cosine_similarity(&a, &c).unwrap(), 0.0);
        assert!((cosine_similarity(&a, &b).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(cosine_similarity(&a, &SparseVector::zeros(3)).unwrap(), 0.0);
        let wrong = SparseVector::<f64>::zeros(4);
        assert!(matches!(cosine_similarity(&a, &wrong), Err(TextError::DimensionMismatch { .. })));
    }

    #[test]
    fn sparse_vector_validation() {
        assert!(SparseVector::new(3, vec![(1, 1.0), (0, 1.0)]).is_err());
        assert!(SparseVector::new(3, vec![(3, 1.0)]).is_err());
        assert!(SparseVector::new(3, vec![(0, -1.0)]).is_err());
        assert_eq!(SparseVector::new(3, vec![(0, 0.0), (2, 1.0)]).unwrap().nnz(), 1);
    }

    #[test]
    fn distance_matrix_cases() {
        let a = SparseVector::<f64>::new(2, vec![(0, 1.0)]).unwrap();
        let b = SparseVector::new(2, vec![(1, 1.0)]).unwrap();
        let same = pairwise_cosine_distance(&[a.clone(), a.clone()]).unwrap();
        assert!(same.as_slice().iter().all(|&x| x == 0.0));
        let orth = pairwise_cosine_distance(&[a.clone(), b]).unwrap();
        assert_eq!(orth.get(0, 1), 1.0);
        assert_eq!(orth.get(1, 0), 1.0);
        assert!(matches!(pairwise_cosine_distance(&[a]), Err(TextError::TooFewVectors(1))));
    }

    #[test]
    fn distance_csv_export() {
        let a = SparseVector::<f64>::new(2, vec![(0, 1.0)]).unwrap();
        let b = SparseVector::new(2, vec![(1, 1.0)]).unwrap();
        let d = pairwise_cosine_distance(&[a, b]).unwrap();
        let mut out = Vec::new();
        d.write_csv(&["p".into(), "q".into()], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "id,p,q\np,0,1\nq,1,0\n");
    }

    #[test]
    fn vocabulary_serde_rebuilds_index() {
        let v = Vocabulary::build(&[tl(&["glass", "silica"])], 1).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Vocabulary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.id("silica"), Some(1));
    }
}
