//! LDA topic modeling by collapsed Gibbs sampling.
//!
//! Each pass is one full sweep over every token. Token topics are resampled
//! from `(n_dk + alpha) (n_kw + beta) / (n_k + V beta)` with the token's own
//! assignment removed from the counts. Every document owns a ChaCha stream
//! (`seed`, stream key = document index by default), so a fit is a pure
//! function of the documents, hyperparameters and seed.

use std::collections::{BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::scalar::Scalar;
use crate::textproc::{TokenList, Vocabulary};

#[derive(Debug, Error)]
pub enum TopicError {
    #[error("need at least 2 topics, got {0}")]
    TooFewTopics(usize),
    #[error("passes must be at least 1")]
    NoPasses,
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("topic {topic} out of range (K = {k})")]
    TopicOutOfRange { topic: usize, k: usize },
    #[error("top word `{0}` has zero document frequency in the reference documents")]
    ZeroDocFrequency(String),
    #[error("coherence needs top_n >= 2, got {0}")]
    TopNTooSmall(usize),
    #[error("topic {topic} has {found} documents, need at least {needed}")]
    TooFewDocuments { topic: usize, found: usize, needed: usize },
    #[error("model covers {model} documents but corpus has {corpus}")]
    Misaligned { model: usize, corpus: usize },
    #[error("hyperparameters must be positive")]
    BadHyperparameter,
    #[error("{0} stream keys for {1} documents")]
    StreamKeys(usize, usize),
}

pub type Result<T> = std::result::Result<T, TopicError>;

/// How `phi` and `theta` are estimated from the chain.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum Estimate {
    /// From the counts after the last sweep.
    #[default]
    FinalSample,
    /// Mean of the per-sample estimates taken every `lag` passes after `burn_in`.
    Averaged { burn_in: usize, lag: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    pub passes: usize,
    /// Symmetric document-topic prior; `None` means `50 / K`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub seed: u64,
    pub min_df: usize,
    #[serde(default)]
    pub estimate: Estimate,
}

impl LdaConfig {
    pub fn new(topics: usize, passes: usize, seed: u64) -> Self {
        LdaConfig { topics, passes, alpha: None, beta: 0.01, seed, min_df: 1, estimate: Estimate::FinalSample }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.topics as f64)
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig::new(15, 500, 0)
    }
}

/// Count tables and token assignments of a chain state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GibbsCounts {
    pub k: usize,
    pub v: usize,
    /// Topic of every token, per document.
    pub z: Vec<Vec<usize>>,
    /// `n_dk`, row-major `docs x K`.
    pub doc_topic: Vec<u32>,
    /// `n_kw`, row-major `K x V`.
    pub topic_word: Vec<u32>,
    /// `n_k`.
    pub topic_total: Vec<u32>,
}

impl GibbsCounts {
    pub fn total_tokens(&self) -> usize {
        self.z.iter().map(Vec::len).sum()
    }

    /// Recounts everything from `z` and `words` and compares with the tables.
    pub fn check_conservation(&self, words: &[Vec<usize>]) -> std::result::Result<(), String> {
        let k = self.k;
        let mut dt = vec![0u32; self.z.len() * k];
        let mut tw = vec![0u32; k * self.v];
        let mut tt = vec![0u32; k];
        for (d, (zs, ws)) in self.z.iter().zip(words).enumerate() {
            if zs.len() != ws.len() {
                return Err(format!("document {d}: {} assignments for {} tokens", zs.len(), ws.len()));
            }
            for (&t, &w) in zs.iter().zip(ws) {
                dt[d * k + t] += 1;
                tw[t * self.v + w] += 1;
                tt[t] += 1;
            }
        }
        let total: u64 = self.topic_total.iter().map(|&c| c as u64).sum();
        if total as usize != self.total_tokens() {
            return Err(format!("topic totals sum to {total}, corpus has {} tokens", self.total_tokens()));
        }
        if dt != self.doc_topic || tw != self.topic_word || tt != self.topic_total {
            return Err("count tables disagree with token assignments".into());
        }
        Ok(())
    }
}

/// Collapsed Gibbs sampler state.
pub struct GibbsSampler {
    words: Vec<Vec<usize>>,
    counts: GibbsCounts,
    alpha: f64,
    beta: f64,
    rngs: Vec<ChaCha8Rng>,
    passes: usize,
    weights: Vec<f64>,
}

impl GibbsSampler {
    /// Random initial assignments; document `d` draws from stream `d`.
    pub fn new(words: Vec<Vec<usize>>, v: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> Result<Self> {
        let keys: Vec<u64> = (0..words.len() as u64).collect();
        Self::with_stream_keys(words, v, k, alpha, beta, seed, &keys)
    }

    /// As [`GibbsSampler::new`] with explicit per-document stream keys.
    pub fn with_stream_keys(
        words: Vec<Vec<usize>>,
        v: usize,
        k: usize,
        alpha: f64,
        beta: f64,
        seed: u64,
        stream_keys: &[u64],
    ) -> Result<Self> {
        if k < 2 {
            return Err(TopicError::TooFewTopics(k));
        }
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(TopicError::BadHyperparameter);
        }
        if stream_keys.len() != words.len() {
            return Err(TopicError::StreamKeys(stream_keys.len(), words.len()));
        }
        if words.iter().all(Vec::is_empty) {
            return Err(TopicError::EmptyCorpus);
        }
        let mut rngs: Vec<ChaCha8Rng> = stream_keys
            .iter()
            .map(|&key| {
                let mut r = ChaCha8Rng::seed_from_u64(seed);
                r.set_stream(key);
                r
            })
            .collect();
        let mut counts = GibbsCounts {
            k,
            v,
            z: Vec::with_capacity(words.len()),
            doc_topic: vec![0; words.len() * k],
            topic_word: vec![0; k * v],
            topic_total: vec![0; k],
        };
        for (d, ws) in words.iter().enumerate() {
            let zs: Vec<usize> = ws.iter().map(|_| rngs[d].gen_range(0..k)).collect();
            for (&t, &w) in zs.iter().zip(ws) {
                counts.doc_topic[d * k + t] += 1;
                counts.topic_word[t * v + w] += 1;
                counts.topic_total[t] += 1;
            }
            counts.z.push(zs);
        }
        Ok(GibbsSampler { words, counts, alpha, beta, rngs, passes: 0, weights: vec![0.0; k] })
    }

    pub fn counts(&self) -> &GibbsCounts {
        &self.counts
    }

    pub fn words(&self) -> &[Vec<usize>] {
        &self.words
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    /// One full sweep over every token.
    pub fn sweep(&mut self) {
        let GibbsCounts { k, v, z, doc_topic, topic_word, topic_total } = &mut self.counts;
        let (k, v) = (*k, *v);
        let vbeta = v as f64 * self.beta;
        for (d, ws) in self.words.iter().enumerate() {
            let rng = &mut self.rngs[d];
            let dt = &mut doc_topic[d * k..(d + 1) * k];
            for (i, &w) in ws.iter().enumerate() {
                let old = z[d][i];
                dt[old] -= 1;
                topic_word[old * v + w] -= 1;
                topic_total[old] -= 1;

                let mut total = 0.0;
                for t in 0..k {
                    let p = (dt[t] as f64 + self.alpha) * (topic_word[t * v + w] as f64 + self.beta)
                        / (topic_total[t] as f64 + vbeta);
                    total += p;
                    self.weights[t] = total;
                }
                let u = rng.gen::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                z[d][i] = new;
                dt[new] += 1;
                topic_word[new * v + w] += 1;
                topic_total[new] += 1;
            }
        }
        self.passes += 1;
        debug_assert_eq!(self.counts.check_conservation(&self.words), Ok(()));
    }

    /// `phi[k][w] = (n_kw + beta) / (n_k + V beta)`.
    pub fn phi(&self) -> Vec<Vec<f64>> {
        let GibbsCounts { k, v, topic_word, topic_total, .. } = &self.counts;
        (0..*k)
            .map(|t| {
                let den = topic_total[t] as f64 + *v as f64 * self.beta;
                (0..*v).map(|w| (topic_word[t * v + w] as f64 + self.beta) / den).collect()
            })
            .collect()
    }

    /// `theta[d][k] = (n_dk + alpha) / (n_d + K alpha)`.
    pub fn theta(&self) -> Vec<Vec<f64>> {
        let k = self.counts.k;
        self.words
            .iter()
            .enumerate()
            .map(|(d, ws)| {
                let den = ws.len() as f64 + k as f64 * self.alpha;
                (0..k).map(|t| (self.counts.doc_topic[d * k + t] as f64 + self.alpha) / den).collect()
            })
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
struct TopicModelRepr<F> {
    #[serde(rename = "K")]
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    passes: usize,
    vocab: Vec<String>,
    phi: Vec<Vec<F>>,
    theta: Vec<Vec<F>>,
    assignments: Vec<usize>,
}

/// A fitted topic model. The Gibbs count tables are kept in memory only; the
/// JSON form carries the estimates and per-document assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar", try_from = "TopicModelRepr<F>", into = "TopicModelRepr<F>")]
pub struct TopicModel<F: Scalar = f64> {
    k: usize,
    alpha: f64,
    beta: f64,
    seed: u64,
    passes: usize,
    terms: Vec<String>,
    phi: Vec<Vec<F>>,
    theta: Vec<Vec<F>>,
    assignments: Vec<usize>,
    counts: Option<GibbsCounts>,
}

impl<F: Scalar> From<TopicModel<F>> for TopicModelRepr<F> {
    fn from(m: TopicModel<F>) -> Self {
        TopicModelRepr {
            k: m.k,
            alpha: m.alpha,
            beta: m.beta,
            seed: m.seed,
            passes: m.passes,
            vocab: m.terms,
            phi: m.phi,
            theta: m.theta,
            assignments: m.assignments,
        }
    }
}

impl<F: Scalar> TryFrom<TopicModelRepr<F>> for TopicModel<F> {
    type Error = String;
    fn try_from(r: TopicModelRepr<F>) -> std::result::Result<Self, String> {
        if r.phi.len() != r.k || r.phi.iter().any(|row| row.len() != r.vocab.len()) {
            return Err("phi must be K x |vocab|".into());
        }
        if r.theta.iter().any(|row| row.len() != r.k) || r.assignments.len() != r.theta.len() {
            return Err("theta must be docs x K with one assignment per document".into());
        }
        if r.assignments.iter().any(|&a| a >= r.k) {
            return Err("assignment out of topic range".into());
        }
        Ok(TopicModel {
            k: r.k,
            alpha: r.alpha,
            beta: r.beta,
            seed: r.seed,
            passes: r.passes,
            terms: r.vocab,
            phi: r.phi,
            theta: r.theta,
            assignments: r.assignments,
            counts: None,
        })
    }
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax<F: Scalar>(row: &[F]) -> usize {
    let mut best = 0;
    for (i, &x) in row.iter().enumerate().skip(1) {
        if x > row[best] {
            best = i;
        }
    }
    best
}

impl<F: Scalar> TopicModel<F> {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn passes(&self) -> usize {
        self.passes
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn phi(&self) -> &[Vec<F>] {
        &self.phi
    }

    pub fn theta(&self) -> &[Vec<F>] {
        &self.theta
    }

    pub fn num_docs(&self) -> usize {
        self.theta.len()
    }

    /// Gibbs tables of the final sweep; absent on models loaded from JSON.
    pub fn counts(&self) -> Option<&GibbsCounts> {
        self.counts.as_ref()
    }

    /// Argmax topic of every document.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Argmax of the document's theta row, lowest index on ties.
    pub fn assign_topic(&self, doc_index: usize) -> usize {
        argmax(&self.theta[doc_index])
    }

    /// Number of documents assigned to each topic.
    pub fn topic_histogram(&self) -> Vec<usize> {
        let mut h = vec![0; self.k];
        for &a in &self.assignments {
            h[a] += 1;
        }
        h
    }

    /// The `n` most probable terms of `topic`, ties broken by vocabulary index.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<(String, F)>> {
        Ok(self.top_word_ids(topic, n)?.into_iter().map(|w| (self.terms[w].clone(), self.phi[topic][w])).collect())
    }

    pub fn top_word_ids(&self, topic: usize, n: usize) -> Result<Vec<usize>> {
        if topic >= self.k {
            return Err(TopicError::TopicOutOfRange { topic, k: self.k });
        }
        let row = &self.phi[topic];
        let mut ids: Vec<usize> = (0..row.len()).collect();
        ids.sort_by(|&a, &b| row[b].partial_cmp(&row[a]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
        ids.truncate(n);
        Ok(ids)
    }
}

fn fit_encoded<F: Scalar>(
    words: Vec<Vec<usize>>,
    terms: Vec<String>,
    config: &LdaConfig,
) -> Result<TopicModel<F>> {
    if config.passes == 0 {
        return Err(TopicError::NoPasses);
    }
    let alpha = config.alpha();
    let mut sampler = GibbsSampler::new(words, terms.len(), config.topics, alpha, config.beta, config.seed)?;

    let mut sums: Option<(Vec<Vec<f64>>, Vec<Vec<f64>>, usize)> = None;
    for pass in 1..=config.passes {
        sampler.sweep();
        if let Estimate::Averaged { burn_in, lag } = config.estimate {
            if pass > burn_in && (pass - burn_in) % lag.max(1) == 0 {
                let (phi, theta) = (sampler.phi(), sampler.theta());
                match &mut sums {
                    None => sums = Some((phi, theta, 1)),
                    Some((sp, st, n)) => {
                        add_into(sp, &phi);
                        add_into(st, &theta);
                        *n += 1;
                    }
                }
            }
        }
    }
    let (phi, theta) = match sums {
        Some((sp, st, n)) => (scale(sp, n), scale(st, n)),
        None => (sampler.phi(), sampler.theta()),
    };
    let phi: Vec<Vec<F>> = phi.into_iter().map(normalize_row).collect();
    let theta: Vec<Vec<F>> = theta.into_iter().map(normalize_row).collect();
    let assignments = theta.iter().map(|r| argmax(r)).collect();
    Ok(TopicModel {
        k: config.topics,
        alpha,
        beta: config.beta,
        seed: config.seed,
        passes: sampler.passes(),
        terms,
        phi,
        theta,
        assignments,
        counts: Some(sampler.counts().clone()),
    })
}

fn add_into(acc: &mut [Vec<f64>], x: &[Vec<f64>]) {
    for (a, b) in acc.iter_mut().zip(x) {
        for (p, q) in a.iter_mut().zip(b) {
            *p += q;
        }
    }
}

fn scale(m: Vec<Vec<f64>>, n: usize) -> Vec<Vec<f64>> {
    m.into_iter().map(|r| r.into_iter().map(|x| x / n as f64).collect()).collect()
}

/// Converts to `F` and renormalizes so the row sums to one in `F` arithmetic.
fn normalize_row<F: Scalar>(row: Vec<f64>) -> Vec<F> {
    let total: f64 = row.iter().sum();
    row.into_iter().map(|x| F::of(x / total)).collect()
}

/// Fits LDA over `docs` with a vocabulary built from them.
pub fn fit_lda<F: Scalar>(docs: &[TokenList], config: &LdaConfig) -> Result<TopicModel<F>> {
    if config.topics < 2 {
        return Err(TopicError::TooFewTopics(config.topics));
    }
    if docs.is_empty() {
        return Err(TopicError::EmptyCorpus);
    }
    let vocab = Vocabulary::build(docs, config.min_df).map_err(|_| TopicError::EmptyCorpus)?;
    let words: Vec<Vec<usize>> = docs.iter().map(|d| vocab.encode(d)).collect();
    fit_encoded(words, vocab.terms().to_vec(), config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub k: usize,
    pub per_topic: Vec<f64>,
    pub mean: f64,
}

/// Document co-occurrence coherence over each topic's `top_n` words in rank
/// order: `sum_{i<j} ln((D(w_i, w_j) + 1) / D(w_j))`, where `D` counts the
/// documents of `docs` containing the word(s).
pub fn coherence<F: Scalar>(model: &TopicModel<F>, docs: &[TokenList], top_n: usize) -> Result<CoherenceReport> {
    if top_n < 2 {
        return Err(TopicError::TopNTooSmall(top_n));
    }
    let index: std::collections::HashMap<&str, usize> =
        model.terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let doc_sets: Vec<HashSet<usize>> =
        docs.iter().map(|d| d.iter().filter_map(|t| index.get(t).copied()).collect()).collect();
    let df = |w: usize| doc_sets.iter().filter(|s| s.contains(&w)).count();
    let co_df = |a: usize, b: usize| doc_sets.iter().filter(|s| s.contains(&a) && s.contains(&b)).count();

    let mut per_topic = Vec::with_capacity(model.k);
    for t in 0..model.k {
        let top = model.top_word_ids(t, top_n)?;
        let dfs: Vec<usize> = top.iter().map(|&w| df(w)).collect();
        if let Some(pos) = dfs.iter().position(|&n| n == 0) {
            return Err(TopicError::ZeroDocFrequency(model.terms[top[pos]].clone()));
        }
        let mut score = 0.0;
        for j in 1..top.len() {
            for i in 0..j {
                score += ((co_df(top[i], top[j]) as f64 + 1.0) / dfs[j] as f64).ln();
            }
        }
        per_topic.push(score);
    }
    let mean = per_topic.iter().sum::<f64>() / per_topic.len() as f64;
    Ok(CoherenceReport { k: model.k, per_topic, mean })
}

/// Fits one model per `K` (same seed, `alpha = 50/K` unless fixed in `base`)
/// and returns the mean coherence of each.
pub fn coherence_scan(docs: &[TokenList], ks: &[usize], base: &LdaConfig, top_n: usize) -> Result<Vec<(usize, f64)>> {
    ks.par_iter()
        .map(|&k| {
            let cfg = LdaConfig { topics: k, ..base.clone() };
            let model = fit_lda::<f64>(docs, &cfg)?;
            Ok((k, coherence(&model, docs, top_n)?.mean))
        })
        .collect()
}

/// Removes the documents assigned to any topic in `drop`, keeping order.
pub fn filter_by_topics<F: Scalar>(corpus: &Corpus, model: &TopicModel<F>, drop: &BTreeSet<usize>) -> Result<Corpus> {
    if model.num_docs() != corpus.len() {
        return Err(TopicError::Misaligned { model: model.num_docs(), corpus: corpus.len() });
    }
    Ok(corpus.retain_indices(|i, _| !drop.contains(&model.assignments[i])))
}

/// Refits LDA over the documents assigned to `topic`, with a vocabulary
/// rebuilt on that subset. Returns the subset's document indices and the model.
pub fn refit_subtopics<F: Scalar>(
    docs: &[TokenList],
    model: &TopicModel<F>,
    topic: usize,
    config: &LdaConfig,
) -> Result<(Vec<usize>, TopicModel<F>)> {
    if topic >= model.k {
        return Err(TopicError::TopicOutOfRange { topic, k: model.k });
    }
    if model.num_docs() != docs.len() {
        return Err(TopicError::Misaligned { model: model.num_docs(), corpus: docs.len() });
    }
    let members: Vec<usize> = (0..docs.len()).filter(|&i| model.assignments[i] == topic).collect();
    if members.len() < config.topics.max(1) {
        return Err(TopicError::TooFewDocuments { topic, found: members.len(), needed: config.topics.max(1) });
    }
    let subset: Vec<TokenList> = members.iter().map(|&i| docs[i].clone()).collect();
    Ok((members, fit_lda(&subset, config)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tl(words: &[&str]) -> TokenList {
        TokenList::new(words.iter().copied())
    }

    #[test]
    fn single_repeated_token() {
        let docs = [tl(&["glass"; 6])];
        let m: TopicModel = fit_lda(&docs, &LdaConfig::new(2, 5, 1)).unwrap();
        assert!((m.theta()[0].iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for row in m.phi() {
            assert_eq!(row.len(), 1);
            assert!((row[0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.1, 0.8, 0.1]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
    }

    #[test]
    fn errors() {
        let docs = [tl(&["a", "b"])];
        assert!(matches!(fit_lda::<f64>(&docs, &LdaConfig::new(1, 5, 0)), Err(TopicError::TooFewTopics(1))));
        assert!(matches!(fit_lda::<f64>(&docs, &LdaConfig::new(2, 0, 0)), Err(TopicError::NoPasses)));
        assert!(matches!(fit_lda::<f64>(&[], &LdaConfig::new(2, 5, 0)), Err(TopicError::EmptyCorpus)));
        assert!(matches!(fit_lda::<f64>(&[tl(&[]), tl(&[])], &LdaConfig::new(2, 5, 0)), Err(TopicError::EmptyCorpus)));
    }

    #[test]
    fn top_words_uniform_row_in_index_order() {
        let docs = [tl(&["c", "b", "a"])];
        let mut m: TopicModel = fit_lda(&docs, &LdaConfig::new(2, 1, 0)).unwrap();
        m.phi[0] = vec![1.0 / 3.0; 3];
        let words: Vec<String> = m.top_words(0, 3).unwrap().into_iter().map(|(w, _)| w).collect();
        assert_eq!(words, ["a", "b", "c"]);
        assert!(m.top_words(2, 1).is_err());
    }

    #[test]
    fn coherence_pair_terms() {
        // "x" and "y" co-occur in all 4 docs; "z" appears alone in 2 docs.
        let docs: Vec<TokenList> =
            vec![tl(&["x", "y"]), tl(&["x", "y"]), tl(&["x", "y"]), tl(&["x", "y"]), tl(&["z"]), tl(&["z"])];
        let mut m: TopicModel = fit_lda(&docs, &LdaConfig::new(2, 1, 0)).unwrap();
        assert_eq!(m.terms(), ["x", "y", "z"]);
        m.phi[0] = vec![0.6, 0.4, 0.0];
        m.phi[1] = vec![0.6, 0.0, 0.4];
        let r = coherence(&m, &docs, 2).unwrap();
        assert!((r.per_topic[0] - (5.0f64 / 4.0).ln()).abs() < 1e-12);
        assert!((r.per_topic[1] - (1.0f64 / 2.0).ln()).abs() < 1e-12);
        assert!(r.per_topic[0] > 0.0 && r.per_topic[1] < 0.0);
        assert!(matches!(coherence(&m, &docs, 1), Err(TopicError::TopNTooSmall(1))));
        assert!(matches!(coherence(&m, &docs[4..], 2), Err(TopicError::ZeroDocFrequency(_))));
    }

    #[test]
    fn json_schema_fields() {
        let docs = [tl(&["a", "b", "a"]), tl(&["c"])];
        let m: TopicModel = fit_lda(&docs, &LdaConfig::new(2, 3, 9)).unwrap();
        let v = serde_json::to_value(&m).unwrap();
        for key in ["K", "alpha", "beta", "seed", "passes", "vocab", "phi", "theta", "assignments"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        let back: TopicModel = serde_json::from_value(v).unwrap();
        assert_eq!(back.phi(), m.phi());
        assert!(back.counts().is_none());
    }
}
