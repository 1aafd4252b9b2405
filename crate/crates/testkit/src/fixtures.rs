//! Synthetic data sets with known structure.

use atlas_core::embed::AffinityMatrix;
use atlas_core::textproc::{DistanceMatrix, SparseVector, TokenList};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Documents drawn from `k` topics with disjoint vocabularies of `vocab_per_topic`
/// words each, topics balanced and shuffled. Returns the documents and each
/// document's planted topic.
pub fn planted_corpus(k: usize, docs: usize, len: usize, vocab_per_topic: usize, seed: u64) -> (Vec<TokenList>, Vec<usize>) {
    let mut r = rng(seed);
    let mut truth: Vec<usize> = (0..docs).map(|d| d % k).collect();
    truth.shuffle(&mut r);
    let out = truth
        .iter()
        .map(|&t| TokenList::new((0..len).map(|_| format!("t{t}w{}", r.gen_range(0..vocab_per_topic)))))
        .collect();
    (out, truth)
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(k - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, k - 1);
            out.push(q);
        }
    }
    out
}

/// Fraction of documents whose predicted cluster maps to the planted topic
/// under the best one-to-one relabeling.
pub fn matched_purity(predicted: &[usize], truth: &[usize], k: usize) -> f64 {
    assert_eq!(predicted.len(), truth.len());
    let best = permutations(k)
        .into_iter()
        .map(|perm| predicted.iter().zip(truth).filter(|&(&p, &t)| p < k && perm[p] == t).count())
        .max()
        .unwrap_or(0);
    best as f64 / truth.len() as f64
}

/// `n` points in the unit cube split by a random hyperplane through its
/// center, with no point closer than `margin` to it.
pub fn separable_set(n: usize, dim: usize, margin: f64, seed: u64) -> Vec<(SparseVector<f64>, bool)> {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut w: Vec<f64> = (0..dim).map(|_| normal.sample(&mut r)).collect();
    let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    w.iter_mut().for_each(|x| *x /= norm);
    let offset: f64 = w.iter().map(|x| 0.5 * x).sum();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let x: Vec<f64> = (0..dim).map(|_| r.gen_range(0.0..1.0)).collect();
        let s: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - offset;
        if s.abs() >= margin {
            out.push((SparseVector::from_dense(&x).unwrap(), s > 0.0));
        }
    }
    out
}

/// Random sparse nonnegative examples with random labels, for gradient checks.
pub fn random_examples(n: usize, dim: usize, r: &mut impl Rng) -> Vec<(SparseVector<f64>, bool)> {
    (0..n)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| if r.gen_bool(0.6) { r.gen_range(0.0..2.0) } else { 0.0 }).collect();
            (SparseVector::from_dense(&x).unwrap(), r.gen_bool(0.5))
        })
        .collect()
}

/// Three well separated Gaussian clusters of `per_cluster` points in
/// `dim` dimensions. Returns Euclidean distances and cluster labels.
pub fn three_clusters(per_cluster: usize, dim: usize, seed: u64) -> (DistanceMatrix<f64>, Vec<usize>) {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for c in 0..3 {
        let mut center = vec![0.0; dim];
        center[c] = 10.0;
        for _ in 0..per_cluster {
            points.push(center.iter().map(|&m| m + normal.sample(&mut r)).collect::<Vec<f64>>());
            labels.push(c);
        }
    }
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            d[i * n + j] = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        }
    }
    (DistanceMatrix::from_rows(n, d).unwrap(), labels)
}

/// Random symmetric joint distribution with zero diagonal.
pub fn random_affinities(n: usize, r: &mut impl Rng) -> AffinityMatrix<f64> {
    let mut p = vec![0.0; n * n];
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let v: f64 = r.gen_range(0.05..1.0);
            p[i * n + j] = v;
            p[j * n + i] = v;
            total += 2.0 * v;
        }
    }
    p.iter_mut().for_each(|x| *x /= total);
    AffinityMatrix::from_joint(n, p).unwrap()
}

pub fn random_coords(n: usize, scale: f64, r: &mut impl Rng) -> Vec<[f64; 2]> {
    (0..n).map(|_| [r.gen_range(-scale..scale), r.gen_range(-scale..scale)]).collect()
}

/// Mean pairwise embedded distance within and between clusters.
pub fn within_between(coords: &[[f64; 2]], labels: &[usize]) -> (f64, f64) {
    let (mut w, mut nw, mut b, mut nb) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..coords.len() {
        for j in (i + 1)..coords.len() {
            let d = (coords[i][0] - coords[j][0]).hypot(coords[i][1] - coords[j][1]);
            if labels[i] == labels[j] {
                w += d;
                nw += 1;
            } else {
                b += d;
                nb += 1;
            }
        }
    }
    (w / nw as f64, b / nb as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Documents, topics, markers and caption labels for query tests.
pub struct QueryFixture {
    pub corpus: atlas_core::corpus::Corpus,
    pub assignments: Vec<usize>,
    pub topic_names: std::collections::BTreeMap<usize, String>,
    pub markers: atlas_core::chemparse::DocumentElementMatrix,
    pub caption_labels: Vec<Option<String>>,
    pub inventory: crate::filters::Inventory,
}

impl QueryFixture {
    pub fn facts(&self) -> Vec<crate::filters::DocFacts> {
        let mut caps: Vec<Vec<(String, Option<String>)>> = vec![Vec::new(); self.corpus.len()];
        for ((d, c), l) in self.corpus.captions().zip(&self.caption_labels) {
            caps[d].push((c.caption_id.clone(), l.clone()));
        }
        self.corpus
            .documents()
            .iter()
            .enumerate()
            .zip(caps)
            .map(|((i, d), captions)| crate::filters::DocFacts {
                doc_id: d.doc_id.clone(),
                topic_id: self.assignments[i],
                topic: self.topic_names.get(&self.assignments[i]).cloned().unwrap_or_else(|| self.assignments[i].to_string()),
                elements: self.markers.row_elements(i).into_iter().map(|e| e.symbol().to_string()).collect(),
                abstract_text: d.abstract_text.clone(),
                captions,
            })
            .collect()
    }
}

const PHRASES: [&str; 6] = ["solid state synthesis", "sol-gel", "melt quenching", "Bioactive", "laser", "thin film"];
const ELEMENTS: [&str; 8] = ["F", "Cl", "Si", "O", "Ca", "Er", "Na", "P"];
const LABELS: [&str; 4] = ["SEM", "XRD", "Emission", "Fracture"];

/// `n` random documents over a small vocabulary of phrases, four topics
/// (one unnamed), eight elements and four caption labels.
pub fn query_fixture(n: usize, seed: u64) -> QueryFixture {
    use atlas_core::chemparse::{DocumentElementMatrix, Element};
    use atlas_core::corpus::{Caption, Corpus, Document};

    let mut r = rng(seed);
    let mut docs = Vec::with_capacity(n);
    let mut labels = Vec::new();
    for i in 0..n {
        let id = format!("doc{i:03}");
        let words: Vec<&str> = PHRASES.iter().copied().filter(|_| r.gen_bool(0.3)).collect();
        let mut d = Document::new(id.clone(), format!("Title {i}"), format!("We study {}.", words.join(" and ")));
        for f in 0..r.gen_range(0..4u32) {
            d.captions.push(Caption::new(&id, f + 1, format!("Figure {f}")));
            labels.push(if r.gen_bool(0.7) { Some(LABELS[r.gen_range(0..LABELS.len())].to_string()) } else { None });
        }
        docs.push(d);
    }
    let corpus = Corpus::from_documents(docs).unwrap();
    let mut markers = DocumentElementMatrix::new(corpus.documents().iter().map(|d| d.doc_id.clone()).collect(), 118);
    for i in 0..n {
        for s in ELEMENTS {
            if r.gen_bool(0.35) {
                markers.set(i, Element::from_symbol(s, false).unwrap());
            }
        }
    }
    let topic_names: std::collections::BTreeMap<usize, String> =
        [(0, "bioactive"), (1, "optical fibre"), (2, "Mechanical")].into_iter().map(|(k, v)| (k, v.to_string())).collect();
    QueryFixture {
        assignments: (0..n).map(|_| r.gen_range(0..4)).collect(),
        inventory: crate::filters::Inventory {
            topics: vec!["bioactive".into(), "optical fibre".into(), "MECHANICAL".into(), "3".into()],
            elements: ELEMENTS.iter().map(|s| s.to_string()).collect(),
            phrases: PHRASES.iter().map(|s| s.to_lowercase()).chain(["BIOACTIVE".to_string(), "and".to_string()]).collect(),
            labels: LABELS.iter().map(|s| s.to_string()).collect(),
        },
        corpus,
        topic_names,
        markers,
        caption_labels: labels,
    }
}
