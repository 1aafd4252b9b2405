//! Straightforward reimplementations used as oracles.

use std::collections::{BTreeMap, BTreeSet};

use atlas_core::textproc::{SparseVector, TokenList};

/// Binary-tf, natural-log idf weights per document, keyed by term.
pub fn tfidf(docs: &[TokenList]) -> (BTreeSet<String>, Vec<BTreeMap<String, f64>>) {
    let n = docs.len();
    let terms: BTreeSet<String> = docs.iter().flat_map(|d| d.tokens().iter().cloned()).collect();
    let df = |t: &str| docs.iter().filter(|d| d.tokens().iter().any(|x| x == t)).count();
    let idf: BTreeMap<&str, f64> = terms.iter().map(|t| (t.as_str(), (n as f64 / df(t) as f64).ln())).collect();
    let rows = docs
        .iter()
        .map(|d| {
            terms
                .iter()
                .filter(|t| d.tokens().contains(t))
                .map(|t| (t.clone(), 1.0 * idf[t.as_str()]))
                .filter(|&(_, w)| w != 0.0)
                .collect()
        })
        .collect();
    (terms, rows)
}

/// Regularized mean cross-entropy written out term by term.
pub fn logistic_loss(examples: &[(SparseVector<f64>, bool)], w: &[f64], b: f64, lambda: f64) -> f64 {
    let mut total = 0.0;
    for (x, y) in examples {
        let dense = x.to_dense();
        let z: f64 = dense.iter().zip(w).map(|(a, c)| a * c).sum::<f64>() + b;
        let p = 1.0 / (1.0 + (-z).exp());
        total += if *y { -p.ln() } else { -(1.0 - p).ln() };
    }
    total / examples.len() as f64 + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

/// `KL(P || Q)` with `Q` from the Student-t kernel, computed from scratch.
pub fn tsne_kl(p: &[f64], n: usize, y: &[[f64; 2]]) -> f64 {
    let mut z = 0.0;
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let d2 = (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2);
                w[i * n + j] = 1.0 / (1.0 + d2);
                z += w[i * n + j];
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j];
            if i != j && pij > 0.0 {
                kl += pij * (pij / (w[i * n + j] / z)).ln();
            }
        }
    }
    kl
}

/// Central difference of `f` along every coordinate of `x`.
pub fn central_diff(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut buf = x.to_vec();
    (0..x.len())
        .map(|i| {
            buf[i] = x[i] + h;
            let up = f(&buf);
            buf[i] = x[i] - h;
            let down = f(&buf);
            buf[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}
