//! Binary relevance classifier: L2-regularized logistic regression trained
//! by full-batch gradient descent over sparse TF-IDF features.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::textproc::SparseVector;

#[derive(Debug, Error)]
pub enum RelevanceError {
    #[error("training data must contain both classes (positives: {positives}, negatives: {negatives})")]
    SingleClass { positives: usize, negatives: usize },
    #[error("dimension mismatch: model has {expected}, input has {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("loss became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("split ratio must lie strictly between 0 and 1, got {0}")]
    BadRatio(f64),
    #[error("empty dataset")]
    Empty,
}

pub type Result<T> = std::result::Result<T, RelevanceError>;

/// A feature vector with its label (`true` = relevant).
pub type Example<F> = (SparseVector<F>, bool);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Step size; `None` picks `4 / L` from [`lipschitz_bound`].
    pub learning_rate: Option<f64>,
    pub l2_lambda: f64,
    pub max_iters: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { learning_rate: None, l2_lambda: 1e-4, max_iters: 2000, tol: 1e-9, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub iterations: usize,
    pub final_loss: f64,
    pub learning_rate: f64,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
struct ModelRepr<F> {
    dim: usize,
    bias: F,
    weights: Vec<F>,
    l2_lambda: F,
    meta: TrainingMeta,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar", try_from = "ModelRepr<F>", into = "ModelRepr<F>")]
pub struct LogRegModel<F: Scalar = f64> {
    pub weights: Vec<F>,
    pub bias: F,
    pub l2_lambda: F,
    pub meta: TrainingMeta,
}

impl<F: Scalar> TryFrom<ModelRepr<F>> for LogRegModel<F> {
    type Error = String;
    fn try_from(r: ModelRepr<F>) -> std::result::Result<Self, String> {
        if r.weights.len() != r.dim {
            return Err(format!("model declares dim {} but has {} weights", r.dim, r.weights.len()));
        }
        Ok(LogRegModel { weights: r.weights, bias: r.bias, l2_lambda: r.l2_lambda, meta: r.meta })
    }
}

impl<F: Scalar> From<LogRegModel<F>> for ModelRepr<F> {
    fn from(m: LogRegModel<F>) -> Self {
        ModelRepr { dim: m.weights.len(), bias: m.bias, weights: m.weights, l2_lambda: m.l2_lambda, meta: m.meta }
    }
}

pub fn sigmoid<F: Scalar>(z: F) -> F {
    if z >= F::zero() {
        F::one() / (F::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (F::one() + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus<F: Scalar>(z: F) -> F {
    if z > F::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl<F: Scalar> LogRegModel<F> {
    pub fn zeros(dim: usize, l2_lambda: F) -> Self {
        LogRegModel {
            weights: vec![F::zero(); dim],
            bias: F::zero(),
            l2_lambda,
            meta: TrainingMeta { iterations: 0, final_loss: 0.0, learning_rate: 0.0, seed: 0 },
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    fn check_dim(&self, x: &SparseVector<F>) -> Result<()> {
        if x.dim() != self.dim() {
            return Err(RelevanceError::DimensionMismatch { expected: self.dim(), found: x.dim() });
        }
        Ok(())
    }

    /// `sigmoid(w.x + b)`.
    pub fn predict(&self, x: &SparseVector<F>) -> Result<F> {
        self.check_dim(x)?;
        Ok(sigmoid(x.dot_dense(&self.weights) + self.bias))
    }

    /// Thresholded at 0.5.
    pub fn classify(&self, x: &SparseVector<F>) -> Result<bool> {
        Ok(self.predict(x)? > F::of(0.5))
    }
}

/// Regularized loss and its gradient with respect to `(weights, bias)`.
///
/// loss = mean cross-entropy + lambda/2 * |w|^2; the bias is not regularized.
pub fn loss_and_gradient<F: Scalar>(
    examples: &[Example<F>],
    weights: &[F],
    bias: F,
    l2_lambda: F,
) -> (F, Vec<F>, F) {
    let n = F::of_usize(examples.len());
    let mut grad = vec![F::zero(); weights.len()];
    let mut grad_b = F::zero();
    let mut loss = F::zero();
    for (x, y) in examples {
        let z = x.dot_dense(weights) + bias;
        let yf = if *y { F::one() } else { F::zero() };
        loss += softplus(z) - yf * z;
        let r = sigmoid(z) - yf;
        for &(i, v) in x.entries() {
            grad[i] += r * v;
        }
        grad_b += r;
    }
    loss /= n;
    grad_b /= n;
    let mut reg = F::zero();
    for (g, &w) in grad.iter_mut().zip(weights) {
        *g = *g / n + l2_lambda * w;
        reg += w * w;
    }
    loss += l2_lambda * reg / F::of(2.0);
    (loss, grad, grad_b)
}

/// `max_i (|x_i|^2 + 1) + 4 lambda`. The loss Hessian is bounded by `L / 4`,
/// so any step size up to `4 / L` keeps full-batch descent monotone.
pub fn lipschitz_bound<F: Scalar>(examples: &[Example<F>], l2_lambda: F) -> F {
    let max_sq = examples
        .iter()
        .map(|(x, _)| {
            let n = x.norm();
            n * n + F::one()
        })
        .fold(F::zero(), F::max);
    max_sq + F::of(4.0) * l2_lambda
}

pub fn train_logreg<F: Scalar>(examples: &[Example<F>], config: &TrainConfig) -> Result<LogRegModel<F>> {
    let positives = examples.iter().filter(|(_, y)| *y).count();
    let negatives = examples.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(RelevanceError::SingleClass { positives, negatives });
    }
    let dim = examples[0].0.dim();
    if let Some((x, _)) = examples.iter().find(|(x, _)| x.dim() != dim) {
        return Err(RelevanceError::DimensionMismatch { expected: dim, found: x.dim() });
    }
    let lambda = F::of(config.l2_lambda);
    let lr = match config.learning_rate {
        Some(lr) => F::of(lr),
        None => F::of(4.0) / lipschitz_bound(examples, lambda),
    };
    let tol = F::of(config.tol);

    let mut weights = vec![F::zero(); dim];
    let mut bias = F::zero();
    let (mut loss, mut grad, mut grad_b) = loss_and_gradient(examples, &weights, bias, lambda);
    let mut iterations = 0;
    while iterations < config.max_iters {
        for (w, g) in weights.iter_mut().zip(&grad) {
            *w -= lr * *g;
        }
        bias -= lr * grad_b;
        iterations += 1;
        let (next_loss, g, gb) = loss_and_gradient(examples, &weights, bias, lambda);
        if !next_loss.is_finite() {
            return Err(RelevanceError::Diverged { iteration: iterations });
        }
        let decrease = loss - next_loss;
        loss = next_loss;
        grad = g;
        grad_b = gb;
        if decrease < tol {
            break;
        }
    }
    Ok(LogRegModel {
        weights,
        bias,
        l2_lambda: lambda,
        meta: TrainingMeta { iterations, final_loss: loss.as_f64(), learning_rate: lr.as_f64(), seed: config.seed },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl EvalMetrics {
    pub fn from_predictions(predicted: &[bool], actual: &[bool]) -> Self {
        let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
        for (&p, &a) in predicted.iter().zip(actual) {
            match (p, a) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, false) => tn += 1,
                (false, true) => fn_ += 1,
            }
        }
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        EvalMetrics {
            accuracy: ratio(tp + tn, tp + fp + tn + fn_),
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fn_),
            tp,
            fp,
            tn,
            fn_,
        }
    }
}

pub fn evaluate<F: Scalar>(model: &LogRegModel<F>, test: &[Example<F>]) -> Result<EvalMetrics> {
    if test.is_empty() {
        return Err(RelevanceError::Empty);
    }
    let predicted = test.iter().map(|(x, _)| model.classify(x)).collect::<Result<Vec<_>>>()?;
    let actual: Vec<bool> = test.iter().map(|(_, y)| *y).collect();
    Ok(EvalMetrics::from_predictions(&predicted, &actual))
}

/// Stratified, seeded split into `(train, test)`. Each class contributes
/// `ratio` of its members to the training side (largest-remainder rounding so
/// the training size is `round(ratio * n)`).
pub fn split<T: Clone>(dataset: &[(T, bool)], ratio: f64, seed: u64) -> Result<(Vec<(T, bool)>, Vec<(T, bool)>)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(RelevanceError::BadRatio(ratio));
    }
    if dataset.is_empty() {
        return Err(RelevanceError::Empty);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut classes: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, (_, y)) in dataset.iter().enumerate() {
        classes[*y as usize].push(i);
    }
    let target = (ratio * dataset.len() as f64).round() as usize;
    let exact: Vec<f64> = classes.iter().map(|c| ratio * c.len() as f64).collect();
    let mut take: Vec<usize> = exact.iter().map(|x| x.floor() as usize).collect();
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    for &c in order.iter().cycle().take(2) {
        if take.iter().sum::<usize>() < target && take[c] < classes[c].len() {
            take[c] += 1;
        }
    }

    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (c, members) in classes.iter_mut().enumerate() {
        members.shuffle(&mut rng);
        let (a, b) = members.split_at(take[c]);
        train.extend(a.iter().map(|&i| dataset[i].clone()));
        test.extend(b.iter().map(|&i| dataset[i].clone()));
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense(v: &[f64]) -> SparseVector<f64> {
        SparseVector::from_dense(v).unwrap()
    }

    #[test]
    fn zero_iterations_gives_half_everywhere() {
        let data = vec![(dense(&[1.0, 0.0]), true), (dense(&[0.0, 1.0]), false)];
        let cfg = TrainConfig { max_iters: 0, ..Default::default() };
        let m = train_logreg(&data, &cfg).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        assert_eq!(m.predict(&dense(&[3.0, 2.0])).unwrap(), 0.5);
    }

    #[test]
    fn single_class_rejected() {
        let data = vec![(dense(&[1.0]), true), (dense(&[2.0]), true)];
        assert!(matches!(train_logreg(&data, &TrainConfig::default()), Err(RelevanceError::SingleClass { .. })));
    }

    #[test]
    fn divergence_names_iteration() {
        let data = vec![(dense(&[1e3]), true), (dense(&[1.0]), false)];
        let cfg = TrainConfig { learning_rate: Some(1e300), max_iters: 50, ..Default::default() };
        match train_logreg(&data, &cfg) {
            Err(RelevanceError::Diverged { iteration }) => assert!(iteration >= 1),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn sigmoid_symmetry() {
        for z in [-30.0f64, -2.5, -0.1, 0.0, 0.7, 4.0, 40.0] {
            assert!((sigmoid(-z) - (1.0 - sigmoid(z))).abs() < 1e-15);
            let s = sigmoid(z);
            assert!(s > 0.0 && s < 1.0 || z.abs() > 30.0);
        }
        assert_eq!(sigmoid(0.0f64), 0.5);
    }

    #[test]
    fn predict_dim_mismatch() {
        let m = LogRegModel::<f64>::zeros(3, 0.0);
        assert!(m.predict(&dense(&[1.0])).is_err());
        assert_eq!(m.predict(&dense(&[1.0, 2.0, 3.0])).unwrap(), 0.5);
    }

    #[test]
    fn metrics_edge_cases() {
        let all = EvalMetrics::from_predictions(&[true, false, true], &[true, false, true]);
        assert_eq!((all.accuracy, all.fp, all.fn_), (1.0, 0, 0));
        let pos = EvalMetrics::from_predictions(&[true; 4], &[true, true, false, false]);
        assert_eq!((pos.recall, pos.accuracy, pos.precision), (1.0, 0.5, 0.5));
    }

    #[test]
    fn split_sizes_and_determinism() {
        let data: Vec<(usize, bool)> = (0..100).map(|i| (i, i % 2 == 0)).collect();
        let (tr, te) = split(&data, 0.8, 7).unwrap();
        assert_eq!((tr.len(), te.len()), (80, 20));
        assert_eq!(split(&data, 0.8, 7).unwrap(), (tr.clone(), te.clone()));
        let pos_train = tr.iter().filter(|(_, y)| *y).count() as i64;
        assert!((pos_train - 40).abs() <= 1);
        let mut ids: Vec<usize> = tr.iter().chain(&te).map(|(i, _)| *i).collect();
        ids.sort();
        assert_eq!(ids, (0..100).collect::<Vec<_>>());
        assert!(split(&data, 1.0, 0).is_err());
        assert!(split(&data, 0.0, 0).is_err());

        let skewed: Vec<(usize, bool)> = (0..100).map(|i| (i, i < 37)).collect();
        assert_eq!(split(&skewed, 0.8, 1).unwrap().0.len(), 80);
    }

    #[test]
    fn model_json_schema() {
        let mut m = LogRegModel::<f64>::zeros(2, 1e-4);
        m.weights = vec![0.5, -1.0];
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert_eq!(v["dim"], 2);
        assert_eq!(v["weights"][1], -1.0);
        let back: LogRegModel<f64> = serde_json::from_value(v.clone()).unwrap_or_else(|e| panic!("{e}: {v}"));
        assert_eq!(back.weights, m.weights);
        let mut bad = v;
        bad["dim"] = 3.into();
        assert!(serde_json::from_value::<LogRegModel<f64>>(bad).is_err());
    }
}
