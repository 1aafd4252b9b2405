//! Exact t-SNE over a precomputed distance matrix.
//!
//! Conditional affinities use a Gaussian kernel `exp(-d^2 / (2 sigma_i^2))`
//! with `sigma_i` found by bisection so that the row's perplexity `2^H`
//! (entropy in bits) hits the target. The 2-D map minimizes `KL(P || Q)` with
//! a Student-t kernel by gradient descent with momentum and per-coordinate
//! gains; the gradient is the exact O(n^2) one.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::Scalar;
use crate::textproc::DistanceMatrix;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("bandwidth search did not reach perplexity {target} (achieved 2^H = {achieved})")]
    Calibration { target: f64, achieved: f64 },
    #[error("row {row}: {source}")]
    Row {
        row: usize,
        #[source]
        source: Box<EmbedError>,
    },
    #[error("need at least {needed} points, got {found}")]
    TooFewPoints { needed: usize, found: usize },
    #[error("invalid affinity matrix: {0}")]
    InvalidAffinities(String),
    #[error("coordinates became non-finite at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EmbedError>;

const MAX_BISECTION_STEPS: usize = 64;
const P_FLOOR: f64 = 1e-12;

/// Entropy (nats) and row probabilities for precision `beta` over squared
/// distances already shifted so their minimum is zero.
fn row_distribution<F: Scalar>(shifted_sq: &[F], beta: F, probs: &mut [F]) -> F {
    let mut z = F::zero();
    for (p, &d) in probs.iter_mut().zip(shifted_sq) {
        *p = (-beta * d).exp();
        z += *p;
    }
    let mut weighted = F::zero();
    for (p, &d) in probs.iter_mut().zip(shifted_sq) {
        *p /= z;
        weighted += *p * d;
    }
    z.ln() + beta * weighted
}

fn perplexity_tolerance<F: Scalar>(perplexity: F) -> F {
    F::of(1e-5).max(F::of(64.0) * F::epsilon() * perplexity)
}

/// Returns `(sigma, conditional probabilities)` for one row of distances to
/// the other points.
fn calibrate_row<F: Scalar>(distances: &[F], perplexity: F) -> Result<(F, Vec<F>)> {
    let m = distances.len();
    if m == 0 {
        return Err(EmbedError::TooFewPoints { needed: 2, found: 1 });
    }
    let sq: Vec<F> = distances.iter().map(|&d| d * d).collect();
    let lo_d = sq.iter().copied().fold(F::infinity(), F::min);
    let hi_d = sq.iter().copied().fold(F::neg_infinity(), F::max);
    let shifted: Vec<F> = sq.iter().map(|&d| d - lo_d).collect();
    let tol = perplexity_tolerance(perplexity);
    let max_perp = F::of_usize(m);
    let mut probs = vec![F::zero(); m];

    if hi_d - lo_d <= F::epsilon() * hi_d.max(F::one()) {
        // Equidistant row: the conditional is uniform for every bandwidth.
        probs.iter_mut().for_each(|p| *p = F::one() / max_perp);
        if (max_perp - perplexity).abs() <= tol {
            return Ok((F::one(), probs));
        }
        return Err(EmbedError::Calibration { target: perplexity.as_f64(), achieved: m as f64 });
    }
    if perplexity >= max_perp - tol || perplexity < F::one() {
        return Err(EmbedError::Calibration { target: perplexity.as_f64(), achieved: m as f64 });
    }

    let ln2 = F::LN_2();
    let mut beta = F::one();
    let (mut lo, mut hi) = (F::zero(), F::infinity());
    let mut achieved = F::zero();
    for _ in 0..MAX_BISECTION_STEPS {
        let h = row_distribution(&shifted, beta, &mut probs) / ln2;
        achieved = h.exp2();
        let diff = achieved - perplexity;
        if diff.abs() <= tol {
            let sigma = (F::one() / (F::of(2.0) * beta)).sqrt();
            return Ok((sigma, probs));
        }
        if diff > F::zero() {
            lo = beta;
            beta = if hi.is_infinite() { beta * F::of(2.0) } else { (beta + hi) / F::of(2.0) };
        } else {
            hi = beta;
            beta = if lo == F::zero() { beta / F::of(2.0) } else { (beta + lo) / F::of(2.0) };
        }
    }
    Err(EmbedError::Calibration { target: perplexity.as_f64(), achieved: achieved.as_f64() })
}

/// Bandwidth `sigma` of the Gaussian kernel over `distance_row` (distances
/// from one point to every other point) whose perplexity matches the target.
pub fn calibrate_bandwidth<F: Scalar>(distance_row: &[F], perplexity: F) -> Result<F> {
    calibrate_row(distance_row, perplexity).map(|(s, _)| s)
}

/// Conditional distribution `p_{j|i}` over the row for a given `sigma`.
pub fn conditional_probabilities<F: Scalar>(distance_row: &[F], sigma: F) -> Vec<F> {
    let sq: Vec<F> = distance_row.iter().map(|&d| d * d).collect();
    let lo = sq.iter().copied().fold(F::infinity(), F::min);
    let shifted: Vec<F> = sq.iter().map(|&d| d - lo).collect();
    let mut probs = vec![F::zero(); sq.len()];
    row_distribution(&shifted, F::one() / (F::of(2.0) * sigma * sigma), &mut probs);
    probs
}

/// Symmetric joint affinities `P`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct AffinityMatrix<F = f64> {
    n: usize,
    p: Vec<F>,
    perplexity: F,
    sigmas: Vec<F>,
}

impl<F: Scalar> AffinityMatrix<F> {
    /// Wraps an explicit joint distribution, checking symmetry, zero diagonal,
    /// nonnegativity and unit mass.
    pub fn from_joint(n: usize, p: Vec<F>) -> Result<Self> {
        if p.len() != n * n {
            return Err(EmbedError::Shape(format!("{} entries for n = {n}", p.len())));
        }
        let tol = F::of(1e-9).max(F::epsilon() * F::of_usize(4 * n * n));
        let mut total = F::zero();
        for i in 0..n {
            if p[i * n + i] != F::zero() {
                return Err(EmbedError::InvalidAffinities(format!("diagonal {i} is nonzero")));
            }
            for j in 0..n {
                let x = p[i * n + j];
                if !(x >= F::zero()) || (x - p[j * n + i]).abs() > tol {
                    return Err(EmbedError::InvalidAffinities(format!("entry ({i},{j}) is negative or asymmetric")));
                }
                total += x;
            }
        }
        if (total - F::one()).abs() > tol {
            return Err(EmbedError::InvalidAffinities(format!("entries sum to {total}")));
        }
        Ok(AffinityMatrix { n, p, perplexity: F::zero(), sigmas: Vec::new() })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.p[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.p
    }

    pub fn perplexity(&self) -> F {
        self.perplexity
    }

    pub fn sigmas(&self) -> &[F] {
        &self.sigmas
    }
}

/// Calibrates every row and symmetrizes: `p_ij = (p_{j|i} + p_{i|j}) / (2n)`.
pub fn joint_probabilities<F: Scalar>(distances: &DistanceMatrix<F>, perplexity: F) -> Result<AffinityMatrix<F>> {
    let n = distances.len();
    if n < 4 {
        return Err(EmbedError::TooFewPoints { needed: 4, found: n });
    }
    let rows: Vec<(F, Vec<F>)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row: Vec<F> = distances.row(i).iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &d)| d).collect();
            calibrate_row(&row, perplexity).map_err(|e| EmbedError::Row { row: i, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;

    let mut cond = vec![F::zero(); n * n];
    let mut sigmas = Vec::with_capacity(n);
    for (i, (sigma, probs)) in rows.into_iter().enumerate() {
        sigmas.push(sigma);
        let others = (0..n).filter(|&j| j != i);
        for (j, p) in others.zip(probs) {
            cond[i * n + j] = p;
        }
    }
    let denom = F::of_usize(2 * n);
    let mut p = vec![F::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = (cond[i * n + j] + cond[j * n + i]) / denom;
            p[i * n + j] = v;
            p[j * n + i] = v;
        }
    }
    Ok(AffinityMatrix { n, p, perplexity, sigmas })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentumSchedule {
    pub initial: f64,
    pub final_: f64,
    /// First iteration using `final_`.
    pub switch_iter: usize,
}

impl Default for MomentumSchedule {
    fn default() -> Self {
        MomentumSchedule { initial: 0.5, final_: 0.8, switch_iter: 250 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iters: usize,
    pub learning_rate: f64,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub momentum: MomentumSchedule,
    pub init_std: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iters: 1000,
            learning_rate: 200.0,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            momentum: MomentumSchedule::default(),
            init_std: 1e-4,
            seed: 0,
        }
    }
}

/// 2-D coordinates with the KL value recorded at each iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "F: Scalar")]
pub struct Embedding2D<F = f64> {
    pub coords: Vec<[F; 2]>,
    pub kl_trace: Vec<F>,
    pub config: TsneConfig,
}

impl<F: Scalar> Embedding2D<F> {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// `id,x,y` rows.
    pub fn write_csv<W: Write>(&self, ids: &[String], mut w: W) -> Result<()> {
        if ids.len() != self.coords.len() {
            return Err(EmbedError::Shape(format!("{} ids for {} points", ids.len(), self.coords.len())));
        }
        writeln!(w, "id,x,y")?;
        for (id, [x, y]) in ids.iter().zip(&self.coords) {
            writeln!(w, "{id},{x},{y}")?;
        }
        Ok(())
    }

    /// JSON sidecar with the run configuration and KL trace.
    pub fn sidecar_json(&self) -> serde_json::Value {
        serde_json::json!({
            "config": self.config,
            "kl_trace": self.kl_trace.iter().map(|k| k.as_f64()).collect::<Vec<_>>(),
        })
    }
}

/// Student-t numerators `1 / (1 + |y_i - y_j|^2)` (zero diagonal) and their sum.
fn student_t<F: Scalar>(coords: &[[F; 2]]) -> (Vec<F>, F) {
    let n = coords.len();
    let rows: Vec<Vec<F>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        F::zero()
                    } else {
                        let dx = coords[i][0] - coords[j][0];
                        let dy = coords[i][1] - coords[j][1];
                        F::one() / (F::one() + dx * dx + dy * dy)
                    }
                })
                .collect()
        })
        .collect();
    let mut total = F::zero();
    for r in &rows {
        total += r.iter().copied().sum::<F>();
    }
    (rows.into_iter().flatten().collect(), total)
}

fn kl_from_kernel<F: Scalar>(p: &AffinityMatrix<F>, num: &[F], z: F) -> F {
    let floor = F::of(P_FLOOR);
    let mut kl = F::zero();
    for (idx, &pij) in p.p.iter().enumerate() {
        if pij > F::zero() {
            let q = (num[idx] / z).max(F::min_positive_value());
            kl += pij * (pij.max(floor) / q).ln();
        }
    }
    kl
}

fn gradient_from_kernel<F: Scalar>(p: &AffinityMatrix<F>, coords: &[[F; 2]], num: &[F], z: F, exaggeration: F) -> Vec<[F; 2]> {
    let n = coords.len();
    let four = F::of(4.0);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = [F::zero(); 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[i * n + j];
                let m = (exaggeration * p.p[i * n + j] - w / z) * w;
                g[0] += m * (coords[i][0] - coords[j][0]);
                g[1] += m * (coords[i][1] - coords[j][1]);
            }
            [four * g[0], four * g[1]]
        })
        .collect()
}

fn check_shape<F: Scalar>(p: &AffinityMatrix<F>, coords: &[[F; 2]]) -> Result<()> {
    if p.n != coords.len() {
        return Err(EmbedError::Shape(format!("P is {0}x{0}, coords has {1} rows", p.n, coords.len())));
    }
    Ok(())
}

/// `sum_{i != j} p_ij ln(p_ij / q_ij)`; zero-probability pairs contribute nothing.
pub fn kl_divergence<F: Scalar>(p: &AffinityMatrix<F>, coords: &[[F; 2]]) -> Result<F> {
    check_shape(p, coords)?;
    let (num, z) = student_t(coords);
    Ok(kl_from_kernel(p, &num, z))
}

/// `dC/dy_i = 4 sum_j (p_ij - q_ij) (1 + |y_i - y_j|^2)^-1 (y_i - y_j)`.
pub fn gradient<F: Scalar>(p: &AffinityMatrix<F>, coords: &[[F; 2]]) -> Result<Vec<[F; 2]>> {
    check_shape(p, coords)?;
    let (num, z) = student_t(coords);
    Ok(gradient_from_kernel(p, coords, &num, z, F::one()))
}

/// Gaussian initial coordinates; point `i` draws from ChaCha stream `i`.
pub fn initial_coords<F: Scalar>(n: usize, std: f64, seed: u64) -> Vec<[F; 2]> {
    let normal = Normal::new(0.0, std).expect("standard deviation is finite and positive");
    (0..n)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            [F::of(normal.sample(&mut rng)), F::of(normal.sample(&mut rng))]
        })
        .collect()
}

pub fn tsne_fit<F: Scalar>(p: &AffinityMatrix<F>, config: &TsneConfig) -> Result<Embedding2D<F>> {
    tsne_fit_from(p, config, initial_coords(p.n, config.init_std, config.seed))
}

/// Runs the optimizer from the given starting coordinates.
pub fn tsne_fit_from<F: Scalar>(p: &AffinityMatrix<F>, config: &TsneConfig, init: Vec<[F; 2]>) -> Result<Embedding2D<F>> {
    check_shape(p, &init)?;
    let n = p.n;
    let mut y = init;
    let mut update = vec![[F::zero(); 2]; n];
    let mut gains = vec![[F::one(); 2]; n];
    let mut kl_trace = Vec::with_capacity(config.iters);
    let lr = F::of(config.learning_rate);
    let min_gain = F::of(0.01);

    for iter in 0..config.iters {
        let exaggeration = if iter < config.exaggeration_iters { F::of(config.early_exaggeration) } else { F::one() };
        let momentum = F::of(if iter < config.momentum.switch_iter {
            config.momentum.initial
        } else {
            config.momentum.final_
        });
        let (num, z) = student_t(&y);
        kl_trace.push(kl_from_kernel(p, &num, z));
        let grad = gradient_from_kernel(p, &y, &num, z, exaggeration);

        for i in 0..n {
            for d in 0..2 {
                let g = grad[i][d];
                gains[i][d] = if (g > F::zero()) != (update[i][d] > F::zero()) {
                    gains[i][d] + F::of(0.2)
                } else {
                    (gains[i][d] * F::of(0.8)).max(min_gain)
                };
                update[i][d] = momentum * update[i][d] - lr * gains[i][d] * g;
                y[i][d] += update[i][d];
            }
        }
        let mut mean = [F::zero(); 2];
        for c in &y {
            mean[0] += c[0];
            mean[1] += c[1];
        }
        let nf = F::of_usize(n);
        for c in &mut y {
            c[0] -= mean[0] / nf;
            c[1] -= mean[1] / nf;
        }
        if y.iter().any(|c| !c[0].is_finite() || !c[1].is_finite()) {
            return Err(EmbedError::Diverged { iteration: iter });
        }
    }
    Ok(Embedding2D { coords: y, kl_trace, config: *config })
}
