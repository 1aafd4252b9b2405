use atlas_core::embed::{gradient, initial_coords, joint_probabilities, kl_divergence, tsne_fit, tsne_fit_from, TsneConfig};
use atlas_testkit::fixtures::{median, random_affinities, random_coords, rng, three_clusters, within_between};
use atlas_testkit::{naive, rel_err};

#[test]
fn gradient_matches_central_differences() {
    let mut r = rng(21);
    let n = 8;
    for _ in 0..20 {
        let p = random_affinities(n, &mut r);
        let y = random_coords(n, 2.0, &mut r);
        let g = gradient(&p, &y).unwrap();
        let kl = kl_divergence(&p, &y).unwrap();
        assert!(rel_err(kl, naive::tsne_kl(p.as_slice(), n, &y), 1e-12) < 1e-10);

        let flat: Vec<f64> = y.iter().flat_map(|c| c.to_vec()).collect();
        let fd = naive::central_diff(&flat, 1e-5, |x| {
            let c: Vec<[f64; 2]> = x.chunks(2).map(|c| [c[0], c[1]]).collect();
            naive::tsne_kl(p.as_slice(), n, &c)
        });
        let analytic: Vec<f64> = g.iter().flat_map(|c| c.to_vec()).collect();
        let norm = analytic.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (a, b) in analytic.iter().zip(&fd) {
            assert!(rel_err(*a, *b, 1e-3 * norm) <= 1e-4, "analytic {a} vs numeric {b}");
        }
    }
}

fn cluster_config(seed: u64) -> TsneConfig {
    TsneConfig { perplexity: 5.0, seed, ..TsneConfig::default() }
}

#[test]
fn three_clusters_stay_apart() {
    let mut separated = 0;
    let mut kl_ok = true;
    for seed in 0..10 {
        let (d, labels) = three_clusters(10, 10, 40 + seed);
        let p = joint_probabilities(&d, 5.0).unwrap();
        let e = tsne_fit(&p, &cluster_config(seed)).unwrap();
        let (w, b) = within_between(&e.coords, &labels);
        if w < b {
            separated += 1;
        }
        let start = e.config.exaggeration_iters;
        let early = median(&e.kl_trace[start..start + 50]);
        let late = median(&e.kl_trace[e.kl_trace.len() - 50..]);
        kl_ok &= late < early;
    }
    assert!(separated >= 9, "{separated} of 10 seeds separated");
    assert!(kl_ok);
}

#[test]
fn rows_reach_target_perplexity() {
    let (d, _) = three_clusters(10, 10, 3);
    let p = joint_probabilities(&d, 5.0).unwrap();
    for (i, &sigma) in p.sigmas().iter().enumerate() {
        // Recompute the conditional row from sigma directly.
        let row: Vec<f64> = (0..d.len()).filter(|&j| j != i).map(|j| d.get(i, j)).collect();
        let w: Vec<f64> = row.iter().map(|x| (-x * x / (2.0 * sigma * sigma)).exp()).collect();
        let z: f64 = w.iter().sum();
        let h: f64 = -w.iter().map(|x| x / z).filter(|&q| q > 0.0).map(|q| q * q.log2()).sum::<f64>();
        assert!((h.exp2() - 5.0).abs() < 1e-3, "row {i}: {}", h.exp2());
    }
}

#[test]
fn permuting_points_permutes_the_embedding() {
    let (d, _) = three_clusters(4, 5, 9);
    let n = d.len();
    let perm: Vec<usize> = (0..n).rev().collect();
    let mut dp = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            dp[i * n + j] = d.get(perm[i], perm[j]);
        }
    }
    let dp = atlas_core::textproc::DistanceMatrix::from_rows(n, dp).unwrap();
    // Summation order changes with the permutation, and the optimizer amplifies
    // rounding differences; past a few dozen iterations the runs decorrelate.
    let cfg = TsneConfig { perplexity: 3.0, iters: 20, ..TsneConfig::default() };
    let init = initial_coords::<f64>(n, cfg.init_std, cfg.seed);
    let init_p: Vec<[f64; 2]> = perm.iter().map(|&i| init[i]).collect();
    let a = tsne_fit_from(&joint_probabilities(&d, 3.0).unwrap(), &cfg, init).unwrap();
    let b = tsne_fit_from(&joint_probabilities(&dp, 3.0).unwrap(), &cfg, init_p).unwrap();
    for (k, &i) in perm.iter().enumerate() {
        for c in 0..2 {
            assert!((b.coords[k][c] - a.coords[i][c]).abs() < 1e-9 * (1.0 + a.coords[i][c].abs()), "{} vs {}", b.coords[k][c], a.coords[i][c]);
        }
    }
}

#[test]
fn f32_runs_and_stays_finite() {
    let (d, _) = three_clusters(5, 4, 1);
    let d32 = atlas_core::textproc::DistanceMatrix::from_rows(d.len(), d.as_slice().iter().map(|&x| x as f32).collect()).unwrap();
    let p = joint_probabilities(&d32, 4.0f32).unwrap();
    let e = tsne_fit(&p, &TsneConfig { perplexity: 4.0, iters: 300, ..TsneConfig::default() }).unwrap();
    assert!(e.coords.iter().all(|c| c[0].is_finite() && c[1].is_finite()));
}
