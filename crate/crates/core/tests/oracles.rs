//! Checks against independent reference computations.

use lcml_core::augment::{fourier_perturb, savgol_coefficients};
use lcml_core::models::{
    loss_gradient, DecisionTree, KnnModel, LogRegConfig, Node, TreeParams, logreg_fit,
};
use lcml_core::seed;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Center row of `(A^T A)^-1 A^T` for the polynomial design matrix on
/// offsets scaled to [-1, 1].
fn normal_equation_weights(window: usize, order: usize) -> Vec<f64> {
    let h = (window / 2) as f64;
    let scale = if h > 0.0 { h } else { 1.0 };
    let a = DMatrix::from_fn(window, order + 1, |i, k| ((i as f64 - h) / scale).powi(k as i32));
    let ata = a.transpose() * &a;
    let pinv = ata.try_inverse().expect("design matrix has full column rank") * a.transpose();
    pinv.row(0).iter().copied().collect()
}

#[test]
fn savgol_weights_match_normal_equations() {
    let w = normal_equation_weights(5, 2);
    let expected = [-3.0, 12.0, 17.0, 12.0, -3.0].map(|v| v / 35.0);
    for (a, b) in w.iter().zip(expected) {
        assert!((a - b).abs() < 1e-12, "oracle itself disagrees: {w:?}");
    }
    for window in (3..=31).step_by(2) {
        for order in 0..=4.min(window - 1) {
            let ours = savgol_coefficients(window, order).unwrap();
            let oracle = normal_equation_weights(window, order);
            for (a, b) in ours.iter().zip(&oracle) {
                assert!((a - b).abs() < 1e-10, "window {window} order {order}: {a} vs {b}");
            }
        }
    }
}

fn naive_loss(x: &[Vec<f64>], y: &[u8], w: &[f64], b: f64, lambda: f64) -> f64 {
    let n = x.len() as f64;
    let data: f64 = x
        .iter()
        .zip(y)
        .map(|(row, &yi)| {
            let z: f64 = row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
            let p = 1.0 / (1.0 + (-z).exp());
            if yi == 1 { -p.ln() } else { -(1.0 - p).ln() }
        })
        .sum();
    data / n + 0.5 * lambda * w.iter().map(|v| v * v).sum::<f64>()
}

#[test]
fn logreg_gradient_matches_central_differences() {
    let x = vec![vec![1.0], vec![-1.0]];
    let (_, gw, gb) = loss_gradient(&x, &[1, 0], &[0.0], 0.0, 0.0);
    let h = 1e-6;
    let fd_w = (naive_loss(&x, &[1, 0], &[h], 0.0, 0.0) - naive_loss(&x, &[1, 0], &[-h], 0.0, 0.0)) / (2.0 * h);
    let fd_b = (naive_loss(&x, &[1, 0], &[0.0], h, 0.0) - naive_loss(&x, &[1, 0], &[0.0], -h, 0.0)) / (2.0 * h);
    assert!((fd_w + 0.5).abs() < 1e-8 && (gw[0] + 0.5).abs() < 1e-12);
    assert!(fd_b.abs() < 1e-8 && gb.abs() < 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for instance in 0..50 {
        let width = rng.random_range(1..=10);
        let n = rng.random_range(3..=25);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..width).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
        let w: Vec<f64> = (0..width).map(|_| rng.random_range(-1.5..1.5)).collect();
        let b = rng.random_range(-1.0..1.0);
        let lambda = rng.random_range(0.0..0.5);

        let (loss, gw, gb) = loss_gradient(&x, &y, &w, b, lambda);
        assert!((loss - naive_loss(&x, &y, &w, b, lambda)).abs() < 1e-12);

        let mut fd = Vec::with_capacity(width + 1);
        for j in 0..width {
            let (mut wp, mut wm) = (w.clone(), w.clone());
            wp[j] += h;
            wm[j] -= h;
            fd.push((naive_loss(&x, &y, &wp, b, lambda) - naive_loss(&x, &y, &wm, b, lambda)) / (2.0 * h));
        }
        fd.push((naive_loss(&x, &y, &w, b + h, lambda) - naive_loss(&x, &y, &w, b - h, lambda)) / (2.0 * h));

        let analytic: Vec<f64> = gw.iter().copied().chain([gb]).collect();
        let diff = analytic.iter().zip(&fd).map(|(a, f)| (a - f).powi(2)).sum::<f64>().sqrt();
        let norm = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-8);
        assert!(diff / norm <= 1e-4, "instance {instance}: relative error {}", diff / norm);
    }
}

#[test]
fn logreg_probabilities_match_direct_evaluation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x: Vec<Vec<f64>> = (0..60)
        .map(|_| (0..4).map(|_| rng.random_range(-3.0..3.0)).collect())
        .collect();
    let y: Vec<u8> = x.iter().map(|r| u8::from(r[0] - 0.5 * r[2] > 0.2)).collect();
    let model = logreg_fit(&x, &y, &LogRegConfig::default()).unwrap();
    let probs = model.predict_proba(&x).unwrap();
    for (row, p) in x.iter().zip(probs) {
        let z: f64 = row.iter().zip(&model.weights).map(|(a, b)| a * b).sum::<f64>() + model.bias;
        let direct = 1.0 / (1.0 + (-z).exp());
        assert!((p - direct).abs() <= 1e-12);
    }
}

/// Full sort of every training row, then the majority vote with the nearest
/// neighbour breaking ties.
fn knn_oracle(train: &[Vec<f64>], labels: &[u8], query: &[f64], k: usize) -> u8 {
    let mut all: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, r)| ((r[0] - query[0]).hypot(r[1] - query[1]), i))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let pos = all[..k].iter().filter(|(_, i)| labels[*i] == 1).count();
    if 2 * pos > k {
        1
    } else if 2 * pos < k {
        0
    } else {
        labels[all[0].1]
    }
}

#[test]
fn knn_matches_brute_force_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in [1, 3, 4, 5] {
        for _ in 0..200 {
            let n = rng.random_range(k..=40);
            // a coarse grid produces plenty of exact distance ties
            let train: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-5..=5) as f64, rng.random_range(-5..=5) as f64])
                .collect();
            let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..=1)).collect();
            let query = vec![rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
            let model = KnnModel::from_parts(train.clone(), labels.clone(), k).unwrap();
            let got = model.predict(std::slice::from_ref(&query)).unwrap()[0];
            assert_eq!(got, knn_oracle(&train, &labels, &query, k), "k={k}");
        }
    }
}

/// Best single split by exhaustive search over midpoints, in floating point.
fn stump_oracle(x: &[f64], y: &[u8]) -> Option<f64> {
    let gini = |c0: f64, c1: f64| {
        let n = c0 + c1;
        1.0 - (c0 / n).powi(2) - (c1 / n).powi(2)
    };
    let n = x.len() as f64;
    let c1 = y.iter().filter(|&&l| l == 1).count() as f64;
    let parent = gini(n - c1, c1);
    let mut vals: Vec<f64> = x.to_vec();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    vals.dedup();
    let mut best: Option<(f64, f64)> = None;
    for pair in vals.windows(2) {
        let t = (pair[0] + pair[1]) / 2.0;
        let (mut l, mut r) = ([0.0; 2], [0.0; 2]);
        for (&xi, &yi) in x.iter().zip(y) {
            if xi <= t { l[yi as usize] += 1.0 } else { r[yi as usize] += 1.0 }
        }
        let (nl, nr) = (l[0] + l[1], r[0] + r[1]);
        let gain = parent - (nl / n) * gini(l[0], l[1]) - (nr / n) * gini(r[0], r[1]);
        if gain > 1e-12 && best.is_none_or(|(g, _)| gain > g + 1e-12) {
            best = Some((gain, t));
        }
    }
    best.map(|(_, t)| t)
}

#[test]
fn root_split_matches_exhaustive_stump() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let params = TreeParams {
        max_features: 1,
        min_samples_leaf: 1,
        max_depth: Some(1),
    };
    let mut splits_seen = 0;
    for _ in 0..300 {
        let x: Vec<f64> = (0..6).map(|_| rng.random_range(0..8) as f64 * 0.5).collect();
        let y: Vec<u8> = (0..6).map(|_| rng.random_range(0..=1)).collect();
        let rows: Vec<Vec<f64>> = x.iter().map(|&v| vec![v]).collect();
        let tree = DecisionTree::fit(&rows, &y, (0..6).collect(), &params, &mut seed::rng_from_seed(0));
        match (tree.root(), stump_oracle(&x, &y)) {
            (Node::Split { feature, threshold, .. }, Some(t)) => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, t, "x={x:?} y={y:?}");
                splits_seen += 1;
            }
            (Node::Leaf { .. }, None) => {}
            (node, oracle) => panic!("x={x:?} y={y:?}: tree {node:?} vs oracle {oracle:?}"),
        }
    }
    assert!(splits_seen > 100);
}

fn naive_dft(x: &[f64]) -> Vec<(f64, f64)> {
    let n = x.len();
    (0..n)
        .map(|k| {
            x.iter().enumerate().fold((0.0, 0.0), |(re, im), (t, &v)| {
                let ang = -2.0 * std::f64::consts::PI * (k * t) as f64 / n as f64;
                (re + v * ang.cos(), im + v * ang.sin())
            })
        })
        .collect()
}

fn relative_rms_change(x: &[f64], y: &[f64]) -> f64 {
    let num: f64 = x.iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum();
    let den: f64 = x.iter().map(|a| a * a).sum();
    (num / den).sqrt()
}

fn test_curve(len: usize) -> Vec<f64> {
    (0..len)
        .map(|i| {
            let t = i as f64;
            1.0 + 0.2 * (t * 0.13).sin() + 0.03 * (t * 0.9).cos() + if i % 50 < 4 { -0.05 } else { 0.0 }
        })
        .collect()
}

#[test]
fn amplitude_only_jitter_scales_bins_by_real_factors() {
    let x = test_curve(64);
    let y = fourier_perturb(&x, 0.05, 0.0, 9).unwrap();
    let (fx, fy) = (naive_dft(&x), naive_dft(&y));
    let mut spectral_num = 0.0;
    let mut spectral_den = 0.0;
    for k in 0..64 {
        let (xr, xi) = fx[k];
        let (yr, yi) = fy[k];
        let mag2 = xr * xr + xi * xi;
        // Y_k / X_k must be real when phases are untouched
        let ratio_im = (yi * xr - yr * xi) / mag2;
        assert!(ratio_im.abs() < 1e-9, "bin {k}");
        spectral_num += (yr - xr).powi(2) + (yi - xi).powi(2);
        spectral_den += mag2;
    }
    // Parseval: energy of the change is the same in both domains
    let spectral = (spectral_num / spectral_den).sqrt();
    assert!((spectral - relative_rms_change(&x, &y)).abs() < 1e-9);
}

#[test]
fn small_amplitude_jitter_stays_small() {
    let x = test_curve(512);
    let amp = 0.01;
    let within = (0..1000u64)
        .filter(|&s| relative_rms_change(&x, &fourier_perturb(&x, amp, 0.0, s).unwrap()) <= 5.0 * amp)
        .count();
    assert!(within >= 990, "{within} of 1000 within bound");
}
