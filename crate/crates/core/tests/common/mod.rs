//! Test-only oracles. Nothing here calls into the code paths they check
//! beyond the public forward pass and loss.
#![allow(dead_code)]

use fairsp_core::nn::{cross_entropy, forward, Matrix, MlpParams, MlpSpec};

/// Central-difference gradient of `loss(params)` for every parameter scalar,
/// in `MlpParams::iter` order.
pub fn central_differences(
    params: &MlpParams,
    step: f64,
    loss: impl Fn(&MlpParams) -> f64,
) -> Vec<f64> {
    let n = params.iter().count();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut plus = params.clone();
        *plus.iter_mut().nth(i).unwrap() += step;
        let mut minus = params.clone();
        *minus.iter_mut().nth(i).unwrap() -= step;
        out.push((loss(&plus) - loss(&minus)) / (2.0 * step));
    }
    out
}

/// Mean cross-entropy of the network output, evaluated from scratch.
pub fn ce_loss(spec: &MlpSpec, x: &Matrix, targets: &[u8]) -> impl Fn(&MlpParams) -> f64 {
    let spec = spec.clone();
    let x = x.clone();
    let targets = targets.to_vec();
    move |p: &MlpParams| {
        let out = forward(p, &spec, &x).unwrap().into_output();
        cross_entropy(&out, &targets).unwrap()
    }
}

/// Relative error `|a − n| / max(|a|, |n|)`, falling back to the absolute
/// error when both magnitudes are below `floor`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    let diff = (analytic - numeric).abs();
    if scale < floor {
        diff
    } else {
        diff / scale
    }
}

pub fn max_relative_error(analytic: &[f64], numeric: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(&a, &n)| relative_error(a, n, floor))
        .fold(0.0, f64::max)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as f64 / 2.0 + 1.0;
            for k in i..=j {
                r[idx[k]] = avg;
            }
            i = j + 1;
        }
        r
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// `p(A = 1 | x)` for two diagonal Gaussian groups, computed directly from
/// the densities.
pub fn gaussian_posterior(x: &[f64], p1: f64, mean0: &[f64], mean1: &[f64], std: &[f64]) -> f64 {
    let dens = |m: &[f64]| -> f64 {
        x.iter()
            .zip(m)
            .zip(std)
            .map(|((v, mu), s)| (-(v - mu).powi(2) / (2.0 * s * s)).exp() / s)
            .product()
    };
    let a = p1 * dens(mean1);
    let b = (1.0 - p1) * dens(mean0);
    a / (a + b)
}

/// Privacy budget whose randomized-response flip probability is `p`.
pub fn epsilon_for_flip(p: f64) -> f64 {
    ((1.0 - p) / p).ln()
}

/// Pairwise-comparison AUC, quadratic time.
pub fn pairwise_auc(scores: &[f64], labels: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        for (j, &sj) in scores.iter().enumerate() {
            if labels[i] == 1 && labels[j] == 0 {
                den += 1.0;
                if si > sj {
                    num += 1.0;
                } else if si == sj {
                    num += 0.5;
                }
            }
        }
    }
    num / den
}

pub fn agreement(a: &[u8], b: &[u8]) -> f64 {
    a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / a.len() as f64
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
