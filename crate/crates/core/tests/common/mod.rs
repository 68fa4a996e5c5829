//! Independent reference implementations shared by the integration tests.

#![allow(dead_code)]

use rlsurv::dataset::Dataset;
use rlsurv::nn::Mlp;

/// Plain-loop forward pass. Returns the output and every hidden layer's
/// pre-activation.
pub fn oracle_forward(net: &Mlp<f64>, x: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let sizes = net.layer_sizes();
    let mut a = x.to_vec();
    let mut pre = Vec::new();
    for k in 0..sizes.len() - 1 {
        let (w, b) = (net.weights(k), net.biases(k));
        let z: Vec<f64> = (0..sizes[k + 1])
            .map(|j| b[j] + (0..sizes[k]).map(|i| w[j * sizes[k] + i] * a[i]).sum::<f64>())
            .collect();
        let last = k == sizes.len() - 2;
        a = z.iter().map(|&v| if last || v > 0.0 { v } else { 0.0 }).collect();
        if !last {
            pre.push(z);
        }
    }
    (a, pre)
}

/// `sum_b <c_b, f(x_b)>`, whose gradient is what `Mlp::backward` returns for
/// output gradients `c`.
pub fn oracle_loss(net: &Mlp<f64>, xs: &[Vec<f64>], c: &[Vec<f64>]) -> f64 {
    xs.iter()
        .zip(c)
        .map(|(x, cb)| oracle_forward(net, x).0.iter().zip(cb).map(|(o, w)| o * w).sum::<f64>())
        .sum()
}

/// Reads parameter `i` of layer `k`, optionally overwriting it first.
pub fn param(net: &mut Mlp<f64>, k: usize, is_bias: bool, i: usize, set: Option<f64>) -> f64 {
    let slot = if is_bias { &mut net.biases_mut(k)[i] } else { &mut net.weights_mut(k)[i] };
    if let Some(v) = set {
        *slot = v;
    }
    *slot
}

/// Central-difference gradient of `f` over every parameter, in the layout of
/// `GradientSet` (weights per layer, then biases per layer).
pub fn numeric_gradient(
    net: &mut Mlp<f64>,
    h: f64,
    f: impl Fn(&Mlp<f64>) -> f64,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut out = (Vec::new(), Vec::new());
    for is_bias in [false, true] {
        for k in 0..net.num_layers() {
            let n = if is_bias { net.biases(k).len() } else { net.weights(k).len() };
            let mut g = Vec::with_capacity(n);
            for i in 0..n {
                let orig = param(net, k, is_bias, i, None);
                param(net, k, is_bias, i, Some(orig + h));
                let up = f(net);
                param(net, k, is_bias, i, Some(orig - h));
                let dn = f(net);
                param(net, k, is_bias, i, Some(orig));
                g.push((up - dn) / (2.0 * h));
            }
            if is_bias {
                out.1.push(g);
            } else {
                out.0.push(g);
            }
        }
    }
    out
}

/// Relative error with a floor on the scale, so entries that are zero up to
/// rounding do not blow up the ratio.
pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// 200 points in two clusters separated by the hyperplane `sum(x) = 2`:
/// class 0 near 0.2 per feature, class 1 near 0.8, uniform jitter of ±0.15.
pub fn toy_clusters(seed: u64) -> Dataset {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..200 {
        let label = (i % 2) as u8;
        let center = if label == 1 { 0.8 } else { 0.2 };
        rows.push(std::array::from_fn(|_| center + rng.random_range(-0.15..0.15)));
        labels.push(label);
    }
    Dataset::new("toy", rows, labels).unwrap()
}

/// Brute-force check that `sum(x) = 2` separates the classes of `ds`.
pub fn is_separable(ds: &Dataset) -> bool {
    ds.rows()
        .iter()
        .zip(ds.labels())
        .all(|(r, &y)| (r.iter().sum::<f64>() > 2.0) == (y == 1))
}

pub fn accuracy(preds: &[u8], labels: &[u8]) -> f64 {
    preds.iter().zip(labels).filter(|(p, y)| p == y).count() as f64 / labels.len() as f64
}
