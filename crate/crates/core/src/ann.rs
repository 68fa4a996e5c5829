//! Supervised baseline: the same network topology trained with softmax
//! cross-entropy on the labels.

use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::agent::{predict_with, states_of, DEFAULT_LAYER_SIZES};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::confusion;
use crate::nn::{Mlp, Optimizer, OptimizerKind};
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeighting {
    #[default]
    None,
    /// `n / (2 * n_class)` per class.
    Balanced,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnConfig {
    pub layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub class_weighting: ClassWeighting,
    pub optimizer: OptimizerKind,
    pub seed: u64,
}

impl Default for AnnConfig {
    fn default() -> Self {
        Self {
            layer_sizes: DEFAULT_LAYER_SIZES.to_vec(),
            learning_rate: 0.0025,
            batch_size: 32,
            epochs: 100,
            class_weighting: ClassWeighting::None,
            optimizer: OptimizerKind::Adam,
            seed: 0,
        }
    }
}

impl AnnConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::invalid("epochs: must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size: must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning_rate: {} must be positive", self.learning_rate)));
        }
        if self.layer_sizes.len() < 2 || self.layer_sizes.last() != Some(&2) {
            return Err(Error::invalid(format!(
                "layer_sizes: {:?} must end in 2 outputs",
                self.layer_sizes
            )));
        }
        Ok(())
    }
}

/// Mean softmax cross-entropy over a `B x C` logit matrix and its gradient.
///
/// Row `b` contributes `w[y_b] * (logsumexp(z_b) - z_b[y_b])`; the gradient is
/// `w[y_b] * (softmax(z_b) - onehot(y_b)) / B`.
pub fn softmax_xent_loss_and_grad<T: Scalar>(
    logits: &Matrix<T>,
    labels: &[u8],
    class_weights: [T; 2],
) -> Result<(T, Matrix<T>)> {
    if logits.rows() != labels.len() {
        return Err(Error::invalid(format!(
            "{} logit rows for {} labels",
            logits.rows(),
            labels.len()
        )));
    }
    if logits.rows() == 0 {
        return Err(Error::invalid("empty batch"));
    }
    if logits.cols() != 2 {
        return Err(Error::invalid(format!("expected 2 logits per row, got {}", logits.cols())));
    }
    let b = T::cast(logits.rows());
    let mut loss = T::zero();
    let mut grad = Matrix::zeros(logits.rows(), logits.cols());
    for (r, &y) in labels.iter().enumerate() {
        if y > 1 {
            return Err(Error::invalid(format!("label {y} at row {r} is not 0 or 1")));
        }
        let z = logits.row(r);
        let m = z.iter().copied().fold(T::neg_infinity(), T::max);
        let sum: T = z.iter().map(|&v| (v - m).exp()).sum();
        let lse = m + sum.ln();
        let w = class_weights[y as usize];
        loss += w * (lse - z[y as usize]);
        for (c, &v) in z.iter().enumerate() {
            let p = (v - lse).exp();
            let target = if c == y as usize { T::one() } else { T::zero() };
            grad.set(r, c, w * (p - target) / b);
        }
    }
    Ok((loss / b, grad))
}

fn class_weights<T: Scalar>(mode: ClassWeighting, data: &Dataset) -> [T; 2] {
    match mode {
        ClassWeighting::None => [T::one(), T::one()],
        ClassWeighting::Balanced => {
            let (n0, n1) = data.class_counts();
            let n = (n0 + n1) as f64;
            [T::lit(n / (2.0 * n0 as f64)), T::lit(n / (2.0 * n1 as f64))]
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochPoint {
    pub epoch: usize,
    pub mean_loss: f64,
    pub val_f1: f64,
}

#[derive(Debug, Clone)]
pub struct AnnOutcome<T> {
    /// Best-validation snapshot.
    pub net: Mlp<T>,
    pub curve: Vec<EpochPoint>,
    pub best_epoch: usize,
    pub best_val_f1: f64,
    pub updates: u64,
    pub train_seconds: f64,
}

/// Mini-batch training over shuffled epochs.
pub fn train_ann<T: Scalar>(cfg: &AnnConfig, train_set: &Dataset, val_set: &Dataset) -> Result<AnnOutcome<T>> {
    cfg.validate()?;
    let (n0, n1) = train_set.class_counts();
    if n0 == 0 || n1 == 0 {
        return Err(Error::invalid(format!(
            "training set needs both classes, has {n0} normal / {n1} failure rows"
        )));
    }
    let started = Instant::now();
    let mut net = Mlp::<T>::new(&cfg.layer_sizes, seed::derive(cfg.seed, "ann-init"))?;
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, &net)?;
    let mut rng = seed::rng(cfg.seed, "ann-shuffle");
    let weights = class_weights::<T>(cfg.class_weighting, train_set);
    let states = states_of::<T>(train_set);
    let val_states = states_of::<T>(val_set);
    let width = states.cols();

    let evaluate = |net: &Mlp<T>| -> Result<f64> {
        if val_set.is_empty() {
            return Ok(0.0);
        }
        Ok(confusion(&predict_with(net, &val_states)?, val_set.labels())?.f1())
    };

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut best = (net.clone(), 0usize, f64::NEG_INFINITY);
    let mut curve = Vec::with_capacity(cfg.epochs);
    let mut updates = 0u64;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut batches) = (0.0, 0usize);
        for chunk in order.chunks(cfg.batch_size) {
            let mut data = Vec::with_capacity(chunk.len() * width);
            for &i in chunk {
                data.extend_from_slice(states.row(i));
            }
            let x = Matrix::new(chunk.len(), width, data)?;
            let y: Vec<u8> = chunk.iter().map(|&i| train_set.labels()[i]).collect();
            let trace = net.forward_trace(&x)?;
            let (loss, grad) = softmax_xent_loss_and_grad(trace.output(), &y, weights)?;
            let grads = net.backward_from_trace(&trace, &grad)?;
            opt.step(&mut net, &grads)?;
            updates += 1;
            loss_sum += loss.to_f64().unwrap_or(f64::NAN);
            batches += 1;
        }
        let f1 = evaluate(&net)?;
        curve.push(EpochPoint {
            epoch,
            mean_loss: loss_sum / batches as f64,
            val_f1: f1,
        });
        if val_set.is_empty() || f1 >= best.2 {
            best = (net.clone(), epoch, f1);
        }
    }
    Ok(AnnOutcome {
        net: best.0,
        curve,
        best_epoch: best.1,
        best_val_f1: best.2,
        updates,
        train_seconds: started.elapsed().as_secs_f64(),
    })
}

/// Argmax of the logits per row; ties go to NORMAL.
pub fn predict_ann<T: Scalar>(net: &Mlp<T>, states: &Matrix<T>) -> Result<Vec<u8>> {
    predict_with(net, states)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[[f64; 2]]) -> Matrix<f64> {
        Matrix::from_rows(rows).unwrap()
    }

    #[test]
    fn uniform_logits_cost_ln2() {
        let (loss, _) = softmax_xent_loss_and_grad(&m(&[[0.0, 0.0]]), &[0], [1.0, 1.0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn extreme_logits_do_not_overflow() {
        let (loss, grad) = softmax_xent_loss_and_grad(&m(&[[1000.0, -1000.0]]), &[0], [1.0, 1.0]).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.all_finite());
        let (loss, _) = softmax_xent_loss_and_grad(&m(&[[1000.0, -1000.0]]), &[1], [1.0, 1.0]).unwrap();
        assert!((loss - 2000.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let logits = m(&[[0.3, -1.2], [2.0, 0.5], [-0.7, -0.1]]);
        let labels = [1, 0, 1];
        let w = [1.0, 3.5];
        let (_, grad) = softmax_xent_loss_and_grad(&logits, &labels, w).unwrap();
        let h = 1e-6;
        for r in 0..3 {
            for c in 0..2 {
                let mut up = logits.clone();
                up.set(r, c, logits.get(r, c) + h);
                let mut dn = logits.clone();
                dn.set(r, c, logits.get(r, c) - h);
                let fd = (softmax_xent_loss_and_grad(&up, &labels, w).unwrap().0
                    - softmax_xent_loss_and_grad(&dn, &labels, w).unwrap().0)
                    / (2.0 * h);
                let an = grad.get(r, c);
                assert!((fd - an).abs() <= 1e-5 * an.abs().max(1e-3), "({r},{c}) {fd} vs {an}");
            }
        }
    }

    #[test]
    fn prediction_rules() {
        let zero = Mlp::<f64>::zeros(&[4, 8, 2]).unwrap();
        let x = Matrix::new(2, 4, vec![1.0; 8]).unwrap();
        assert_eq!(predict_ann(&zero, &x).unwrap(), vec![0, 0]);
        let net = Mlp::from_parts(vec![1, 2], vec![vec![0.0, 0.0]], vec![vec![0.3, 0.31]]).unwrap();
        assert_eq!(predict_ann(&net, &Matrix::new(1, 1, vec![0.0]).unwrap()).unwrap(), vec![1]);
    }

    fn toy(n: usize) -> Dataset {
        let rows = (0..n).map(|i| [i as f64 / n as f64, 0.2, 0.4, 0.6]).collect();
        let labels = (0..n).map(|i| u8::from(i % 4 == 0)).collect();
        Dataset::new("toy", rows, labels).unwrap()
    }

    #[test]
    fn zero_epochs_rejected() {
        let cfg = AnnConfig { epochs: 0, ..AnnConfig::default() };
        assert!(matches!(train_ann::<f64>(&cfg, &toy(10), &toy(10)), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn one_epoch_counts_batches() {
        let cfg = AnnConfig {
            epochs: 1,
            batch_size: 32,
            layer_sizes: vec![4, 8, 2],
            ..AnnConfig::default()
        };
        let out = train_ann::<f64>(&cfg, &toy(70), &Dataset::new("v", vec![], vec![]).unwrap()).unwrap();
        assert_eq!(out.updates, 3);
    }

    #[test]
    fn single_class_rejected() {
        let ds = Dataset::new("one", vec![[0.0; 4]; 5], vec![1; 5]).unwrap();
        assert!(train_ann::<f64>(&AnnConfig::default(), &ds, &ds).is_err());
    }

    #[test]
    fn seeded_repeat() {
        let cfg = AnnConfig {
            epochs: 3,
            layer_sizes: vec![4, 8, 2],
            seed: 4,
            ..AnnConfig::default()
        };
        let a = train_ann::<f64>(&cfg, &toy(50), &toy(20)).unwrap();
        let b = train_ann::<f64>(&cfg, &toy(50), &toy(20)).unwrap();
        assert_eq!(a.net, b.net);
    }

    #[test]
    fn balanced_weights() {
        let w: [f64; 2] = class_weights(ClassWeighting::Balanced, &toy(8));
        // 6 normal, 2 failure
        assert!((w[0] - 8.0 / 12.0).abs() < 1e-15);
        assert!((w[1] - 2.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn prediction_ignores_row_shift(a in -5.0f64..5.0, b in -5.0f64..5.0, shift in -100.0f64..100.0) {
            let net = Mlp::from_parts(vec![1, 2], vec![vec![0.0, 0.0]], vec![vec![a, b]]).unwrap();
            let shifted = Mlp::from_parts(vec![1, 2], vec![vec![0.0, 0.0]], vec![vec![a + shift, b + shift]]).unwrap();
            let x = Matrix::new(1, 1, vec![0.0]).unwrap();
            // skip cases where the shift rounds the two logits into a tie
            prop_assume!(((a + shift) - (b + shift) != 0.0) == (a != b));
            prop_assume!(((a + shift) > (b + shift)) == (a > b));
            prop_assert_eq!(predict_ann(&net, &x).unwrap(), predict_ann(&shifted, &x).unwrap());
        }
    }
}
