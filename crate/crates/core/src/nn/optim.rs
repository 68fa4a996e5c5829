use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::mlp::{GradientSet, Mlp};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        })
    }
}

/// Optimizer state for one network. Adam moments are allocated up front with
/// the network's parameter shapes.
#[derive(Debug, Clone)]
pub struct Optimizer<T> {
    kind: OptimizerKind,
    learning_rate: T,
    beta1: T,
    beta2: T,
    epsilon: T,
    first_moment: GradientSet<T>,
    second_moment: GradientSet<T>,
    step_count: u64,
}

impl<T: Scalar> Optimizer<T> {
    pub fn new(kind: OptimizerKind, learning_rate: f64, net: &Mlp<T>) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::invalid(format!("learning rate must be positive, got {learning_rate}")));
        }
        let (first_moment, second_moment) = match kind {
            OptimizerKind::Adam => (GradientSet::zeros_like(net), GradientSet::zeros_like(net)),
            OptimizerKind::Sgd => (
                GradientSet { weights: vec![], biases: vec![] },
                GradientSet { weights: vec![], biases: vec![] },
            ),
        };
        Ok(Self {
            kind,
            learning_rate: T::lit(learning_rate),
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
            first_moment,
            second_moment,
            step_count: 0,
        })
    }

    pub fn adam(learning_rate: f64, net: &Mlp<T>) -> Result<Self> {
        Self::new(OptimizerKind::Adam, learning_rate, net)
    }

    pub fn sgd(learning_rate: f64, net: &Mlp<T>) -> Result<Self> {
        Self::new(OptimizerKind::Sgd, learning_rate, net)
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        self.beta1 = T::lit(beta1);
        self.beta2 = T::lit(beta2);
        self.epsilon = T::lit(epsilon);
        self
    }

    pub fn kind(&self) -> OptimizerKind {
        self.kind
    }

    pub fn learning_rate(&self) -> T {
        self.learning_rate
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    /// Applies one update to `net`. If any parameter becomes non-finite the
    /// network is left in that state and `NumericFailure` is returned.
    pub fn step(&mut self, net: &mut Mlp<T>, grads: &GradientSet<T>) -> Result<()> {
        if !grads.matches(net) {
            return Err(Error::invalid("gradient shapes do not match the network"));
        }
        self.step_count += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in net.params_mut().zip(grads.blocks()) {
                    for (p, &g) in p.iter_mut().zip(g) {
                        *p -= lr * g;
                    }
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
                let t = i32::try_from(self.step_count).unwrap_or(i32::MAX);
                let c1 = T::one() - b1.powi(t);
                let c2 = T::one() - b2.powi(t);
                let blocks = net
                    .params_mut()
                    .zip(grads.blocks())
                    .zip(self.first_moment.blocks_mut().zip(self.second_moment.blocks_mut()));
                let (one_b1, one_b2) = (T::one() - b1, T::one() - b2);
                for ((p, g), (m, v)) in blocks {
                    for (((p, &g), m), v) in p.iter_mut().zip(g.iter()).zip(m.iter_mut()).zip(v.iter_mut()) {
                        *m = flush(b1 * *m + one_b1 * g);
                        *v = flush(b2 * *v + one_b2 * g * g);
                        let m_hat = *m / c1;
                        let v_hat = *v / c2;
                        *p -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
            }
        }
        if !net.all_finite() {
            return Err(Error::NumericFailure(format!(
                "non-finite parameter after optimizer step {}",
                self.step_count
            )));
        }
        Ok(())
    }
}

/// Moments of parameters whose gradient stays at zero decay geometrically
/// through the subnormal range, where x86 arithmetic is very slow. Values that
/// small cannot move a parameter, so they are cut to zero.
#[inline]
fn flush<T: Scalar>(x: T) -> T {
    if x.abs() < T::min_positive_value() {
        T::zero()
    } else {
        x
    }
}
