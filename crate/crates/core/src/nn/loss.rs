use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Scalar regression loss applied to TD errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    #[default]
    Huber,
    Mse,
}

fn check_lengths<T>(predicted: &[T], target: &[T]) -> Result<()> {
    if predicted.len() != target.len() {
        return Err(Error::invalid(format!(
            "predicted has {} entries, target has {}",
            predicted.len(),
            target.len()
        )));
    }
    if predicted.is_empty() {
        return Err(Error::invalid("empty loss input"));
    }
    Ok(())
}

/// Mean Huber loss with delta = 1 and its gradient with respect to `predicted`.
pub fn huber_loss_and_grad<T: Scalar>(predicted: &[T], target: &[T]) -> Result<(T, Vec<T>)> {
    check_lengths(predicted, target)?;
    let n = T::cast(predicted.len());
    let half = T::lit(0.5);
    let mut loss = T::zero();
    let grad = predicted
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            if d.abs() <= T::one() {
                loss += half * d * d;
                d / n
            } else {
                loss += d.abs() - half;
                d.signum() / n
            }
        })
        .collect();
    Ok((loss / n, grad))
}

/// Mean squared error with the conventional 1/2 factor, so the gradient is `d / n`.
pub fn mse_loss_and_grad<T: Scalar>(predicted: &[T], target: &[T]) -> Result<(T, Vec<T>)> {
    check_lengths(predicted, target)?;
    let n = T::cast(predicted.len());
    let half = T::lit(0.5);
    let mut loss = T::zero();
    let grad = predicted
        .iter()
        .zip(target)
        .map(|(&p, &t)| {
            let d = p - t;
            loss += half * d * d;
            d / n
        })
        .collect();
    Ok((loss / n, grad))
}

impl LossKind {
    pub fn loss_and_grad<T: Scalar>(self, predicted: &[T], target: &[T]) -> Result<(T, Vec<T>)> {
        match self {
            LossKind::Huber => huber_loss_and_grad(predicted, target),
            LossKind::Mse => mse_loss_and_grad(predicted, target),
        }
    }
}
