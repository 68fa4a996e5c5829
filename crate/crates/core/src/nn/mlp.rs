//! Dense feed-forward network with ReLU hidden layers and a linear output.
//!
//! Weights for layer `k` are stored row-major with shape
//! `layer_sizes[k + 1] x layer_sizes[k]`. A batch of inputs is a
//! `batch x layer_sizes[0]` matrix; the output is `batch x layer_sizes[last]`.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::seed;

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    layer_sizes: Vec<usize>,
    weights: Vec<Vec<T>>,
    biases: Vec<Vec<T>>,
}

/// Per-layer parameter gradients, shape-matched to the network that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<T> {
    pub weights: Vec<Vec<T>>,
    pub biases: Vec<Vec<T>>,
}

/// Activations recorded by [`Mlp::forward_trace`]; `activations[0]` is the
/// input and the last entry is the raw output.
#[derive(Debug, Clone)]
pub struct ForwardTrace<T> {
    activations: Vec<Matrix<T>>,
}

impl<T: Scalar> ForwardTrace<T> {
    pub fn output(&self) -> &Matrix<T> {
        self.activations.last().expect("trace always holds the input")
    }

    pub fn into_output(mut self) -> Matrix<T> {
        self.activations.pop().expect("trace always holds the input")
    }
}

fn validate_sizes(layer_sizes: &[usize]) -> Result<()> {
    if layer_sizes.len() < 2 {
        return Err(Error::invalid(format!(
            "layer_sizes needs at least input and output sizes, got {layer_sizes:?}"
        )));
    }
    if let Some(pos) = layer_sizes.iter().position(|&s| s == 0) {
        return Err(Error::invalid(format!("layer_sizes[{pos}] is zero")));
    }
    Ok(())
}

impl<T: Scalar> Mlp<T> {
    /// He-uniform weights (bound `sqrt(6 / fan_in)`), zero biases.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut rng = seed::rng(seed, "mlp-init");
        let mut weights = Vec::with_capacity(layer_sizes.len() - 1);
        let mut biases = Vec::with_capacity(layer_sizes.len() - 1);
        for pair in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = (6.0 / fan_in as f64).sqrt();
            let w = (0..fan_in * fan_out)
                .map(|_| T::lit(rng.random_range(-bound..=bound)))
                .collect();
            weights.push(w);
            biases.push(vec![T::zero(); fan_out]);
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
        })
    }

    /// All-zero parameters.
    pub fn zeros(layer_sizes: &[usize]) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights: layer_sizes
                .windows(2)
                .map(|p| vec![T::zero(); p[0] * p[1]])
                .collect(),
            biases: layer_sizes[1..].iter().map(|&n| vec![T::zero(); n]).collect(),
        })
    }

    /// Builds a network from explicit parameters, checking every shape.
    pub fn from_parts(layer_sizes: Vec<usize>, weights: Vec<Vec<T>>, biases: Vec<Vec<T>>) -> Result<Self> {
        validate_sizes(&layer_sizes)?;
        let layers = layer_sizes.len() - 1;
        if weights.len() != layers || biases.len() != layers {
            return Err(Error::invalid(format!(
                "expected {layers} weight and bias blocks, got {} and {}",
                weights.len(),
                biases.len()
            )));
        }
        for k in 0..layers {
            let (fan_in, fan_out) = (layer_sizes[k], layer_sizes[k + 1]);
            if weights[k].len() != fan_in * fan_out {
                return Err(Error::invalid(format!(
                    "weights[{k}] has {} entries, expected {fan_out}x{fan_in}",
                    weights[k].len()
                )));
            }
            if biases[k].len() != fan_out {
                return Err(Error::invalid(format!(
                    "biases[{k}] has {} entries, expected {fan_out}",
                    biases[k].len()
                )));
            }
        }
        let net = Self {
            layer_sizes,
            weights,
            biases,
        };
        if !net.all_finite() {
            return Err(Error::invalid("non-finite parameter"));
        }
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated non-empty")
    }

    pub fn num_layers(&self) -> usize {
        self.weights.len()
    }

    /// Row-major `out x in` weights of layer `k`.
    pub fn weights(&self, k: usize) -> &[T] {
        &self.weights[k]
    }

    pub fn biases(&self, k: usize) -> &[T] {
        &self.biases[k]
    }

    pub fn weights_mut(&mut self, k: usize) -> &mut [T] {
        &mut self.weights[k]
    }

    pub fn biases_mut(&mut self, k: usize) -> &mut [T] {
        &mut self.biases[k]
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(&self.biases)
            .flatten()
            .all(|v| v.is_finite())
    }

    fn check_input(&self, states: &Matrix<T>) -> Result<()> {
        if states.cols() != self.input_dim() {
            return Err(Error::invalid(format!(
                "input has {} columns, network expects {}",
                states.cols(),
                self.input_dim()
            )));
        }
        if !states.all_finite() {
            return Err(Error::invalid("non-finite input"));
        }
        Ok(())
    }

    fn affine(&self, k: usize, input: &Matrix<T>) -> Matrix<T> {
        let (fan_in, fan_out) = (self.layer_sizes[k], self.layer_sizes[k + 1]);
        let batch = input.rows();
        let mut z = Matrix::zeros(batch, fan_out);
        for r in 0..batch {
            z.row_mut(r).copy_from_slice(&self.biases[k]);
        }
        // z += input * W^T
        T::gemm(
            batch,
            fan_in,
            fan_out,
            T::one(),
            input.as_slice(),
            fan_in as isize,
            1,
            &self.weights[k],
            1,
            fan_in as isize,
            T::one(),
            z.as_mut_slice(),
            fan_out as isize,
            1,
        );
        z
    }

    /// Forward pass keeping every layer's activation for backprop.
    pub fn forward_trace(&self, states: &Matrix<T>) -> Result<ForwardTrace<T>> {
        self.check_input(states)?;
        let mut activations = Vec::with_capacity(self.layer_sizes.len());
        activations.push(states.clone());
        let last = self.num_layers() - 1;
        for k in 0..self.num_layers() {
            let mut z = self.affine(k, activations.last().expect("non-empty"));
            if k != last {
                for v in z.as_mut_slice() {
                    if !(*v > T::zero()) {
                        *v = T::zero();
                    }
                }
            }
            activations.push(z);
        }
        Ok(ForwardTrace { activations })
    }

    /// Raw output values, one row per input row.
    pub fn forward(&self, states: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(self.forward_trace(states)?.into_output())
    }

    /// Forward pass for a single state vector.
    pub fn forward_one(&self, state: &[T]) -> Result<Vec<T>> {
        let m = Matrix::new(1, state.len(), state.to_vec())?;
        Ok(self.forward(&m)?.into_vec())
    }

    /// Gradient of `sum_b <output_grads[b], output[b]>` with respect to every
    /// parameter. Recomputes the forward pass.
    pub fn backward(&self, states: &Matrix<T>, output_grads: &Matrix<T>) -> Result<GradientSet<T>> {
        let trace = self.forward_trace(states)?;
        self.backward_from_trace(&trace, output_grads)
    }

    /// Reverse-mode pass reusing activations from [`Mlp::forward_trace`].
    pub fn backward_from_trace(
        &self,
        trace: &ForwardTrace<T>,
        output_grads: &Matrix<T>,
    ) -> Result<GradientSet<T>> {
        let acts = &trace.activations;
        if acts.len() != self.layer_sizes.len() || acts[0].cols() != self.input_dim() {
            return Err(Error::invalid("trace was not produced by this network"));
        }
        let batch = acts[0].rows();
        if output_grads.rows() != batch || output_grads.cols() != self.output_dim() {
            return Err(Error::invalid(format!(
                "output gradients are {}x{}, expected {batch}x{}",
                output_grads.rows(),
                output_grads.cols(),
                self.output_dim()
            )));
        }

        let mut grads = GradientSet::zeros_like(self);
        let mut delta = output_grads.clone();
        for k in (0..self.num_layers()).rev() {
            let (fan_in, fan_out) = (self.layer_sizes[k], self.layer_sizes[k + 1]);
            let prev = &acts[k];

            // dW = delta^T * prev
            T::gemm(
                fan_out,
                batch,
                fan_in,
                T::one(),
                delta.as_slice(),
                1,
                fan_out as isize,
                prev.as_slice(),
                fan_in as isize,
                1,
                T::zero(),
                &mut grads.weights[k],
                fan_in as isize,
                1,
            );
            let db = &mut grads.biases[k];
            for row in delta.iter_rows() {
                for (acc, &d) in db.iter_mut().zip(row) {
                    *acc += d;
                }
            }

            if k == 0 {
                break;
            }
            // d(prev) = delta * W, then the ReLU mask of the layer below
            let mut below = Matrix::zeros(batch, fan_in);
            T::gemm(
                batch,
                fan_out,
                fan_in,
                T::one(),
                delta.as_slice(),
                fan_out as isize,
                1,
                &self.weights[k],
                fan_in as isize,
                1,
                T::zero(),
                below.as_mut_slice(),
                fan_in as isize,
                1,
            );
            for (g, &a) in below.as_mut_slice().iter_mut().zip(prev.as_slice()) {
                if !(a > T::zero()) {
                    *g = T::zero();
                }
            }
            delta = below;
        }
        Ok(grads)
    }

    /// Overwrites this network's parameters with `src`'s.
    pub fn copy_from(&mut self, src: &Mlp<T>) -> Result<()> {
        if self.layer_sizes != src.layer_sizes {
            return Err(Error::invalid(format!(
                "topology mismatch: {:?} vs {:?}",
                src.layer_sizes, self.layer_sizes
            )));
        }
        for (d, s) in self.weights.iter_mut().zip(&src.weights) {
            d.copy_from_slice(s);
        }
        for (d, s) in self.biases.iter_mut().zip(&src.biases) {
            d.copy_from_slice(s);
        }
        Ok(())
    }

    pub(crate) fn params_mut(&mut self) -> impl Iterator<Item = &mut Vec<T>> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }
}

/// Copies `src` into `dst`; both must share a topology.
pub fn copy_weights<T: Scalar>(src: &Mlp<T>, dst: &mut Mlp<T>) -> Result<()> {
    dst.copy_from(src)
}

impl<T: Scalar> GradientSet<T> {
    pub fn zeros_like(net: &Mlp<T>) -> Self {
        Self {
            weights: net.weights.iter().map(|w| vec![T::zero(); w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![T::zero(); b.len()]).collect(),
        }
    }

    pub fn matches(&self, net: &Mlp<T>) -> bool {
        self.weights.len() == net.weights.len()
            && self.biases.len() == net.biases.len()
            && self.weights.iter().zip(&net.weights).all(|(a, b)| a.len() == b.len())
            && self.biases.iter().zip(&net.biases).all(|(a, b)| a.len() == b.len())
    }

    pub(crate) fn blocks(&self) -> impl Iterator<Item = &Vec<T>> {
        self.weights.iter().chain(self.biases.iter())
    }

    pub(crate) fn blocks_mut(&mut self) -> impl Iterator<Item = &mut Vec<T>> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.blocks().flatten()
    }
}
