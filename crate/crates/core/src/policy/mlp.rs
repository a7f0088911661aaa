use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// One affine layer; `weights` is `out x in`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Fully connected network with tanh hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    dims: Vec<usize>,
    layers: Vec<Layer>,
}

/// Intermediate activations kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    // activations[0] is the input, activations[last] the output
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("non-empty cache")
    }
}

impl MlpParams {
    pub fn new(dims: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::arg(format!("invalid layer dims {dims:?}")));
        }
        if layers.len() != dims.len() - 1 {
            return Err(Error::arg(format!(
                "{} layers given for dims {dims:?}",
                layers.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            let (fan_in, fan_out) = (dims[i], dims[i + 1]);
            if layer.weights.len() != fan_in * fan_out || layer.biases.len() != fan_out {
                return Err(Error::arg(format!(
                    "layer {i}: expected {fan_out}x{fan_in} weights and {fan_out} biases, got {} and {}",
                    layer.weights.len(),
                    layer.biases.len()
                )));
            }
            if layer.weights.iter().chain(&layer.biases).any(|v| !v.is_finite()) {
                return Err(Error::arg(format!("layer {i} has non-finite entries")));
            }
        }
        Ok(MlpParams { dims, layers })
    }

    pub fn zeros(dims: &[usize]) -> Self {
        let layers = dims
            .windows(2)
            .map(|w| Layer {
                weights: vec![0.0; w[0] * w[1]],
                biases: vec![0.0; w[1]],
            })
            .collect();
        MlpParams {
            dims: dims.to_vec(),
            layers,
        }
    }

    /// Orthogonal initialization: each weight matrix has orthonormal rows
    /// (or columns, whichever is shorter) scaled by the gain. Biases are zero.
    pub fn orthogonal<R: Rng + ?Sized>(
        dims: &[usize],
        hidden_gain: f64,
        output_gain: f64,
        rng: &mut R,
    ) -> Self {
        let mut params = MlpParams::zeros(dims);
        let n = params.layers.len();
        for (i, layer) in params.layers.iter_mut().enumerate() {
            let gain = if i + 1 == n { output_gain } else { hidden_gain };
            layer.weights = orthogonal_matrix(dims[i + 1], dims[i], rng);
            layer.weights.iter_mut().for_each(|w| *w *= gain);
        }
        params
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("dims non-empty")
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_cached(x)?.activations.pop().expect("output"))
    }

    pub fn forward_cached(&self, x: &[f64]) -> Result<ForwardCache> {
        if x.len() != self.input_dim() {
            return Err(Error::arg(format!(
                "input has {} values, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let n = self.layers.len();
        let mut activations = Vec::with_capacity(n + 1);
        activations.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let input = &activations[i];
            let fan_in = input.len();
            let mut out = layer.biases.clone();
            for (o, row) in out.iter_mut().zip(layer.weights.chunks_exact(fan_in)) {
                *o += row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
            }
            if i + 1 < n {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(out);
        }
        Ok(ForwardCache { activations })
    }

    /// Accumulates into `grads` the gradient of a scalar objective whose
    /// derivative with respect to the network output is `grad_out`.
    pub fn backward(&self, cache: &ForwardCache, grad_out: &[f64], grads: &mut MlpParams) {
        let n = self.layers.len();
        let mut delta = grad_out.to_vec();
        for i in (0..n).rev() {
            if i + 1 < n {
                let act = &cache.activations[i + 1];
                delta.iter_mut().zip(act).for_each(|(d, a)| *d *= 1.0 - a * a);
            }
            let input = &cache.activations[i];
            let fan_in = input.len();
            let layer = &self.layers[i];
            let g = &mut grads.layers[i];
            for (o, d) in delta.iter().enumerate() {
                g.biases[o] += d;
                let row = &mut g.weights[o * fan_in..(o + 1) * fan_in];
                row.iter_mut().zip(input).for_each(|(w, x)| *w += d * x);
            }
            if i > 0 {
                let mut prev = vec![0.0; fan_in];
                for (o, d) in delta.iter().enumerate() {
                    let row = &layer.weights[o * fan_in..(o + 1) * fan_in];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                }
                delta = prev;
            }
        }
    }

    /// Appends all parameters, layer by layer (weights then biases).
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        for l in &self.layers {
            out.extend_from_slice(&l.weights);
            out.extend_from_slice(&l.biases);
        }
    }

    /// Reads parameters in [`MlpParams::write_flat`] order; returns how many were consumed.
    pub fn read_flat(&mut self, src: &[f64]) -> usize {
        let mut at = 0;
        for l in &mut self.layers {
            let (nw, nb) = (l.weights.len(), l.biases.len());
            l.weights.copy_from_slice(&src[at..at + nw]);
            at += nw;
            l.biases.copy_from_slice(&src[at..at + nb]);
            at += nb;
        }
        at
    }

    /// Upper bound on the Lipschitz constant of the network (Euclidean
    /// norms): the product of the layers' Frobenius norms, tanh being 1-Lipschitz.
    pub fn lipschitz_bound(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.weights.iter().map(|w| w * w).sum::<f64>().sqrt())
            .product()
    }
}

fn orthogonal_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    // orthonormalize along the shorter side with modified Gram-Schmidt
    let (n_vec, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(n_vec);
    while vecs.len() < n_vec {
        let mut v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        for u in &vecs {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(u).for_each(|(a, b)| *a -= dot * b);
        }
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-8 {
            v.iter_mut().for_each(|a| *a /= norm);
            vecs.push(v);
        }
    }
    let mut m = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            m[r * cols + c] = if rows <= cols { vecs[r][c] } else { vecs[c][r] };
        }
    }
    m
}
