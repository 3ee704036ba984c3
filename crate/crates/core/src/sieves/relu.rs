use alloc::vec::Vec;
use core::f64::consts::E;
#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use super::{truncate, Model};
use crate::bounds::EntropyModel;
use crate::error::{Error, Result};
use crate::losses::LossSpec;
use crate::rng::RngStream;

/// Affine map `x ↦ A x + b` with `A` stored row-major (`out × in`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self { inputs, outputs, weights: alloc::vec![0.0; inputs * outputs], bias: alloc::vec![0.0; outputs] }
    }

    fn apply(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for r in 0..self.outputs {
            let row = &self.weights[r * self.inputs..(r + 1) * self.inputs];
            out.push(row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias[r]);
        }
    }
}

/// Truncated ReLU network `x ↦ sgn(f(x))·(|f(x)| ∧ M)` with
/// `f = L_{D+1} ∘ σ ∘ L_D ∘ … ∘ σ ∘ L_1` and layer widths `(d, W, …, W, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReluNet {
    pub input_dim: usize,
    pub depth: usize,
    pub width: usize,
    pub truncation: f64,
    pub layers: Vec<DenseLayer>,
}

impl ReluNet {
    /// All-zero network.
    pub fn zeros(input_dim: usize, depth: usize, width: usize, truncation: f64) -> Result<Self> {
        if input_dim == 0 || depth == 0 || width == 0 {
            return Err(Error::Parameter("ReLU net needs d, D, W >= 1".into()));
        }
        if !(truncation > 0.0) {
            return Err(Error::Parameter(alloc::format!("truncation must be > 0, got {truncation}")));
        }
        let mut layers = Vec::with_capacity(depth + 1);
        layers.push(DenseLayer::zeros(input_dim, width));
        for _ in 1..depth {
            layers.push(DenseLayer::zeros(width, width));
        }
        layers.push(DenseLayer::zeros(width, 1));
        Ok(Self { input_dim, depth, width, truncation, layers })
    }

    /// He-uniform weights, zero biases.
    pub fn random(input_dim: usize, depth: usize, width: usize, truncation: f64, stream: RngStream) -> Result<Self> {
        let mut net = Self::zeros(input_dim, depth, width, truncation)?;
        let mut g = stream.generator();
        for layer in &mut net.layers {
            let limit = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = limit * (2.0 * g.unit() - 1.0);
            }
        }
        Ok(net)
    }

    /// Assemble from explicit layers, checking the `(d, W, …, W, 1)` shape.
    pub fn from_layers(layers: Vec<DenseLayer>, truncation: f64) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::Parameter("need at least one hidden layer".into()));
        }
        let input_dim = layers[0].inputs;
        let width = layers[0].outputs;
        for (i, l) in layers.iter().enumerate() {
            let expect_in = if i == 0 { input_dim } else { width };
            let expect_out = if i + 1 == layers.len() { 1 } else { width };
            if l.inputs != expect_in || l.outputs != expect_out {
                return Err(Error::Shape { expected: expect_in * expect_out, found: l.inputs * l.outputs });
            }
            if l.weights.len() != l.inputs * l.outputs || l.bias.len() != l.outputs {
                return Err(Error::Shape { expected: l.inputs * l.outputs, found: l.weights.len() });
            }
        }
        if !(truncation > 0.0) {
            return Err(Error::Parameter(alloc::format!("truncation must be > 0, got {truncation}")));
        }
        Ok(Self { input_dim, depth: layers.len() - 1, width, truncation, layers })
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            p.extend_from_slice(&l.weights);
            p.extend_from_slice(&l.bias);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut at = 0;
        for l in &mut self.layers {
            let nw = l.weights.len();
            l.weights.copy_from_slice(&p[at..at + nw]);
            at += nw;
            let nb = l.bias.len();
            l.bias.copy_from_slice(&p[at..at + nb]);
            at += nb;
        }
    }

    /// Untruncated output `f(x)`.
    pub fn raw(&self, x: &[f64]) -> f64 {
        let mut cur: Vec<f64> = x.to_vec();
        let mut next = Vec::with_capacity(self.width);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            layer.apply(&cur, &mut next);
            if i < last {
                for v in &mut next {
                    *v = v.max(0.0);
                }
            }
            core::mem::swap(&mut cur, &mut next);
        }
        cur[0]
    }

    /// Loss at `(x, y)` and its gradient with respect to [`ReluNet::params`],
    /// accumulated into `grad`. Truncation passes gradient only when `|f| ≤ M`.
    pub fn accumulate_gradient(&self, x: &[f64], y: f64, loss: &LossSpec, grad: &mut [f64]) -> f64 {
        let n_layers = self.layers.len();
        // activations[0] = x, activations[l] = σ(z_l) for hidden layers
        let mut activations: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(n_layers);
        activations.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.outputs);
            layer.apply(&activations[i], &mut z);
            let a: Vec<f64> = if i + 1 < n_layers { z.iter().map(|v| v.max(0.0)).collect() } else { z.clone() };
            pre.push(z);
            activations.push(a);
        }
        let raw = pre[n_layers - 1][0];
        let pred = truncate(raw, self.truncation);
        let value = loss.value(pred, y);
        let pass = if raw.abs() <= self.truncation { 1.0 } else { 0.0 };
        let mut delta = alloc::vec![loss.prediction_subgradient(pred, y) * pass];

        let offsets = self.param_offsets();
        for i in (0..n_layers).rev() {
            let layer = &self.layers[i];
            let input = &activations[i];
            let (w_off, b_off) = offsets[i];
            for r in 0..layer.outputs {
                let d = delta[r];
                if d == 0.0 {
                    continue;
                }
                for c in 0..layer.inputs {
                    grad[w_off + r * layer.inputs + c] += d * input[c];
                }
                grad[b_off + r] += d;
            }
            if i > 0 {
                let mut prev = alloc::vec![0.0; layer.inputs];
                for r in 0..layer.outputs {
                    let d = delta[r];
                    if d == 0.0 {
                        continue;
                    }
                    for c in 0..layer.inputs {
                        prev[c] += layer.weights[r * layer.inputs + c] * d;
                    }
                }
                for (c, p) in prev.iter_mut().enumerate() {
                    if pre[i - 1][c] <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        value
    }

    fn param_offsets(&self) -> Vec<(usize, usize)> {
        let mut at = 0;
        self.layers
            .iter()
            .map(|l| {
                let w = at;
                at += l.weights.len();
                let b = at;
                at += l.bias.len();
                (w, b)
            })
            .collect()
    }

    /// Smallest `|pre-activation|` over hidden units at `x`.
    pub fn min_abs_preactivation(&self, x: &[f64]) -> f64 {
        let mut cur: Vec<f64> = x.to_vec();
        let mut next = Vec::new();
        let mut smallest = f64::INFINITY;
        for layer in &self.layers[..self.layers.len() - 1] {
            layer.apply(&cur, &mut next);
            for v in &mut next {
                smallest = smallest.min(v.abs());
                *v = v.max(0.0);
            }
            core::mem::swap(&mut cur, &mut next);
        }
        smallest
    }
}

impl Model for ReluNet {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn predict_row(&self, x: &[f64]) -> f64 {
        truncate(self.raw(x), self.truncation)
    }
}

/// `(DW)² · ln(DW)`; needs `DW ≥ 2` so the effective dimension is positive.
pub fn relu_effective_dim(depth: usize, width: usize) -> Result<f64> {
    if depth == 0 || width == 0 {
        return Err(Error::Parameter("D and W must be >= 1".into()));
    }
    let dw = (depth * width) as f64;
    if dw < 2.0 {
        return Err(Error::Parameter("D·W = 1 gives ln(DW) = 0; use D·W >= 2".into()));
    }
    Ok(dw * dw * dw.ln())
}

/// Expected covering entropy model of the truncated ReLU class:
/// `D_F = (DW)² ln(DW)`, `γ = 0`, `γ′ = 1`, `U_F = e·n·M`.
pub fn relu_entropy_model(depth: usize, width: usize, bound: f64, n: usize) -> Result<EntropyModel> {
    let d_f = relu_effective_dim(depth, width)?;
    EntropyModel::parametric(d_f, 0.0, 1.0, E * n as f64 * bound)
}
