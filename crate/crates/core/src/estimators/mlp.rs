use rand::Rng;

use super::gemm::{gemm, View};
use super::Network;
use crate::error::{Error, Result};

/// Fully connected regression network with rectifier hidden layers and a
/// linear output. Parameters are one flat vector: for each layer the weight
/// matrix (out × in, row-major) followed by its bias.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Layer widths used for the power and QoS estimators.
pub const MLP_DIMS: [usize; 6] = [64, 64, 128, 128, 64, 1];

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
}

impl Mlp {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) || dims[dims.len() - 1] != 1 {
            return Err(Error::invalid(format!("mlp dims {dims:?}")));
        }
        Ok(Mlp {
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
        })
    }

    /// Uniform ±√(6/(fan_in+fan_out)) weights, zero biases.
    pub fn init<R: Rng>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut m = Self::zeros(dims)?;
        let mut off = 0;
        for w in dims.windows(2) {
            let (i, o) = (w[0], w[1]);
            let a = (6.0 / (i + o) as f64).sqrt();
            for p in &mut m.params[off..off + i * o] {
                *p = rng.gen_range(-a..=a);
            }
            off += i * o + o;
        }
        Ok(m)
    }

    pub fn from_parts(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut m = Self::zeros(dims)?;
        if params.len() != m.params.len() {
            return Err(Error::invalid(format!(
                "mlp {dims:?} needs {} parameters, got {}",
                m.params.len(),
                params.len()
            )));
        }
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mlp parameters must be finite"));
        }
        m.params = params;
        Ok(m)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// (weight, bias) slices of `layer`.
    pub fn layer(&self, layer: usize) -> (&[f64], &[f64]) {
        let off = param_count(&self.dims[..=layer]);
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        (
            &self.params[off..off + i * o],
            &self.params[off + i * o..off + i * o + o],
        )
    }

    pub fn layer_mut(&mut self, layer: usize) -> (&mut [f64], &mut [f64]) {
        let off = param_count(&self.dims[..=layer]);
        let (i, o) = (self.dims[layer], self.dims[layer + 1]);
        let (w, rest) = self.params[off..].split_at_mut(i * o);
        (w, &mut rest[..o])
    }

    fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// Activations per layer for a batch; `acts[0]` is the input.
    fn forward_all(&self, x: &[f64], batch: usize) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.dims.len());
        acts.push(x.to_vec());
        for l in 0..self.layers() {
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            let (w, b) = self.layer(l);
            let mut z: Vec<f64> = (0..batch).flat_map(|_| b.iter().copied()).collect();
            gemm(
                batch,
                i,
                o,
                View::rows(&acts[l], i),
                View::trans(w, i),
                1.0,
                &mut z,
            );
            if l + 1 < self.layers() {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        acts
    }

    fn check_input(&self, x: &[f64]) -> Result<usize> {
        let w = self.dims[0];
        if x.is_empty() || x.len() % w != 0 {
            return Err(Error::invalid(format!(
                "mlp input of length {} for width {w}",
                x.len()
            )));
        }
        Ok(x.len() / w)
    }

    /// Output for a single input vector.
    pub fn forward(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dims[0] {
            return Err(Error::invalid(format!(
                "mlp input of length {} for width {}",
                x.len(),
                self.dims[0]
            )));
        }
        Ok(self.forward_all(x, 1).pop().unwrap()[0])
    }
}

impl Network for Mlp {
    fn input_width(&self) -> usize {
        self.dims[0]
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        let batch = self.check_input(x)?;
        Ok(self.forward_all(x, batch).pop().unwrap())
    }

    fn loss_grad(&self, x: &[f64], y: &[f64], grad: &mut [f64]) -> Result<f64> {
        let batch = self.check_input(x)?;
        if y.len() != batch || grad.len() != self.params.len() {
            return Err(Error::invalid("mlp gradient: shape mismatch"));
        }
        if x.iter().chain(y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("mlp gradient: non-finite input"));
        }
        let acts = self.forward_all(x, batch);
        let out = &acts[self.layers()];
        let scale = 1.0 / batch as f64;
        let mut loss = 0.0;
        let mut delta: Vec<f64> = out
            .iter()
            .zip(y)
            .map(|(o, t)| {
                let e = o - t;
                loss += e * e;
                2.0 * e * scale
            })
            .collect();
        let mut off = self.params.len();
        for l in (0..self.layers()).rev() {
            let (i, o) = (self.dims[l], self.dims[l + 1]);
            off -= i * o + o;
            let (gw, gb) = grad[off..off + i * o + o].split_at_mut(i * o);
            // dW = δᵀ·a, db = Σ δ
            gemm(
                o,
                batch,
                i,
                View::trans(&delta, o),
                View::rows(&acts[l], i),
                0.0,
                gw,
            );
            gb.iter_mut().for_each(|v| *v = 0.0);
            for row in delta.chunks_exact(o) {
                gb.iter_mut().zip(row).for_each(|(g, d)| *g += d);
            }
            if l > 0 {
                let (w, _) = self.layer(l);
                let mut prev = vec![0.0; batch * i];
                gemm(
                    batch,
                    o,
                    i,
                    View::rows(&delta, o),
                    View::rows(w, i),
                    0.0,
                    &mut prev,
                );
                for (d, a) in prev.iter_mut().zip(&acts[l]) {
                    if *a <= 0.0 {
                        *d = 0.0;
                    }
                }
                delta = prev;
            }
        }
        Ok(loss * scale)
    }
}
