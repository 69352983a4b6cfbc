use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Network;
use crate::error::{Error, Result};

/// Flat regression samples: `inputs` holds `len × width` values.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Samples {
    pub width: usize,
    pub inputs: Vec<f64>,
    pub targets: Vec<f64>,
}

impl Samples {
    pub fn new(width: usize) -> Self {
        Samples {
            width,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn push(&mut self, x: &[f64], y: f64) {
        debug_assert_eq!(x.len(), self.width);
        self.inputs.extend_from_slice(x);
        self.targets.push(y);
    }

    pub fn input(&self, k: usize) -> &[f64] {
        &self.inputs[k * self.width..(k + 1) * self.width]
    }

    fn gather(&self, idx: &[usize]) -> (Vec<f64>, Vec<f64>) {
        let mut x = Vec::with_capacity(idx.len() * self.width);
        for &k in idx {
            x.extend_from_slice(self.input(k));
        }
        (x, idx.iter().map(|&k| self.targets[k]).collect())
    }
}

/// Train and heldout partitions of one estimator's samples.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub train: Samples,
    pub heldout: Samples,
}

/// Per-parameter Adagrad state.
#[derive(Clone, Debug, PartialEq)]
pub struct Adagrad {
    pub lr: f64,
    pub eps: f64,
    pub accum: Vec<f64>,
}

impl Adagrad {
    pub fn new(lr: f64, eps: f64, params: usize) -> Self {
        Adagrad {
            lr,
            eps,
            accum: vec![0.0; params],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        for ((p, a), g) in params.iter_mut().zip(&mut self.accum).zip(grad) {
            *a += g * g;
            *p -= self.lr * g / (a.sqrt() + self.eps);
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    pub eps: f64,
    /// Stop after this many epochs without heldout improvement.
    pub patience: usize,
    pub seed: u64,
}

impl TrainConfig {
    pub fn mlp(seed: u64) -> Self {
        TrainConfig {
            epochs: 50,
            batch: 64,
            lr: 0.001,
            eps: 1e-8,
            patience: 10,
            seed,
        }
    }

    pub fn lstm(seed: u64) -> Self {
        TrainConfig {
            lr: 0.05,
            ..Self::mlp(seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch == 0 || self.lr < 0.0 || !self.lr.is_finite() || self.eps <= 0.0 {
            return Err(Error::invalid(format!("training config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean training loss of each epoch's mini-batches.
    pub train_loss: Vec<f64>,
    pub heldout_loss: Vec<f64>,
    /// Epoch (0-based) whose parameters were kept.
    pub best_epoch: usize,
}

/// Mean squared error over `samples`, evaluated in chunks.
pub fn evaluate<N: Network>(net: &N, samples: &Samples) -> Result<f64> {
    if samples.is_empty() {
        return Ok(f64::NAN);
    }
    let chunk = 512;
    let mut sum = 0.0;
    for (xs, ys) in samples
        .inputs
        .chunks(chunk * samples.width)
        .zip(samples.targets.chunks(chunk))
    {
        let out = net.predict(xs)?;
        sum += out
            .iter()
            .zip(ys)
            .map(|(o, y)| (o - y) * (o - y))
            .sum::<f64>();
    }
    Ok(sum / samples.len() as f64)
}

/// Mini-batch Adagrad with seeded shuffling. The heldout split only selects
/// which epoch's parameters are kept; it never feeds an update.
pub fn train<N: Network>(
    net: &mut N,
    data: &Dataset,
    opt: &mut Adagrad,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    cfg.validate()?;
    if data.train.is_empty() {
        return Err(Error::invalid("train: empty dataset"));
    }
    if data.train.width != net.input_width()
        || (!data.heldout.is_empty() && data.heldout.width != net.input_width())
    {
        return Err(Error::invalid(format!(
            "train: samples of width {} for a network of width {}",
            data.train.width,
            net.input_width()
        )));
    }
    if opt.accum.len() != net.params().len() {
        return Err(Error::invalid(
            "train: optimizer state does not match the network",
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut grad = vec![0.0; net.params().len()];
    let mut report = TrainReport::default();
    let mut best = (f64::INFINITY, net.params().to_vec());
    let mut stale = 0;
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for idx in order.chunks(cfg.batch) {
            let (x, y) = data.train.gather(idx);
            let loss = net.loss_grad(&x, &y, &mut grad)?;
            sum += loss * idx.len() as f64;
            opt.step(net.params_mut(), &grad);
        }
        let train_loss = sum / order.len() as f64;
        if !train_loss.is_finite() {
            return Err(Error::Validation(format!(
                "training diverged at epoch {epoch}"
            )));
        }
        report.train_loss.push(train_loss);
        let held = if data.heldout.is_empty() {
            train_loss
        } else {
            evaluate(net, &data.heldout)?
        };
        report.heldout_loss.push(held);
        if held < best.0 {
            best = (held, net.params().to_vec());
            report.best_epoch = epoch;
            stale = 0;
        } else {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        }
    }
    if best.0.is_finite() {
        net.params_mut().copy_from_slice(&best.1);
    }
    Ok(report)
}
