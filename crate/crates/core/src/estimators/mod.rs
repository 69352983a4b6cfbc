//! Learned surrogates for the controller: power and QoS networks over
//! (state, action) features, a recurrent handover predictor, Adagrad
//! training and dataset assembly from random-action traces.

mod dataset;
mod features;
mod gemm;
mod lstm;
mod mlp;
mod model;
mod train;

pub use dataset::{build_dataset, power_target, Corpus};
pub use features::{
    config_bits, featurize, raw_state, NormStats, TargetScale, FEATURES, PER_CELL, SEQ_FEATURES,
    STATE_FEATURES,
};
pub use lstm::{Lstm, LSTM_HIDDEN, WINDOW};
pub use mlp::{Mlp, MLP_DIMS};
pub use model::{
    train_estimators, Estimators, HandoverEstimator, HandoverQuery, HeldoutErrors, LstmEstimator,
    MetricEstimator, MlpEstimator, ModelFile, ModelKind, ModelNorm, Target, TrainPlan,
    TrainSummary, WindowStep, MODEL_SCHEMA_VERSION,
};
pub use train::{evaluate, train, Adagrad, Dataset, Samples, TrainConfig, TrainReport};

use crate::error::{Error, Result};

/// A regression network over flat parameter and input vectors.
pub trait Network {
    /// Values per sample.
    fn input_width(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    /// Outputs for a batch of concatenated samples.
    fn predict(&self, x: &[f64]) -> Result<Vec<f64>>;
    /// Mean squared error over the batch; writes its exact gradient.
    fn loss_grad(&self, x: &[f64], y: &[f64], grad: &mut [f64]) -> Result<f64>;
}

/// Compares the analytic gradient against central differences with step
/// `h`. Relative error uses `max(|analytic|, |numeric|, 1e-6)` as scale.
pub fn finite_difference_check<N: Network + Clone>(
    net: &N,
    x: &[f64],
    y: &[f64],
    h: f64,
    tol: f64,
) -> Result<f64> {
    let mut grad = vec![0.0; net.params().len()];
    net.loss_grad(x, y, &mut grad)?;
    let mut probe = net.clone();
    let mut scratch = vec![0.0; grad.len()];
    let mut worst: f64 = 0.0;
    for k in 0..grad.len() {
        let p = net.params()[k];
        probe.params_mut()[k] = p + h;
        let up = probe.loss_grad(x, y, &mut scratch)?;
        probe.params_mut()[k] = p - h;
        let down = probe.loss_grad(x, y, &mut scratch)?;
        probe.params_mut()[k] = p;
        let numeric = (up - down) / (2.0 * h);
        let err = (grad[k] - numeric).abs() / grad[k].abs().max(numeric.abs()).max(1e-6);
        if err > tol {
            return Err(Error::Validation(format!(
                "parameter {k}: analytic {} vs numeric {numeric} (relative error {err:.2e})",
                grad[k]
            )));
        }
        worst = worst.max(err);
    }
    Ok(worst)
}
