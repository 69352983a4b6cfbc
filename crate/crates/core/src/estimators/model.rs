use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::dataset::{seq_element, Corpus};
use super::features::{raw_state, NormStats, TargetScale, FEATURES, SEQ_FEATURES, STATE_FEATURES};
use super::lstm::{Lstm, LSTM_HIDDEN};
use super::mlp::{Mlp, MLP_DIMS};
use super::train::{train, Adagrad, Samples, TrainConfig, TrainReport};
use super::Network;
use crate::error::{Error, Result};
use crate::netmodel::{Action, OnOffConfig};
use crate::simkernel::TrafficSnapshot;

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// Predicts the step power (without switch-on surcharge) and QoS of taking
/// each action from a traffic snapshot.
pub trait MetricEstimator: Sync {
    fn power(&self, snap: &TrafficSnapshot, actions: &[Action]) -> Result<Vec<f64>>;
    fn qos(&self, snap: &TrafficSnapshot, actions: &[Action]) -> Result<Vec<f64>>;
}

/// One already-taken step of the handover window.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowStep {
    pub snapshot: TrafficSnapshot,
    pub action: Action,
    /// Configuration of the step before this one.
    pub prev_config: OnOffConfig,
}

/// Input of a handover prediction: recent steps (oldest first) and the
/// current snapshot whose action is being chosen.
#[derive(Clone, Copy, Debug)]
pub struct HandoverQuery<'a> {
    pub past: &'a [WindowStep],
    pub current: &'a TrafficSnapshot,
    pub prev_config: OnOffConfig,
}

pub trait HandoverEstimator {
    fn handover(&self, query: &HandoverQuery, actions: &[Action]) -> Result<Vec<f64>>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Mlp,
    Lstm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Power,
    Qos,
    Handover,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelNorm {
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
    pub target_min: f64,
    pub target_max: f64,
}

/// Serialized estimator. `dims` is the layer widths for an MLP and
/// `[input, hidden.., 1]` for an LSTM.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub kind: ModelKind,
    pub target: Target,
    pub dims: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<usize>,
    pub weights: Vec<f64>,
    pub norm_stats: ModelNorm,
}

impl ModelFile {
    fn norm(&self) -> Result<(NormStats, TargetScale)> {
        if self.schema_version != MODEL_SCHEMA_VERSION {
            return Err(Error::Artifact(format!(
                "model schema version {} (expected {MODEL_SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        let stats = NormStats {
            feature_min: self.norm_stats.feature_min.clone(),
            feature_max: self.norm_stats.feature_max.clone(),
        };
        stats
            .validate()
            .map_err(|_| Error::Artifact("model normalization stats".into()))?;
        let scale = TargetScale {
            min: self.norm_stats.target_min,
            max: self.norm_stats.target_max,
        };
        if !scale.min.is_finite() || !scale.max.is_finite() || scale.min > scale.max {
            return Err(Error::Artifact("model target scale".into()));
        }
        Ok((stats, scale))
    }
}

fn model_norm(stats: &NormStats, scale: &TargetScale) -> ModelNorm {
    ModelNorm {
        feature_min: stats.feature_min.clone(),
        feature_max: stats.feature_max.clone(),
        target_min: scale.min,
        target_max: scale.max,
    }
}

/// Feed-forward estimator of power or QoS.
#[derive(Clone, Debug, PartialEq)]
pub struct MlpEstimator {
    pub target: Target,
    pub net: Mlp,
    pub stats: NormStats,
    pub scale: TargetScale,
}

impl MlpEstimator {
    fn finish(&self, z: f64) -> f64 {
        let y = self.scale.decode(z);
        match self.target {
            Target::Qos => y.clamp(0.0, 100.0),
            Target::Handover => y.max(0.0),
            Target::Power => y,
        }
    }

    pub fn predict(&self, snap: &TrafficSnapshot, actions: &[Action]) -> Result<Vec<f64>> {
        if actions.is_empty() {
            return Ok(Vec::new());
        }
        let mut row = [0.0; FEATURES];
        self.stats
            .scale_state(&raw_state(snap), &mut row[..STATE_FEATURES]);
        let mut x = Vec::with_capacity(actions.len() * FEATURES);
        for a in actions {
            row[STATE_FEATURES..].copy_from_slice(&a.bits());
            x.extend_from_slice(&row);
        }
        Ok(self
            .net
            .predict(&x)?
            .into_iter()
            .map(|z| self.finish(z))
            .collect())
    }

    pub fn to_file(&self) -> ModelFile {
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            kind: ModelKind::Mlp,
            target: self.target,
            dims: self.net.dims().to_vec(),
            window: None,
            weights: self.net.params().to_vec(),
            norm_stats: model_norm(&self.stats, &self.scale),
        }
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        if file.kind != ModelKind::Mlp || file.dims.first() != Some(&FEATURES) {
            return Err(Error::Artifact(format!(
                "expected an mlp over {FEATURES} features"
            )));
        }
        let (stats, scale) = file.norm()?;
        let net = Mlp::from_parts(&file.dims, file.weights.clone())
            .map_err(|e| Error::Artifact(e.to_string()))?;
        Ok(MlpEstimator {
            target: file.target,
            net,
            stats,
            scale,
        })
    }
}

/// Recurrent handover estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmEstimator {
    pub net: Lstm,
    pub stats: NormStats,
    pub scale: TargetScale,
}

impl LstmEstimator {
    pub fn to_file(&self) -> ModelFile {
        let mut dims = vec![self.net.input()];
        dims.extend_from_slice(self.net.hidden());
        dims.push(1);
        ModelFile {
            schema_version: MODEL_SCHEMA_VERSION,
            kind: ModelKind::Lstm,
            target: Target::Handover,
            dims,
            window: Some(self.net.window()),
            weights: self.net.params().to_vec(),
            norm_stats: model_norm(&self.stats, &self.scale),
        }
    }

    pub fn from_file(file: &ModelFile) -> Result<Self> {
        let bad = || Error::Artifact(format!("expected an lstm over {SEQ_FEATURES} features"));
        if file.kind != ModelKind::Lstm || file.dims.len() < 3 || file.dims[0] != SEQ_FEATURES {
            return Err(bad());
        }
        if file.dims.last() != Some(&1) {
            return Err(bad());
        }
        let window = file.window.ok_or_else(bad)?;
        let (stats, scale) = file.norm()?;
        let hidden = &file.dims[1..file.dims.len() - 1];
        let net = Lstm::from_parts(SEQ_FEATURES, hidden, window, file.weights.clone())
            .map_err(|e| Error::Artifact(e.to_string()))?;
        Ok(LstmEstimator { net, stats, scale })
    }
}

impl HandoverEstimator for LstmEstimator {
    fn handover(&self, query: &HandoverQuery, actions: &[Action]) -> Result<Vec<f64>> {
        if actions.is_empty() {
            return Ok(Vec::new());
        }
        let w = self.net.window();
        let keep = query.past.len().min(w - 1);
        let recent = &query.past[query.past.len() - keep..];
        let mut prefix = vec![0.0; (w - 1) * SEQ_FEATURES];
        let mut current = [0.0; SEQ_FEATURES];
        let cur_raw = raw_state(query.current);
        let mut batch = Vec::with_capacity(actions.len() * w * SEQ_FEATURES);
        let pad = w - 1 - keep;
        for (slot, step) in recent.iter().enumerate() {
            let at = (pad + slot) * SEQ_FEATURES;
            seq_element(
                &self.stats,
                &raw_state(&step.snapshot),
                &step.action.bits(),
                &step.prev_config,
                &mut prefix[at..at + SEQ_FEATURES],
            );
        }
        for a in actions {
            seq_element(
                &self.stats,
                &cur_raw,
                &a.bits(),
                &query.prev_config,
                &mut current,
            );
            // missing history repeats the earliest available element
            let earliest: &[f64] = if keep > 0 {
                &prefix[pad * SEQ_FEATURES..(pad + 1) * SEQ_FEATURES]
            } else {
                &current
            };
            for _ in 0..pad {
                batch.extend_from_slice(earliest);
            }
            batch.extend_from_slice(&prefix[pad * SEQ_FEATURES..]);
            batch.extend_from_slice(&current);
        }
        Ok(self
            .net
            .predict(&batch)?
            .into_iter()
            .map(|z| self.scale.decode(z).max(0.0))
            .collect())
    }
}

/// The three trained estimators.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimators {
    pub power: MlpEstimator,
    pub qos: MlpEstimator,
    pub handover: LstmEstimator,
}

impl Estimators {
    pub fn predict_power(&self, snap: &TrafficSnapshot, action: Action) -> Result<f64> {
        Ok(self.power.predict(snap, &[action])?[0])
    }

    pub fn predict_qos(&self, snap: &TrafficSnapshot, action: Action) -> Result<f64> {
        Ok(self.qos.predict(snap, &[action])?[0])
    }

    pub fn predict_handover(&self, query: &HandoverQuery, action: Action) -> Result<f64> {
        Ok(self.handover.handover(query, &[action])?[0])
    }
}

impl MetricEstimator for Estimators {
    fn power(&self, snap: &TrafficSnapshot, actions: &[Action]) -> Result<Vec<f64>> {
        self.power.predict(snap, actions)
    }

    fn qos(&self, snap: &TrafficSnapshot, actions: &[Action]) -> Result<Vec<f64>> {
        self.qos.predict(snap, actions)
    }
}

impl HandoverEstimator for Estimators {
    fn handover(&self, query: &HandoverQuery, actions: &[Action]) -> Result<Vec<f64>> {
        self.handover.handover(query, actions)
    }
}

/// Training settings of the three estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainPlan {
    pub power: TrainConfig,
    pub qos: TrainConfig,
    pub handover: TrainConfig,
}

impl TrainPlan {
    pub fn new(seed: u64) -> Self {
        TrainPlan {
            power: TrainConfig::mlp(crate::seed::derive_seed(seed, &[1])),
            qos: TrainConfig::mlp(crate::seed::derive_seed(seed, &[2])),
            handover: TrainConfig::lstm(crate::seed::derive_seed(seed, &[3])),
        }
    }
}

/// Heldout errors in natural units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeldoutErrors {
    /// Mean of |error| / |target| for power.
    pub power_rel_mae: f64,
    /// QoS points.
    pub qos_mae: f64,
    /// Handovers per step.
    pub handover_mae: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub power: TrainReport,
    pub qos: TrainReport,
    pub handover: TrainReport,
    pub heldout: HeldoutErrors,
}

fn natural_errors<N: Network>(
    net: &N,
    samples: &Samples,
    scale: &TargetScale,
    finish: impl Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Ok((f64::NAN, f64::NAN));
    }
    let pred = net.predict(&samples.inputs)?;
    let (mut abs, mut rel) = (0.0, 0.0);
    for (z, t) in pred.iter().zip(&samples.targets) {
        let y = scale.decode(*t);
        let e = (finish(scale.decode(*z)) - y).abs();
        abs += e;
        rel += if y != 0.0 { e / y.abs() } else { 0.0 };
    }
    let n = samples.len() as f64;
    Ok((abs / n, rel / n))
}

/// Trains all three estimators from scratch on `corpus`.
pub fn train_estimators(corpus: &Corpus, plan: &TrainPlan) -> Result<(Estimators, TrainSummary)> {
    let fit_mlp = |data: &super::Dataset, cfg: &TrainConfig| -> Result<(Mlp, TrainReport)> {
        let mut net = Mlp::init(&MLP_DIMS, &mut ChaCha8Rng::seed_from_u64(cfg.seed))?;
        let mut opt = Adagrad::new(cfg.lr, cfg.eps, net.params().len());
        let report = train(&mut net, data, &mut opt, cfg)?;
        Ok((net, report))
    };
    let (pnet, preport) = fit_mlp(&corpus.power, &plan.power)?;
    let (qnet, qreport) = fit_mlp(&corpus.qos, &plan.qos)?;
    let window = corpus.handover.train.width / SEQ_FEATURES;
    let mut hnet = Lstm::init(
        SEQ_FEATURES,
        &LSTM_HIDDEN,
        window,
        &mut ChaCha8Rng::seed_from_u64(plan.handover.seed),
    )?;
    let mut opt = Adagrad::new(plan.handover.lr, plan.handover.eps, hnet.params().len());
    let hreport = train(&mut hnet, &corpus.handover, &mut opt, &plan.handover)?;

    let (_, power_rel_mae) =
        natural_errors(&pnet, &corpus.power.heldout, &corpus.power_scale, |y| y)?;
    let (qos_mae, _) = natural_errors(&qnet, &corpus.qos.heldout, &corpus.qos_scale, |y| {
        y.clamp(0.0, 100.0)
    })?;
    let (handover_mae, _) = natural_errors(
        &hnet,
        &corpus.handover.heldout,
        &corpus.handover_scale,
        |y| y.max(0.0),
    )?;

    let est = Estimators {
        power: MlpEstimator {
            target: Target::Power,
            net: pnet,
            stats: corpus.stats.clone(),
            scale: corpus.power_scale,
        },
        qos: MlpEstimator {
            target: Target::Qos,
            net: qnet,
            stats: corpus.stats.clone(),
            scale: corpus.qos_scale,
        },
        handover: LstmEstimator {
            net: hnet,
            stats: corpus.stats.clone(),
            scale: corpus.handover_scale,
        },
    };
    Ok((
        est,
        TrainSummary {
            power: preport,
            qos: qreport,
            handover: hreport,
            heldout: HeldoutErrors {
                power_rel_mae,
                qos_mae,
                handover_mae,
            },
        },
    ))
}
