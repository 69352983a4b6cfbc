use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::features::{
    config_bits, raw_state, NormStats, TargetScale, FEATURES, SEQ_FEATURES, STATE_FEATURES,
};
use super::train::{Dataset, Samples};
use crate::error::{Error, Result};
use crate::netmodel::{apply_action, switching_cost, OnOffConfig};
use crate::simkernel::{SimParams, TraceRecord, TrafficSnapshot};

/// Everything the three estimators are trained on.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub power: Dataset,
    pub qos: Dataset,
    pub handover: Dataset,
    pub stats: NormStats,
    pub power_scale: TargetScale,
    pub qos_scale: TargetScale,
    pub handover_scale: TargetScale,
    /// Traces too short to yield a full handover window.
    pub skipped: usize,
}

/// Power the step drew apart from the switch-on surcharge; the controller
/// adds the surcharge exactly, so the estimator must not learn it.
pub fn power_target(record: &TraceRecord, params: &SimParams) -> f64 {
    record.power
        - switching_cost(
            &record.state.config,
            &apply_action(record.action),
            params.beta,
            params.p_gamma,
        )
}

/// Scaled inputs of one handover-window element: the step's features and the
/// configuration of the step before it.
pub(crate) fn seq_element(
    stats: &NormStats,
    raw: &[f64; STATE_FEATURES],
    action_bits: &[f64],
    prev_config: &OnOffConfig,
    out: &mut [f64],
) {
    stats.scale_state(raw, &mut out[..STATE_FEATURES]);
    out[STATE_FEATURES..FEATURES].copy_from_slice(action_bits);
    out[FEATURES..SEQ_FEATURES].copy_from_slice(&config_bits(prev_config));
}

/// Builds the power, QoS and handover datasets. One tenth of the (trace,
/// step) records, chosen by `split_seed`, is held out; a handover window
/// shares the tag of its last step. Scaling is fitted on the training part.
pub fn build_dataset(
    traces: &[Vec<TraceRecord>],
    window: usize,
    params: &SimParams,
    split_seed: u64,
) -> Result<Corpus> {
    if window == 0 {
        return Err(Error::invalid("build_dataset: window must be ≥ 1"));
    }
    let records: Vec<(usize, usize)> = traces
        .iter()
        .enumerate()
        .flat_map(|(k, tr)| (0..tr.len()).map(move |t| (k, t)))
        .collect();
    if records.is_empty() {
        return Err(Error::invalid("build_dataset: no records"));
    }
    for (k, t) in &records {
        let r = &traces[*k][*t];
        if !r.power.is_finite() || !r.qos.is_finite() {
            return Err(Error::invalid(format!(
                "build_dataset: non-finite target in trace {k} step {t}"
            )));
        }
    }
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(split_seed));
    let n_held = records.len().div_ceil(10).min(records.len() - 1);
    let mut heldout: Vec<Vec<bool>> = traces.iter().map(|tr| vec![false; tr.len()]).collect();
    for &i in &order[..n_held] {
        let (k, t) = records[i];
        heldout[k][t] = true;
    }

    let raw: Vec<Vec<[f64; STATE_FEATURES]>> = traces
        .iter()
        .map(|tr| {
            tr.iter()
                .map(|r| raw_state(&TrafficSnapshot::from(&r.state)))
                .collect()
        })
        .collect();
    let stats = NormStats::fit(
        records
            .iter()
            .filter(|(k, t)| !heldout[*k][*t])
            .map(|(k, t)| &raw[*k][*t]),
    )?;
    let train_records = || {
        records
            .iter()
            .filter(|(k, t)| !heldout[*k][*t])
            .map(|(k, t)| &traces[*k][*t])
    };
    let power_scale = TargetScale::fit(train_records().map(|r| power_target(r, params)))?;
    let qos_scale = TargetScale::fit(train_records().map(|r| r.qos))?;
    let long_enough = || {
        records
            .iter()
            .filter(|(k, t)| !heldout[*k][*t] && *t + 1 >= window)
            .map(|(k, t)| traces[*k][*t].handovers as f64)
    };
    let handover_scale =
        TargetScale::fit(long_enough()).unwrap_or(TargetScale { min: 0.0, max: 1.0 });

    let mut power = Dataset {
        train: Samples::new(FEATURES),
        heldout: Samples::new(FEATURES),
    };
    let mut qos = power.clone();
    let mut handover = Dataset {
        train: Samples::new(window * SEQ_FEATURES),
        heldout: Samples::new(window * SEQ_FEATURES),
    };
    let mut x = [0.0; FEATURES];
    let mut seq = vec![0.0; window * SEQ_FEATURES];
    let mut skipped = 0;
    for (k, trace) in traces.iter().enumerate() {
        if trace.len() < window {
            skipped += 1;
        }
        for (t, r) in trace.iter().enumerate() {
            let held = heldout[k][t];
            stats.scale_state(&raw[k][t], &mut x[..STATE_FEATURES]);
            x[STATE_FEATURES..].copy_from_slice(&r.action.bits());
            let (p, q) = if held {
                (&mut power.heldout, &mut qos.heldout)
            } else {
                (&mut power.train, &mut qos.train)
            };
            p.push(&x, power_scale.encode(power_target(r, params)));
            q.push(&x, qos_scale.encode(r.qos));
            if t + 1 < window {
                continue;
            }
            for (slot, s) in (t + 1 - window..=t).enumerate() {
                let prev = if s == 0 {
                    OnOffConfig::all_on()
                } else {
                    trace[s - 1].state.config
                };
                seq_element(
                    &stats,
                    &raw[k][s],
                    &trace[s].action.bits(),
                    &prev,
                    &mut seq[slot * SEQ_FEATURES..(slot + 1) * SEQ_FEATURES],
                );
            }
            let h = if held {
                &mut handover.heldout
            } else {
                &mut handover.train
            };
            h.push(&seq, handover_scale.encode(r.handovers as f64));
        }
    }
    Ok(Corpus {
        power,
        qos,
        handover,
        stats,
        power_scale,
        qos_scale,
        handover_scale,
        skipped,
    })
}
