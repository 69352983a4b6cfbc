use serde::{Deserialize, Serialize};

use super::env::{step, SimParams, SimState};
use super::traffic::{CellTraffic, TrafficSnapshot};
use super::{ScenarioSpec, STEPS_PER_DAY};
use crate::error::{Error, Result};
use crate::netmodel::{
    Action, CarrierSet, CellObservation, Mode, OnOffConfig, StationState, CARRIERS, CELLS,
};

/// A switching policy driven once per step.
pub trait Policy {
    fn mode(&self) -> Mode;

    /// Chooses the action for the step starting in `state`.
    fn decide(&mut self, state: &StationState) -> Result<Action>;

    /// Called with the completed record after the environment has stepped.
    fn observe(&mut self, _record: &TraceRecord) {}
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn mode(&self) -> Mode {
        (**self).mode()
    }
    fn decide(&mut self, state: &StationState) -> Result<Action> {
        (**self).decide(state)
    }
    fn observe(&mut self, record: &TraceRecord) {
        (**self).observe(record)
    }
}

/// One step of an episode: the decision input, the action and what the step
/// realized.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub state: StationState,
    pub action: Action,
    pub power: f64,
    pub qos: f64,
    pub handovers: u32,
}

/// Flat JSON Lines form of a [`TraceRecord`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub t: usize,
    pub ue: Vec<u32>,
    pub tp: Vec<f64>,
    pub prb: Vec<u32>,
    pub e: Vec<u8>,
    pub action: String,
    pub power: f64,
    pub qos: f64,
    pub handover: u32,
}

impl From<&TraceRecord> for TraceLine {
    fn from(r: &TraceRecord) -> Self {
        let cells = &r.state.cells;
        TraceLine {
            t: r.t,
            ue: cells.iter().map(|c| c.ue_count).collect(),
            tp: cells.iter().map(|c| c.throughput).collect(),
            prb: cells.iter().map(|c| c.allocated_prbs).collect(),
            e: r.state.config.bits().iter().map(|&b| b as u8).collect(),
            action: r.action.to_string(),
            power: r.power,
            qos: r.qos,
            handover: r.handovers,
        }
    }
}

impl TraceLine {
    /// Rebuilds the full record; load ratios and delivered data are derived
    /// from the carrier profiles and step length.
    pub fn into_record(
        self,
        profiles: &CarrierSet,
        params: &SimParams,
        mode: Mode,
    ) -> Result<TraceRecord> {
        let lens = [self.ue.len(), self.tp.len(), self.prb.len(), self.e.len()];
        if lens.iter().any(|&l| l != CELLS) {
            return Err(Error::invalid(format!(
                "trace line t={}: expected {CELLS} cells",
                self.t
            )));
        }
        let mut bits = [false; CELLS];
        for (b, &e) in bits.iter_mut().zip(&self.e) {
            *b = match e {
                0 => false,
                1 => true,
                other => {
                    return Err(Error::invalid(format!(
                        "trace line t={}: e={other}",
                        self.t
                    )))
                }
            };
        }
        let cells = std::array::from_fn(|c| {
            if !bits[c] {
                return CellObservation::off();
            }
            let p = profiles.get(c % CARRIERS);
            CellObservation {
                ue_count: self.ue[c],
                throughput: self.tp[c],
                allocated_prbs: self.prb[c],
                load: self.prb[c] as f64 / p.max_prbs as f64,
                on: true,
                delivered: self.tp[c] * params.step_seconds,
                tx_time: if self.ue[c] > 0 {
                    params.step_seconds
                } else {
                    0.0
                },
            }
        });
        Ok(TraceRecord {
            t: self.t,
            state: StationState {
                step: self.t,
                cells,
                config: OnOffConfig(bits),
            },
            action: Action::parse(&self.action, mode)?,
            power: self.power,
            qos: self.qos,
            handovers: self.handover,
        })
    }
}

/// Runs one day. The station starts all-on; the policy is consulted before
/// every transition.
pub fn run_episode<P: Policy + ?Sized>(
    spec: &ScenarioSpec,
    policy: &mut P,
    run_seed: u64,
    profiles: &CarrierSet,
    params: &SimParams,
) -> Result<Vec<TraceRecord>> {
    let mode = policy.mode();
    let (mut sim, mut state) = SimState::new(spec, run_seed, profiles, params);
    let mut out = Vec::with_capacity(STEPS_PER_DAY);
    for t in 0..STEPS_PER_DAY {
        state.step = t;
        let action = policy.decide(&state)?;
        if action.mode != mode {
            return Err(Error::InvalidAction(format!(
                "policy for {mode} returned a {} action",
                action.mode
            )));
        }
        action.validate()?;
        let (next, metrics) = step(&mut sim, action, spec, profiles, params)?;
        let record = TraceRecord {
            t,
            state: std::mem::replace(&mut state, next),
            action,
            power: metrics.power,
            qos: metrics.qos,
            handovers: metrics.handovers,
        };
        policy.observe(&record);
        out.push(record);
    }
    Ok(out)
}

/// Per-step mean traffic over many traces. Configurations are decisions, not
/// traffic, so the result carries an all-on placeholder config.
pub fn mean_traffic(traces: &[Vec<TraceRecord>]) -> Result<Vec<TrafficSnapshot>> {
    if traces.is_empty() {
        return Err(Error::invalid("mean_traffic: no traces"));
    }
    if let Some(bad) = traces.iter().find(|t| t.len() != STEPS_PER_DAY) {
        return Err(Error::invalid(format!(
            "mean_traffic: trace of length {} (expected {STEPS_PER_DAY})",
            bad.len()
        )));
    }
    let n = traces.len() as f64;
    Ok((0..STEPS_PER_DAY)
        .map(|t| {
            let mut cells = [CellTraffic::default(); CELLS];
            for trace in traces {
                for (acc, c) in cells.iter_mut().zip(&trace[t].state.cells) {
                    acc.ue += c.ue_count as f64;
                    acc.tp += c.throughput;
                    acc.load += c.load;
                }
            }
            for c in &mut cells {
                c.ue /= n;
                c.tp /= n;
                c.load /= n;
            }
            TrafficSnapshot {
                step: t,
                cells,
                config: OnOffConfig::all_on(),
            }
        })
        .collect())
}
