use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::table::{preference_order, CostToGoTable};
use super::threshold::ThresholdModel;
use super::ControllerConfig;
use crate::error::{Error, Result};
use crate::estimators::{HandoverEstimator, HandoverQuery, MetricEstimator, WindowStep, WINDOW};
use crate::netmodel::{
    action_space, apply_action, switching_cost, Action, Mode, OnOffConfig, StationState,
};
use crate::simkernel::{Policy, TraceRecord, TrafficSnapshot};

/// How one candidate action scored at a decision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub action: String,
    pub power: f64,
    pub qos: f64,
    pub delta: f64,
    pub ctg: f64,
    pub score: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    pub action: Action,
    /// No candidate met the threshold; the highest predicted QoS was taken.
    pub infeasible: bool,
    pub candidates: Vec<Candidate>,
}

/// Picks the action minimizing predicted power, switch-on surcharge and
/// cost-to-go among those predicted to meet `q_tau`.
pub fn select_action<E: MetricEstimator + ?Sized>(
    snap: &TrafficSnapshot,
    t: usize,
    table: &CostToGoTable,
    est: &E,
    q_tau: f64,
    cfg: &ControllerConfig,
) -> Result<Selection> {
    if t >= table.horizon {
        return Err(Error::EpisodeFinished(t));
    }
    if table.mode != cfg.mode {
        return Err(Error::invalid(format!(
            "{} table for a {} controller",
            table.mode, cfg.mode
        )));
    }
    let actions = action_space(cfg.mode);
    let p = est.power(snap, &actions)?;
    let q = est.qos(snap, &actions)?;
    if p.len() != actions.len() || q.len() != actions.len() {
        return Err(Error::invalid(
            "estimator returned the wrong number of predictions",
        ));
    }
    let candidates: Vec<Candidate> = actions
        .iter()
        .enumerate()
        .map(|(u, &a)| {
            let delta = switching_cost(&snap.config, &apply_action(a), cfg.beta, cfg.p_gamma);
            let ctg = table.value(t + 1, u);
            Candidate {
                action: a.to_string(),
                power: p[u],
                qos: q[u],
                delta,
                ctg,
                score: p[u] + delta + ctg,
                feasible: q[u] >= q_tau,
            }
        })
        .collect();
    let order = preference_order(&actions);
    let best = order
        .iter()
        .copied()
        .filter(|&u| candidates[u].feasible)
        .fold(None, |best: Option<usize>, u| match best {
            Some(b) if candidates[b].score <= candidates[u].score => Some(b),
            _ => Some(u),
        });
    let (u, infeasible) = match best {
        Some(u) => (u, false),
        None => {
            let u = order.iter().copied().fold(order[0], |b, u| {
                if candidates[u].qos > candidates[b].qos {
                    u
                } else {
                    b
                }
            });
            (u, true)
        }
    };
    Ok(Selection {
        action: actions[u],
        infeasible,
        candidates,
    })
}

/// Mean predicted handover over every action of the space.
pub fn mean_predicted_handover<H: HandoverEstimator + ?Sized>(
    est: &H,
    query: &HandoverQuery,
    mode: Mode,
) -> Result<f64> {
    let actions = action_space(mode);
    let h = est.handover(query, &actions)?;
    Ok(h.iter().sum::<f64>() / h.len() as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ThresholdMode {
    Adaptive(ThresholdModel),
    Fixed(f64),
}

/// One line of the decision log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecisionLog {
    pub t: usize,
    pub q_tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q_phi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_bar: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<[f64; 2]>,
    pub action: String,
    pub infeasible: bool,
    pub candidates: Vec<Candidate>,
}

/// Online controller: adaptive (or fixed) QoS threshold plus constrained
/// one-step lookahead on the offline cost-to-go table.
pub struct AdpController<'a, E: ?Sized> {
    est: &'a E,
    table: &'a CostToGoTable,
    cfg: ControllerConfig,
    threshold: ThresholdMode,
    past: VecDeque<WindowStep>,
    prev_config: OnOffConfig,
    pending: Option<WindowStep>,
    log: Vec<DecisionLog>,
}

impl<'a, E: MetricEstimator + HandoverEstimator + ?Sized> AdpController<'a, E> {
    pub fn new(
        est: &'a E,
        table: &'a CostToGoTable,
        cfg: ControllerConfig,
        threshold: ThresholdMode,
    ) -> Result<Self> {
        cfg.validate()?;
        if table.mode != cfg.mode {
            return Err(Error::invalid(format!(
                "{} table for a {} controller",
                table.mode, cfg.mode
            )));
        }
        Ok(AdpController {
            est,
            table,
            cfg,
            threshold,
            past: VecDeque::with_capacity(WINDOW),
            // the station warm-starts fully on
            prev_config: OnOffConfig::all_on(),
            pending: None,
            log: Vec::new(),
        })
    }

    /// Adaptive controller with the configured threshold model.
    pub fn adaptive(est: &'a E, table: &'a CostToGoTable, cfg: ControllerConfig) -> Result<Self> {
        let model = cfg.threshold_model()?;
        Self::new(est, table, cfg, ThresholdMode::Adaptive(model))
    }

    pub fn fixed(
        est: &'a E,
        table: &'a CostToGoTable,
        cfg: ControllerConfig,
        q_tau: f64,
    ) -> Result<Self> {
        Self::new(est, table, cfg, ThresholdMode::Fixed(q_tau))
    }

    pub fn log(&self) -> &[DecisionLog] {
        &self.log
    }

    pub fn into_log(self) -> Vec<DecisionLog> {
        self.log
    }

    pub fn threshold_mode(&self) -> &ThresholdMode {
        &self.threshold
    }
}

impl<E: MetricEstimator + HandoverEstimator + ?Sized> Policy for AdpController<'_, E> {
    fn mode(&self) -> Mode {
        self.cfg.mode
    }

    fn decide(&mut self, state: &StationState) -> Result<Action> {
        let t = state.step;
        let snap = TrafficSnapshot::from(state);
        let (q_tau, q_phi, h_bar, theta) = match &mut self.threshold {
            ThresholdMode::Fixed(q) => (*q, None, None, None),
            ThresholdMode::Adaptive(model) => {
                let past: Vec<WindowStep> = self.past.iter().cloned().collect();
                let query = HandoverQuery {
                    past: &past,
                    current: &snap,
                    prev_config: self.prev_config,
                };
                let h_bar = mean_predicted_handover(self.est, &query, self.cfg.mode)?;
                // θ from the previous step meets this step's handover estimate
                let q_tau = model.threshold(h_bar);
                let q_phi = model.adaptive_target();
                model.update(q_phi, h_bar);
                (q_tau, Some(q_phi), Some(h_bar), Some(model.theta()))
            }
        };
        let sel = select_action(&snap, t, self.table, self.est, q_tau, &self.cfg)?;
        self.log.push(DecisionLog {
            t,
            q_tau,
            q_phi,
            h_bar,
            theta,
            action: sel.action.to_string(),
            infeasible: sel.infeasible,
            candidates: sel.candidates,
        });
        self.pending = Some(WindowStep {
            snapshot: snap,
            action: sel.action,
            prev_config: self.prev_config,
        });
        Ok(sel.action)
    }

    fn observe(&mut self, record: &TraceRecord) {
        if let ThresholdMode::Adaptive(model) = &mut self.threshold {
            model.record_qos(record.qos);
        }
        if let Some(step) = self.pending.take() {
            self.prev_config = step.snapshot.config;
            if self.past.len() + 1 >= WINDOW {
                self.past.pop_front();
            }
            self.past.push_back(step);
        }
    }
}

/// Realized objective of a finished episode.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveEstimate {
    pub total_power: f64,
    /// Steps whose observed QoS fell below the target.
    pub violations: usize,
}

pub fn policy_objective_estimate(trace: &[TraceRecord], qos_target: f64) -> ObjectiveEstimate {
    ObjectiveEstimate {
        total_power: trace.iter().map(|r| r.power).sum(),
        violations: trace.iter().filter(|r| r.qos < qos_target).count(),
    }
}
