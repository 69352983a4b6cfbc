//! Shared test fixtures: a deterministic stub estimator and an exhaustive
//! enumeration oracle for the cost-to-go table.
#![allow(dead_code)]

use cellsleep::adp::ControllerConfig;
use cellsleep::estimators::{HandoverEstimator, HandoverQuery, MetricEstimator};
use cellsleep::netmodel::*;
use cellsleep::seed::derive_seed;
use cellsleep::simkernel::*;
use cellsleep::Result;

/// Deterministic pseudo-random predictions keyed on (step, config, action).
#[derive(Clone)]
pub struct Stub {
    pub seed: u64,
    pub qos_floor: f64,
}

pub fn unit(x: u64) -> f64 {
    (x >> 11) as f64 / (1u64 << 53) as f64
}

fn config_key(c: &OnOffConfig) -> u64 {
    c.bits().iter().fold(0, |k, &b| k << 1 | b as u64)
}

impl Stub {
    fn key(&self, tag: u64, snap: &TrafficSnapshot, a: Action) -> f64 {
        unit(derive_seed(
            self.seed,
            &[
                tag,
                snap.step as u64,
                config_key(&snap.config),
                a.mask as u64,
            ],
        ))
    }
}

impl MetricEstimator for Stub {
    fn power(&self, snap: &TrafficSnapshot, actions: &[Action]) -> Result<Vec<f64>> {
        Ok(actions
            .iter()
            .map(|&a| 800.0 + 1200.0 * self.key(1, snap, a))
            .collect())
    }
    fn qos(&self, snap: &TrafficSnapshot, actions: &[Action]) -> Result<Vec<f64>> {
        Ok(actions
            .iter()
            .map(|&a| self.qos_floor + (100.0 - self.qos_floor) * self.key(2, snap, a))
            .collect())
    }
}

impl HandoverEstimator for Stub {
    fn handover(&self, _q: &HandoverQuery, actions: &[Action]) -> Result<Vec<f64>> {
        Ok(actions.iter().map(|a| a.cells_off() as f64 * 3.0).collect())
    }
}

pub fn mean_traffic_fixture(t_len: usize, seed: u64) -> Vec<TrafficSnapshot> {
    (0..t_len)
        .map(|t| TrafficSnapshot {
            step: t,
            cells: std::array::from_fn(|c| {
                let u = unit(derive_seed(seed, &[t as u64, c as u64]));
                CellTraffic {
                    ue: 10.0 * u,
                    tp: 20.0 * u,
                    load: 0.5 * u,
                }
            }),
            config: OnOffConfig::all_on(),
        })
        .collect()
}

/// Exhaustive enumeration of every action sequence, honouring the per-step
/// feasibility rule (threshold if any action meets it, otherwise all).
pub fn brute_force(mean: &[TrafficSnapshot], est: &Stub, cfg: &ControllerConfig) -> Vec<f64> {
    let profiles = CarrierSet::default();
    let acts = action_space(cfg.mode);
    let n = acts.len();
    let t_len = mean.len();
    let cfgs: Vec<_> = acts.iter().map(|&a| apply_action(a)).collect();
    // cost[t][a][u], allowed[t][a][u]
    let mut cost = vec![vec![vec![0.0; n]; n]; t_len];
    let mut allowed = vec![vec![vec![true; n]; n]; t_len];
    for t in 0..t_len {
        for a in 0..n {
            let snap = mean[t].reconfigured(cfgs[a], &profiles);
            let p = est.power(&snap, &acts).unwrap();
            let q = est.qos(&snap, &acts).unwrap();
            let any = q.iter().any(|&v| v >= cfg.offline_qos);
            for u in 0..n {
                cost[t][a][u] =
                    p[u] + cfgs[a].switched_on_towards(&cfgs[u]) as f64 * cfg.beta * cfg.p_gamma;
                allowed[t][a][u] = !any || q[u] >= cfg.offline_qos;
            }
        }
    }
    (0..n)
        .map(|a0| {
            let mut best = f64::INFINITY;
            let total = n.pow(t_len as u32);
            'seq: for code in 0..total {
                let mut c = code;
                let mut a = a0;
                let mut sum = 0.0;
                for t in 0..t_len {
                    let u = c % n;
                    c /= n;
                    if !allowed[t][a][u] {
                        continue 'seq;
                    }
                    sum += cost[t][a][u];
                    a = u;
                }
                best = best.min(sum);
            }
            best
        })
        .collect()
}
