use serde::{Deserialize, Serialize};

use super::ControllerConfig;
use crate::error::{Error, Result};
use crate::estimators::MetricEstimator;
use crate::netmodel::{action_space, apply_action, switching_cost, Action, CarrierSet, Mode};
use crate::simkernel::TrafficSnapshot;

pub const TABLE_SCHEMA_VERSION: u32 = 1;

/// Cost-to-go per (step, entering configuration). Column `a` is the
/// configuration produced by `actions[a]`; row `T` is terminal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostToGoTable {
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub actions: Vec<String>,
    #[serde(rename = "J")]
    pub values: Vec<Vec<f64>>,
    /// Index of the minimizing next action per `(t, a)`, `t < T`.
    pub argmin: Vec<Vec<usize>>,
    /// Set where no next action met the offline QoS threshold.
    pub infeasible_flags: Vec<Vec<bool>>,
    /// Per-candidate scores used during construction (diagnostics only).
    #[serde(skip)]
    pub scores: Vec<Vec<Vec<f64>>>,
}

/// Order in which candidates are scanned so that equal scores resolve to
/// fewer cells off, then the lower mask.
pub(crate) fn preference_order(actions: &[Action]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..actions.len()).collect();
    idx.sort_by_key(|&k| (actions[k].cells_off(), actions[k].mask));
    idx
}

impl CostToGoTable {
    pub fn action_list(&self) -> Result<Vec<Action>> {
        self.actions
            .iter()
            .map(|s| Action::parse(s, self.mode))
            .collect()
    }

    /// Structural checks after loading.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Artifact(format!("cost-to-go table: {m}")));
        if self.schema_version != TABLE_SCHEMA_VERSION {
            return bad("unsupported schema version");
        }
        let acts = self
            .action_list()
            .map_err(|e| Error::Artifact(e.to_string()))?;
        if acts != action_space(self.mode) {
            return bad("action list does not match the mode");
        }
        let n = acts.len();
        if self.values.len() != self.horizon + 1
            || self.argmin.len() != self.horizon
            || self.infeasible_flags.len() != self.horizon
        {
            return bad("row count does not match T");
        }
        if self
            .values
            .iter()
            .any(|r| r.len() != n || r.iter().any(|v| !v.is_finite()))
        {
            return bad("values must be finite with one column per action");
        }
        if self.values[self.horizon].iter().any(|&v| v != 0.0) {
            return bad("terminal row must be zero");
        }
        if self
            .argmin
            .iter()
            .any(|r| r.len() != n || r.iter().any(|&k| k >= n))
            || self.infeasible_flags.iter().any(|r| r.len() != n)
        {
            return bad("argmin/flags shape");
        }
        Ok(())
    }

    /// `J̃[t][a]`; `t == T` is the terminal row.
    pub fn value(&self, t: usize, a: usize) -> f64 {
        self.values[t][a]
    }
}

/// Backward induction over mean traffic. At each step every entering
/// configuration `a` re-spreads the mean sector traffic over its on cells;
/// the next action `u` costs predicted power, switch-on surcharge and
/// `J̃[t+1][u]`, restricted to `Q̃ ≥ Q_τ'` when any such `u` exists.
pub fn build_ctg_table<E: MetricEstimator + ?Sized>(
    mean: &[TrafficSnapshot],
    est: &E,
    profiles: &CarrierSet,
    cfg: &ControllerConfig,
) -> Result<CostToGoTable> {
    cfg.validate()?;
    if mean.is_empty() {
        return Err(Error::invalid("build_ctg_table: empty mean traffic"));
    }
    let actions = action_space(cfg.mode);
    let configs: Vec<_> = actions.iter().map(|&a| apply_action(a)).collect();
    let order = preference_order(&actions);
    let horizon = mean.len();
    let n = actions.len();
    let mut values = vec![vec![0.0; n]; horizon + 1];
    let mut argmin = vec![vec![0; n]; horizon];
    let mut flags = vec![vec![false; n]; horizon];
    let mut scores = vec![Vec::new(); horizon];
    let cols: Vec<usize> = (0..n).collect();
    for t in (0..horizon).rev() {
        let next = &values[t + 1];
        let rows = cfg
            .exec
            .try_map(&cols, |&a| -> Result<(f64, usize, bool, Vec<f64>)> {
                let snap = mean[t].reconfigured(configs[a], profiles);
                let p = est.power(&snap, &actions)?;
                let q = est.qos(&snap, &actions)?;
                if p.len() != n || q.len() != n {
                    return Err(Error::invalid(
                        "estimator returned the wrong number of predictions",
                    ));
                }
                let s: Vec<f64> = (0..n)
                    .map(|u| {
                        p[u] + switching_cost(&configs[a], &configs[u], cfg.beta, cfg.p_gamma)
                            + next[u]
                    })
                    .collect();
                let pick = |feasible_only: bool| {
                    order
                        .iter()
                        .copied()
                        .filter(|&u| !feasible_only || q[u] >= cfg.offline_qos)
                        .fold(None, |best: Option<usize>, u| match best {
                            Some(b) if s[b] <= s[u] => Some(b),
                            _ => Some(u),
                        })
                };
                let (u, infeasible) = match pick(true) {
                    Some(u) => (u, false),
                    None => (pick(false).expect("non-empty action space"), true),
                };
                Ok((s[u], u, infeasible, s))
            })?;
        for (a, (v, u, f, s)) in rows.into_iter().enumerate() {
            values[t][a] = v;
            argmin[t][a] = u;
            flags[t][a] = f;
            scores[t].push(s);
        }
    }
    Ok(CostToGoTable {
        schema_version: TABLE_SCHEMA_VERSION,
        mode: cfg.mode,
        horizon,
        actions: actions.iter().map(|a| a.to_string()).collect(),
        values,
        argmin,
        infeasible_flags: flags,
        scores,
    })
}
