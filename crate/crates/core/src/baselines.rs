//! Comparison policies: always-on, threshold rules, and the uniform random
//! policy used to collect estimator training data.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::adp::{AdpController, ControllerConfig, CostToGoTable};
use crate::error::{Error, Result};
use crate::estimators::{HandoverEstimator, MetricEstimator};
use crate::netmodel::{action_space, Action, Mode, StationState, CARRIERS, CELLS, SECTORS};
use crate::simkernel::Policy;

/// Keeps every cell on.
#[derive(Clone, Debug)]
pub struct NoEsPolicy {
    mode: Mode,
}

pub fn no_es_policy(mode: Mode) -> NoEsPolicy {
    NoEsPolicy { mode }
}

impl Policy for NoEsPolicy {
    fn mode(&self) -> Mode {
        self.mode
    }
    fn decide(&mut self, _state: &StationState) -> Result<Action> {
        Ok(Action::all_on(self.mode))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RuleParams {
    /// Carriers whose mean load falls below this are switched off.
    pub th_deac: f64,
    /// Mean load of active cells above this restores every carrier.
    pub th_ac: f64,
    /// Steps of load history averaged.
    pub window: usize,
}

impl Default for RuleParams {
    fn default() -> Self {
        RuleParams {
            th_deac: 0.2,
            th_ac: 0.8,
            window: 1,
        }
    }
}

impl RuleParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.th_deac && self.th_deac < self.th_ac && self.th_ac <= 1.0) {
            return Err(Error::invalid(format!(
                "rule thresholds need 0 <= th_deac < th_ac <= 1, got {} and {}",
                self.th_deac, self.th_ac
            )));
        }
        if self.window == 0 {
            return Err(Error::invalid("rule window must be at least one step"));
        }
        Ok(())
    }
}

/// Two-threshold load rule. Its only memory is the last `window` load vectors.
#[derive(Clone, Debug)]
pub struct RuleBasedPolicy {
    params: RuleParams,
    mode: Mode,
    loads: VecDeque<[f64; CELLS]>,
}

pub fn rule_based_policy(params: RuleParams, mode: Mode) -> Result<RuleBasedPolicy> {
    params.validate()?;
    Ok(RuleBasedPolicy {
        loads: VecDeque::with_capacity(params.window),
        params,
        mode,
    })
}

impl RuleBasedPolicy {
    fn mean_loads(&self) -> [f64; CELLS] {
        let n = self.loads.len() as f64;
        std::array::from_fn(|c| self.loads.iter().map(|l| l[c]).sum::<f64>() / n)
    }
}

impl Policy for RuleBasedPolicy {
    fn mode(&self) -> Mode {
        self.mode
    }

    fn decide(&mut self, state: &StationState) -> Result<Action> {
        if self.loads.len() == self.params.window {
            self.loads.pop_front();
        }
        self.loads
            .push_back(std::array::from_fn(|c| state.cells[c].load));
        let load = self.mean_loads();
        let cfg = &state.config;

        let overloaded = (0..SECTORS).any(|i| {
            let active: Vec<f64> = (0..CARRIERS)
                .filter(|&j| cfg.is_on(i, j))
                .map(|j| load[i * CARRIERS + j])
                .collect();
            !active.is_empty()
                && active.iter().sum::<f64>() / active.len() as f64 > self.params.th_ac
        });
        if overloaded {
            return Ok(Action::all_on(self.mode));
        }

        let mut mask = self.mode.forced_mask();
        for carrier in (1..CARRIERS).rev() {
            if !cfg.is_on(0, carrier) {
                continue;
            }
            let bit = 1u8 << (CARRIERS - 1 - carrier);
            let mean = (0..SECTORS)
                .map(|i| load[i * CARRIERS + carrier])
                .sum::<f64>()
                / SECTORS as f64;
            if !(self.mode.is_switchable(carrier) && mean < self.params.th_deac) {
                mask |= bit;
            }
        }
        Action::new(mask, self.mode)
    }
}

/// Uniform over the action space, independent of the state.
#[derive(Clone, Debug)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    space: Vec<Action>,
    mode: Mode,
}

pub fn random_policy(seed: u64, mode: Mode) -> RandomPolicy {
    RandomPolicy {
        rng: ChaCha8Rng::seed_from_u64(seed),
        space: action_space(mode),
        mode,
    }
}

impl RandomPolicy {
    pub fn draw(&mut self) -> Action {
        self.space[self.rng.gen_range(0..self.space.len())]
    }
}

impl Policy for RandomPolicy {
    fn mode(&self) -> Mode {
        self.mode
    }
    fn decide(&mut self, _state: &StationState) -> Result<Action> {
        Ok(self.draw())
    }
}

/// ADP with a constant QoS threshold `q_tau` and no threshold updates.
pub fn adp_fixed_policy<'a, E: MetricEstimator + HandoverEstimator + ?Sized>(
    est: &'a E,
    table: &'a CostToGoTable,
    cfg: ControllerConfig,
    q_tau: f64,
) -> Result<AdpController<'a, E>> {
    if !(0.0..=100.0).contains(&q_tau) {
        return Err(Error::invalid(format!("fixed QoS threshold {q_tau}")));
    }
    AdpController::fixed(est, table, cfg, q_tau)
}
