//! The controller: an offline cost-to-go table over mean traffic, an online
//! adaptive QoS threshold, and constrained action selection.

mod controller;
mod table;
mod threshold;

pub use controller::{
    mean_predicted_handover, policy_objective_estimate, select_action, AdpController, Candidate,
    DecisionLog, ObjectiveEstimate, Selection, ThresholdMode,
};
pub use table::{build_ctg_table, CostToGoTable, TABLE_SCHEMA_VERSION};
pub use threshold::{solve_threshold, threshold_loss, ThetaBounds, ThresholdModel};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::Mode;
use crate::par::Exec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub mode: Mode,
    /// QoS threshold Q_τ' applied while building the table.
    pub offline_qos: f64,
    pub beta: f64,
    pub p_gamma: f64,
    /// Long-run QoS target Q_Φ.
    pub qos_target: f64,
    pub gamma: f64,
    pub bounds: ThetaBounds,
    pub theta_init: [f64; 2],
    /// Threshold of the fixed-threshold variant.
    pub fixed_qos: f64,
    #[serde(default)]
    pub exec: Exec,
}

impl ControllerConfig {
    pub fn new(mode: Mode) -> Self {
        ControllerConfig {
            mode,
            offline_qos: 80.0,
            beta: 0.3,
            p_gamma: 162.0,
            qos_target: 92.0,
            gamma: 0.001,
            bounds: ThetaBounds::default(),
            theta_init: [85.0, 1.0],
            fixed_qos: 92.0,
            exec: Exec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=100.0).contains(&self.offline_qos) {
            return Err(Error::invalid(format!(
                "offline QoS threshold {}",
                self.offline_qos
            )));
        }
        if !(self.beta >= 0.0
            && self.p_gamma >= 0.0
            && self.beta.is_finite()
            && self.p_gamma.is_finite())
        {
            return Err(Error::invalid(
                "switching cost parameters must be finite and ≥ 0",
            ));
        }
        self.threshold_model().map(|_| ())
    }

    pub fn threshold_model(&self) -> Result<ThresholdModel> {
        ThresholdModel::new(self.theta_init, self.bounds, self.gamma, self.qos_target)
    }
}
