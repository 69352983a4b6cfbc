use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::persist::read_json;
use crate::adp::{ControllerConfig, ThetaBounds};
use crate::baselines::RuleParams;
use crate::error::{Error, Result};
use crate::estimators::{TrainPlan, WINDOW};
use crate::netmodel::{CarrierSet, Mode};
use crate::par::Exec;
use crate::seed::{derive_seed, domain};
use crate::simkernel::SimParams;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Controller parameters shared by both modes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    pub offline_qos: f64,
    pub qos_target: f64,
    pub gamma: f64,
    pub bounds: ThetaBounds,
    pub theta_init: [f64; 2],
    pub fixed_qos: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        let c = ControllerConfig::new(Mode::FourCell);
        SystemParams {
            offline_qos: c.offline_qos,
            qos_target: c.qos_target,
            gamma: c.gamma,
            bounds: c.bounds,
            theta_init: c.theta_init,
            fixed_qos: c.fixed_qos,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingParams {
    pub window: usize,
    pub mlp_epochs: usize,
    pub lstm_epochs: usize,
    pub patience: usize,
    pub batch: usize,
}

impl Default for TrainingParams {
    fn default() -> Self {
        let plan = TrainPlan::new(0);
        TrainingParams {
            window: WINDOW,
            mlp_epochs: plan.power.epochs,
            lstm_epochs: plan.handover.epochs,
            patience: plan.power.patience,
            batch: plan.power.batch,
        }
    }
}

/// Everything a pipeline run depends on. Loaded from JSON; every field has a
/// default, so `{}` (or no file) is a valid configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Relative paths resolve against `out_dir`.
    pub scenario_file: PathBuf,
    pub scenario_count: usize,
    pub carriers: CarrierSet,
    pub sim: SimParams,
    pub system: SystemParams,
    pub rule: RuleParams,
    pub training: TrainingParams,
    /// Restricts build-table and run to one mode; both when absent.
    pub mode: Option<Mode>,
    /// Restricts run to one policy; all when absent.
    pub policy: Option<PolicyKind>,
    /// Random-policy episodes per scenario for the training corpus (m).
    pub runs: usize,
    pub eval_seeds: usize,
    /// Independent stations per evaluation episode; powers are summed.
    pub stations: usize,
    pub master_seed: u64,
    pub out_dir: PathBuf,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            schema_version: CONFIG_SCHEMA_VERSION,
            scenario_file: PathBuf::from("scenarios.json"),
            scenario_count: 8,
            carriers: CarrierSet::default(),
            sim: SimParams::default(),
            system: SystemParams::default(),
            rule: RuleParams::default(),
            training: TrainingParams::default(),
            mode: None,
            policy: None,
            runs: 64,
            eval_seeds: 1,
            stations: 1,
            master_seed: 1,
            out_dir: PathBuf::from("out"),
            exec: Exec::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "noes")]
    NoEs,
    #[serde(rename = "rule")]
    Rule,
    #[serde(rename = "random")]
    Random,
    #[serde(rename = "adp-fixed")]
    AdpFixed,
    #[serde(rename = "adp")]
    Adp,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 5] = [
        PolicyKind::NoEs,
        PolicyKind::Rule,
        PolicyKind::Random,
        PolicyKind::AdpFixed,
        PolicyKind::Adp,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::NoEs => "noes",
            PolicyKind::Rule => "rule",
            PolicyKind::Random => "random",
            PolicyKind::AdpFixed => "adp-fixed",
            PolicyKind::Adp => "adp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown policy {s:?} (noes, rule, random, adp, adp-fixed)"
                ))
            })
    }

    pub fn needs_models(&self) -> bool {
        matches!(self, PolicyKind::Adp | PolicyKind::AdpFixed)
    }
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "2cell" => Ok(Mode::TwoCell),
        "4cell" => Ok(Mode::FourCell),
        _ => Err(Error::Validation(format!(
            "unknown mode {s:?} (2cell, 4cell)"
        ))),
    }
}

impl ExperimentConfig {
    /// Reads `path`, or the defaults when `None`.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            Some(p) => read_json(p),
            None => Ok(Self::default()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.schema_version != CONFIG_SCHEMA_VERSION {
            return bad(format!(
                "config schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                self.schema_version
            ));
        }
        if self.scenario_count == 0 || self.runs == 0 || self.eval_seeds == 0 || self.stations == 0
        {
            return bad("scenario_count, runs, eval_seeds and stations must be ≥ 1".into());
        }
        let s = &self.sim;
        if !(s.tau > 0.0 && s.step_seconds > 0.0 && s.beta >= 0.0 && s.p_gamma >= 0.0)
            || ![s.tau, s.step_seconds, s.beta, s.p_gamma]
                .iter()
                .all(|v| v.is_finite())
        {
            return bad(format!("simulator parameters {s:?}"));
        }
        let t = &self.training;
        if t.window == 0 || t.mlp_epochs == 0 || t.lstm_epochs == 0 || t.batch == 0 {
            return bad("training window, epochs and batch must be ≥ 1".into());
        }
        if !(0.0..=100.0).contains(&self.system.fixed_qos) {
            return bad(format!("fixed_qos {}", self.system.fixed_qos));
        }
        for p in self.carriers.iter() {
            p.validate().map_err(|e| Error::Validation(e.to_string()))?;
        }
        self.rule
            .validate()
            .map_err(|e| Error::Validation(e.to_string()))?;
        self.controller(Mode::FourCell)
            .validate()
            .map_err(|e| Error::Validation(e.to_string()))
    }

    pub fn controller(&self, mode: Mode) -> ControllerConfig {
        let s = &self.system;
        ControllerConfig {
            mode,
            offline_qos: s.offline_qos,
            beta: self.sim.beta,
            p_gamma: self.sim.p_gamma,
            qos_target: s.qos_target,
            gamma: s.gamma,
            bounds: s.bounds,
            theta_init: s.theta_init,
            fixed_qos: s.fixed_qos,
            exec: self.exec,
        }
    }

    pub fn train_plan(&self) -> TrainPlan {
        let mut plan = TrainPlan::new(derive_seed(self.master_seed, &[domain::TRAIN, 1]));
        let t = &self.training;
        for c in [&mut plan.power, &mut plan.qos] {
            c.epochs = t.mlp_epochs;
        }
        plan.handover.epochs = t.lstm_epochs;
        for c in [&mut plan.power, &mut plan.qos, &mut plan.handover] {
            c.patience = t.patience;
            c.batch = t.batch;
        }
        plan
    }

    pub fn split_seed(&self) -> u64 {
        derive_seed(self.master_seed, &[domain::TRAIN, 0])
    }

    pub fn modes(&self) -> Vec<Mode> {
        match self.mode {
            Some(m) => vec![m],
            None => vec![Mode::FourCell, Mode::TwoCell],
        }
    }

    pub fn policies(&self) -> Vec<PolicyKind> {
        match self.policy {
            Some(p) => vec![p],
            None => PolicyKind::ALL.to_vec(),
        }
    }

    pub fn scenario_path(&self) -> PathBuf {
        self.out_dir.join(&self.scenario_file)
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.out_dir.join("corpus")
    }

    pub fn models_dir(&self) -> PathBuf {
        self.out_dir.join("models")
    }

    pub fn table_path(&self, mode: Mode) -> PathBuf {
        self.out_dir
            .join("tables")
            .join(format!("ctg_{}.json", mode.as_str()))
    }

    pub fn runs_dir(&self) -> PathBuf {
        self.out_dir.join("runs")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out_dir.join("report")
    }
}
