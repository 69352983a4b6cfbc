use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PolicyKind};
use super::persist::{fmt17, read_json, read_jsonl, write_csv, write_json, write_jsonl};
use super::report::{HourlySeries, ResultSet, ScenarioResult, HOURS, RESULT_SCHEMA_VERSION};
use crate::adp::{build_ctg_table, AdpController, CostToGoTable, DecisionLog};
use crate::baselines::{adp_fixed_policy, no_es_policy, random_policy, rule_based_policy};
use crate::error::{Error, Result};
use crate::estimators::{
    build_dataset, train_estimators, Estimators, HeldoutErrors, LstmEstimator, MlpEstimator,
    ModelFile, Target, TrainReport,
};
use crate::netmodel::{apply_action, Mode};
use crate::seed::{derive_seed, domain};
use crate::simkernel::{
    mean_traffic, run_episode, Policy, ScenarioSpec, TraceLine, TraceRecord, STEPS_PER_DAY,
};

pub const SCENARIO_SCHEMA_VERSION: u32 = 1;
pub const CORPUS_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    pub schema_version: u32,
    pub scenarios: Vec<ScenarioSpec>,
}

/// Index of a collected corpus; written after every trace file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub schema_version: u32,
    pub mode: Mode,
    pub runs: usize,
    pub master_seed: u64,
    pub scenario_ids: Vec<u32>,
    /// Paths relative to the corpus directory, scenario-major.
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    pub schema_version: u32,
    pub train_samples: [usize; 3],
    pub heldout_samples: [usize; 3],
    pub skipped_records: usize,
    pub best_epoch: [usize; 3],
    pub heldout: HeldoutErrors,
}

fn artifact(e: Error) -> Error {
    match e {
        Error::Io { .. } | Error::Artifact(_) | Error::Json { .. } => e,
        other => Error::Artifact(other.to_string()),
    }
}

/// Writes the default scenario set.
pub fn generate_scenarios(cfg: &ExperimentConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let scenarios = crate::simkernel::default_scenarios(cfg.scenario_count, cfg.master_seed);
    let path = cfg.scenario_path();
    write_json(
        &path,
        &ScenarioFile {
            schema_version: SCENARIO_SCHEMA_VERSION,
            scenarios,
        },
    )?;
    Ok(path)
}

pub fn load_scenarios(cfg: &ExperimentConfig) -> Result<Vec<ScenarioSpec>> {
    let path = cfg.scenario_path();
    let file: ScenarioFile = read_json(&path)?;
    if file.schema_version != SCENARIO_SCHEMA_VERSION {
        return Err(Error::Artifact(format!(
            "{}: unsupported schema version",
            path.display()
        )));
    }
    if file.scenarios.is_empty() {
        return Err(Error::Artifact(format!("{}: no scenarios", path.display())));
    }
    for s in &file.scenarios {
        s.validate().map_err(artifact)?;
    }
    Ok(file.scenarios)
}

/// Seed of random-policy run `run` on scenario `index`.
pub fn collect_seed(master: u64, index: usize, run: usize) -> u64 {
    derive_seed(master, &[domain::COLLECT, index as u64, run as u64])
}

/// Seed of evaluation episode `(scenario, eval, station)`.
pub fn evaluation_seed(master: u64, scenario_id: u32, eval: usize, station: usize) -> u64 {
    derive_seed(
        master,
        &[
            domain::EVALUATE,
            scenario_id as u64,
            eval as u64,
            station as u64,
        ],
    )
}

fn trace_name(id: u32, run: usize) -> String {
    format!("scenario_{id}/run_{run:03}.jsonl")
}

/// Random-action episodes, `runs` per scenario, one JSON Lines file each.
pub fn collect_data(cfg: &ExperimentConfig) -> Result<CorpusManifest> {
    cfg.validate()?;
    let scenarios = load_scenarios(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..scenarios.len())
        .flat_map(|s| (0..cfg.runs).map(move |r| (s, r)))
        .collect();
    let traces = cfg.exec.try_map(&jobs, |&(s, r)| {
        let seed = collect_seed(cfg.master_seed, s, r);
        let mut policy = random_policy(derive_seed(seed, &[domain::POLICY]), Mode::FourCell);
        run_episode(&scenarios[s], &mut policy, seed, &cfg.carriers, &cfg.sim)
    })?;
    let dir = cfg.corpus_dir();
    let mut files = Vec::with_capacity(jobs.len());
    for (&(s, r), trace) in jobs.iter().zip(&traces) {
        let name = trace_name(scenarios[s].id, r);
        let lines: Vec<TraceLine> = trace.iter().map(TraceLine::from).collect();
        write_jsonl(&dir.join(&name), &lines)?;
        files.push(name);
    }
    let manifest = CorpusManifest {
        schema_version: CORPUS_SCHEMA_VERSION,
        mode: Mode::FourCell,
        runs: cfg.runs,
        master_seed: cfg.master_seed,
        scenario_ids: scenarios.iter().map(|s| s.id).collect(),
        files,
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    Ok(manifest)
}

pub fn load_corpus(cfg: &ExperimentConfig) -> Result<Vec<Vec<TraceRecord>>> {
    let dir = cfg.corpus_dir();
    let manifest: CorpusManifest = read_json(&dir.join("manifest.json"))?;
    if manifest.schema_version != CORPUS_SCHEMA_VERSION {
        return Err(Error::Artifact(
            "corpus manifest: unsupported schema version".into(),
        ));
    }
    if manifest.files.is_empty() {
        return Err(Error::Artifact("corpus is empty".into()));
    }
    let read = |name: &String| -> Result<Vec<TraceRecord>> {
        let path = dir.join(name);
        let lines: Vec<TraceLine> = read_jsonl(&path)?;
        if lines.len() != STEPS_PER_DAY {
            return Err(Error::Artifact(format!(
                "{}: {} records (expected {STEPS_PER_DAY})",
                path.display(),
                lines.len()
            )));
        }
        lines
            .into_iter()
            .map(|l| l.into_record(&cfg.carriers, &cfg.sim, manifest.mode))
            .collect::<Result<_>>()
            .map_err(artifact)
    };
    cfg.exec.try_map(&manifest.files, read)
}

fn model_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.models_dir().join(format!("{name}.json"))
}

fn loss_rows(name: &str, r: &TrainReport) -> Vec<Vec<String>> {
    r.train_loss
        .iter()
        .zip(&r.heldout_loss)
        .enumerate()
        .map(|(e, (tr, ho))| {
            vec![
                name.to_string(),
                (e + 1).to_string(),
                fmt17(*tr),
                fmt17(*ho),
            ]
        })
        .collect()
}

/// Trains the three estimators on the collected corpus.
pub fn train(cfg: &ExperimentConfig) -> Result<TrainingReport> {
    cfg.validate()?;
    let traces = load_corpus(cfg)?;
    let corpus = build_dataset(&traces, cfg.training.window, &cfg.sim, cfg.split_seed())
        .map_err(artifact)?;
    if corpus.power.train.is_empty() || corpus.handover.train.is_empty() {
        return Err(Error::Artifact(
            "corpus produced no training samples".into(),
        ));
    }
    let (est, summary) = train_estimators(&corpus, &cfg.train_plan())?;
    let dir = cfg.models_dir();
    write_json(&model_path(cfg, "power"), &est.power.to_file())?;
    write_json(&model_path(cfg, "qos"), &est.qos.to_file())?;
    write_json(&model_path(cfg, "handover"), &est.handover.to_file())?;
    let mut rows = loss_rows("power", &summary.power);
    rows.extend(loss_rows("qos", &summary.qos));
    rows.extend(loss_rows("handover", &summary.handover));
    write_csv(
        &dir.join("loss_history.csv"),
        &["model", "epoch", "train_loss", "heldout_loss"],
        &rows,
    )?;
    let sets = [&corpus.power, &corpus.qos, &corpus.handover];
    let report = TrainingReport {
        schema_version: 1,
        train_samples: sets.map(|d| d.train.len()),
        heldout_samples: sets.map(|d| d.heldout.len()),
        skipped_records: corpus.skipped,
        best_epoch: [&summary.power, &summary.qos, &summary.handover].map(|r| r.best_epoch),
        heldout: summary.heldout,
    };
    write_json(&dir.join("training_report.json"), &report)?;
    Ok(report)
}

pub fn load_estimators(cfg: &ExperimentConfig) -> Result<Estimators> {
    let mlp = |name: &str, target: Target| -> Result<MlpEstimator> {
        let file: ModelFile = read_json(&model_path(cfg, name))?;
        let est = MlpEstimator::from_file(&file).map_err(artifact)?;
        if est.target != target {
            return Err(Error::Artifact(format!(
                "{name}.json holds a {:?} model",
                est.target
            )));
        }
        Ok(est)
    };
    let power = mlp("power", Target::Power)?;
    let qos = mlp("qos", Target::Qos)?;
    let file: ModelFile = read_json(&model_path(cfg, "handover"))?;
    let handover = LstmEstimator::from_file(&file).map_err(artifact)?;
    Ok(Estimators {
        power,
        qos,
        handover,
    })
}

/// Offline cost-to-go tables over the corpus mean traffic, one per mode.
pub fn build_table(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let est = load_estimators(cfg)?;
    let traces = load_corpus(cfg)?;
    let mean = mean_traffic(&traces).map_err(artifact)?;
    let tables = cfg
        .modes()
        .into_iter()
        .map(|m| {
            Ok((
                m,
                build_ctg_table(&mean, &est, &cfg.carriers, &cfg.controller(m))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    tables
        .iter()
        .map(|(m, table)| {
            let path = cfg.table_path(*m);
            write_json(&path, table)?;
            Ok(path)
        })
        .collect()
}

pub fn load_table(cfg: &ExperimentConfig, mode: Mode) -> Result<CostToGoTable> {
    let table: CostToGoTable = read_json(&cfg.table_path(mode))?;
    table.validate()?;
    if table.mode != mode || table.horizon != STEPS_PER_DAY {
        return Err(Error::Artifact(format!(
            "{}: expected a {mode} table over {STEPS_PER_DAY} steps",
            cfg.table_path(mode).display()
        )));
    }
    Ok(table)
}

struct Episode {
    trace: Vec<TraceRecord>,
    log: Option<Vec<DecisionLog>>,
}

fn run_one(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    mode: Mode,
    spec: &ScenarioSpec,
    seed: u64,
    adp: Option<(&Estimators, &CostToGoTable)>,
) -> Result<Episode> {
    let plain = |p: &mut dyn Policy| run_episode(spec, p, seed, &cfg.carriers, &cfg.sim);
    let done = |trace| Ok(Episode { trace, log: None });
    match kind {
        PolicyKind::NoEs => done(plain(&mut no_es_policy(mode))?),
        PolicyKind::Rule => done(plain(&mut rule_based_policy(cfg.rule.clone(), mode)?)?),
        PolicyKind::Random => done(plain(&mut random_policy(
            derive_seed(seed, &[domain::POLICY]),
            mode,
        ))?),
        PolicyKind::Adp | PolicyKind::AdpFixed => {
            let (est, table) = adp.expect("models loaded for adp policies");
            let ctl = cfg.controller(mode);
            let mut policy = if kind == PolicyKind::Adp {
                AdpController::adaptive(est, table, ctl)?
            } else {
                adp_fixed_policy(est, table, ctl, cfg.system.fixed_qos)?
            };
            let trace = run_episode(spec, &mut policy, seed, &cfg.carriers, &cfg.sim)?;
            Ok(Episode {
                trace,
                log: Some(policy.into_log()),
            })
        }
    }
}

pub fn result_set_name(kind: PolicyKind, mode: Mode) -> String {
    format!("{}-{}", kind.as_str(), mode.as_str())
}

/// Collapses the stations of one evaluation episode into per-step station
/// totals: power and active cells summed, QoS averaged, handovers summed.
fn station_totals(stations: &[&Episode]) -> Vec<[f64; 4]> {
    (0..STEPS_PER_DAY)
        .map(|t| {
            let mut acc = [0.0; 4];
            for e in stations {
                let r = &e.trace[t];
                acc[0] += r.power;
                acc[1] += apply_action(r.action).count_on() as f64;
                acc[2] += r.qos;
                acc[3] += r.handovers as f64;
            }
            acc[2] /= stations.len() as f64;
            acc
        })
        .collect()
}

fn summarize(spec: &ScenarioSpec, evals: &[Vec<[f64; 4]>]) -> ScenarioResult {
    let per_hour = STEPS_PER_DAY / HOURS;
    let mut total = [0.0; 4];
    let mut hourly = [[0.0; 3]; HOURS];
    for steps_of in evals {
        for (t, s) in steps_of.iter().enumerate() {
            for k in 0..4 {
                total[k] += s[k];
            }
            for k in 0..3 {
                hourly[t / per_hour][k] += s[k];
            }
        }
    }
    let n = evals.len() as f64;
    let (steps, w) = (STEPS_PER_DAY as f64 * n, per_hour as f64 * n);
    ScenarioResult {
        id: spec.id,
        power_w: total[0] / steps,
        qos_pct: total[2] / steps,
        handover: total[3] / n,
        hourly: HourlySeries {
            power_w: hourly.map(|h| h[0] / w),
            active_cells: hourly.map(|h| h[1] / w),
            qos_pct: hourly.map(|h| h[2] / w),
        },
    }
}

/// Evaluates each selected (policy, mode) on every scenario and evaluation
/// seed. Returns the result-set directories written.
pub fn run(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let scenarios = load_scenarios(cfg)?;
    let combos: Vec<(PolicyKind, Mode)> = cfg
        .policies()
        .into_iter()
        .flat_map(|p| cfg.modes().into_iter().map(move |m| (p, m)))
        .collect();
    // load every artifact before the first write
    let est = match combos.iter().any(|(p, _)| p.needs_models()) {
        true => Some(load_estimators(cfg)?),
        false => None,
    };
    let mut tables: Vec<(Mode, CostToGoTable)> = Vec::new();
    for &(p, m) in &combos {
        if p.needs_models() && !tables.iter().any(|(mm, _)| *mm == m) {
            tables.push((m, load_table(cfg, m)?));
        }
    }
    let mut written = Vec::new();
    for (kind, mode) in combos {
        let bundle = match (kind.needs_models(), &est) {
            (true, Some(est)) => tables
                .iter()
                .find(|(m, _)| *m == mode)
                .map(|(_, t)| (est, t)),
            _ => None,
        };
        let jobs: Vec<(usize, usize, usize)> = (0..scenarios.len())
            .flat_map(|s| {
                (0..cfg.eval_seeds).flat_map(move |e| (0..cfg.stations).map(move |k| (s, e, k)))
            })
            .collect();
        let episodes = cfg.exec.try_map(&jobs, |&(s, e, k)| {
            let seed = evaluation_seed(cfg.master_seed, scenarios[s].id, e, k);
            run_one(cfg, kind, mode, &scenarios[s], seed, bundle)
        })?;
        let name = result_set_name(kind, mode);
        let dir = cfg.runs_dir().join(&name);
        let mut results = Vec::with_capacity(scenarios.len());
        for (s, spec) in scenarios.iter().enumerate() {
            let mut evals = Vec::with_capacity(cfg.eval_seeds);
            for e in 0..cfg.eval_seeds {
                let idx: Vec<usize> = (0..cfg.stations)
                    .map(|k| (s * cfg.eval_seeds + e) * cfg.stations + k)
                    .collect();
                let eps: Vec<&Episode> = idx.iter().map(|&i| &episodes[i]).collect();
                evals.push(station_totals(&eps));
                for (k, ep) in eps.iter().enumerate() {
                    let stem = format!("scenario_{}_eval_{e}_station_{k}.jsonl", spec.id);
                    let lines: Vec<TraceLine> = ep.trace.iter().map(TraceLine::from).collect();
                    write_jsonl(&dir.join("traces").join(&stem), &lines)?;
                    if let Some(log) = &ep.log {
                        write_jsonl(&dir.join("decisions").join(&stem), log)?;
                    }
                }
            }
            results.push(summarize(spec, &evals));
        }
        let set = ResultSet {
            schema_version: RESULT_SCHEMA_VERSION,
            name,
            policy: kind,
            mode,
            stations: cfg.stations,
            eval_seeds: cfg.eval_seeds,
            scenarios: results,
        };
        write_json(&dir.join("result.json"), &set)?;
        written.push(dir);
    }
    Ok(written)
}

/// Every result set under the runs directory, in report order.
pub fn load_result_sets(runs_dir: &Path) -> Result<Vec<ResultSet>> {
    let entries = std::fs::read_dir(runs_dir).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            Error::Artifact(format!("{} does not exist", runs_dir.display()))
        } else {
            Error::io(runs_dir, e)
        }
    })?;
    let mut sets = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(runs_dir, e))?;
        let path = entry.path().join("result.json");
        if path.is_file() {
            let set: ResultSet = read_json(&path)?;
            set.validate()
                .map_err(|m| Error::Artifact(format!("{}: {m}", path.display())))?;
            sets.push(set);
        }
    }
    if sets.is_empty() {
        return Err(Error::Artifact(format!(
            "no result sets under {}",
            runs_dir.display()
        )));
    }
    sets.sort_by_key(|s| (s.policy, std::cmp::Reverse(s.mode == Mode::FourCell)));
    Ok(sets)
}

/// Summary and hourly CSVs from every result set on disk.
pub fn report(cfg: &ExperimentConfig) -> Result<[PathBuf; 2]> {
    cfg.validate()?;
    let sets = load_result_sets(&cfg.runs_dir())?;
    super::report::write_report(&sets, &cfg.report_dir())
}

/// generate → collect → train → build → run → report.
pub fn pipeline(cfg: &ExperimentConfig) -> Result<[PathBuf; 2]> {
    generate_scenarios(cfg)?;
    collect_data(cfg)?;
    train(cfg)?;
    build_table(cfg)?;
    run(cfg)?;
    report(cfg)
}
