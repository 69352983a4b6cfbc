use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::time::Instant;

use cellsleep::adp::CostToGoTable;
use cellsleep::estimators::ModelFile;
use cellsleep::harness::*;
use cellsleep::netmodel::{action_space, Mode};
use cellsleep::simkernel::TraceLine;

fn tiny(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig {
        out_dir: out.to_path_buf(),
        runs: 2,
        ..Default::default()
    };
    c.training.mlp_epochs = 2;
    c.training.lstm_epochs = 1;
    c
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn scenario_file_is_volume_ordered_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let path = generate_scenarios(&cfg).unwrap();
    let first = fs::read(&path).unwrap();
    let specs = load_scenarios(&cfg).unwrap();
    assert_eq!(specs.len(), 8);
    assert!(specs
        .windows(2)
        .all(|w| w[0].daily_volume() < w[1].daily_volume()));
    generate_scenarios(&cfg).unwrap();
    assert_eq!(fs::read(&path).unwrap(), first);

    let two = ExperimentConfig {
        scenario_count: 2,
        ..cfg
    };
    generate_scenarios(&two).unwrap();
    assert_eq!(load_scenarios(&two).unwrap().len(), 2);
}

#[test]
fn smoke_collection_is_fast_and_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.runs = 1;
    generate_scenarios(&cfg).unwrap();
    let t = Instant::now();
    let m = collect_data(&cfg).unwrap();
    assert!(t.elapsed().as_secs_f64() < 10.0);
    assert_eq!(m.files.len(), 8);
    let first: Vec<Vec<u8>> = m
        .files
        .iter()
        .map(|f| fs::read(cfg.corpus_dir().join(f)).unwrap())
        .collect();
    collect_data(&cfg).unwrap();
    let again: Vec<Vec<u8>> = m
        .files
        .iter()
        .map(|f| fs::read(cfg.corpus_dir().join(f)).unwrap())
        .collect();
    assert_eq!(first, again);
}

#[test]
fn default_runs_give_512_trace_files_of_96_records() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig {
        out_dir: dir.path().to_path_buf(),
        ..Default::default()
    };
    generate_scenarios(&cfg).unwrap();
    let m = collect_data(&cfg).unwrap();
    assert_eq!(m.files.len(), 512);
    let text = read(&cfg.corpus_dir().join(&m.files[511]));
    assert_eq!(text.lines().count(), 96);
    let line: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let keys: HashSet<&str> = line
        .as_object()
        .unwrap()
        .keys()
        .map(|k| k.as_str())
        .collect();
    let want: HashSet<&str> = [
        "t", "ue", "tp", "prb", "e", "action", "power", "qos", "handover",
    ]
    .into();
    assert_eq!(keys, want);
}

#[test]
fn evaluation_seeds_never_reuse_collection_seeds() {
    let mut collect = HashSet::new();
    for s in 0..8 {
        for r in 0..64 {
            collect.insert(collect_seed(1, s, r));
        }
    }
    for id in 1..=8 {
        for e in 0..16 {
            for k in 0..4 {
                assert!(!collect.contains(&evaluation_seed(1, id, e, k)));
            }
        }
    }
}

#[test]
fn tiny_pipeline_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    generate_scenarios(&cfg).unwrap();
    collect_data(&cfg).unwrap();
    let trained = train(&cfg).unwrap();
    assert_eq!(
        trained.train_samples[0] + trained.heldout_samples[0],
        16 * 96
    );

    // loss history: one row per epoch per model
    let loss = read(&cfg.models_dir().join("loss_history.csv"));
    assert_eq!(loss.lines().count(), 1 + 2 + 2 + 1);

    // model files reload to identical predictions
    let est = load_estimators(&cfg).unwrap();
    let file: ModelFile = read_json(&cfg.models_dir().join("power.json")).unwrap();
    assert_eq!(file.weights, est.power.to_file().weights);
    let traces = load_corpus(&cfg).unwrap();
    let snap = cellsleep::simkernel::TrafficSnapshot::from(&traces[0][40].state);
    let acts = action_space(Mode::FourCell);
    let again = load_estimators(&cfg).unwrap();
    assert_eq!(
        est.power.predict(&snap, &acts).unwrap(),
        again.power.predict(&snap, &acts).unwrap()
    );

    let tables = build_table(&cfg).unwrap();
    assert_eq!(tables.len(), 2);
    let t4: CostToGoTable = read_json(&cfg.table_path(Mode::FourCell)).unwrap();
    assert_eq!(t4.values.len(), 97);
    assert!(t4.values.iter().all(|r| r.len() == 16));
    assert!(t4.values[96].iter().all(|&v| v == 0.0));
    let bytes = fs::read(cfg.table_path(Mode::FourCell)).unwrap();
    build_table(&cfg).unwrap();
    assert_eq!(fs::read(cfg.table_path(Mode::FourCell)).unwrap(), bytes);

    let sets = run(&cfg).unwrap();
    assert_eq!(sets.len(), 10);
    let log = read(
        &cfg.runs_dir()
            .join("adp-4cell/decisions/scenario_3_eval_0_station_0.jsonl"),
    );
    assert_eq!(log.lines().count(), 96);
    assert!(!cfg.runs_dir().join("rule-4cell/decisions").exists());
    // the fixed variant never moves its threshold
    let fixed = read(
        &cfg.runs_dir()
            .join("adp-fixed-4cell/decisions/scenario_3_eval_0_station_0.jsonl"),
    );
    for l in fixed.lines() {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["q_tau"].as_f64().unwrap(), 92.0);
        assert!(v.get("theta").is_none());
    }

    let [summary, hourly] = report(&cfg).unwrap();
    let s = read(&summary);
    assert!(s.starts_with("# power_w: episode mean station power"));
    // 10 algorithms × (power, qos, handover, saving)
    assert_eq!(s.lines().count(), 2 + 40);
    for line in s.lines().skip(2) {
        let cells: Vec<f64> = line
            .split(',')
            .skip(2)
            .map(|v| v.parse().unwrap())
            .collect();
        if !line.contains("saving_pct") {
            let mean = cells[..8].iter().sum::<f64>() / 8.0;
            assert!((mean - cells[8]).abs() < 1e-9, "{line}");
        }
    }
    assert_eq!(read(&hourly).lines().count(), 1 + 10 * 3 * 24);
    assert!(s.contains("noes-4cell,saving_pct,0.0000000000000000"));

    // no staging files are left behind
    let mut stack = vec![dir.path().to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(d).unwrap() {
            let p = e.unwrap().path();
            assert!(!p.to_string_lossy().ends_with(".partial"));
            if p.is_dir() {
                stack.push(p);
            }
        }
    }
}

#[test]
fn baseline_runs_need_no_models_and_adp_runs_do() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    generate_scenarios(&cfg).unwrap();
    cfg.policy = Some(PolicyKind::Rule);
    cfg.mode = Some(Mode::TwoCell);
    assert_eq!(run(&cfg).unwrap().len(), 1);
    cfg.policy = Some(PolicyKind::Adp);
    let e = run(&cfg).unwrap_err();
    assert_eq!(e.exit_code(), 3);
    assert!(!cfg.runs_dir().join("adp-2cell").exists());
}

#[test]
fn missing_inputs_map_to_exit_code_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    assert_eq!(collect_data(&cfg).unwrap_err().exit_code(), 3);
    assert_eq!(train(&cfg).unwrap_err().exit_code(), 3);
    assert_eq!(build_table(&cfg).unwrap_err().exit_code(), 3);
    assert_eq!(run(&cfg).unwrap_err().exit_code(), 3);
    assert_eq!(report(&cfg).unwrap_err().exit_code(), 3);
    // nothing was written
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn corrupt_corpus_is_an_artifact_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.runs = 1;
    generate_scenarios(&cfg).unwrap();
    let m = collect_data(&cfg).unwrap();
    let victim = cfg.corpus_dir().join(&m.files[3]);
    let text = read(&victim);
    fs::write(
        &victim,
        text.lines().take(10).collect::<Vec<_>>().join("\n"),
    )
    .unwrap();
    assert_eq!(train(&cfg).unwrap_err().exit_code(), 3);
}

#[test]
fn invalid_config_fails_validation_before_writing() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.rule.th_deac = 0.9;
    assert_eq!(generate_scenarios(&cfg).unwrap_err().exit_code(), 4);
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn multi_station_runs_sum_power() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.scenario_count = 2;
    cfg.policy = Some(PolicyKind::NoEs);
    cfg.mode = Some(Mode::FourCell);
    generate_scenarios(&cfg).unwrap();
    cfg.stations = 3;
    run(&cfg).unwrap();
    let set: ResultSet = read_json(&cfg.runs_dir().join("noes-4cell/result.json")).unwrap();
    let mut expect = 0.0;
    for k in 0..3 {
        let p = cfg.runs_dir().join(format!(
            "noes-4cell/traces/scenario_1_eval_0_station_{k}.jsonl"
        ));
        let lines: Vec<TraceLine> = read_jsonl(&p).unwrap();
        expect += lines.iter().map(|l| l.power).sum::<f64>() / 96.0;
    }
    assert!((set.scenarios[0].power_w - expect).abs() < 1e-9);
    assert!(set.scenarios[0]
        .hourly
        .active_cells
        .iter()
        .all(|&c| c == 45.0));
    assert_eq!(set.stations, 3);
}

#[test]
fn eval_seed_count_averages_episodes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.scenario_count = 1;
    cfg.policy = Some(PolicyKind::Random);
    cfg.mode = Some(Mode::TwoCell);
    cfg.eval_seeds = 2;
    generate_scenarios(&cfg).unwrap();
    run(&cfg).unwrap();
    let set: ResultSet = read_json(&cfg.runs_dir().join("random-2cell/result.json")).unwrap();
    let h: Vec<f64> = (0..2)
        .map(|e| {
            let p = cfg.runs_dir().join(format!(
                "random-2cell/traces/scenario_1_eval_{e}_station_0.jsonl"
            ));
            let lines: Vec<TraceLine> = read_jsonl(&p).unwrap();
            lines.iter().map(|l| l.handover as f64).sum()
        })
        .collect();
    assert_eq!(set.scenarios[0].handover, (h[0] + h[1]) / 2.0);
    assert_ne!(h[0], h[1]);
}

#[test]
fn config_file_round_trips_through_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    let mut cfg = tiny(dir.path());
    cfg.master_seed = 42;
    cfg.mode = Some(Mode::TwoCell);
    write_json(&path, &cfg).unwrap();
    let back = ExperimentConfig::load(Some(&path)).unwrap();
    assert_eq!(back, cfg);
    assert_eq!(
        ExperimentConfig::load(None).unwrap(),
        ExperimentConfig::default()
    );
    assert_eq!(
        ExperimentConfig::load(Some(&dir.path().join("nope.json")))
            .unwrap_err()
            .exit_code(),
        3
    );
}
