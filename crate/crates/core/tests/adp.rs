use cellsleep::adp::*;
use cellsleep::estimators::{HandoverEstimator, HandoverQuery, MetricEstimator};
use cellsleep::netmodel::*;
use cellsleep::seed::derive_seed;
use cellsleep::simkernel::*;
use cellsleep::Result;
use proptest::prelude::*;

mod common;
use common::{brute_force, mean_traffic_fixture, unit, Stub};

#[test]
fn table_matches_exhaustive_enumeration() {
    let profiles = CarrierSet::default();
    for k in 0..100u64 {
        let mode = if k % 4 == 0 {
            Mode::FourCell
        } else {
            Mode::TwoCell
        };
        let t_len = 1 + (k as usize % 5);
        let t_len = if mode == Mode::FourCell {
            t_len.min(4)
        } else {
            t_len
        };
        let est = Stub {
            seed: k,
            qos_floor: 60.0,
        };
        let mut cfg = ControllerConfig::new(mode);
        cfg.offline_qos = 80.0 + (k % 3) as f64 * 8.0;
        let mean = mean_traffic_fixture(t_len, k);
        let table = build_ctg_table(&mean, &est, &profiles, &cfg).unwrap();
        let oracle = brute_force(&mean, &est, &cfg);
        for (a, want) in oracle.iter().enumerate() {
            assert!(
                (table.values[0][a] - want).abs() < 1e-9,
                "instance {k}, column {a}"
            );
        }
    }
}

#[test]
fn five_step_four_cell_instance_matches_enumeration() {
    let est = Stub {
        seed: 999,
        qos_floor: 70.0,
    };
    let cfg = ControllerConfig::new(Mode::FourCell);
    let mean = mean_traffic_fixture(5, 999);
    let table = build_ctg_table(&mean, &est, &CarrierSet::default(), &cfg).unwrap();
    let oracle = brute_force(&mean, &est, &cfg);
    assert!((table.values[0][15] - oracle[15]).abs() < 1e-9);
}

#[test]
fn one_step_horizon_is_a_direct_minimum() {
    let est = Stub {
        seed: 5,
        qos_floor: 0.0,
    };
    let mut cfg = ControllerConfig::new(Mode::FourCell);
    cfg.offline_qos = 0.0;
    let mean = mean_traffic_fixture(1, 5);
    let table = build_ctg_table(&mean, &est, &CarrierSet::default(), &cfg).unwrap();
    let acts = action_space(Mode::FourCell);
    let all_on = apply_action(Action::all_on(Mode::FourCell));
    let snap = mean[0].reconfigured(all_on, &CarrierSet::default());
    let p = est.power(&snap, &acts).unwrap();
    let want = acts
        .iter()
        .zip(&p)
        .map(|(&a, p)| p + all_on.switched_on_towards(&apply_action(a)) as f64 * 48.6)
        .fold(f64::INFINITY, f64::min);
    assert!((table.values[0][15] - want).abs() < 1e-9);
    assert_eq!(table.values[1], vec![0.0; 16]);
}

#[test]
fn bellman_consistency_and_terminal_row() {
    let est = Stub {
        seed: 17,
        qos_floor: 50.0,
    };
    let cfg = ControllerConfig::new(Mode::FourCell);
    let mean = mean_traffic_fixture(12, 17);
    let table = build_ctg_table(&mean, &est, &CarrierSet::default(), &cfg).unwrap();
    table.validate().unwrap();
    assert_eq!(table.values.len(), 13);
    assert!(table.values[12].iter().all(|&v| v == 0.0));
    for t in 0..12 {
        for a in 0..16 {
            let s = &table.scores[t][a];
            assert!((table.values[t][a] - s[table.argmin[t][a]]).abs() < 1e-9);
            assert!(table.values[t][a] >= 0.0);
        }
    }
}

#[test]
fn raising_the_offline_threshold_never_lowers_cost() {
    // every step keeps at least the all-on action feasible
    struct Floor(Stub);
    impl MetricEstimator for Floor {
        fn power(&self, s: &TrafficSnapshot, a: &[Action]) -> Result<Vec<f64>> {
            self.0.power(s, a)
        }
        fn qos(&self, s: &TrafficSnapshot, a: &[Action]) -> Result<Vec<f64>> {
            let mut q = self.0.qos(s, a)?;
            for (v, x) in q.iter_mut().zip(a) {
                if x.cells_off() == 0 {
                    *v = 100.0;
                }
            }
            Ok(q)
        }
    }
    for seed in 0..10 {
        let est = Floor(Stub {
            seed,
            qos_floor: 40.0,
        });
        let mean = mean_traffic_fixture(6, seed);
        let mut prev: Option<CostToGoTable> = None;
        for q in [0.0, 50.0, 70.0, 85.0, 95.0] {
            let mut cfg = ControllerConfig::new(Mode::FourCell);
            cfg.offline_qos = q;
            let table = build_ctg_table(&mean, &est, &CarrierSet::default(), &cfg).unwrap();
            assert!(table.infeasible_flags.iter().flatten().all(|f| !f));
            if let Some(p) = &prev {
                for t in 0..6 {
                    for a in 0..16 {
                        assert!(table.values[t][a] >= p.values[t][a] - 1e-9);
                    }
                }
            }
            prev = Some(table);
        }
    }
}

#[test]
fn infeasible_entries_are_flagged() {
    let est = Stub {
        seed: 3,
        qos_floor: 0.0,
    };
    let mut cfg = ControllerConfig::new(Mode::FourCell);
    cfg.offline_qos = 100.0;
    let table = build_ctg_table(
        &mean_traffic_fixture(3, 3),
        &est,
        &CarrierSet::default(),
        &cfg,
    )
    .unwrap();
    assert!(table.infeasible_flags.iter().flatten().all(|&f| f));
}

#[test]
fn parallel_and_sequential_tables_agree() {
    let est = Stub {
        seed: 21,
        qos_floor: 60.0,
    };
    let mean = mean_traffic_fixture(8, 21);
    let mut cfg = ControllerConfig::new(Mode::FourCell);
    cfg.exec = cellsleep::par::Exec::Sequential;
    let a = build_ctg_table(&mean, &est, &CarrierSet::default(), &cfg).unwrap();
    cfg.exec = cellsleep::par::Exec::Parallel;
    let b = build_ctg_table(&mean, &est, &CarrierSet::default(), &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn table_json_round_trips() {
    let est = Stub {
        seed: 4,
        qos_floor: 60.0,
    };
    let cfg = ControllerConfig::new(Mode::TwoCell);
    let table = build_ctg_table(
        &mean_traffic_fixture(4, 4),
        &est,
        &CarrierSet::default(),
        &cfg,
    )
    .unwrap();
    let json = serde_json::to_value(&table).unwrap();
    for key in [
        "schema_version",
        "mode",
        "T",
        "actions",
        "J",
        "argmin",
        "infeasible_flags",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert_eq!(json["mode"], "2cell");
    let back: CostToGoTable = serde_json::from_value(json).unwrap();
    back.validate().unwrap();
    assert_eq!(back.values, table.values);
}

/// Minimizer by nested one-dimensional search: for fixed θ1 the best θ0 is a
/// clamped closed form, and the resulting profile is convex in θ1.
fn threshold_oracle(q_phi: f64, h: f64, gamma: f64) -> [f64; 2] {
    let b = ThetaBounds::default();
    let inner = |t1: f64| ((q_phi - t1 * h) / (1.0 + gamma)).clamp(b.theta0[0], b.theta0[1]);
    let f = |t1: f64| threshold_loss([inner(t1), t1], q_phi, h, gamma);
    let (mut lo, mut hi) = (b.theta1[0], b.theta1[1]);
    for _ in 0..300 {
        let m1 = lo + (hi - lo) / 3.0;
        let m2 = hi - (hi - lo) / 3.0;
        if f(m1) <= f(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let t1 = 0.5 * (lo + hi);
    [inner(t1), t1]
}

#[test]
fn threshold_update_reaches_the_box_minimizer() {
    for k in 0..200u64 {
        let q_phi = 60.0 + 60.0 * unit(derive_seed(k, &[1]));
        let h = 20.0 * unit(derive_seed(k, &[2])).powi(2);
        let mut m = ThresholdModel::default();
        m.update(q_phi, h);
        let want = threshold_oracle(q_phi, h, m.gamma);
        assert!(
            (m.theta0 - want[0]).abs() < 1e-3 && (m.theta1 - want[1]).abs() < 1e-3,
            "Q_φ={q_phi}, H̄={h}: got {:?}, want {want:?}",
            m.theta()
        );
    }
}

proptest! {
    #[test]
    fn theta_stays_in_bounds(steps in prop::collection::vec((0.0f64..150.0, 0.0f64..40.0), 1..30)) {
        let mut m = ThresholdModel::default();
        for (q, h) in steps {
            let q_tau = m.update(q, h);
            prop_assert!(m.bounds.contains(m.theta()));
            prop_assert!((0.0..=100.0).contains(&q_tau));
        }
    }

    #[test]
    fn tighter_threshold_never_picks_lower_predicted_qos(seed in 0u64..10_000, lo in 0.0f64..100.0, gap in 0.0f64..30.0) {
        let est = Stub { seed, qos_floor: 50.0 };
        let cfg = ControllerConfig::new(Mode::FourCell);
        let table = build_ctg_table(&mean_traffic_fixture(3, seed), &est, &CarrierSet::default(), &cfg).unwrap();
        let snap = mean_traffic_fixture(1, seed + 1).remove(0);
        let a = select_action(&snap, 1, &table, &est, lo, &cfg).unwrap();
        let b = select_action(&snap, 1, &table, &est, lo + gap, &cfg).unwrap();
        if !b.infeasible {
            let qa = a.candidates[a.action.index()].qos;
            let qb = b.candidates[b.action.index()].qos;
            prop_assert!(qb >= qa);
        }
    }
}

fn zero_table(mode: Mode, horizon: usize) -> CostToGoTable {
    let est = Stub {
        seed: 0,
        qos_floor: 0.0,
    };
    let mut t = build_ctg_table(
        &mean_traffic_fixture(horizon, 0),
        &est,
        &CarrierSet::default(),
        &ControllerConfig::new(mode),
    )
    .unwrap();
    for row in &mut t.values {
        row.iter_mut().for_each(|v| *v = 0.0);
    }
    t
}

/// Hand-set predictions for the four two-cell actions (masks 1100..1111).
struct Hand;
impl MetricEstimator for Hand {
    fn power(&self, _s: &TrafficSnapshot, a: &[Action]) -> Result<Vec<f64>> {
        Ok(a.iter()
            .map(|x| [1000.0, 1020.0, 1050.0, 1300.0][x.index()])
            .collect())
    }
    fn qos(&self, _s: &TrafficSnapshot, a: &[Action]) -> Result<Vec<f64>> {
        Ok(a.iter()
            .map(|x| [70.0, 85.0, 93.0, 99.0][x.index()])
            .collect())
    }
}

#[test]
fn selection_hand_example() {
    let cfg = ControllerConfig::new(Mode::TwoCell);
    let table = zero_table(Mode::TwoCell, 2);
    let mut snap = mean_traffic_fixture(1, 1).remove(0);
    snap.config = apply_action(Action::all_on(Mode::TwoCell));
    let pick = |snap: &TrafficSnapshot, q| select_action(snap, 0, &table, &Hand, q, &cfg).unwrap();
    // everything on already: no switching cost, scores are the powers
    assert_eq!(pick(&snap, 0.0).action.to_string(), "1100");
    assert_eq!(pick(&snap, 80.0).action.to_string(), "1101");
    assert_eq!(pick(&snap, 90.0).action.to_string(), "1110");
    assert_eq!(pick(&snap, 95.0).action.to_string(), "1111");
    let none = pick(&snap, 101.0);
    assert!(none.infeasible);
    assert_eq!(none.action.to_string(), "1111");
    // from 1110, turning carrier 4 back on in all three sectors costs 3 × 48.6 W
    snap.config = apply_action(Action::parse("1110", Mode::TwoCell).unwrap());
    let s = pick(&snap, 80.0);
    assert_eq!(s.action.to_string(), "1110");
    assert!((s.candidates[1].delta - 145.8).abs() < 1e-9);
    assert!((s.candidates[3].score - 1445.8).abs() < 1e-9);
}

#[test]
fn equal_scores_prefer_fewer_cells_off() {
    struct Flat;
    impl MetricEstimator for Flat {
        fn power(&self, _s: &TrafficSnapshot, a: &[Action]) -> Result<Vec<f64>> {
            Ok(vec![500.0; a.len()])
        }
        fn qos(&self, _s: &TrafficSnapshot, a: &[Action]) -> Result<Vec<f64>> {
            Ok(vec![100.0; a.len()])
        }
    }
    let cfg = ControllerConfig::new(Mode::FourCell);
    let table = zero_table(Mode::FourCell, 2);
    let mut snap = mean_traffic_fixture(1, 1).remove(0);
    snap.config = apply_action(Action::all_on(Mode::FourCell));
    assert_eq!(
        select_action(&snap, 0, &table, &Flat, 0.0, &cfg)
            .unwrap()
            .action
            .mask,
        15
    );
    assert!(matches!(
        select_action(&snap, 2, &table, &Flat, 0.0, &cfg),
        Err(cellsleep::Error::EpisodeFinished(2))
    ));
}

#[test]
fn mean_handover_examples() {
    struct Const;
    impl HandoverEstimator for Const {
        fn handover(&self, _q: &HandoverQuery, a: &[Action]) -> Result<Vec<f64>> {
            Ok(vec![7.0; a.len()])
        }
    }
    struct ByIndex;
    impl HandoverEstimator for ByIndex {
        fn handover(&self, _q: &HandoverQuery, a: &[Action]) -> Result<Vec<f64>> {
            Ok(a.iter().map(|x| x.index() as f64).collect())
        }
    }
    let snap = mean_traffic_fixture(1, 0).remove(0);
    let q = HandoverQuery {
        past: &[],
        current: &snap,
        prev_config: OnOffConfig::all_on(),
    };
    assert_eq!(
        mean_predicted_handover(&Const, &q, Mode::FourCell).unwrap(),
        7.0
    );
    assert_eq!(
        mean_predicted_handover(&ByIndex, &q, Mode::FourCell).unwrap(),
        7.5
    );
}

#[test]
fn target_on_goal_keeps_threshold_near_goal() {
    let mut m = ThresholdModel::default();
    for _ in 0..50 {
        m.record_qos(92.0);
        let q_phi = m.adaptive_target();
        assert_eq!(q_phi, 92.0);
        m.update(q_phi, 2.0);
    }
    // only the γ pull separates the fit from the target
    assert!((m.threshold(2.0) - 92.0).abs() < 0.1);
}

#[test]
fn controllers_run_full_episodes() {
    let profiles = CarrierSet::default();
    let params = SimParams::default();
    let spec = &default_scenarios(1, 2)[0];
    let est = Stub {
        seed: 8,
        qos_floor: 70.0,
    };
    for mode in [Mode::TwoCell, Mode::FourCell] {
        let cfg = ControllerConfig::new(mode);
        let table = build_ctg_table(&mean_traffic_fixture(96, 8), &est, &profiles, &cfg).unwrap();
        let mut ctl = AdpController::adaptive(&est, &table, cfg.clone()).unwrap();
        let trace = run_episode(spec, &mut ctl, 1, &profiles, &params).unwrap();
        assert_eq!(ctl.log().len(), 96);
        let space = action_space(mode);
        assert!(trace.iter().all(|r| space.contains(&r.action)));
        for line in ctl.log() {
            let th = line.theta.unwrap();
            assert!(cfg.bounds.contains(th));
        }
        let mut fixed = AdpController::fixed(&est, &table, cfg.clone(), 92.0).unwrap();
        run_episode(spec, &mut fixed, 1, &profiles, &params).unwrap();
        assert!(fixed
            .log()
            .iter()
            .all(|l| l.q_tau == 92.0 && l.theta.is_none()));
        let mut open = AdpController::fixed(&est, &table, cfg, 0.0).unwrap();
        run_episode(spec, &mut open, 1, &profiles, &params).unwrap();
        for l in open.log() {
            let best = l
                .candidates
                .iter()
                .map(|c| c.score)
                .fold(f64::INFINITY, f64::min);
            let chosen = l.candidates.iter().find(|c| c.action == l.action).unwrap();
            assert_eq!(chosen.score, best);
        }
    }
}

#[test]
fn objective_estimate_sums_power_and_counts_violations() {
    let profiles = CarrierSet::default();
    let params = SimParams::default();
    let spec = &default_scenarios(1, 2)[0];
    let trace = run_episode(
        spec,
        &mut cellsleep::baselines::no_es_policy(Mode::FourCell),
        4,
        &profiles,
        &params,
    )
    .unwrap();
    let est = policy_objective_estimate(&trace, 92.0);
    let sum: f64 = trace.iter().map(|r| r.power).sum();
    assert_eq!(est.total_power, sum);
    assert_eq!(policy_objective_estimate(&trace[..0], 92.0).violations, 0);
    let hand = &trace[..3];
    let want = hand[0].power + hand[1].power + hand[2].power;
    assert!((policy_objective_estimate(hand, 92.0).total_power - want).abs() < 1e-9);
    assert_eq!(policy_objective_estimate(hand, 101.0).violations, 3);
}
