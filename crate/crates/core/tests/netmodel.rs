use cellsleep::netmodel::*;

fn busy(ue: u32, per_ue: f64) -> CellObservation {
    CellObservation {
        ue_count: ue,
        throughput: per_ue * ue as f64,
        on: true,
        delivered: per_ue * ue as f64 * 900.0,
        tx_time: 900.0,
        ..CellObservation::off()
    }
}

#[test]
fn switching_cost_counts_cells_turned_on() {
    let from = apply_action(Action::new(0b0000, Mode::FourCell).unwrap());
    let to = apply_action(Action::new(0b0111, Mode::FourCell).unwrap());
    assert!((switching_cost(&from, &to, 0.3, 162.0) - 9.0 * 48.6).abs() < 1e-12);
    assert_eq!(switching_cost(&to, &from, 0.3, 162.0), 0.0);
}

#[test]
fn idle_all_on_station_draws_standby_power() {
    let profiles = CarrierSet::default();
    let config = OnOffConfig::all_on();
    let mut cells = [CellObservation::off(); 15];
    cells.iter_mut().for_each(|c| c.on = true);
    let state = StationState {
        step: 0,
        cells,
        config,
    };
    let p = station_power(&state, &config, &profiles, 0.3, 162.0).unwrap();
    assert!((p - 3.0 * (130.0 + 100.0 + 90.0 + 85.0 + 80.0)).abs() < 1e-9);
}

#[test]
fn qos_counts_only_busy_cells() {
    let cells = [
        busy(4, 2.0),
        busy(2, 0.5),
        CellObservation::off(),
        busy(0, 0.0),
    ];
    assert_eq!(qos_uncongested_pct(&cells, 1.0).unwrap(), 50.0);
    assert_eq!(
        qos_uncongested_pct(&[CellObservation::off()], 1.0).unwrap(),
        100.0
    );
}

#[test]
fn handover_rounds_half_up() {
    assert_eq!(handover_count(&[3, 0, 1], &[0, 2, 1]).unwrap(), 3);
    assert_eq!(handover_count(&[4, 0], &[0, 4]).unwrap(), 4);
    assert!(handover_count(&[1], &[1, 2]).is_err());
}

#[test]
fn two_cell_space_has_four_actions_keeping_coverage() {
    let space = action_space(Mode::TwoCell);
    assert_eq!(space.len(), 4);
    for a in space {
        let config = apply_action(a);
        for sector in 0..3 {
            assert!(config.is_on(sector, 0));
        }
    }
}
