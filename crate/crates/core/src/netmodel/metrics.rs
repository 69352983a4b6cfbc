use serde::{Deserialize, Serialize};

use super::{CarrierProfile, CarrierSet, CellObservation, OnOffConfig, StationState, CARRIERS};
use crate::error::{Error, Result};

/// Realized metrics of one step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    /// Station power including switching cost, W.
    pub power: f64,
    /// Percent of busy cells that are uncongested.
    pub qos: f64,
    pub handovers: u32,
}

pub fn load_ratio(allocated: u32, max: u32) -> Result<f64> {
    if max == 0 {
        return Err(Error::invalid("load_ratio: max PRBs is zero"));
    }
    if allocated > max {
        return Err(Error::invalid(format!(
            "load_ratio: {allocated} PRBs allocated out of {max}"
        )));
    }
    Ok(allocated as f64 / max as f64)
}

/// Power drawn by one cell in a step.
pub fn cell_power(
    on: bool,
    load: f64,
    profile: &CarrierProfile,
    just_switched_on: bool,
    beta: f64,
    p_gamma: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&load) {
        return Err(Error::invalid(format!(
            "cell_power: load ratio {load} outside [0,1]"
        )));
    }
    if !on {
        return Ok(profile.p_sleep);
    }
    let mut p = profile.p_standby + load * profile.p_load;
    if just_switched_on {
        p += beta * p_gamma;
    }
    Ok(p)
}

/// `beta * p_gamma` per cell going from off to on. Switching off is free.
pub fn switching_cost(prev: &OnOffConfig, next: &OnOffConfig, beta: f64, p_gamma: f64) -> f64 {
    beta * p_gamma * prev.switched_on_towards(next) as f64
}

pub fn station_power(
    state: &StationState,
    prev: &OnOffConfig,
    profiles: &CarrierSet,
    beta: f64,
    p_gamma: f64,
) -> Result<f64> {
    if !state.is_consistent() {
        return Err(Error::invalid(
            "station_power: cell on flags disagree with config",
        ));
    }
    let mut total = 0.0;
    for (c, cell) in state.cells.iter().enumerate() {
        total += cell_power(
            cell.on,
            cell.load,
            profiles.get(c % CARRIERS),
            false,
            beta,
            p_gamma,
        )?;
    }
    Ok(total + switching_cost(prev, &state.config, beta, p_gamma))
}

/// Percent of active, transmitting cells whose per-UE throughput reaches `tau`
/// Mbps. An idle station counts as fully uncongested.
pub fn qos_uncongested_pct(cells: &[CellObservation], tau: f64) -> Result<f64> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!(
            "qos: tau must be positive, got {tau}"
        )));
    }
    let (mut busy, mut ok) = (0u32, 0u32);
    for rate in cells.iter().filter_map(CellObservation::per_ue_throughput) {
        busy += 1;
        if rate >= tau {
            ok += 1;
        }
    }
    if busy == 0 {
        return Ok(100.0);
    }
    Ok(100.0 * ok as f64 / busy as f64)
}

/// Half the summed absolute change of per-cell UE counts, rounded half up.
pub fn handover_count(prev: &[u32], cur: &[u32]) -> Result<u32> {
    if prev.len() != cur.len() {
        return Err(Error::invalid(format!(
            "handover_count: {} vs {} cells",
            prev.len(),
            cur.len()
        )));
    }
    let moved: u64 = prev
        .iter()
        .zip(cur)
        .map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs())
        .sum();
    Ok(moved.div_ceil(2) as u32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netmodel::{apply_action, Action, Mode, CELLS};
    use proptest::prelude::*;

    fn profile(p0: f64, p1: f64, p2: f64) -> CarrierProfile {
        CarrierProfile {
            carrier: 0,
            max_prbs: 100,
            prb_rate: 0.5,
            p_sleep: p0,
            p_standby: p1,
            p_load: p2,
            coverage_rank: 0,
        }
    }

    fn busy(ue: u32, per_ue: f64) -> CellObservation {
        let tp = per_ue * ue as f64;
        CellObservation {
            ue_count: ue,
            throughput: tp,
            allocated_prbs: 10,
            load: 0.1,
            on: true,
            delivered: tp * 900.0,
            tx_time: 900.0,
        }
    }

    #[test]
    fn load_ratio_examples() {
        assert_eq!(load_ratio(0, 100).unwrap(), 0.0);
        assert_eq!(load_ratio(100, 100).unwrap(), 1.0);
        assert_eq!(load_ratio(25, 100).unwrap(), 0.25);
        assert!(load_ratio(1, 0).is_err());
        assert!(load_ratio(101, 100).is_err());
    }

    #[test]
    fn cell_power_examples() {
        let p = profile(5.0, 100.0, 200.0);
        assert_eq!(cell_power(true, 0.5, &p, false, 0.3, 162.0).unwrap(), 200.0);
        assert_eq!(cell_power(false, 0.0, &p, false, 0.3, 162.0).unwrap(), 5.0);
        let switched = cell_power(true, 0.0, &p, true, 0.3, 162.0).unwrap();
        assert!((switched - 148.6).abs() < 1e-12);
        // off cells never pay the switching cost
        assert_eq!(cell_power(false, 0.0, &p, true, 0.3, 162.0).unwrap(), 5.0);
        assert!(cell_power(true, 1.5, &p, false, 0.3, 162.0).is_err());
    }

    #[test]
    fn switching_cost_examples() {
        let all = OnOffConfig::all_on();
        assert_eq!(switching_cost(&all, &all, 0.3, 162.0), 0.0);

        let mut prev = OnOffConfig::all_on();
        prev.set(0, 4, false);
        assert!((switching_cost(&prev, &all, 0.3, 162.0) - 48.6).abs() < 1e-12);

        // three cells come on, two go off
        let mut a = OnOffConfig::all_on();
        let mut b = OnOffConfig::all_on();
        for (s, c) in [(0, 1), (1, 2), (2, 3)] {
            a.set(s, c, false);
        }
        for (s, c) in [(0, 4), (1, 4)] {
            b.set(s, c, false);
        }
        assert!((switching_cost(&a, &b, 0.3, 162.0) - 145.8).abs() < 1e-9);
    }

    fn state_with(config: OnOffConfig, cells: [CellObservation; CELLS]) -> StationState {
        StationState {
            step: 0,
            cells,
            config,
        }
    }

    #[test]
    fn station_power_all_off_and_all_on() {
        let set = CarrierSet::uniform(100, 0.5, 5.0, 100.0, 200.0);
        let off = OnOffConfig::all_off();
        let s = state_with(off, [CellObservation::off(); CELLS]);
        assert_eq!(station_power(&s, &off, &set, 0.3, 162.0).unwrap(), 75.0);

        let on = OnOffConfig::all_on();
        let cells = [CellObservation {
            on: true,
            ..CellObservation::off()
        }; CELLS];
        let s = state_with(on, cells);
        assert_eq!(station_power(&s, &on, &set, 0.3, 162.0).unwrap(), 1500.0);
    }

    #[test]
    fn station_power_mixed_fixture_by_hand() {
        // sector 0: carrier 0 at load 0.4, carrier 2 switched on at load 0.1,
        // everything else off. Default profiles.
        let set = CarrierSet::default();
        let mut config = OnOffConfig::all_off();
        config.set(0, 0, true);
        config.set(0, 2, true);
        let mut cells = [CellObservation::off(); CELLS];
        cells[0] = CellObservation {
            on: true,
            load: 0.4,
            ..CellObservation::off()
        };
        cells[2] = CellObservation {
            on: true,
            load: 0.1,
            ..CellObservation::off()
        };
        let mut prev = OnOffConfig::all_off();
        prev.set(0, 0, true);
        let s = state_with(config, cells);
        // 130 + 0.4*120 + 90 + 0.1*150 + 13 sleeping cells * 5 + 0.3*162
        let expected = 178.0 + 105.0 + 65.0 + 48.6;
        let got = station_power(&s, &prev, &set, 0.3, 162.0).unwrap();
        assert!((got - expected).abs() < 1e-9, "{got} vs {expected}");
    }

    #[test]
    fn station_power_rejects_inconsistent_flags() {
        let set = CarrierSet::default();
        let s = state_with(OnOffConfig::all_on(), [CellObservation::off(); CELLS]);
        assert!(station_power(&s, &OnOffConfig::all_on(), &set, 0.3, 162.0).is_err());
    }

    #[test]
    fn qos_examples() {
        let mut cells: Vec<_> = (0..12).map(|_| busy(2, 1.5)).collect();
        cells.extend((0..3).map(|_| busy(4, 0.5)));
        assert_eq!(qos_uncongested_pct(&cells, 1.0).unwrap(), 80.0);

        let idle = [CellObservation {
            on: true,
            ..CellObservation::off()
        }; CELLS];
        assert_eq!(qos_uncongested_pct(&idle, 1.0).unwrap(), 100.0);

        let four = [busy(1, 2.0), busy(3, 0.2), busy(2, 1.0), busy(5, 0.9)];
        assert_eq!(qos_uncongested_pct(&four, 1.0).unwrap(), 50.0);

        assert!(qos_uncongested_pct(&four, 0.0).is_err());
    }

    #[test]
    fn handover_examples() {
        let mut a = [0u32; CELLS];
        let mut b = [0u32; CELLS];
        assert_eq!(handover_count(&a, &a).unwrap(), 0);
        a[0] = 3;
        a[1] = 2;
        b[0] = 1;
        b[1] = 4;
        assert_eq!(handover_count(&a, &b).unwrap(), 2);

        let mut a = [0u32; CELLS];
        let mut b = [0u32; CELLS];
        a[0] = 5;
        b[1] = 3;
        b[2] = 2;
        assert_eq!(handover_count(&a, &b).unwrap(), 5);
        assert!(handover_count(&a[..3], &b).is_err());
        // odd totals round half up
        assert_eq!(handover_count(&[1], &[0]).unwrap(), 1);
    }

    #[test]
    fn all_off_state_with_same_prev_has_no_switch_cost() {
        let set = CarrierSet::default();
        let cfg = apply_action(Action::new(0, Mode::FourCell).unwrap());
        let mut cells = [CellObservation::off(); CELLS];
        for s in 0..3 {
            cells[s * CARRIERS].on = true;
        }
        let st = state_with(cfg, cells);
        let p = station_power(&st, &cfg, &set, 0.3, 162.0).unwrap();
        assert!((p - (3.0 * 130.0 + 12.0 * 5.0)).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn cell_power_monotone_in_load(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let p = profile(5.0, 90.0, 150.0);
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(cell_power(true, lo, &p, false, 0.3, 162.0).unwrap()
                <= cell_power(true, hi, &p, false, 0.3, 162.0).unwrap());
        }

        #[test]
        fn switching_cost_round_trip_nonnegative(a in any::<[bool; CELLS]>(), b in any::<[bool; CELLS]>()) {
            let (a, b) = (OnOffConfig(a), OnOffConfig(b));
            prop_assert_eq!(switching_cost(&a, &a, 0.3, 162.0), 0.0);
            prop_assert!(switching_cost(&a, &b, 0.3, 162.0) + switching_cost(&b, &a, 0.3, 162.0) >= 0.0);
        }

        #[test]
        fn handover_symmetric(a in proptest::array::uniform15(0u32..50), b in proptest::array::uniform15(0u32..50)) {
            prop_assert_eq!(handover_count(&a, &b).unwrap(), handover_count(&b, &a).unwrap());
        }

        #[test]
        fn qos_order_invariant(
            cells in proptest::collection::vec((0u32..6, 0.0f64..3.0, any::<bool>()), 1..15),
            seed in any::<u64>(),
        ) {
            let obs: Vec<CellObservation> = cells
                .iter()
                .map(|&(ue, rate, on)| CellObservation { on, ..busy(ue, rate) })
                .collect();
            let mut shuffled = obs.clone();
            use rand::{seq::SliceRandom, SeedableRng};
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(
                qos_uncongested_pct(&obs, 1.0).unwrap(),
                qos_uncongested_pct(&shuffled, 1.0).unwrap()
            );
        }
    }
}
