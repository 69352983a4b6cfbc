use serde::{Deserialize, Serialize};

use crate::netmodel::{CarrierSet, OnOffConfig, StationState, CARRIERS, CELLS, SECTORS};

/// Numeric traffic of one cell; fractional when averaged over runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellTraffic {
    pub ue: f64,
    /// Mbps.
    pub tp: f64,
    pub load: f64,
}

/// Estimator input: per-cell traffic plus the configuration entering a step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrafficSnapshot {
    pub step: usize,
    pub cells: [CellTraffic; CELLS],
    pub config: OnOffConfig,
}

impl From<&StationState> for TrafficSnapshot {
    fn from(s: &StationState) -> Self {
        TrafficSnapshot {
            step: s.step,
            cells: std::array::from_fn(|c| CellTraffic {
                ue: s.cells[c].ue_count as f64,
                tp: s.cells[c].throughput,
                load: s.cells[c].load,
            }),
            config: s.config,
        }
    }
}

impl TrafficSnapshot {
    /// The same per-sector traffic carried by `config` instead: sector totals
    /// are spread over the on cells in proportion to their capacity.
    pub fn reconfigured(&self, config: OnOffConfig, profiles: &CarrierSet) -> TrafficSnapshot {
        let mut cells = [CellTraffic::default(); CELLS];
        for sector in 0..SECTORS {
            let row = sector * CARRIERS..(sector + 1) * CARRIERS;
            let ue: f64 = self.cells[row.clone()].iter().map(|c| c.ue).sum();
            let tp: f64 = self.cells[row].iter().map(|c| c.tp).sum();
            let cap: f64 = (0..CARRIERS)
                .filter(|&j| config.is_on(sector, j))
                .map(|j| profiles.get(j).capacity())
                .sum();
            for j in (0..CARRIERS).filter(|&j| config.is_on(sector, j)) {
                let p = profiles.get(j);
                let share = p.capacity() / cap;
                let cell_tp = tp * share;
                cells[sector * CARRIERS + j] = CellTraffic {
                    ue: ue * share,
                    tp: cell_tp,
                    load: (cell_tp / p.capacity()).min(1.0),
                };
            }
        }
        TrafficSnapshot {
            step: self.step,
            cells,
            config,
        }
    }
}
