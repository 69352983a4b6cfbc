use serde::{Deserialize, Serialize};

use super::{OnOffConfig, CELLS};

/// What one cell reports at the end of a step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CellObservation {
    pub ue_count: u32,
    /// IP throughput, Mbps.
    pub throughput: f64,
    pub allocated_prbs: u32,
    /// `allocated_prbs / max_prbs`.
    pub load: f64,
    pub on: bool,
    /// Successfully delivered data over the step, megabits.
    pub delivered: f64,
    /// Seconds of the step during which the cell was transmitting.
    pub tx_time: f64,
}

impl CellObservation {
    pub fn off() -> Self {
        CellObservation::default()
    }

    /// Achieved throughput per served UE (Mbps), or `None` for an idle cell.
    pub fn per_ue_throughput(&self) -> Option<f64> {
        (self.on && self.tx_time > 0.0 && self.ue_count > 0)
            .then(|| self.delivered / self.tx_time / self.ue_count as f64)
    }
}

/// Observation of a whole station, used as the decision input for `step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationState {
    pub step: usize,
    pub cells: [CellObservation; CELLS],
    pub config: OnOffConfig,
}

impl StationState {
    pub fn ue_counts(&self) -> [u32; CELLS] {
        std::array::from_fn(|c| self.cells[c].ue_count)
    }

    pub fn total_ues(&self) -> u32 {
        self.cells.iter().map(|c| c.ue_count).sum()
    }

    /// Per-cell on flags agree with `config`.
    pub fn is_consistent(&self) -> bool {
        self.cells
            .iter()
            .zip(self.config.bits())
            .all(|(c, &on)| c.on == on)
    }
}
