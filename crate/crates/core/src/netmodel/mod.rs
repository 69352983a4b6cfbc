//! Station topology, on/off configurations and the closed-form station
//! metrics: cell power, switching cost, uncongested-cell QoS and handovers.

mod metrics;
mod profile;
mod state;
mod topology;

pub use metrics::{
    cell_power, handover_count, load_ratio, qos_uncongested_pct, station_power, switching_cost,
    StepMetrics,
};
pub use profile::{CarrierProfile, CarrierSet};
pub use state::{CellObservation, StationState};
pub use topology::{action_space, apply_action, Action, CellId, Mode, OnOffConfig};

/// Sectors per base station.
pub const SECTORS: usize = 3;
/// Frequency carriers per sector.
pub const CARRIERS: usize = 5;
/// Cells per base station.
pub const CELLS: usize = SECTORS * CARRIERS;
/// Carriers that can be switched (all but the coverage carrier 0).
pub const SWITCHABLE: usize = CARRIERS - 1;
