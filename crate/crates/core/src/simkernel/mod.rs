//! Synthetic single-station traffic simulator: diurnal scenarios, UE session
//! lifecycle, greedy cell association, PRB allocation and the step transition.

mod assoc;
mod env;
mod episode;
mod scenario;
mod sessions;
mod traffic;

pub use assoc::{allocate_prbs, associate, Assignment};
pub use env::{step, SimParams, SimState};
pub use episode::{mean_traffic, run_episode, Policy, TraceLine, TraceRecord};
pub use scenario::{default_scenarios, expected_ue_count, ScenarioSpec, STEPS_PER_DAY};
pub use sessions::{evolve_sessions, UESession, MEAN_LIFETIME_STEPS};
pub use traffic::{CellTraffic, TrafficSnapshot};
