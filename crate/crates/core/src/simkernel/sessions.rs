use rand::Rng;
use rand_distr::{Distribution, Geometric, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{expected_ue_count, ScenarioSpec};
use crate::netmodel::SECTORS;

/// Mean session lifetime in steps.
pub const MEAN_LIFETIME_STEPS: f64 = 8.0;

/// A UE connection. Active during steps `arrival_step..departure_step`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UESession {
    pub id: u64,
    pub sector: usize,
    /// Demanded rate, Mbps.
    pub demand: f64,
    pub arrival_step: usize,
    pub departure_step: usize,
}

impl UESession {
    pub fn is_active(&self, t: usize) -> bool {
        self.arrival_step <= t && t < self.departure_step
    }
}

/// Drops sessions that have departed by step `t` and spawns new ones so the
/// population tracks the scenario's expected count. New ids start at `next_id`.
pub fn evolve_sessions<R: Rng + ?Sized>(
    sessions: &[UESession],
    t: usize,
    next_id: u64,
    spec: &ScenarioSpec,
    rng: &mut R,
) -> Vec<UESession> {
    let mut out: Vec<UESession> = sessions
        .iter()
        .filter(|s| s.departure_step > t)
        .cloned()
        .collect();
    let noise = if spec.noise_sd > 0.0 {
        Normal::new(0.0, spec.noise_sd)
            .expect("validated noise_sd")
            .sample(rng)
    } else {
        0.0
    };
    let deficit = (expected_ue_count(spec, t) - out.len() as f64 + noise).max(0.0);
    let n = poisson(deficit, rng);
    for k in 0..n {
        out.push(spawn(next_id + k, t, spec, rng));
    }
    out
}

/// Draws `n` fresh sessions at step `t` (used to warm-start an episode).
pub(crate) fn spawn_initial<R: Rng + ?Sized>(
    expected: f64,
    t: usize,
    spec: &ScenarioSpec,
    rng: &mut R,
) -> Vec<UESession> {
    let n = poisson(expected.max(0.0), rng);
    (0..n).map(|k| spawn(k, t, spec, rng)).collect()
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean)
        .expect("positive finite mean")
        .sample(rng) as u64
}

fn spawn<R: Rng + ?Sized>(id: u64, t: usize, spec: &ScenarioSpec, rng: &mut R) -> UESession {
    let sector = rng.gen_range(0..SECTORS);
    let raw = if spec.demand_sd > 0.0 {
        Normal::new(spec.demand_mean, spec.demand_sd)
            .expect("validated demand")
            .sample(rng)
    } else {
        spec.demand_mean
    };
    let lo = (spec.demand_mean - 3.0 * spec.demand_sd).max(0.1 * spec.demand_mean);
    let demand = raw.clamp(lo, spec.demand_mean + 3.0 * spec.demand_sd);
    // failures before the first success, so lifetime = 1 + draw has mean 1/p
    let extra = Geometric::new(1.0 / MEAN_LIFETIME_STEPS)
        .expect("valid probability")
        .sample(rng) as usize;
    UESession {
        id,
        sector,
        demand,
        arrival_step: t,
        departure_step: t + 1 + extra,
    }
}
