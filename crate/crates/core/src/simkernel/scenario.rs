use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Steps in one simulated day (15 minutes each).
pub const STEPS_PER_DAY: usize = 96;

/// One daily traffic pattern: a base UE population plus Gaussian peaks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u32,
    pub base_ue: f64,
    pub peak_amp: f64,
    /// Hours of day at which traffic peaks.
    pub peak_hours: [f64; 2],
    /// Standard deviation of each peak, hours.
    pub peak_width: f64,
    /// Per-step noise on the arrival deficit, UEs.
    pub noise_sd: f64,
    /// Mean demanded rate per UE, Mbps.
    pub demand_mean: f64,
    pub demand_sd: f64,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<()> {
        let vals = [
            self.base_ue,
            self.peak_amp,
            self.peak_hours[0],
            self.peak_hours[1],
            self.peak_width,
            self.noise_sd,
            self.demand_mean,
            self.demand_sd,
        ];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "scenario {}: non-finite field",
                self.id
            )));
        }
        if self.base_ue < 0.0 || self.peak_amp < 0.0 || self.noise_sd < 0.0 || self.demand_sd < 0.0
        {
            return Err(Error::invalid(format!(
                "scenario {}: negative magnitude",
                self.id
            )));
        }
        if self.demand_mean <= 0.0 || self.peak_width <= 0.0 {
            return Err(Error::invalid(format!(
                "scenario {}: demand_mean and peak_width must be positive",
                self.id
            )));
        }
        Ok(())
    }

    /// Expected UEs summed over the day.
    pub fn daily_volume(&self) -> f64 {
        (0..STEPS_PER_DAY).map(|t| expected_ue_count(self, t)).sum()
    }
}

/// Noise-free expected number of active UEs at step `t`.
pub fn expected_ue_count(spec: &ScenarioSpec, t: usize) -> f64 {
    let hour = t as f64 / 4.0;
    let w2 = 2.0 * spec.peak_width * spec.peak_width;
    let bumps: f64 = spec
        .peak_hours
        .iter()
        .map(|&p| (-(hour - p) * (hour - p) / w2).exp())
        .sum();
    spec.base_ue + spec.peak_amp * bumps
}

/// `count` scenarios with volume rising linearly from (10, 20) to (45, 90).
pub fn default_scenarios(count: usize, master_seed: u64) -> Vec<ScenarioSpec> {
    use crate::seed::{derive_seed, domain};
    (0..count)
        .map(|k| {
            let frac = if count > 1 {
                k as f64 / (count - 1) as f64
            } else {
                0.0
            };
            ScenarioSpec {
                id: k as u32 + 1,
                base_ue: 10.0 + 35.0 * frac,
                peak_amp: 20.0 + 70.0 * frac,
                peak_hours: [12.0, 20.0],
                peak_width: 2.5,
                noise_sd: 2.0,
                demand_mean: 2.0,
                demand_sd: 0.5,
                seed: derive_seed(master_seed, &[domain::SCENARIO, k as u64]),
            }
        })
        .collect()
}
