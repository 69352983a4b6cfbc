use serde::{Deserialize, Serialize};

use super::CARRIERS;
use crate::error::{Error, Result};

/// Per-carrier constants shared by every cell on that frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CarrierProfile {
    pub carrier: usize,
    /// Total PRBs of a cell on this carrier.
    pub max_prbs: u32,
    /// Mbps delivered by one PRB.
    pub prb_rate: f64,
    /// Sleep power (W) of an off cell.
    pub p_sleep: f64,
    /// Standby power (W) of an on cell at zero load.
    pub p_standby: f64,
    /// Load-proportional power (W) at full load.
    pub p_load: f64,
    /// 0 is the widest-coverage carrier.
    pub coverage_rank: u32,
}

impl CarrierProfile {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.prb_rate, self.p_sleep, self.p_standby, self.p_load]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::invalid(format!(
                "carrier {}: non-finite constant",
                self.carrier
            )));
        }
        if self.max_prbs == 0 || self.prb_rate <= 0.0 {
            return Err(Error::invalid(format!(
                "carrier {}: max_prbs and prb_rate must be positive",
                self.carrier
            )));
        }
        if self.p_sleep < 0.0 || self.p_standby < self.p_sleep || self.p_load < 0.0 {
            return Err(Error::invalid(format!(
                "carrier {}: require p_standby >= p_sleep >= 0 and p_load >= 0",
                self.carrier
            )));
        }
        Ok(())
    }

    /// Cell capacity in Mbps.
    pub fn capacity(&self) -> f64 {
        self.max_prbs as f64 * self.prb_rate
    }

    /// PRBs needed to serve `demand` Mbps on this carrier.
    pub fn prbs_for(&self, demand: f64) -> u32 {
        (demand / self.prb_rate).ceil().max(0.0) as u32
    }
}

/// The five carrier profiles of a station, indexed by carrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<CarrierProfile>", into = "Vec<CarrierProfile>")]
pub struct CarrierSet([CarrierProfile; CARRIERS]);

impl CarrierSet {
    pub fn new(profiles: Vec<CarrierProfile>) -> Result<Self> {
        let arr: [CarrierProfile; CARRIERS] = profiles.try_into().map_err(|v: Vec<_>| {
            Error::invalid(format!(
                "expected {CARRIERS} carrier profiles, got {}",
                v.len()
            ))
        })?;
        for (j, p) in arr.iter().enumerate() {
            if p.carrier != j {
                return Err(Error::invalid(format!(
                    "carrier profile at position {j} declares carrier {}",
                    p.carrier
                )));
            }
            p.validate()?;
        }
        if arr[0].coverage_rank != 0 {
            return Err(Error::invalid("carrier 0 must have coverage_rank 0"));
        }
        Ok(CarrierSet(arr))
    }

    pub fn get(&self, carrier: usize) -> &CarrierProfile {
        &self.0[carrier]
    }

    pub fn iter(&self) -> impl Iterator<Item = &CarrierProfile> {
        self.0.iter()
    }

    /// Uniform profile set, handy for fixtures.
    pub fn uniform(
        max_prbs: u32,
        prb_rate: f64,
        p_sleep: f64,
        p_standby: f64,
        p_load: f64,
    ) -> Self {
        let profiles = (0..CARRIERS)
            .map(|j| CarrierProfile {
                carrier: j,
                max_prbs,
                prb_rate,
                p_sleep,
                p_standby,
                p_load,
                coverage_rank: j as u32,
            })
            .collect();
        Self::new(profiles).expect("uniform profile set is valid")
    }
}

impl Default for CarrierSet {
    /// Low carriers draw more standby power and less per unit of load. Carrier 0
    /// is a narrow coverage layer; carriers 3 and 4 carry most of the capacity.
    fn default() -> Self {
        const P_STANDBY: [f64; CARRIERS] = [130.0, 100.0, 90.0, 85.0, 80.0];
        const P_LOAD: [f64; CARRIERS] = [120.0, 140.0, 150.0, 160.0, 170.0];
        const MAX_PRBS: [u32; CARRIERS] = [50, 100, 100, 100, 100];
        const PRB_RATE: [f64; CARRIERS] = [0.1, 0.375, 0.375, 0.375, 0.375];
        let profiles = (0..CARRIERS)
            .map(|j| CarrierProfile {
                carrier: j,
                max_prbs: MAX_PRBS[j],
                prb_rate: PRB_RATE[j],
                p_sleep: 5.0,
                p_standby: P_STANDBY[j],
                p_load: P_LOAD[j],
                coverage_rank: j as u32,
            })
            .collect();
        Self::new(profiles).expect("default profile set is valid")
    }
}

impl TryFrom<Vec<CarrierProfile>> for CarrierSet {
    type Error = Error;
    fn try_from(v: Vec<CarrierProfile>) -> Result<Self> {
        CarrierSet::new(v)
    }
}

impl From<CarrierSet> for Vec<CarrierProfile> {
    fn from(s: CarrierSet) -> Self {
        s.0.into()
    }
}
