use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::{Action, OnOffConfig, CELLS, SWITCHABLE};
use crate::simkernel::TrafficSnapshot;

/// Per-cell features: UE count, throughput, load ratio, on bit.
pub const PER_CELL: usize = 4;
pub const STATE_FEATURES: usize = CELLS * PER_CELL;
/// Input width of the power and QoS networks.
pub const FEATURES: usize = STATE_FEATURES + SWITCHABLE;
/// Input width of one handover-window element: features plus the previous
/// configuration bits.
pub const SEQ_FEATURES: usize = FEATURES + CELLS;

/// Raw (unscaled) state features of a snapshot.
pub fn raw_state(snap: &TrafficSnapshot) -> [f64; STATE_FEATURES] {
    let mut out = [0.0; STATE_FEATURES];
    for (c, cell) in snap.cells.iter().enumerate() {
        let on = snap.config.bits()[c];
        out[c * PER_CELL] = cell.ue;
        out[c * PER_CELL + 1] = cell.tp;
        out[c * PER_CELL + 2] = cell.load;
        out[c * PER_CELL + 3] = on as u8 as f64;
    }
    out
}

pub fn config_bits(config: &OnOffConfig) -> [f64; CELLS] {
    config.bits().map(|b| b as u8 as f64)
}

/// Min-max scaling of the state features, fitted on training data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub feature_min: Vec<f64>,
    pub feature_max: Vec<f64>,
}

impl NormStats {
    pub fn fit<'a>(rows: impl IntoIterator<Item = &'a [f64; STATE_FEATURES]>) -> Result<Self> {
        let mut lo = vec![f64::INFINITY; STATE_FEATURES];
        let mut hi = vec![f64::NEG_INFINITY; STATE_FEATURES];
        let mut any = false;
        for row in rows {
            any = true;
            for (k, &v) in row.iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        if !any {
            return Err(Error::invalid("norm stats: no rows"));
        }
        Ok(NormStats {
            feature_min: lo,
            feature_max: hi,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.feature_min.len() == STATE_FEATURES
            && self.feature_max.len() == STATE_FEATURES
            && self
                .feature_min
                .iter()
                .zip(&self.feature_max)
                .all(|(lo, hi)| lo.is_finite() && hi.is_finite() && lo <= hi);
        if ok {
            Ok(())
        } else {
            Err(Error::NotFitted("feature normalization"))
        }
    }

    fn scale(&self, k: usize, v: f64) -> f64 {
        let span = self.feature_max[k] - self.feature_min[k];
        if span <= 0.0 {
            return 0.0;
        }
        ((v - self.feature_min[k]) / span).clamp(0.0, 1.0)
    }

    pub fn scale_state(&self, raw: &[f64; STATE_FEATURES], out: &mut [f64]) {
        for (k, &v) in raw.iter().enumerate() {
            out[k] = self.scale(k, v);
        }
    }
}

/// Scaled features of `(snapshot, action)`; action bits stay raw.
pub fn featurize(
    snap: &TrafficSnapshot,
    action: Action,
    stats: Option<&NormStats>,
) -> Result<[f64; FEATURES]> {
    let stats = stats.ok_or(Error::NotFitted("feature normalization"))?;
    stats.validate()?;
    let mut out = [0.0; FEATURES];
    stats.scale_state(&raw_state(snap), &mut out);
    out[STATE_FEATURES..].copy_from_slice(&action.bits());
    Ok(out)
}

/// Affine map of a regression target to `[0, 1]` on training data.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetScale {
    pub min: f64,
    pub max: f64,
}

impl TargetScale {
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(v), hi.max(v))
            });
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid("target scale: no finite targets"));
        }
        Ok(TargetScale { min: lo, max: hi })
    }

    fn span(&self) -> f64 {
        let s = self.max - self.min;
        if s > 0.0 {
            s
        } else {
            1.0
        }
    }

    pub fn encode(&self, y: f64) -> f64 {
        (y - self.min) / self.span()
    }

    pub fn decode(&self, z: f64) -> f64 {
        self.min + z * self.span()
    }
}
