use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{CARRIERS, CELLS, SECTORS, SWITCHABLE};
use crate::error::{Error, Result};

/// A cell of one station: a (sector, carrier) pair. The flat index is
/// `sector * CARRIERS + carrier`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CellId {
    pub station: usize,
    pub sector: usize,
    pub carrier: usize,
}

impl CellId {
    pub fn new(station: usize, sector: usize, carrier: usize) -> Result<Self> {
        if sector >= SECTORS || carrier >= CARRIERS {
            return Err(Error::invalid(format!(
                "cell (sector {sector}, carrier {carrier}) outside topology"
            )));
        }
        Ok(CellId {
            station,
            sector,
            carrier,
        })
    }

    pub fn index(&self) -> usize {
        self.sector * CARRIERS + self.carrier
    }

    pub fn from_index(station: usize, index: usize) -> Self {
        debug_assert!(index < CELLS);
        CellId {
            station,
            sector: index / CARRIERS,
            carrier: index % CARRIERS,
        }
    }
}

/// Which carriers the controller is allowed to switch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Only carriers 3 and 4 are switchable.
    #[serde(rename = "2cell")]
    TwoCell,
    /// Carriers 1 through 4 are switchable.
    #[serde(rename = "4cell")]
    FourCell,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::TwoCell => "2cell",
            Mode::FourCell => "4cell",
        }
    }

    /// Mask bits that must stay set in this mode.
    pub fn forced_mask(&self) -> u8 {
        match self {
            Mode::TwoCell => 0b1100,
            Mode::FourCell => 0,
        }
    }

    pub fn is_switchable(&self, carrier: usize) -> bool {
        match self {
            Mode::TwoCell => carrier >= 3,
            Mode::FourCell => carrier >= 1,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2cell" => Ok(Mode::TwoCell),
            "4cell" => Ok(Mode::FourCell),
            other => Err(Error::invalid(format!("unknown mode {other:?}"))),
        }
    }
}

/// On/off bit per cell of a station.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OnOffConfig(pub [bool; CELLS]);

impl OnOffConfig {
    pub fn all_on() -> Self {
        OnOffConfig([true; CELLS])
    }

    pub fn all_off() -> Self {
        OnOffConfig([false; CELLS])
    }

    pub fn is_on(&self, sector: usize, carrier: usize) -> bool {
        self.0[sector * CARRIERS + carrier]
    }

    pub fn set(&mut self, sector: usize, carrier: usize, on: bool) {
        self.0[sector * CARRIERS + carrier] = on;
    }

    pub fn bits(&self) -> &[bool; CELLS] {
        &self.0
    }

    pub fn count_on(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    /// Number of cells that are off here and on in `next`.
    pub fn switched_on_towards(&self, next: &OnOffConfig) -> usize {
        self.0
            .iter()
            .zip(next.0.iter())
            .filter(|(&a, &b)| !a && b)
            .count()
    }

    /// Carrier 0 must be on in every sector.
    pub fn has_coverage(&self) -> bool {
        (0..SECTORS).all(|i| self.is_on(i, 0))
    }
}

/// One switching decision: a mask over carriers 1..=4, replicated to all
/// three sectors. The mask reads like the string `"1010"`, carrier 1 first, so
/// carrier `k` lives at bit `4 - k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Action {
    pub mask: u8,
    pub mode: Mode,
}

impl Action {
    pub fn new(mask: u8, mode: Mode) -> Result<Self> {
        let a = Action { mask, mode };
        a.validate()?;
        Ok(a)
    }

    pub fn all_on(mode: Mode) -> Self {
        Action { mask: 0b1111, mode }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mask > 0b1111 {
            return Err(Error::InvalidAction(format!(
                "mask {} out of range",
                self.mask
            )));
        }
        let forced = self.mode.forced_mask();
        if self.mask & forced != forced {
            return Err(Error::InvalidAction(format!(
                "{self} switches a carrier that is fixed in {} mode",
                self.mode
            )));
        }
        Ok(())
    }

    /// Whether switchable carrier `carrier` (1..=4) is on.
    pub fn carrier_on(&self, carrier: usize) -> bool {
        debug_assert!((1..CARRIERS).contains(&carrier));
        self.mask & (1 << (CARRIERS - 1 - carrier)) != 0
    }

    /// Mask bits ordered carrier 1..=4, as 0/1 values.
    pub fn bits(&self) -> [f64; SWITCHABLE] {
        std::array::from_fn(|k| if self.carrier_on(k + 1) { 1.0 } else { 0.0 })
    }

    pub fn cells_off(&self) -> u32 {
        SWITCHABLE as u32 - self.mask.count_ones()
    }

    /// Position of this action in `action_space(self.mode)`.
    pub fn index(&self) -> usize {
        match self.mode {
            Mode::FourCell => self.mask as usize,
            Mode::TwoCell => (self.mask - 0b1100) as usize,
        }
    }

    /// Parses `"1010"` style masks.
    pub fn parse(s: &str, mode: Mode) -> Result<Self> {
        if s.len() != SWITCHABLE || !s.bytes().all(|b| b == b'0' || b == b'1') {
            return Err(Error::InvalidAction(format!("malformed mask {s:?}")));
        }
        let mask = u8::from_str_radix(s, 2).map_err(|e| Error::InvalidAction(e.to_string()))?;
        Action::new(mask, mode)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04b}", self.mask)
    }
}

/// All actions of a mode in canonical order (mask ascending).
pub fn action_space(mode: Mode) -> Vec<Action> {
    let forced = mode.forced_mask();
    (0u8..16)
        .filter(|m| m & forced == forced)
        .map(|mask| Action { mask, mode })
        .collect()
}

/// Expands an action into the full station configuration.
pub fn apply_action(action: Action) -> OnOffConfig {
    let mut cfg = OnOffConfig::all_off();
    for sector in 0..SECTORS {
        cfg.set(sector, 0, true);
        for carrier in 1..CARRIERS {
            cfg.set(sector, carrier, action.carrier_on(carrier));
        }
    }
    cfg
}
