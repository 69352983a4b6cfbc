//! Seed derivation for independent streams (scenario, run, evaluation, ...).

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

fn splitmix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `master` with an ordered list of stream coordinates.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts
        .iter()
        .fold(splitmix(master.wrapping_add(GOLDEN)), |acc, &p| {
            splitmix(acc ^ splitmix(p.wrapping_add(GOLDEN)))
        })
}

/// Stream tags keep training and evaluation seeds apart.
pub mod domain {
    pub const SCENARIO: u64 = 1;
    pub const COLLECT: u64 = 2;
    pub const EVALUATE: u64 = 3;
    pub const TRAIN: u64 = 4;
    pub const POLICY: u64 = 5;
}
