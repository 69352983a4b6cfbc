use std::collections::BTreeMap;

use super::UESession;
use crate::netmodel::{CarrierProfile, CarrierSet, CellId, OnOffConfig, CARRIERS, SECTORS};

/// Session id to serving cell.
pub type Assignment = BTreeMap<u64, CellId>;

/// Greedy association in id order: each session joins the on cell of its
/// sector with the most free PRBs that can still fit its request (ties go to
/// the lower carrier). Sessions that fit nowhere fall back to carrier 0.
pub fn associate(
    sessions: &[UESession],
    config: &OnOffConfig,
    profiles: &CarrierSet,
) -> Assignment {
    let mut order: Vec<&UESession> = sessions.iter().collect();
    order.sort_by_key(|s| s.id);
    let mut free = [[0i64; CARRIERS]; SECTORS];
    for (sector, row) in free.iter_mut().enumerate() {
        for (carrier, f) in row.iter_mut().enumerate() {
            if config.is_on(sector, carrier) {
                *f = profiles.get(carrier).max_prbs as i64;
            }
        }
    }
    let mut out = Assignment::new();
    for s in order {
        let row = &mut free[s.sector];
        let mut best: Option<(usize, i64)> = None;
        for carrier in 0..CARRIERS {
            if !config.is_on(s.sector, carrier) {
                continue;
            }
            let need = profiles.get(carrier).prbs_for(s.demand) as i64;
            if row[carrier] < need {
                continue;
            }
            if best.is_none_or(|(_, f)| row[carrier] > f) {
                best = Some((carrier, row[carrier]));
            }
        }
        let carrier = match best {
            Some((c, _)) => {
                row[c] -= profiles.get(c).prbs_for(s.demand) as i64;
                c
            }
            None => 0,
        };
        out.insert(
            s.id,
            CellId {
                station: 0,
                sector: s.sector,
                carrier,
            },
        );
    }
    out
}

/// PRBs granted to each session of one cell, in input order. Requests are met
/// in full when they fit; otherwise capacity is shared by largest remainder.
pub fn allocate_prbs(sessions: &[&UESession], profile: &CarrierProfile) -> Vec<u32> {
    let requests: Vec<u64> = sessions
        .iter()
        .map(|s| profile.prbs_for(s.demand) as u64)
        .collect();
    let total: u64 = requests.iter().sum();
    let cap = profile.max_prbs as u64;
    if total <= cap {
        return requests.iter().map(|&r| r as u32).collect();
    }
    let mut grants: Vec<u64> = requests.iter().map(|&r| r * cap / total).collect();
    let mut left = cap - grants.iter().sum::<u64>();
    let mut by_remainder: Vec<usize> = (0..requests.len()).collect();
    // remainder numerators share the denominator `total`
    by_remainder.sort_by(|&a, &b| {
        let ra = requests[a] * cap % total;
        let rb = requests[b] * cap % total;
        rb.cmp(&ra).then(sessions[a].id.cmp(&sessions[b].id))
    });
    for &i in &by_remainder {
        if left == 0 {
            break;
        }
        grants[i] += 1;
        left -= 1;
    }
    grants.into_iter().map(|g| g as u32).collect()
}
