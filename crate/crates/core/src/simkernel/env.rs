use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::assoc::{allocate_prbs, associate, Assignment};
use super::sessions::{evolve_sessions, spawn_initial, UESession};
use super::{expected_ue_count, ScenarioSpec, STEPS_PER_DAY};
use crate::error::{Error, Result};
use crate::netmodel::{
    apply_action, handover_count, qos_uncongested_pct, station_power, Action, CarrierSet,
    CellObservation, OnOffConfig, StationState, StepMetrics, CARRIERS, CELLS,
};

/// Physical constants of the environment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    /// Fraction of `p_gamma` paid per cell switched on.
    pub beta: f64,
    /// Reference switching power, W.
    pub p_gamma: f64,
    /// Per-UE throughput (Mbps) below which a cell is congested.
    pub tau: f64,
    /// Step duration, seconds.
    pub step_seconds: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            beta: 0.3,
            p_gamma: 162.0,
            tau: 1.0,
            step_seconds: 900.0,
        }
    }
}

/// Mutable episode state. Owns its random stream.
#[derive(Clone, Debug)]
pub struct SimState {
    pub t: usize,
    pub sessions: Vec<UESession>,
    pub assignment: Assignment,
    pub config: OnOffConfig,
    pub prev_counts: [u32; CELLS],
    next_id: u64,
    rng: ChaCha8Rng,
}

impl SimState {
    /// Warm-starts an episode: the step-0 population is drawn and served by an
    /// all-on station. Returns the state and the first observation.
    pub fn new(
        spec: &ScenarioSpec,
        run_seed: u64,
        profiles: &CarrierSet,
        params: &SimParams,
    ) -> (SimState, StationState) {
        let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
        let sessions = spawn_initial(expected_ue_count(spec, 0), 0, spec, &mut rng);
        let next_id = sessions.len() as u64;
        let config = OnOffConfig::all_on();
        let assignment = associate(&sessions, &config, profiles);
        let obs = observe(0, &sessions, &assignment, config, profiles, params);
        let sim = SimState {
            t: 0,
            prev_counts: obs.ue_counts(),
            sessions,
            assignment,
            config,
            next_id,
            rng,
        };
        (sim, obs)
    }
}

/// Advances one step under `action`. The returned observation is the input
/// for the next decision (its `step` is `t + 1`); the metrics are those
/// realized during step `t`.
pub fn step(
    sim: &mut SimState,
    action: Action,
    spec: &ScenarioSpec,
    profiles: &CarrierSet,
    params: &SimParams,
) -> Result<(StationState, StepMetrics)> {
    if sim.t >= STEPS_PER_DAY {
        return Err(Error::EpisodeFinished(sim.t));
    }
    action.validate()?;
    let prev_config = sim.config;
    let config = apply_action(action);
    let sessions = evolve_sessions(&sim.sessions, sim.t, sim.next_id, spec, &mut sim.rng);
    sim.next_id = sessions
        .iter()
        .map(|s| s.id + 1)
        .max()
        .unwrap_or(0)
        .max(sim.next_id);
    let assignment = associate(&sessions, &config, profiles);
    let obs = observe(sim.t + 1, &sessions, &assignment, config, profiles, params);

    let power = station_power(&obs, &prev_config, profiles, params.beta, params.p_gamma)?;
    let qos = qos_uncongested_pct(&obs.cells, params.tau)?;
    let counts = obs.ue_counts();
    let handovers = handover_count(&sim.prev_counts, &counts)?;

    sim.t += 1;
    sim.sessions = sessions;
    sim.assignment = assignment;
    sim.config = config;
    sim.prev_counts = counts;
    Ok((
        obs,
        StepMetrics {
            power,
            qos,
            handovers,
        },
    ))
}

fn observe(
    step: usize,
    sessions: &[UESession],
    assignment: &Assignment,
    config: OnOffConfig,
    profiles: &CarrierSet,
    params: &SimParams,
) -> StationState {
    let mut per_cell: Vec<Vec<&UESession>> = vec![Vec::new(); CELLS];
    let mut sorted: Vec<&UESession> = sessions.iter().collect();
    sorted.sort_by_key(|s| s.id);
    for s in sorted {
        per_cell[assignment[&s.id].index()].push(s);
    }
    let cells = std::array::from_fn(|c| {
        if !config.0[c] {
            return CellObservation::off();
        }
        let profile = profiles.get(c % CARRIERS);
        let granted: u32 = allocate_prbs(&per_cell[c], profile).iter().sum();
        let ue_count = per_cell[c].len() as u32;
        let throughput = granted as f64 * profile.prb_rate;
        CellObservation {
            ue_count,
            throughput,
            allocated_prbs: granted,
            load: granted as f64 / profile.max_prbs as f64,
            on: true,
            delivered: throughput * params.step_seconds,
            tx_time: if ue_count > 0 {
                params.step_seconds
            } else {
                0.0
            },
        }
    });
    StationState {
        step,
        cells,
        config,
    }
}
