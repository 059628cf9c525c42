use std::time::Instant;

use rand::rngs::SmallRng;
use rand::SeedableRng;
use serde::Serialize;

use super::ExperimentError;
use crate::game::{Action, GameParams, GameState};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ThroughputReport {
    pub ticks: u64,
    pub seconds: f64,
    pub ticks_per_second: f64,
    pub copies: u64,
    pub copy_seconds: f64,
    pub copies_per_second: f64,
}

/// Advances random-action games, restarting on a fresh map whenever one
/// ends, for `ticks` ticks in total. Then times as many state copies.
pub fn profile_throughput(
    ticks: u64,
    planets: usize,
    seed: u64,
) -> Result<ThroughputReport, ExperimentError> {
    if ticks == 0 {
        return Err(ExperimentError::Config("ticks must be >= 1".into()));
    }
    let params = GameParams {
        num_planets: planets,
        ..GameParams::default()
    };
    params.validate()?;
    let mut rng = SmallRng::seed_from_u64(seed);
    let mut map_seed = seed;
    let start_state = GameState::generate_mirrored(&params, map_seed)?;
    // Pre-draw actions so the timed loop measures the simulator only.
    let actions: Vec<(Action, Action)> = (0..4096)
        .map(|_| (Action::random(&mut rng), Action::random(&mut rng)))
        .collect();

    let mut state = start_state.clone();
    let started = Instant::now();
    for t in 0..ticks {
        if state.is_terminal() {
            map_seed = map_seed.wrapping_add(1);
            state = GameState::generate_mirrored(&params, map_seed)?;
        }
        let (a, b) = actions[(t & 4095) as usize];
        state.next_state(a, b)?;
    }
    let seconds = started.elapsed().as_secs_f64().max(1e-9);
    std::hint::black_box(&state);

    let copies = ticks.min(10_000_000);
    let mut copy = start_state.clone();
    let started = Instant::now();
    for _ in 0..copies {
        copy.clone_from(std::hint::black_box(&start_state));
        std::hint::black_box(&copy);
    }
    let copy_seconds = started.elapsed().as_secs_f64().max(1e-9);

    Ok(ThroughputReport {
        ticks,
        seconds,
        ticks_per_second: ticks as f64 / seconds,
        copies,
        copy_seconds,
        copies_per_second: copies as f64 / copy_seconds,
    })
}
