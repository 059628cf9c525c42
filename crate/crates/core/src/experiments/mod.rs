//! Reproduction harness: the win/loss evaluation of a tuned agent against
//! the fixed opponent, the exhaustive sweep, the optimizer comparison, the
//! buffer-scoring ablation and the throughput probe.
//!
//! Every game's seed is derived from a master seed and a counter path (see
//! [`derive_seed`]), so parallel and serial runs produce identical numbers.

mod ablation;
mod compare;
mod profile;
mod sweep;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{InvalidRheaParams, OpponentModel, RheaAgent, RheaParams};
use crate::game::{self, GameError, GameParams};
use crate::optim::OptimizerError;
use crate::search_space::{SearchPoint, SearchSpace, SpaceError};

pub use ablation::{
    rollout_deltas, run_buffer_ablation, write_rollout_deltas_csv, AblationResult, AblationSpec,
    AblationVariant,
};
pub use compare::{
    run_optimizer_comparison, ComparisonRow, ComparisonSpec, ComparisonTable, RunOutcome,
};
pub use profile::{profile_throughput, ThroughputReport};
pub use sweep::{run_exhaustive_sweep, sweep_point_seed, SweepResult, SweepRow};

pub use crate::game::win_loss_fitness as fitness_eq1;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Agent(#[from] InvalidRheaParams),
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// SplitMix64 finalizer.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based seed split: the seed of stream `path` under `master`.
/// Identical inputs give identical seeds regardless of evaluation order.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(master), |acc, &p| {
        mix64(acc ^ mix64(p.wrapping_add(0x632B_E59B_D9B4_E019)))
    })
}

/// Stable 64-bit FNV-1a, used to turn labels into seed streams.
pub(crate) fn label_stream(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Which seat the tuned agent takes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeatPolicy {
    /// P1 on even evaluation indices, P2 on odd ones.
    #[default]
    Alternate,
    AlwaysFirst,
    AlwaysSecond,
}

impl SeatPolicy {
    pub fn tuned_is_first(self, eval_index: u64) -> bool {
        match self {
            SeatPolicy::Alternate => eval_index.is_multiple_of(2),
            SeatPolicy::AlwaysFirst => true,
            SeatPolicy::AlwaysSecond => false,
        }
    }
}

/// How a candidate configuration is scored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default)]
pub struct EvalSpec {
    pub opponent: RheaParams,
    /// Forward-model calls per decision, for both agents.
    pub agent_budget: u64,
    pub game_params: GameParams,
    pub seat_policy: SeatPolicy,
    /// Opponent model both agents use inside their rollouts.
    pub rollout_opponent: OpponentModel,
}

impl Default for EvalSpec {
    fn default() -> Self {
        EvalSpec {
            opponent: RheaParams::FIXED_OPPONENT,
            agent_budget: 2000,
            game_params: GameParams::default(),
            seat_policy: SeatPolicy::Alternate,
            rollout_opponent: OpponentModel::DoNothing,
        }
    }
}

/// Largest single-batch cost over the agent space.
const MAX_BATCH_COST: u64 = 30 * 3;

impl EvalSpec {
    pub fn validate(&self) -> Result<(), ExperimentError> {
        self.game_params.validate()?;
        self.opponent.validate()?;
        if self.agent_budget < MAX_BATCH_COST {
            return Err(ExperimentError::Config(format!(
                "agentBudget {} is below the largest evaluation batch ({MAX_BATCH_COST})",
                self.agent_budget
            )));
        }
        Ok(())
    }
}

/// Plays one game of `tuned` against the spec's opponent and returns +1 if
/// the tuned agent finishes strictly ahead, -1 otherwise. A pure function of
/// its arguments.
pub fn evaluate_params(
    tuned: &RheaParams,
    spec: &EvalSpec,
    eval_index: u64,
    seed: u64,
) -> Result<f64, ExperimentError> {
    let game_seed = derive_seed(seed, &[eval_index, 0]);
    let mut me = RheaAgent::new(
        *tuned,
        spec.rollout_opponent,
        derive_seed(seed, &[eval_index, 1]),
    );
    let mut them = RheaAgent::new(
        spec.opponent,
        spec.rollout_opponent,
        derive_seed(seed, &[eval_index, 2]),
    );
    let (mine, theirs) = if spec.seat_policy.tuned_is_first(eval_index) {
        let r = game::play_game(
            &mut me,
            &mut them,
            &spec.game_params,
            game_seed,
            spec.agent_budget,
            false,
        )?;
        (r.score1, r.score2)
    } else {
        let r = game::play_game(
            &mut them,
            &mut me,
            &spec.game_params,
            game_seed,
            spec.agent_budget,
            false,
        )?;
        (r.score2, r.score1)
    };
    Ok(fitness_eq1(mine, theirs))
}

/// [`evaluate_params`] for a point of an agent-shaped search space.
pub fn evaluate_config(
    point: &SearchPoint,
    space: &SearchSpace,
    spec: &EvalSpec,
    eval_index: u64,
    seed: u64,
) -> Result<f64, ExperimentError> {
    let params = space.decode_agent(point)?;
    evaluate_params(&params, spec, eval_index, seed)
}

/// Mean and standard error (sample standard deviation over `sqrt(n)`).
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
